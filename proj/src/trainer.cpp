#include "dmp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dmp/error.hpp"

namespace dmp {

namespace {

std::size_t class_count(const FeatureBatch& source) {
  if (source.num_classes > 0) return source.num_classes;
  if (!source.labels) throw InvalidInputError("train: source labels required");
  int mx = 0;
  for (int y : *source.labels) mx = std::max(mx, y);
  return static_cast<std::size_t>(mx);
}

bool layer_enabled(const std::vector<bool>& flags, std::size_t l) {
  return flags.empty() || (l < flags.size() && flags[l]);
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t digest_anchors(const std::vector<ClassAnchors>& anchors,
                             const std::vector<double>& weights) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const ClassAnchors& a : anchors) {
    h = fnv1a(a.class_means.data(), a.class_means.size() * sizeof(double), h);
    h = fnv1a(a.overall_mean.data(), a.overall_mean.size() * sizeof(double), h);
  }
  h = fnv1a(weights.data(), weights.size() * sizeof(double), h);
  return h;
}

}  // namespace

std::size_t effective_d_prime(std::size_t configured, std::size_t layer_dim,
                              std::size_t batch_cols) {
  // The centered batch covariance has rank at most min(layer_dim, b_s - 1),
  // and lambda_{d'+1} must exist, so d' <= layer_dim - 1.
  std::size_t cap = std::min(layer_dim - 1, batch_cols - 1);
  if (configured == 0) configured = batch_cols - 1;
  return std::max<std::size_t>(1, std::min(configured, cap));
}

StepObjective assemble_objective(const NetworkParams& params, const Matrix& src_features,
                                 const std::vector<int>& src_labels,
                                 const Matrix& tgt_features,
                                 const std::vector<ClassAnchors>& anchors,
                                 const std::vector<double>& weights,
                                 const TrainConfig& config, const LossSwitches& on) {
  const std::size_t manifold_layers = params.num_manifold();
  if (anchors.size() != manifold_layers)
    throw InvalidInputError("assemble_objective: anchors per manifold layer required");

  const ForwardTrace src = forward(params, src_features);
  const ForwardTrace tgt = forward(params, tgt_features);

  StepObjective step;
  const CrossEntropyResult ce = cross_entropy(src.soft, src_labels);
  step.ce = ce.loss;

  std::vector<Matrix> src_feature_grads(manifold_layers);
  std::vector<Matrix> tgt_feature_grads(manifold_layers);
  Matrix tgt_soft_grad(tgt.soft.rows(), tgt.soft.cols());
  bool any_tgt_soft = false;

  for (std::size_t l = 0; l < manifold_layers; ++l) {
    const Matrix& hs = src.post[l];
    const Matrix& ht = tgt.post[l];

    if (on.ds && layer_enabled(config.ds_layers, l)) {
      InterClassResult inter = inter_class_loss(hs, src_labels, anchors[l]);
      step.ds += inter.loss;
      step.inter_warned = step.inter_warned || inter.too_few_classes;
      if (!inter.too_few_classes) {
        scale_in_place(inter.grad, config.lambda1);
        if (src_feature_grads[l].size() == 0)
          src_feature_grads[l] = std::move(inter.grad);
        else
          add_in_place(src_feature_grads[l], inter.grad);
      }

      if (on.intra) {
        IntraClassResult intra =
            intra_class_loss(ht, tgt.soft, anchors[l], weights, config.k);
        step.ds += intra.loss;
        if (!intra.empty_anchors) {
          scale_in_place(intra.grad_h, config.lambda1);
          if (tgt_feature_grads[l].size() == 0)
            tgt_feature_grads[l] = std::move(intra.grad_h);
          else
            add_in_place(tgt_feature_grads[l], intra.grad_h);
          scale_in_place(intra.grad_p, config.lambda1);
          add_in_place(tgt_soft_grad, intra.grad_p);
          any_tgt_soft = true;
        }
      }
    }

    if (on.al && layer_enabled(config.al_layers, l)) {
      Metric metric = config.metric;
      metric.d_prime = effective_d_prime(metric.d_prime, hs.rows(),
                                         std::min(hs.cols(), ht.cols()));
      const Matrix hs_weighted = weighted_source_features(hs, src_labels, weights);
      AlignmentGradient align = alignment_gradient(hs_weighted, ht, metric);
      if (align.degenerate) {
        step.align_skipped = true;
      } else {
        step.al += align.loss;
        // Pull the source gradient back through the per-column weighting.
        const std::size_t c = weights.size();
        for (std::size_t q = 0; q < hs.cols(); ++q) {
          const double f = static_cast<double>(c) *
                           weights[static_cast<std::size_t>(src_labels[q]) - 1];
          for (std::size_t i = 0; i < hs.rows(); ++i) align.d_hs(i, q) *= f;
        }
        scale_in_place(align.d_hs, config.lambda2);
        scale_in_place(align.d_ht, config.lambda2);
        if (src_feature_grads[l].size() == 0)
          src_feature_grads[l] = std::move(align.d_hs);
        else
          add_in_place(src_feature_grads[l], align.d_hs);
        if (tgt_feature_grads[l].size() == 0)
          tgt_feature_grads[l] = std::move(align.d_ht);
        else
          add_in_place(tgt_feature_grads[l], align.d_ht);
      }
    }
  }

  Matrix tgt_logit_grad(tgt.logits.rows(), tgt.logits.cols());
  if (any_tgt_soft) tgt_logit_grad = softmax_backward(tgt.soft, tgt_soft_grad);
  if (on.entropy) {
    const EntropyResult ent = target_entropy(tgt.soft);
    step.ent = ent.loss;
    Matrix g = ent.grad_logits;
    scale_in_place(g, config.entropy_weight);
    add_in_place(tgt_logit_grad, g);
  }

  step.grads = backward(params, src, src_feature_grads, ce.grad_logits);
  const ParamGrads tgt_grads = backward(params, tgt, tgt_feature_grads, tgt_logit_grad);
  accumulate(step.grads, tgt_grads);

  step.total = step.ce + config.lambda1 * step.ds + config.lambda2 * step.al +
               config.entropy_weight * step.ent;
  return step;
}

namespace {

struct RefreshState {
  std::vector<ClassAnchors> anchors;
  std::vector<double> weights;
};

RefreshState refresh(const NetworkParams& params, const FeatureBatch& source,
                     const FeatureBatch& target, std::size_t c, WeightMode mode) {
  RefreshState state;
  const ForwardTrace src = forward(params, source.features);
  for (std::size_t l = 0; l < params.num_manifold(); ++l)
    state.anchors.push_back(compute_anchors(src.post[l], *source.labels, c));
  const ForwardTrace tgt = forward(params, target.features);
  state.weights = class_weights(tgt.soft, mode);
  return state;
}

}  // namespace

TrainResult train(const TrainConfig& config, const FeatureBatch& source,
                  const FeatureBatch& target, const std::vector<int>* eval_labels) {
  if (!source.labels) throw InvalidInputError("train: source labels required");
  if (source.features.rows() != target.features.rows())
    throw InvalidInputError("train: feature dims differ across domains");
  if (config.batch_size < 2) throw InvalidInputError("train: batch size must be >= 2");
  if (config.lambda1 < 0.0 || config.lambda2 < 0.0)
    throw InvalidInputError("train: penalty parameters must be >= 0");
  const std::size_t c = class_count(source);
  if (config.k < 1 || config.k > c) throw InvalidInputError("train: k outside [1, c]");
  {
    std::vector<bool> seen(c, false);
    for (int y : *source.labels) seen[static_cast<std::size_t>(y) - 1] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2)
      throw InvalidInputError("train: source must cover at least 2 classes");
  }

  std::vector<LayerSpec> specs;
  std::size_t in_dim = source.features.rows();
  for (std::size_t w : config.hidden) {
    Activation act = specs.empty() ? Activation::LeakyReLU : Activation::Tanh;
    specs.push_back({in_dim, w, act, config.leaky_slope});
    in_dim = w;
  }
  specs.push_back({in_dim, c, Activation::None, config.leaky_slope});

  Rng rng(config.seed);
  NetworkParams params = init_params(specs, rng);
  SgdState sgd = make_sgd_state(params, config.optimizer.lr, config.optimizer.momentum);
  AdamState adam = make_adam_state(params, config.optimizer.lr);

  const std::size_t t_up =
      config.t_up > 0
          ? config.t_up
          : std::max<std::size_t>(
                1, (source.features.cols() + config.batch_size - 1) / config.batch_size);
  const std::size_t warmup = config.warmup_intra.value_or(
      static_cast<std::size_t>(0.3 * static_cast<double>(config.t_max)));

  TrainResult result;
  result.report.iterations.reserve(config.t_max);
  RefreshState state;
  bool align_warned = false, inter_warned = false;

  for (std::size_t t = 1; t <= config.t_max; ++t) {
    if ((t - 1) % t_up == 0) {
      state = refresh(params, source, target, c, config.mode);
      if (t > 1) {
        sgd.lr *= config.optimizer.lr_decay;
        adam.lr *= config.optimizer.lr_decay;
      }
      if (eval_labels) {
        const Evaluation ev = evaluate(params, target.features, *eval_labels);
        result.report.epoch_accuracy.emplace_back(t, ev.accuracy);
      }
    }

    const FeatureBatch src_batch = sample_batch(source, config.batch_size, rng);
    const FeatureBatch tgt_batch = sample_batch(target, config.batch_size, rng);

    LossSwitches on;
    on.ds = config.lambda1 > 0.0;
    on.intra = t > warmup;
    on.al = config.lambda2 > 0.0;
    on.entropy = config.entropy;

    const StepObjective step =
        assemble_objective(params, src_batch.features, *src_batch.labels,
                           tgt_batch.features, state.anchors, state.weights, config, on);
    if (!std::isfinite(step.total))
      throw NumericalDomainError("train: non-finite objective at iteration " +
                                 std::to_string(t));
    if (step.align_skipped && !align_warned) {
      result.report.warnings.push_back("alignment skipped on a degenerate-spectrum batch");
      align_warned = true;
    }
    if (step.inter_warned && !inter_warned) {
      result.report.warnings.push_back("batch with fewer than 2 classes present");
      inter_warned = true;
    }

    if (config.optimizer.kind == OptimizerSettings::Kind::Adam)
      adam_step(params, step.grads, adam);
    else
      sgd_step(params, step.grads, sgd);

    result.report.iterations.push_back(
        {t, step.ce, step.ds, step.al, step.ent, step.total});
    result.report.anchor_digests.push_back(digest_anchors(state.anchors, state.weights));
  }

  // Closing refresh for the reported weights (not used in any update).
  state = refresh(params, source, target, c, config.mode);
  result.report.final_weights = state.weights;
  if (eval_labels) {
    const Evaluation ev = evaluate(params, target.features, *eval_labels);
    result.report.final_accuracy = ev.accuracy;
    result.report.confusion_counts = ev.confusion_counts;
    result.report.epoch_accuracy.emplace_back(config.t_max + 1, ev.accuracy);
  }
  result.params = std::move(params);
  return result;
}

std::vector<int> predict(const NetworkParams& params, const Matrix& x) {
  const ForwardTrace trace = forward(params, x);
  std::vector<int> labels(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < trace.soft.rows(); ++i)
      if (trace.soft(i, j) > trace.soft(best, j)) best = i;
    labels[j] = static_cast<int>(best) + 1;
  }
  return labels;
}

Evaluation evaluate(const NetworkParams& params, const Matrix& x,
                    const std::vector<int>& labels) {
  if (labels.size() != x.cols()) throw InvalidInputError("evaluate: label count mismatch");
  const std::size_t c = params.specs.back().out_dim;
  const std::vector<int> pred = predict(params, x);
  Evaluation ev;
  ev.confusion_counts = Matrix(c, c);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 1 || static_cast<std::size_t>(labels[j]) > c)
      throw InvalidInputError("evaluate: label outside {1..c}");
    ev.confusion_counts(static_cast<std::size_t>(labels[j]) - 1,
                        static_cast<std::size_t>(pred[j]) - 1) += 1.0;
  }
  double correct = 0.0;
  ev.per_class.assign(c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    correct += ev.confusion_counts(i, i);
    double row = 0.0;
    for (std::size_t j = 0; j < c; ++j) row += ev.confusion_counts(i, j);
    if (row > 0.0) ev.per_class[i] = ev.confusion_counts(i, i) / row;
  }
  ev.accuracy = correct / static_cast<double>(labels.size());
  return ev;
}

}  // namespace dmp
