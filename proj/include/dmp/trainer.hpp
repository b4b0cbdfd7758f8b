#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmp/data.hpp"
#include "dmp/discriminant.hpp"
#include "dmp/manifold.hpp"
#include "dmp/network.hpp"

namespace dmp {

struct OptimizerSettings {
  enum class Kind { Adam, Sgd } kind = Kind::Adam;
  double lr = 2e-4;
  double momentum = 0.9;   // SGD only
  double lr_decay = 1.0;   // multiplicative, applied at each refresh
};

struct TrainConfig {
  double lambda1 = 1e1;
  double lambda2 = 5e3;
  std::size_t k = 1;                 // Top-k truncation
  std::size_t batch_size = 16;
  std::size_t t_max = 600;
  std::size_t t_up = 0;              // 0: one pass over the source set
  std::optional<std::size_t> warmup_intra;  // default: 30% of t_max
  Metric metric{MetricKind::Grassmann, 0, 1e-6};  // d_prime 0: b_s - 1
  WeightMode mode = WeightMode::Vanilla;
  OptimizerSettings optimizer;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {32, 16};  // manifold layer widths
  double leaky_slope = 0.2;
  std::vector<bool> ds_layers;  // per manifold layer; empty: all on
  std::vector<bool> al_layers;
  bool entropy = false;
  double entropy_weight = 1.0;
};

struct IterationLog {
  std::size_t iter = 0;
  double ce = 0.0, ds = 0.0, al = 0.0, ent = 0.0, total = 0.0;
};

struct TrainReport {
  std::vector<IterationLog> iterations;
  std::vector<std::pair<std::size_t, double>> epoch_accuracy;  // (iter, acc)
  Matrix confusion_counts;            // c x c, rows = ground truth
  std::vector<double> final_weights;  // w_hat over the full target set
  double final_accuracy = -1.0;       // -1 when no held-out labels given
  std::vector<std::string> warnings;
  std::vector<std::uint64_t> anchor_digests;  // one per iteration
};

struct TrainResult {
  NetworkParams params;
  TrainReport report;
};

/// Per-batch objective and its full parameter gradient; shared by the
/// training loop and the gradient checker.
struct StepObjective {
  double ce = 0.0, ds = 0.0, al = 0.0, ent = 0.0, total = 0.0;
  ParamGrads grads;
  bool align_skipped = false;
  bool inter_warned = false;
};

/// Loss switches resolved for one step (warmup gates the intra term).
struct LossSwitches {
  bool ds = true;
  bool intra = true;
  bool al = true;
  bool entropy = false;
};

/// Effective subspace dimension for a layer: the configured d' clamped to
/// what the layer width and batch size admit.
std::size_t effective_d_prime(std::size_t configured, std::size_t layer_dim,
                              std::size_t batch_cols);

StepObjective assemble_objective(const NetworkParams& params, const Matrix& src_features,
                                 const std::vector<int>& src_labels,
                                 const Matrix& tgt_features,
                                 const std::vector<ClassAnchors>& anchors,
                                 const std::vector<double>& weights,
                                 const TrainConfig& config, const LossSwitches& on);

/// Algorithm: periodic anchor/weight refresh over the full sets, per
/// iteration one batch from each domain, assembled gradients, optimizer
/// step. `eval_labels` are used for reporting only.
TrainResult train(const TrainConfig& config, const FeatureBatch& source,
                  const FeatureBatch& target,
                  const std::vector<int>* eval_labels = nullptr);

/// Argmax over softmax columns, ties to the lowest index; labels 1-based.
std::vector<int> predict(const NetworkParams& params, const Matrix& x);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<double> per_class;  // recall per ground-truth class
  Matrix confusion_counts;        // rows = ground truth, cols = prediction
};

Evaluation evaluate(const NetworkParams& params, const Matrix& x,
                    const std::vector<int>& labels);

}  // namespace dmp
