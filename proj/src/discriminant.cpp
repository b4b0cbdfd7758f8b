#include "dmp/discriminant.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmp/error.hpp"

namespace dmp {

namespace {

constexpr double kZeroNorm = 1e-12;

void check_labels(const std::vector<int>& labels, std::size_t n, std::size_t c) {
  if (labels.size() != n) throw InvalidInputError("labels length != sample count");
  for (int y : labels)
    if (y < 1 || static_cast<std::size_t>(y) > c)
      throw InvalidInputError("label outside {1..c}");
}

}  // namespace

ClassAnchors compute_anchors(const Matrix& features, const std::vector<int>& labels,
                             std::size_t num_classes) {
  const std::size_t d = features.rows(), n = features.cols();
  check_labels(labels, n, num_classes);
  ClassAnchors out;
  out.class_means = Matrix(d, num_classes);
  out.overall_mean.assign(d, 0.0);
  out.counts.assign(num_classes, 0);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t cls = static_cast<std::size_t>(labels[q]) - 1;
    ++out.counts[cls];
    for (std::size_t i = 0; i < d; ++i) out.class_means(i, cls) += features(i, q);
  }
  for (std::size_t cls = 0; cls < num_classes; ++cls) {
    if (out.counts[cls] == 0) continue;
    const double inv = 1.0 / static_cast<double>(out.counts[cls]);
    for (std::size_t i = 0; i < d; ++i) out.class_means(i, cls) *= inv;
  }
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t i = 0; i < d; ++i) out.overall_mean[i] += features(i, q);
  for (std::size_t i = 0; i < d; ++i) out.overall_mean[i] /= static_cast<double>(n);
  return out;
}

CentralizedMeans centralized_class_means(const Matrix& batch_means,
                                         const std::vector<double>& anchor_overall) {
  if (anchor_overall.size() != batch_means.rows())
    throw InvalidInputError("centralized_class_means: shape mismatch");
  CentralizedMeans out;
  out.normalized = batch_means;
  out.zero_flag.assign(batch_means.cols(), false);
  for (std::size_t j = 0; j < batch_means.cols(); ++j) {
    double nsq = 0.0;
    for (std::size_t i = 0; i < batch_means.rows(); ++i) {
      out.normalized(i, j) -= anchor_overall[i];
      nsq += out.normalized(i, j) * out.normalized(i, j);
    }
    const double nrm = std::sqrt(nsq);
    if (nrm <= kZeroNorm) {
      out.zero_flag[j] = true;
      for (std::size_t i = 0; i < batch_means.rows(); ++i) out.normalized(i, j) = 0.0;
    } else {
      for (std::size_t i = 0; i < batch_means.rows(); ++i) out.normalized(i, j) /= nrm;
    }
  }
  return out;
}

InterClassResult inter_class_loss(const Matrix& batch_features,
                                  const std::vector<int>& batch_labels,
                                  const ClassAnchors& anchors) {
  const std::size_t d = batch_features.rows(), n = batch_features.cols();
  const std::size_t c = anchors.class_means.cols();
  check_labels(batch_labels, n, c);

  InterClassResult out;
  out.grad = Matrix(d, n);

  std::vector<std::size_t> count(c, 0);
  for (int y : batch_labels) ++count[static_cast<std::size_t>(y) - 1];

  // Batch class means, centralized by the anchor overall mean (a constant).
  Matrix raw(d, c);
  std::vector<double> nrm(c, 0.0);
  std::vector<bool> active(c, false);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t cls = static_cast<std::size_t>(batch_labels[q]) - 1;
    for (std::size_t i = 0; i < d; ++i) raw(i, cls) += batch_features(i, q);
  }
  std::size_t num_active = 0;
  for (std::size_t cls = 0; cls < c; ++cls) {
    if (count[cls] == 0) continue;
    double nsq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      raw(i, cls) = raw(i, cls) / static_cast<double>(count[cls]) - anchors.overall_mean[i];
      nsq += raw(i, cls) * raw(i, cls);
    }
    nrm[cls] = std::sqrt(nsq);
    if (nrm[cls] > kZeroNorm) {
      active[cls] = true;
      ++num_active;
    }
  }
  if (num_active < 2) {
    out.too_few_classes = true;
    return out;
  }

  Matrix unit(d, c);
  for (std::size_t cls = 0; cls < c; ++cls)
    if (active[cls])
      for (std::size_t i = 0; i < d; ++i) unit(i, cls) = raw(i, cls) / nrm[cls];

  const double npairs = 0.5 * static_cast<double>(num_active) *
                        static_cast<double>(num_active - 1);
  double loss = 0.0;
  Matrix mean_grad(d, c);  // dL/d(raw column) before the 1/n_y fan-out
  for (std::size_t i = 0; i < c; ++i) {
    if (!active[i]) continue;
    for (std::size_t j = i + 1; j < c; ++j) {
      if (!active[j]) continue;
      double s = 0.0;
      for (std::size_t o = 0; o < d; ++o) s += unit(o, i) * unit(o, j);
      loss += s;
      for (std::size_t o = 0; o < d; ++o) {
        mean_grad(o, i) += (unit(o, j) - s * unit(o, i)) / nrm[i];
        mean_grad(o, j) += (unit(o, i) - s * unit(o, j)) / nrm[j];
      }
    }
  }
  out.loss = loss / npairs;

  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t cls = static_cast<std::size_t>(batch_labels[q]) - 1;
    if (!active[cls]) continue;
    const double f = 1.0 / (npairs * static_cast<double>(count[cls]));
    for (std::size_t i = 0; i < d; ++i) out.grad(i, q) = f * mean_grad(i, cls);
  }
  return out;
}

TruncationMask topk_mask(const Matrix& soft_pred, std::size_t k) {
  const std::size_t c = soft_pred.rows(), n = soft_pred.cols();
  if (k < 1 || k > c) throw InvalidInputError("topk_mask: k outside [1, c]");
  TruncationMask out;
  out.k = k;
  out.chi = Matrix(c, n);
  std::vector<std::size_t> idx(c);
  for (std::size_t j = 0; j < n; ++j) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return soft_pred(a, j) > soft_pred(b, j);
    });
    for (std::size_t t = 0; t < k; ++t) out.chi(idx[t], j) = 1.0;
  }
  return out;
}

IntraClassResult intra_class_loss(const Matrix& ht, const Matrix& soft_pred,
                                  const ClassAnchors& anchors,
                                  const std::vector<double>& weights, std::size_t k) {
  const std::size_t d = ht.rows(), n = ht.cols();
  const std::size_t c = anchors.class_means.cols();
  if (soft_pred.rows() != c || soft_pred.cols() != n)
    throw InvalidInputError("intra_class_loss: prediction shape mismatch");
  if (weights.size() != c)
    throw InvalidInputError("intra_class_loss: weight length mismatch");

  IntraClassResult out;
  out.grad_h = Matrix(d, n);
  out.grad_p = Matrix(c, n);

  // Unit anchor directions; vanished anchors contribute nothing.
  Matrix unit_anchor(d, c);
  std::vector<bool> anchor_ok(c, false);
  bool any_anchor = false;
  for (std::size_t cls = 0; cls < c; ++cls) {
    double nsq = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      nsq += anchors.class_means(i, cls) * anchors.class_means(i, cls);
    const double nrm = std::sqrt(nsq);
    if (nrm > kZeroNorm) {
      anchor_ok[cls] = true;
      any_anchor = true;
      for (std::size_t i = 0; i < d; ++i)
        unit_anchor(i, cls) = anchors.class_means(i, cls) / nrm;
    }
  }
  if (!any_anchor) {
    out.empty_anchors = true;
    return out;
  }

  const TruncationMask mask = topk_mask(soft_pred, k);
  const double scl = -1.0 / (static_cast<double>(n) * static_cast<double>(k));
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double hsq = 0.0;
    for (std::size_t i = 0; i < d; ++i) hsq += ht(i, j) * ht(i, j);
    const double hnrm = std::sqrt(hsq);
    if (hnrm <= kZeroNorm) continue;

    for (std::size_t cls = 0; cls < c; ++cls) {
      if (mask.chi(cls, j) == 0.0 || !anchor_ok[cls]) continue;
      const double cw = static_cast<double>(c) * weights[cls];
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += unit_anchor(i, cls) * ht(i, j);
      s /= hnrm;
      const double p = soft_pred(cls, j);
      loss += cw * p * s;
      out.grad_p(cls, j) = scl * cw * s;
      const double g = scl * cw * p / hnrm;
      for (std::size_t i = 0; i < d; ++i)
        out.grad_h(i, j) += g * (unit_anchor(i, cls) - s * ht(i, j) / hnrm);
    }
  }
  out.loss = scl * loss;
  return out;
}

std::vector<double> class_weights(const Matrix& soft_pred_accumulated, WeightMode mode) {
  const std::size_t c = soft_pred_accumulated.rows();
  const std::size_t n = soft_pred_accumulated.cols();
  if (n < 1) throw InvalidInputError("class_weights: empty prediction matrix");
  std::vector<double> w(c, 0.0);
  if (mode == WeightMode::Vanilla) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(c));
    return w;
  }
  for (std::size_t i = 0; i < c; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += soft_pred_accumulated(i, j);
    w[i] = acc / static_cast<double>(n);
  }
  return w;
}

Matrix weighted_source_features(const Matrix& hs, const std::vector<int>& labels,
                                const std::vector<double>& weights) {
  const std::size_t c = weights.size();
  check_labels(labels, hs.cols(), c);
  Matrix out = hs;
  for (std::size_t q = 0; q < hs.cols(); ++q) {
    const double f = static_cast<double>(c) *
                     weights[static_cast<std::size_t>(labels[q]) - 1];
    for (std::size_t i = 0; i < hs.rows(); ++i) out(i, q) *= f;
  }
  return out;
}

}  // namespace dmp
