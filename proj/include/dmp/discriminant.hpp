#pragma once

#include <cstddef>
#include <vector>

#include "dmp/matrix.hpp"

namespace dmp {

/// Full-dataset source statistics, recomputed only at refresh points and
/// treated as constants by every gradient.
struct ClassAnchors {
  Matrix class_means;               // d x c, all-zero column for an empty class
  std::vector<double> overall_mean; // length d
  std::vector<std::size_t> counts;  // per class
};

/// Labels are 1-based and must lie in {1..c}.
ClassAnchors compute_anchors(const Matrix& features, const std::vector<int>& labels,
                             std::size_t num_classes);

struct CentralizedMeans {
  Matrix normalized;            // d x c, zero columns left untouched
  std::vector<bool> zero_flag;  // true where the centralized column vanished
};

/// H_hat = means - overall 1^T with columns l2-normalized.
CentralizedMeans centralized_class_means(const Matrix& batch_means,
                                         const std::vector<double>& anchor_overall);

struct InterClassResult {
  double loss = 0.0;
  Matrix grad;  // d x n, same shape as the batch features
  bool too_few_classes = false;
};

/// Mean pairwise cosine between centralized batch class means (anchor
/// overall mean held constant). Pairs touching an absent or vanished class
/// are dropped and the pair count shrinks with them.
InterClassResult inter_class_loss(const Matrix& batch_features,
                                  const std::vector<int>& batch_labels,
                                  const ClassAnchors& anchors);

struct TruncationMask {
  Matrix chi;  // c x n, exactly k ones per column
  std::size_t k = 0;
};

/// Ones at the k largest probabilities per column; ties go to the lowest
/// class index.
TruncationMask topk_mask(const Matrix& soft_pred, std::size_t k);

struct IntraClassResult {
  double loss = 0.0;
  Matrix grad_h;  // d x n
  Matrix grad_p;  // c x n
  bool empty_anchors = false;
};

/// Truncated probabilistic intra-class loss against the anchor class means.
/// Weights enter as c*w so the vanilla vector (1/c each) reproduces the
/// unweighted loss exactly.
IntraClassResult intra_class_loss(const Matrix& ht, const Matrix& soft_pred,
                                  const ClassAnchors& anchors,
                                  const std::vector<double>& weights, std::size_t k);

enum class WeightMode { Vanilla, Partial };

/// Vanilla: 1/c each. Partial: mean target prediction per class.
std::vector<double> class_weights(const Matrix& soft_pred_accumulated, WeightMode mode);

/// Column i scaled by c*w[label_i - 1]; identity under vanilla weights.
Matrix weighted_source_features(const Matrix& hs, const std::vector<int>& labels,
                                const std::vector<double>& weights);

}  // namespace dmp
