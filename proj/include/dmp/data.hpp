#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmp/matrix.hpp"
#include "dmp/rng.hpp"

namespace dmp {

enum class Domain { Source, Target };

/// Samples are columns; labels (1-based) accompany source batches.
struct FeatureBatch {
  Matrix features;  // d x n
  Domain domain = Domain::Source;
  std::optional<std::vector<int>> labels;
  std::size_t num_classes = 0;
};

struct ShiftSpec {
  double rotation_angle = 0.0;  // radians, applied in a random 2-plane
  double translation = 0.0;
  double noise_scale = 1.0;
};

struct SyntheticSpec {
  std::size_t num_classes = 5;
  std::size_t dim = 16;
  std::vector<std::size_t> samples_per_class;  // uniform `count` if empty
  std::size_t count_per_class = 200;
  ShiftSpec shift;
  std::size_t partial_keep = 5;
  double mean_separation = 4.0;
  std::uint64_t seed = 0;
};

struct SyntheticTask {
  FeatureBatch source;
  FeatureBatch target;                 // labels stripped
  std::vector<int> target_labels;     // held out for evaluation only
};

/// Gaussian blobs with constructed pairwise mean separation; the target is
/// the same mixture pushed through a rotation in a random 2-plane plus a
/// translation, with classes beyond partial_keep removed.
SyntheticTask generate(const SyntheticSpec& spec);

/// Text format: header "d,n,c,has_labels", then one sample per line
/// (d comma-separated doubles, optional trailing integer label).
/// Binary format: "DMPF" magic; see README. The loader sniffs the magic.
FeatureBatch load_features(const std::string& path);
void save_features(const FeatureBatch& batch, const std::string& path,
                   bool binary = false);

/// b_s uniform with-replacement draws.
FeatureBatch sample_batch(const FeatureBatch& batch, std::size_t b_s, Rng& rng);

}  // namespace dmp
