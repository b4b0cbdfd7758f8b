#include "dmp/data.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dmp/error.hpp"
#include "dmp/io_util.hpp"

namespace dmp {

namespace {

/// c orthonormal directions from the QR of a seeded random matrix.
Matrix random_orthonormal_columns(std::size_t d, std::size_t c, Rng& rng) {
  Matrix q(d, c);
  for (std::size_t j = 0; j < c; ++j) {
    std::vector<double> v(d);
    for (std::size_t attempt = 0;; ++attempt) {
      for (std::size_t i = 0; i < d; ++i) v[i] = rng.normal();
      for (std::size_t p = 0; p < j; ++p) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += v[i] * q(i, p);
        for (std::size_t i = 0; i < d; ++i) v[i] -= proj * q(i, p);
      }
      const double nrm = norm2(v);
      if (nrm > 1e-6) {
        for (std::size_t i = 0; i < d; ++i) q(i, j) = v[i] / nrm;
        break;
      }
      if (attempt > 32) throw NumericalDomainError("orthonormal sampling failed");
    }
  }
  return q;
}

std::vector<double> random_unit(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  for (;;) {
    for (std::size_t i = 0; i < d; ++i) v[i] = rng.normal();
    const double nrm = norm2(v);
    if (nrm > 1e-9) {
      for (double& x : v) x /= nrm;
      return v;
    }
  }
}

}  // namespace

SyntheticTask generate(const SyntheticSpec& spec) {
  const std::size_t c = spec.num_classes, d = spec.dim;
  if (c < 1) throw InvalidInputError("generate: need at least one class");
  if (d < c)
    throw InvalidInputError("generate: dim must be >= class count for separated means");
  if (spec.partial_keep < 1 || spec.partial_keep > c)
    throw InvalidInputError("generate: partial_keep outside [1, c]");
  std::vector<std::size_t> counts = spec.samples_per_class;
  if (counts.empty()) counts.assign(c, spec.count_per_class);
  if (counts.size() != c) throw InvalidInputError("generate: counts length != classes");
  for (std::size_t k : counts)
    if (k < 2) throw InvalidInputError("generate: per-class count must be >= 2");

  Rng rng(spec.seed);

  // Orthonormal directions scaled so pairwise mean distance equals the
  // configured separation exactly.
  const Matrix dirs = random_orthonormal_columns(d, c, rng);
  const double scale = spec.mean_separation / std::sqrt(2.0);
  Matrix means(d, c);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < c; ++j) means(i, j) = scale * dirs(i, j);

  // Shift: rotation in a random 2-plane plus a translation.
  const Matrix plane = random_orthonormal_columns(d, 2, rng);
  const double ca = std::cos(spec.shift.rotation_angle);
  const double sa = std::sin(spec.shift.rotation_angle);
  const std::vector<double> tdir = random_unit(d, rng);

  auto rotate_shift = [&](std::vector<double>& x) {
    double pa = 0.0, pb = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      pa += plane(i, 0) * x[i];
      pb += plane(i, 1) * x[i];
    }
    const double na = ca * pa - sa * pb;
    const double nb = sa * pa + ca * pb;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += (na - pa) * plane(i, 0) + (nb - pb) * plane(i, 1);
      x[i] += spec.shift.translation * tdir[i];
    }
  };

  std::size_t n_src = 0, n_tgt = 0;
  for (std::size_t cls = 0; cls < c; ++cls) {
    n_src += counts[cls];
    if (cls < spec.partial_keep) n_tgt += counts[cls];
  }

  SyntheticTask task;
  task.source.features = Matrix(d, n_src);
  task.source.labels = std::vector<int>(n_src);
  task.source.domain = Domain::Source;
  task.source.num_classes = c;
  task.target.features = Matrix(d, n_tgt);
  task.target.domain = Domain::Target;
  task.target.num_classes = c;
  task.target_labels.resize(n_tgt);

  std::size_t col = 0;
  std::vector<double> x(d);
  for (std::size_t cls = 0; cls < c; ++cls) {
    for (std::size_t q = 0; q < counts[cls]; ++q, ++col) {
      for (std::size_t i = 0; i < d; ++i)
        x[i] = means(i, cls) + spec.shift.noise_scale * rng.normal();
      task.source.features.set_col(col, x);
      (*task.source.labels)[col] = static_cast<int>(cls) + 1;
    }
  }
  col = 0;
  for (std::size_t cls = 0; cls < spec.partial_keep; ++cls) {
    for (std::size_t q = 0; q < counts[cls]; ++q, ++col) {
      for (std::size_t i = 0; i < d; ++i)
        x[i] = means(i, cls) + spec.shift.noise_scale * rng.normal();
      rotate_shift(x);
      task.target.features.set_col(col, x);
      task.target_labels[col] = static_cast<int>(cls) + 1;
    }
  }
  return task;
}

namespace {

constexpr char kBinaryMagic[4] = {'D', 'M', 'P', 'F'};

FeatureBatch load_binary(std::ifstream& is, const std::string& path) {
  auto read_u64 = [&](const char* what) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw ParseError(path + ": truncated " + what);
    return v;
  };
  const std::uint64_t d = read_u64("dim");
  const std::uint64_t n = read_u64("count");
  const std::uint64_t c = read_u64("classes");
  const std::uint64_t has_labels = read_u64("label flag");
  if (d == 0 || n == 0) throw ParseError(path + ": empty dimensions in header");
  if (has_labels > 1) throw ParseError(path + ": label flag must be 0 or 1");

  FeatureBatch batch;
  batch.num_classes = static_cast<std::size_t>(c);
  batch.features = Matrix(d, n);
  std::vector<double> sample(d);
  for (std::uint64_t j = 0; j < n; ++j) {
    is.read(reinterpret_cast<char*>(sample.data()),
            static_cast<std::streamsize>(d * sizeof(double)));
    if (!is) throw ParseError(path + ": truncated features at sample " + std::to_string(j));
    for (std::uint64_t i = 0; i < d; ++i) {
      if (!std::isfinite(sample[i]))
        throw ParseError(path + ": non-finite value at sample " + std::to_string(j));
      batch.features(i, j) = sample[i];
    }
  }
  if (has_labels) {
    std::vector<int> labels(n);
    for (std::uint64_t j = 0; j < n; ++j) {
      std::int64_t y = 0;
      is.read(reinterpret_cast<char*>(&y), sizeof(y));
      if (!is) throw ParseError(path + ": truncated labels at sample " + std::to_string(j));
      if (y < 1 || static_cast<std::uint64_t>(y) > c)
        throw ParseError(path + ": label out of range at sample " + std::to_string(j));
      labels[j] = static_cast<int>(y);
    }
    batch.labels = std::move(labels);
  }
  char extra;
  if (is.read(&extra, 1)) throw ParseError(path + ": trailing bytes after payload");
  return batch;
}

FeatureBatch load_text(std::ifstream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(path + ":1: missing header");
  std::uint64_t d = 0, n = 0, c = 0, has_labels = 0;
  {
    std::istringstream hs(line);
    char c1, c2, c3;
    if (!(hs >> d >> c1 >> n >> c2 >> c >> c3 >> has_labels) || c1 != ',' ||
        c2 != ',' || c3 != ',')
      throw ParseError(path + ":1: malformed header, expected d,n,c,has_labels");
    std::string rest;
    if (hs >> rest) throw ParseError(path + ":1: trailing header fields");
  }
  if (d == 0 || n == 0) throw ParseError(path + ":1: empty dimensions in header");
  if (has_labels > 1) throw ParseError(path + ":1: label flag must be 0 or 1");

  FeatureBatch batch;
  batch.num_classes = static_cast<std::size_t>(c);
  batch.features = Matrix(d, n);
  std::vector<int> labels;
  if (has_labels) labels.resize(n);

  for (std::uint64_t j = 0; j < n; ++j) {
    if (!std::getline(is, line))
      throw ParseError(path + ":" + std::to_string(j + 2) + ": unexpected end of file");
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    for (std::uint64_t i = 0; i < d; ++i) {
      double v = 0.0;
      const auto res = std::from_chars(ptr, end, v);
      if (res.ec != std::errc{})
        throw ParseError(path + ":" + std::to_string(j + 2) + ": bad value at column " +
                         std::to_string(i + 1));
      if (!std::isfinite(v))
        throw ParseError(path + ":" + std::to_string(j + 2) + ": non-finite value");
      batch.features(i, j) = v;
      ptr = res.ptr;
      const bool expect_comma = (i + 1 < d) || has_labels;
      if (expect_comma) {
        if (ptr == end || *ptr != ',')
          throw ParseError(path + ":" + std::to_string(j + 2) +
                           ": expected ',' after column " + std::to_string(i + 1));
        ++ptr;
      }
    }
    if (has_labels) {
      std::int64_t y = 0;
      const auto res = std::from_chars(ptr, end, y);
      if (res.ec != std::errc{})
        throw ParseError(path + ":" + std::to_string(j + 2) + ": bad label");
      ptr = res.ptr;
      if (y < 1 || static_cast<std::uint64_t>(y) > c)
        throw ParseError(path + ":" + std::to_string(j + 2) + ": label out of range");
      labels[j] = static_cast<int>(y);
    }
    if (ptr != end)
      throw ParseError(path + ":" + std::to_string(j + 2) + ": trailing characters");
  }
  if (std::getline(is, line) && !line.empty())
    throw ParseError(path + ": more lines than declared sample count");
  if (has_labels) batch.labels = std::move(labels);
  return batch;
}

}  // namespace

FeatureBatch load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  if (is && std::memcmp(magic, kBinaryMagic, 4) == 0) return load_binary(is, path);
  is.clear();
  is.seekg(0);
  return load_text(is, path);
}

void save_features(const FeatureBatch& batch, const std::string& path, bool binary) {
  const std::size_t d = batch.features.rows(), n = batch.features.cols();
  const std::uint64_t has_labels = batch.labels.has_value() ? 1 : 0;
  if (binary) {
    std::vector<char> buf;
    auto push_raw = [&](const void* p, std::size_t len) {
      const char* b = static_cast<const char*>(p);
      buf.insert(buf.end(), b, b + len);
    };
    push_raw(kBinaryMagic, 4);
    const std::uint64_t hdr[4] = {d, n, batch.num_classes, has_labels};
    push_raw(hdr, sizeof(hdr));
    std::vector<double> sample(d);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < d; ++i) sample[i] = batch.features(i, j);
      push_raw(sample.data(), d * sizeof(double));
    }
    if (has_labels) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::int64_t y = (*batch.labels)[j];
        push_raw(&y, sizeof(y));
      }
    }
    atomic_write_binary(path, buf);
    return;
  }

  std::string out;
  out.reserve(n * d * 8);
  out += std::to_string(d);
  out += ',';
  out += std::to_string(n);
  out += ',';
  out += std::to_string(batch.num_classes);
  out += ',';
  out += std::to_string(has_labels);
  out += '\n';
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      if (i) out += ',';
      out += format_double(batch.features(i, j));
    }
    if (has_labels) {
      out += ',';
      out += std::to_string((*batch.labels)[j]);
    }
    out += '\n';
  }
  atomic_write(path, out);
}

FeatureBatch sample_batch(const FeatureBatch& batch, std::size_t b_s, Rng& rng) {
  const std::size_t n = batch.features.cols();
  if (n == 0) throw InsufficientSamplesError("sample_batch: empty dataset");
  if (b_s < 1) throw InvalidInputError("sample_batch: batch size must be >= 1");
  FeatureBatch out;
  out.domain = batch.domain;
  out.num_classes = batch.num_classes;
  out.features = Matrix(batch.features.rows(), b_s);
  if (batch.labels) out.labels = std::vector<int>(b_s);
  for (std::size_t j = 0; j < b_s; ++j) {
    const std::size_t pick = rng.uniform_index(n);
    for (std::size_t i = 0; i < batch.features.rows(); ++i)
      out.features(i, j) = batch.features(i, pick);
    if (batch.labels) (*out.labels)[j] = (*batch.labels)[pick];
  }
  return out;
}

}  // namespace dmp
