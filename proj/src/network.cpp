#include "dmp/network.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dmp/error.hpp"

namespace dmp {

namespace {

constexpr double kProbFloor = 1e-30;

double activate(double z, const LayerSpec& spec) {
  switch (spec.act) {
    case Activation::None:
      return z;
    case Activation::LeakyReLU:
      return z > 0.0 ? z : spec.slope * z;
    case Activation::Tanh:
      return std::tanh(z);
  }
  return z;
}

double activate_deriv(double z, double post, const LayerSpec& spec) {
  switch (spec.act) {
    case Activation::None:
      return 1.0;
    case Activation::LeakyReLU:
      return z > 0.0 ? 1.0 : spec.slope;
    case Activation::Tanh:
      return 1.0 - post * post;
  }
  return 1.0;
}

void check_chain(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) throw InvalidInputError("network: no layers");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    if (specs[l].in_dim < 1 || specs[l].out_dim < 1)
      throw InvalidInputError("network: layer dims must be >= 1");
    if (l > 0 && specs[l].in_dim != specs[l - 1].out_dim)
      throw InvalidInputError("network: layer dims do not chain");
    if (specs[l].act == Activation::LeakyReLU &&
        (specs[l].slope <= 0.0 || specs[l].slope >= 1.0))
      throw InvalidInputError("network: LeakyReLU slope must lie in (0,1)");
  }
}

}  // namespace

NetworkParams init_params(const std::vector<LayerSpec>& specs, Rng& rng) {
  check_chain(specs);
  NetworkParams params;
  params.specs = specs;
  for (const LayerSpec& spec : specs) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
    Matrix w(spec.out_dim, spec.in_dim);
    for (std::size_t i = 0; i < w.size(); ++i)
      w.data()[i] = rng.uniform(-bound, bound);
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(spec.out_dim, 0.0);
  }
  return params;
}

ForwardTrace forward(const NetworkParams& params, const Matrix& x) {
  check_chain(params.specs);
  if (x.rows() != params.specs.front().in_dim)
    throw InvalidInputError("forward: input dim mismatch");
  ForwardTrace trace;
  trace.input = x;
  const Matrix* cur = &trace.input;
  for (std::size_t l = 0; l < params.specs.size(); ++l) {
    Matrix z = kernels::multiply(params.weights[l], *cur);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += params.biases[l][i];
    Matrix h(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j)
        h(i, j) = activate(z(i, j), params.specs[l]);
    trace.pre.push_back(std::move(z));
    trace.post.push_back(std::move(h));
    cur = &trace.post.back();
  }
  trace.logits = trace.post.back();
  trace.soft = softmax(trace.logits);
  return trace;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t j = 0; j < logits.cols(); ++j) {
    double mx = logits(0, j);
    for (std::size_t i = 1; i < logits.rows(); ++i) mx = std::max(mx, logits(i, j));
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      p(i, j) = std::exp(logits(i, j) - mx);
      sum += p(i, j);
    }
    for (std::size_t i = 0; i < logits.rows(); ++i) p(i, j) /= sum;
  }
  return p;
}

Matrix softmax_backward(const Matrix& soft, const Matrix& grad_p) {
  if (soft.rows() != grad_p.rows() || soft.cols() != grad_p.cols())
    throw InvalidInputError("softmax_backward: shape mismatch");
  Matrix out(soft.rows(), soft.cols());
  for (std::size_t j = 0; j < soft.cols(); ++j) {
    double dotv = 0.0;
    for (std::size_t i = 0; i < soft.rows(); ++i) dotv += soft(i, j) * grad_p(i, j);
    for (std::size_t i = 0; i < soft.rows(); ++i)
      out(i, j) = soft(i, j) * (grad_p(i, j) - dotv);
  }
  return out;
}

CrossEntropyResult cross_entropy(const Matrix& soft, const std::vector<int>& labels) {
  const std::size_t c = soft.rows(), n = soft.cols();
  if (labels.size() != n) throw InvalidInputError("cross_entropy: label count mismatch");
  CrossEntropyResult out;
  out.grad_logits = soft;
  const double inv = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const int y = labels[j];
    if (y < 1 || static_cast<std::size_t>(y) > c)
      throw InvalidInputError("cross_entropy: label outside {1..c}");
    double p = soft(static_cast<std::size_t>(y) - 1, j);
    if (p < kProbFloor) {
      p = kProbFloor;
      out.clamped = true;
    }
    loss -= std::log(p);
    out.grad_logits(static_cast<std::size_t>(y) - 1, j) -= 1.0;
  }
  out.loss = loss * inv;
  scale_in_place(out.grad_logits, inv);
  return out;
}

EntropyResult target_entropy(const Matrix& soft) {
  const std::size_t c = soft.rows(), n = soft.cols();
  EntropyResult out;
  out.grad_logits = Matrix(c, n);
  const double inv = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double dotv = 0.0;
    std::vector<double> g(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
      const double p = soft(i, j);
      if (p > kProbFloor) {
        const double lp = std::log(p);
        loss -= p * lp * inv;
        g[i] = -(lp + 1.0) * inv;
      }
      dotv += soft(i, j) * g[i];
    }
    for (std::size_t i = 0; i < c; ++i)
      out.grad_logits(i, j) = soft(i, j) * (g[i] - dotv);
  }
  out.loss = loss;
  return out;
}

ParamGrads zero_grads(const NetworkParams& params) {
  ParamGrads g;
  for (std::size_t l = 0; l < params.specs.size(); ++l) {
    g.dw.emplace_back(params.weights[l].rows(), params.weights[l].cols());
    g.db.emplace_back(params.biases[l].size(), 0.0);
  }
  return g;
}

void accumulate(ParamGrads& into, const ParamGrads& from, double factor) {
  for (std::size_t l = 0; l < into.dw.size(); ++l) {
    for (std::size_t i = 0; i < into.dw[l].size(); ++i)
      into.dw[l].data()[i] += factor * from.dw[l].data()[i];
    for (std::size_t i = 0; i < into.db[l].size(); ++i)
      into.db[l][i] += factor * from.db[l][i];
  }
}

ParamGrads backward(const NetworkParams& params, const ForwardTrace& trace,
                    const std::vector<Matrix>& feature_grads, const Matrix& logit_grad) {
  const std::size_t layers = params.specs.size();
  const std::size_t manifold = params.num_manifold();
  if (feature_grads.size() > manifold)
    throw InvalidInputError("backward: more feature gradients than manifold layers");

  ParamGrads grads = zero_grads(params);
  Matrix delta;  // dL/d(pre-activation of current layer)
  if (logit_grad.size() != 0) {
    if (logit_grad.rows() != trace.logits.rows() ||
        logit_grad.cols() != trace.logits.cols())
      throw InvalidInputError("backward: logit gradient shape mismatch");
    delta = logit_grad;
  } else {
    delta = Matrix(trace.logits.rows(), trace.logits.cols());
  }

  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& below = l == 0 ? trace.input : trace.post[l - 1];
    grads.dw[l] = kernels::multiply_a_bt(delta, below);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < delta.cols(); ++j) acc += delta(i, j);
      grads.db[l][i] = acc;
    }
    if (l == 0) break;

    Matrix dh = kernels::multiply_at_b(params.weights[l], delta);
    const std::size_t hl = l - 1;  // manifold layer index below
    if (hl < feature_grads.size() && feature_grads[hl].size() != 0) {
      if (feature_grads[hl].rows() != dh.rows() || feature_grads[hl].cols() != dh.cols())
        throw InvalidInputError("backward: injected feature gradient shape mismatch");
      add_in_place(dh, feature_grads[hl]);
    }
    delta = Matrix(dh.rows(), dh.cols());
    for (std::size_t i = 0; i < dh.rows(); ++i)
      for (std::size_t j = 0; j < dh.cols(); ++j)
        delta(i, j) = dh(i, j) * activate_deriv(trace.pre[hl](i, j),
                                                trace.post[hl](i, j), params.specs[hl]);
  }
  return grads;
}

SgdState make_sgd_state(const NetworkParams& params, double lr, double momentum) {
  SgdState s;
  s.lr = lr;
  s.momentum = momentum;
  for (std::size_t l = 0; l < params.specs.size(); ++l) {
    s.vel_w.emplace_back(params.weights[l].rows(), params.weights[l].cols());
    s.vel_b.emplace_back(params.biases[l].size(), 0.0);
  }
  return s;
}

AdamState make_adam_state(const NetworkParams& params, double lr) {
  AdamState s;
  s.lr = lr;
  for (std::size_t l = 0; l < params.specs.size(); ++l) {
    s.m_w.emplace_back(params.weights[l].rows(), params.weights[l].cols());
    s.v_w.emplace_back(params.weights[l].rows(), params.weights[l].cols());
    s.m_b.emplace_back(params.biases[l].size(), 0.0);
    s.v_b.emplace_back(params.biases[l].size(), 0.0);
  }
  return s;
}

void sgd_step(NetworkParams& params, const ParamGrads& grads, SgdState& state) {
  for (std::size_t l = 0; l < params.specs.size(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].size(); ++i) {
      double& v = state.vel_w[l].data()[i];
      v = state.momentum * v + grads.dw[l].data()[i];
      params.weights[l].data()[i] -= state.lr * v;
    }
    for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
      double& v = state.vel_b[l][i];
      v = state.momentum * v + grads.db[l][i];
      params.biases[l][i] -= state.lr * v;
    }
  }
}

void adam_step(NetworkParams& params, const ParamGrads& grads, AdamState& state) {
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < params.specs.size(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].size(); ++i) {
      const double g = grads.dw[l].data()[i];
      double& m = state.m_w[l].data()[i];
      double& v = state.v_w[l].data()[i];
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      params.weights[l].data()[i] -=
          state.lr * (m / c1) / (std::sqrt(v / c2) + state.eps);
    }
    for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
      const double g = grads.db[l][i];
      double& m = state.m_b[l][i];
      double& v = state.v_b[l][i];
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      params.biases[l][i] -= state.lr * (m / c1) / (std::sqrt(v / c2) + state.eps);
    }
  }
}

namespace {

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ParseError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const NetworkParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("checkpoint: cannot open " + path + " for writing");
  os.write("DMP1", 4);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(params.specs.size()));
  for (std::size_t l = 0; l < params.specs.size(); ++l) {
    const LayerSpec& spec = params.specs[l];
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(spec.in_dim));
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(spec.out_dim));
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(spec.act));
    write_raw<double>(os, spec.slope);
    os.write(reinterpret_cast<const char*>(params.weights[l].data()),
             static_cast<std::streamsize>(params.weights[l].size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(params.biases[l].data()),
             static_cast<std::streamsize>(params.biases[l].size() * sizeof(double)));
  }
  if (!os) throw Error("checkpoint: write failed for " + path);
}

NetworkParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DMP1", 4) != 0)
    throw ParseError("checkpoint: bad magic, expected DMP1");
  const auto layers = read_raw<std::uint32_t>(is);
  if (layers == 0 || layers > 64) throw ParseError("checkpoint: silly layer count");
  NetworkParams params;
  for (std::uint32_t l = 0; l < layers; ++l) {
    LayerSpec spec;
    spec.in_dim = read_raw<std::uint32_t>(is);
    spec.out_dim = read_raw<std::uint32_t>(is);
    const auto act = read_raw<std::uint32_t>(is);
    if (act > 2) throw ParseError("checkpoint: unknown activation code");
    spec.act = static_cast<Activation>(act);
    spec.slope = read_raw<double>(is);
    Matrix w(spec.out_dim, spec.in_dim);
    is.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(w.size() * sizeof(double)));
    std::vector<double> b(spec.out_dim);
    is.read(reinterpret_cast<char*>(b.data()),
            static_cast<std::streamsize>(b.size() * sizeof(double)));
    if (!is) throw ParseError("checkpoint: truncated layer payload");
    params.specs.push_back(spec);
    params.weights.push_back(std::move(w));
    params.biases.push_back(std::move(b));
  }
  check_chain(params.specs);
  return params;
}

}  // namespace dmp
