#pragma once

#include <string>
#include <vector>

#include "dmp/matrix.hpp"
#include "dmp/rng.hpp"

namespace dmp {

enum class Activation { None = 0, LeakyReLU = 1, Tanh = 2 };

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation act = Activation::None;
  double slope = 0.2;  // LeakyReLU only
};

/// Fully connected stack: manifold layers followed by one linear classifier
/// whose output is the logit matrix.
struct NetworkParams {
  std::vector<LayerSpec> specs;          // size L+1, last entry is the classifier
  std::vector<Matrix> weights;           // out_dim x in_dim each
  std::vector<std::vector<double>> biases;
  std::size_t num_manifold() const { return specs.empty() ? 0 : specs.size() - 1; }
};

NetworkParams init_params(const std::vector<LayerSpec>& specs, Rng& rng);

struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre;   // per layer, before activation
  std::vector<Matrix> post;  // per layer, after activation (last == logits)
  Matrix logits;
  Matrix soft;               // column-stochastic softmax of logits
};

ForwardTrace forward(const NetworkParams& params, const Matrix& x);

Matrix softmax(const Matrix& logits);

/// Maps dL/dP (softmax output) to dL/d(logits), column by column.
Matrix softmax_backward(const Matrix& soft, const Matrix& grad_p);

struct CrossEntropyResult {
  double loss = 0.0;
  Matrix grad_logits;
  bool clamped = false;  // some p_{y_i i} hit the 1e-30 floor
};

CrossEntropyResult cross_entropy(const Matrix& soft, const std::vector<int>& labels);

struct EntropyResult {
  double loss = 0.0;
  Matrix grad_logits;
};

/// Mean column entropy with the 0 log 0 = 0 convention.
EntropyResult target_entropy(const Matrix& soft);

struct ParamGrads {
  std::vector<Matrix> dw;
  std::vector<std::vector<double>> db;
};

ParamGrads zero_grads(const NetworkParams& params);
void accumulate(ParamGrads& into, const ParamGrads& from, double factor = 1.0);

/// Backpropagation with injected per-layer loss gradients. `feature_grads`
/// holds dL/dH_l for each manifold layer (empty matrices mean zero);
/// `logit_grad` is dL/d(logits). Parameters of layer l never receive
/// contributions from losses attached below l.
ParamGrads backward(const NetworkParams& params, const ForwardTrace& trace,
                    const std::vector<Matrix>& feature_grads, const Matrix& logit_grad);

struct SgdState {
  double lr = 0.003;
  double momentum = 0.0;
  std::vector<Matrix> vel_w;
  std::vector<std::vector<double>> vel_b;
};

struct AdamState {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<Matrix> m_w, v_w;
  std::vector<std::vector<double>> m_b, v_b;
};

SgdState make_sgd_state(const NetworkParams& params, double lr, double momentum = 0.0);
AdamState make_adam_state(const NetworkParams& params, double lr);

void sgd_step(NetworkParams& params, const ParamGrads& grads, SgdState& state);
void adam_step(NetworkParams& params, const ParamGrads& grads, AdamState& state);

/// Versioned binary checkpoint ("DMP1" magic); layout documented in the
/// README.
void save_checkpoint(const NetworkParams& params, const std::string& path);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace dmp
