#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "anchorcast/rng.hpp"

namespace anchorcast {

enum class Activation { ReLU, Identity };

struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::ReLU;
  // persistent power-iteration vectors, warm-started across calls
  Eigen::VectorXd pi_u;
  Eigen::VectorXd pi_v;
};

// Deterministic spectral-normalized MLP. All math is double precision and
// batch-first: rows are samples.
struct EncoderState {
  std::vector<DenseLayer> layers;
  double spectral_bound = 2.65;

  int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().W.rows()); }
};

// Glorot-uniform weights, zero biases; hidden layers ReLU, final layer linear.
inline EncoderState make_encoder(const std::vector<int>& dims, double spectral_bound,
                                 std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("encoder needs at least one layer");
  EncoderState s;
  s.spectral_bound = spectral_bound;
  Rng rng(substream(seed, 0xE4C0DE));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    layer.W.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.W(r, c) = rng.uniform(-bound, bound);
    }
    layer.b = Eigen::VectorXd::Zero(fan_out);
    layer.act = (l + 2 == dims.size()) ? Activation::Identity : Activation::ReLU;
    layer.pi_u.resize(fan_out);
    for (int r = 0; r < fan_out; ++r) layer.pi_u[r] = rng.normal();
    layer.pi_u.normalize();
    layer.pi_v = Eigen::VectorXd::Zero(fan_in);
    s.layers.push_back(std::move(layer));
  }
  return s;
}

struct EncoderCache {
  std::vector<Eigen::MatrixXd> inputs;  // activation input per layer
  std::vector<Eigen::MatrixXd> preact;  // pre-activation per layer
};

inline Eigen::MatrixXd encoder_forward(const EncoderState& s, const Eigen::MatrixXd& X,
                                       EncoderCache* cache = nullptr) {
  if (X.cols() != s.input_dim()) throw std::invalid_argument("encoder input dimension mismatch");
  Eigen::MatrixXd a = X;
  if (cache) {
    cache->inputs.clear();
    cache->preact.clear();
  }
  for (const DenseLayer& l : s.layers) {
    if (cache) cache->inputs.push_back(a);
    Eigen::MatrixXd z = (a * l.W.transpose()).rowwise() + l.b.transpose();
    if (cache) cache->preact.push_back(z);
    a = l.act == Activation::ReLU ? z.cwiseMax(0.0) : std::move(z);
  }
  return a;
}

inline Eigen::VectorXd encoder_forward(const EncoderState& s, const Eigen::VectorXd& x) {
  return encoder_forward(s, Eigen::MatrixXd(x.transpose())).row(0);
}

struct EncoderGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  void setZero(const EncoderState& s) {
    dW.clear();
    db.clear();
    for (const DenseLayer& l : s.layers) {
      dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
      db.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
  }
};

// Reverse-mode gradients; returns the gradient w.r.t. the input batch.
inline Eigen::MatrixXd encoder_backward(const EncoderState& s, const EncoderCache& cache,
                                        const Eigen::MatrixXd& upstream, EncoderGrads* grads) {
  Eigen::MatrixXd delta = upstream;
  if (grads) {
    grads->dW.assign(s.layers.size(), {});
    grads->db.assign(s.layers.size(), {});
  }
  for (int l = static_cast<int>(s.layers.size()) - 1; l >= 0; --l) {
    const DenseLayer& layer = s.layers[static_cast<std::size_t>(l)];
    const auto& z = cache.preact[static_cast<std::size_t>(l)];
    if (layer.act == Activation::ReLU) {
      delta = delta.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    }
    if (grads) {
      grads->dW[static_cast<std::size_t>(l)] = delta.transpose() * cache.inputs[static_cast<std::size_t>(l)];
      grads->db[static_cast<std::size_t>(l)] = delta.colwise().sum();
    }
    delta = delta * layer.W;
  }
  return delta;
}

namespace detail {

// Warm-started power iteration run to convergence of the singular-value
// estimate. The persistent vectors make the steady-state cost one or two
// matvec pairs per call.
inline double top_singular_estimate(DenseLayer& l) {
  double sigma = 0.0, prev = -1.0;
  for (int iter = 0; iter < 256; ++iter) {
    Eigen::VectorXd v = l.W.transpose() * l.pi_u;
    const double nv = v.norm();
    if (nv < 1e-300) return 0.0;
    v /= nv;
    Eigen::VectorXd u = l.W * v;
    const double nu = u.norm();
    if (nu < 1e-300) return 0.0;
    l.pi_u = u / nu;
    l.pi_v = v;
    sigma = nu;
    if (std::abs(sigma - prev) <= 1e-13 * std::max(1.0, sigma)) break;
    prev = sigma;
  }
  return sigma;
}

}  // namespace detail

// Clips each layer's top singular value to the bound: weights with an
// estimate at or below the bound are left untouched bit-for-bit.
inline void spectral_normalize(EncoderState& s) {
  for (DenseLayer& l : s.layers) {
    for (int round = 0; round < 4; ++round) {
      const double sigma = detail::top_singular_estimate(l);
      if (sigma <= s.spectral_bound * (1.0 + 1e-12)) break;
      l.W *= s.spectral_bound / sigma;
    }
  }
}

// --- Flattened parameter view (row-major weights, then bias, per layer) ---

inline int encoder_param_count(const EncoderState& s) {
  int n = 0;
  for (const DenseLayer& l : s.layers) {
    n += static_cast<int>(l.W.size() + l.b.size());
  }
  return n;
}

inline Eigen::VectorXd encoder_flatten(const EncoderState& s) {
  Eigen::VectorXd out(encoder_param_count(s));
  int at = 0;
  for (const DenseLayer& l : s.layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) out[at++] = l.W(r, c);
    }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) out[at++] = l.b[r];
  }
  return out;
}

inline void encoder_unflatten(EncoderState& s, const Eigen::VectorXd& params) {
  if (params.size() != encoder_param_count(s)) {
    throw std::invalid_argument("encoder parameter vector shape mismatch");
  }
  int at = 0;
  for (DenseLayer& l : s.layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = params[at++];
    }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b[r] = params[at++];
  }
}

inline Eigen::VectorXd grads_flatten(const EncoderState& s, const EncoderGrads& g) {
  Eigen::VectorXd out(encoder_param_count(s));
  int at = 0;
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    const auto& dW = g.dW[l];
    const auto& db = g.db[l];
    for (Eigen::Index r = 0; r < dW.rows(); ++r) {
      for (Eigen::Index c = 0; c < dW.cols(); ++c) out[at++] = dW(r, c);
    }
    for (Eigen::Index r = 0; r < db.size(); ++r) out[at++] = db[r];
  }
  return out;
}

struct BindPenalty {
  double value = 0.0;
  Eigen::VectorXd grad;
};

// (lambda/2) * ||theta - prior||^2 with gradient lambda * (theta - prior).
inline BindPenalty l2_bind_penalty(const Eigen::VectorXd& params, const Eigen::VectorXd& prior_mean,
                                   double lambda_nn) {
  if (params.size() != prior_mean.size()) {
    throw std::invalid_argument("prior mean shape mismatch");
  }
  BindPenalty p;
  if (lambda_nn == 0.0) {
    p.value = 0.0;
    p.grad = Eigen::VectorXd::Zero(params.size());
    return p;
  }
  const Eigen::VectorXd diff = params - prior_mean;
  p.value = 0.5 * lambda_nn * diff.squaredNorm();
  p.grad = lambda_nn * diff;
  return p;
}

inline BindPenalty l2_bind_penalty(const EncoderState& s, const Eigen::VectorXd& prior_mean,
                                   double lambda_nn) {
  return l2_bind_penalty(encoder_flatten(s), prior_mean, lambda_nn);
}

}  // namespace anchorcast
