#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "anchorcast/rng.hpp"

namespace anchorcast {

struct CholeskyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- Random Fourier features -------------------------------------------

// Frozen RFF projection approximating an RBF kernel with length scale sigma:
// phi(h) = sqrt(2/m) cos(W h + b), W ~ N(0, 1/sigma^2), b ~ U[0, 2pi).
struct RFFProjection {
  Eigen::MatrixXd W;  // m x dh
  Eigen::VectorXd b;  // m
  double sigma = 1.0;

  int m() const { return static_cast<int>(W.rows()); }
  int dh() const { return static_cast<int>(W.cols()); }
};

inline RFFProjection make_rff(int m, int dh, double sigma, std::uint64_t seed) {
  if (m < 1 || dh < 1 || !(sigma > 0.0)) throw std::invalid_argument("bad RFF configuration");
  RFFProjection proj;
  proj.sigma = sigma;
  proj.W.resize(m, dh);
  proj.b.resize(m);
  Rng rng(substream(seed, 0x4FF5EED));
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < dh; ++c) proj.W(r, c) = rng.normal() / sigma;
  }
  for (int r = 0; r < m; ++r) proj.b[r] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return proj;
}

inline Eigen::VectorXd rff_features(const RFFProjection& proj, const Eigen::VectorXd& h) {
  if (h.size() != proj.dh()) throw std::invalid_argument("RFF input dimension mismatch");
  const double scale = std::sqrt(2.0 / proj.m());
  return (scale * ((proj.W * h + proj.b).array().cos())).matrix();
}

// Batch variant; optionally returns the pre-cosine activations needed for the
// backward pass.
inline Eigen::MatrixXd rff_features(const RFFProjection& proj, const Eigen::MatrixXd& H,
                                    Eigen::MatrixXd* preact = nullptr) {
  if (H.cols() != proj.dh()) throw std::invalid_argument("RFF input dimension mismatch");
  Eigen::MatrixXd P = (H * proj.W.transpose()).rowwise() + proj.b.transpose();
  const double scale = std::sqrt(2.0 / proj.m());
  Eigen::MatrixXd Phi = (scale * P.array().cos()).matrix();
  if (preact) *preact = std::move(P);
  return Phi;
}

// d(loss)/dH given d(loss)/dPhi and the cached pre-cosine activations.
inline Eigen::MatrixXd rff_backward(const RFFProjection& proj, const Eigen::MatrixXd& preact,
                                    const Eigen::MatrixXd& dPhi) {
  const double scale = std::sqrt(2.0 / proj.m());
  return (-scale * (dPhi.array() * preact.array().sin())).matrix() * proj.W;
}

// --- GP output weights ---------------------------------------------------

// g_c = theta_c . phi
inline Eigen::VectorXd gp_logits(const Eigen::MatrixXd& theta, const Eigen::VectorXd& phi) {
  if (theta.cols() != phi.size()) throw std::invalid_argument("logit shape mismatch");
  return theta * phi;
}

inline Eigen::MatrixXd gp_logits(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& Phi) {
  if (theta.cols() != Phi.cols()) throw std::invalid_argument("logit shape mismatch");
  return Phi * theta.transpose();  // n x K
}

struct GpPriorPenalty {
  double value = 0.0;
  Eigen::MatrixXd grad;  // K x m
};

// (lambda/2) sum_c (theta_c - mean_c)^T Prec_c (theta_c - mean_c).
// An empty precision list means the identity prior.
inline GpPriorPenalty gp_prior_penalty(const Eigen::MatrixXd& theta,
                                       const Eigen::MatrixXd& prior_mean,
                                       const std::vector<Eigen::MatrixXd>& prior_precision,
                                       double lambda_gp) {
  if (theta.rows() != prior_mean.rows() || theta.cols() != prior_mean.cols()) {
    throw std::invalid_argument("GP prior mean shape mismatch");
  }
  GpPriorPenalty out;
  if (lambda_gp == 0.0) {
    out.grad = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
    return out;
  }
  const Eigen::MatrixXd diff = theta - prior_mean;
  if (prior_precision.empty()) {
    out.value = 0.5 * lambda_gp * diff.squaredNorm();
    out.grad = lambda_gp * diff;
    return out;
  }
  if (static_cast<Eigen::Index>(prior_precision.size()) != theta.rows()) {
    throw std::invalid_argument("per-class prior precision count mismatch");
  }
  out.grad.resize(theta.rows(), theta.cols());
  for (Eigen::Index c = 0; c < theta.rows(); ++c) {
    const Eigen::VectorXd d = diff.row(c).transpose();
    const Eigen::VectorXd pd = prior_precision[static_cast<std::size_t>(c)] * d;
    out.value += 0.5 * lambda_gp * d.dot(pd);
    out.grad.row(c) = (lambda_gp * pd).transpose();
  }
  return out;
}

// --- Heteroscedastic noise head -----------------------------------------

// Low-rank input-dependent noise: V(h) is K x R from one affine map, d(h) is
// a softplus-activated K-vector from another. Rank 0 disables the head.
struct HetNoiseHead {
  int num_classes = 0;
  int rank = 0;
  Eigen::MatrixXd WV;  // (K*R) x dh
  Eigen::VectorXd bV;
  Eigen::MatrixXd Wd;  // K x dh
  Eigen::VectorXd bd;
};

inline HetNoiseHead make_het_head(int num_classes, int rank, int dh, std::uint64_t seed) {
  HetNoiseHead head;
  head.num_classes = num_classes;
  head.rank = rank;
  Rng rng(substream(seed, 0x4E75EAD));
  const int kv = num_classes * std::max(rank, 0);
  const double bound_v = kv > 0 ? std::sqrt(6.0 / (dh + kv)) : 0.0;
  head.WV.resize(kv, dh);
  for (int r = 0; r < kv; ++r) {
    for (int c = 0; c < dh; ++c) head.WV(r, c) = rng.uniform(-bound_v, bound_v);
  }
  head.bV = Eigen::VectorXd::Zero(kv);
  const double bound_d = std::sqrt(6.0 / (dh + num_classes));
  head.Wd.resize(num_classes, dh);
  for (int r = 0; r < num_classes; ++r) {
    for (int c = 0; c < dh; ++c) head.Wd(r, c) = rng.uniform(-bound_d, bound_d);
  }
  head.bd = Eigen::VectorXd::Zero(num_classes);
  return head;
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

struct HetOutputs {
  Eigen::MatrixXd V;       // K x R
  Eigen::VectorXd d;       // K, positive
  Eigen::VectorXd d_raw;   // pre-softplus, kept for the backward pass
};

inline HetOutputs het_outputs(const HetNoiseHead& head, const Eigen::VectorXd& h) {
  HetOutputs out;
  out.d_raw = head.Wd * h + head.bd;
  out.d.resize(head.num_classes);
  for (int c = 0; c < head.num_classes; ++c) out.d[c] = softplus(out.d_raw[c]);
  if (head.rank > 0) {
    const Eigen::VectorXd v_flat = head.WV * h + head.bV;
    out.V = Eigen::Map<const Eigen::MatrixXd>(v_flat.data(), head.rank, head.num_classes)
                .transpose();  // row-major reshape to K x R
  } else {
    out.V.resize(head.num_classes, 0);
  }
  return out;
}

// Reparameterized draw u = g + w_het * (V eps1 + d .* eps2); eps1 before eps2
// in the stream. Differentiable w.r.t. g, V and d for fixed draws.
inline Eigen::VectorXd sample_logits(const Eigen::VectorXd& g, const Eigen::MatrixXd& V,
                                     const Eigen::VectorXd& d, double w_het, Rng& rng,
                                     Eigen::VectorXd* eps1_out = nullptr,
                                     Eigen::VectorXd* eps2_out = nullptr) {
  const Eigen::Index K = g.size();
  const Eigen::Index R = V.cols();
  Eigen::VectorXd eps1(R), eps2(K);
  for (Eigen::Index r = 0; r < R; ++r) eps1[r] = rng.normal();
  for (Eigen::Index c = 0; c < K; ++c) eps2[c] = rng.normal();
  if (eps1_out) *eps1_out = eps1;
  if (eps2_out) *eps2_out = eps2;
  return g + w_het * (V * eps1 + d.cwiseProduct(eps2));
}

// --- Laplace posterior ----------------------------------------------------

struct LaplacePosterior {
  std::vector<Eigen::MatrixXd> precision;   // per class, m x m
  std::vector<Eigen::MatrixXd> chol_lower;  // cached Cholesky factors

  bool ready() const { return !precision.empty(); }
  int m() const { return precision.empty() ? 0 : static_cast<int>(precision.front().rows()); }
};

// Prec_c = gamma * PriorPrec_c + sum_i p_ic (1 - p_ic) phi_i phi_i^T, with
// p evaluated at the noise-free MAP logits. `sigmoid_probs` selects the
// curvature of the multilabel (sigmoid) objective instead of the softmax one.
// The uninformed case is an empty prior list with gamma = 1 (identity prior).
inline LaplacePosterior laplace_update(const Eigen::MatrixXd& Phi,
                                       const Eigen::MatrixXd& map_logits, bool sigmoid_probs,
                                       const std::vector<Eigen::MatrixXd>& prior_precision,
                                       double gamma_gp) {
  const Eigen::Index n = Phi.rows();
  const Eigen::Index m = Phi.cols();
  const Eigen::Index K = map_logits.cols();
  if (map_logits.rows() != n) throw std::invalid_argument("laplace shape mismatch");
  if (!prior_precision.empty() &&
      static_cast<Eigen::Index>(prior_precision.size()) != K) {
    throw std::invalid_argument("per-class prior precision count mismatch");
  }
  if (!(gamma_gp > 0.0)) throw std::invalid_argument("gamma must be positive");

  Eigen::MatrixXd P(n, K);
  if (sigmoid_probs) {
    P = map_logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd row = map_logits.row(i).transpose();
      const double mx = row.maxCoeff();
      Eigen::VectorXd e = (row.array() - mx).exp();
      P.row(i) = (e / e.sum()).transpose();
    }
  }

  LaplacePosterior post;
  post.precision.reserve(static_cast<std::size_t>(K));
  post.chol_lower.reserve(static_cast<std::size_t>(K));
  for (Eigen::Index c = 0; c < K; ++c) {
    Eigen::MatrixXd prec = prior_precision.empty()
                               ? Eigen::MatrixXd(gamma_gp * Eigen::MatrixXd::Identity(m, m))
                               : Eigen::MatrixXd(gamma_gp * prior_precision[static_cast<std::size_t>(c)]);
    if (n > 0) {
      const Eigen::ArrayXd w = P.col(c).array() * (1.0 - P.col(c).array());
      const Eigen::MatrixXd scaled = Phi.array().colwise() * w.sqrt();
      prec.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
      prec.triangularView<Eigen::StrictlyUpper>() =
          prec.triangularView<Eigen::StrictlyLower>().transpose();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success) {
      throw CholeskyError("posterior precision not positive definite for class " +
                          std::to_string(c));
    }
    post.precision.push_back(std::move(prec));
    post.chol_lower.push_back(llt.matrixL());
  }
  return post;
}

// Per-class epistemic logit variance phi^T Cov_c phi via the cached factors.
inline Eigen::VectorXd epistemic_logit_variance(const LaplacePosterior& post,
                                                const Eigen::VectorXd& phi) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(post.precision.size()));
  for (std::size_t c = 0; c < post.precision.size(); ++c) {
    const Eigen::VectorXd y =
        post.chol_lower[c].triangularView<Eigen::Lower>().solve(phi);
    v[static_cast<Eigen::Index>(c)] = y.squaredNorm();
  }
  return v;
}

// --- Monte Carlo predictive ------------------------------------------------

struct InferenceConfig {
  int mc_samples = 64;
  double tau = 20.0;
  double w_sngp = 0.1;
  double w_het = 0.2;
};

// S logit draws (rows): u = g* + sqrt(w_sngp * v_c) z + w_het (V eps1 + d eps2).
// Epistemic and aleatoric noise come from separate streams so disabling one
// path leaves the other's draws bit-identical.
inline Eigen::MatrixXd draw_logit_samples(const Eigen::VectorXd& g_star,
                                          const Eigen::VectorXd& epistemic_var,
                                          const Eigen::MatrixXd& V, const Eigen::VectorXd& d,
                                          const InferenceConfig& cfg, Rng& theta_rng,
                                          Rng& eps_rng) {
  if (cfg.mc_samples < 1) throw std::invalid_argument("mc_samples must be at least 1");
  const Eigen::Index K = g_star.size();
  Eigen::MatrixXd U(cfg.mc_samples, K);
  for (int s = 0; s < cfg.mc_samples; ++s) {
    Eigen::VectorXd u = g_star;
    if (cfg.w_sngp > 0.0) {
      for (Eigen::Index c = 0; c < K; ++c) {
        u[c] += std::sqrt(cfg.w_sngp * epistemic_var[c]) * theta_rng.normal();
      }
    }
    if (cfg.w_het > 0.0) {
      u = sample_logits(u, V, d, cfg.w_het, eps_rng);
    }
    U.row(s) = u.transpose();
  }
  return U;
}

inline Eigen::VectorXd average_softmax(const Eigen::MatrixXd& U, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(U.cols());
  for (Eigen::Index s = 0; s < U.rows(); ++s) {
    Eigen::VectorXd row = U.row(s).transpose() / tau;
    const double mx = row.maxCoeff();
    Eigen::VectorXd e = (row.array() - mx).exp();
    p += e / e.sum();
  }
  return p / static_cast<double>(U.rows());
}

}  // namespace anchorcast
