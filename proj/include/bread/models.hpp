#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "bread/rng.hpp"

namespace bread {

inline constexpr double log_two_pi = 1.8378770664093454836;

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (r * r / var + std::log(var) + log_two_pi);
}

// Michael-Schucany-Haas transform for inverse-Gaussian draws.
inline double sample_inverse_gaussian(double mean, double shape, RngStream& rng) {
  const double nu = rng.normal();
  const double z = nu * nu;
  const double x = mean + mean * mean * z / (2.0 * shape) -
                   (mean / (2.0 * shape)) * std::sqrt(4.0 * mean * shape * z + mean * mean * z * z);
  const double u = rng.uniform();
  return u <= mean / (mean + x) ? x : mean * mean / x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// One-dimensional conjugate Gaussian-mean model: theta ~ N(0, prior_var),
// y_i ~ N(theta, noise_var). Everything about the posterior is closed form,
// which makes this the reference model for calibration checks.
class GaussianMeanModel {
 public:
  using State = Eigen::VectorXd;
  using Data = Eigen::VectorXd;

  GaussianMeanModel(double prior_std, double noise_std, int observations)
      : prior_var_(prior_std * prior_std),
        noise_var_(noise_std * noise_std),
        observations_(observations) {
    if (prior_std <= 0.0 || noise_std <= 0.0)
      throw std::invalid_argument("gaussian mean model: non-positive scale");
    if (observations < 0) throw std::invalid_argument("gaussian mean model: negative n");
  }

  int param_dim() const { return 1; }

  double log_prior(const State& theta) const {
    return detail::log_normal_pdf(theta[0], 0.0, prior_var_);
  }

  State grad_log_prior(const State& theta) const {
    State g(1);
    g[0] = -theta[0] / prior_var_;
    return g;
  }

  double log_likelihood(const State& theta, const Data& y) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      acc += detail::log_normal_pdf(y[i], theta[0], noise_var_);
    return acc;
  }

  State grad_log_likelihood(const State& theta, const Data& y) const {
    State g(1);
    g[0] = (y.sum() - static_cast<double>(y.size()) * theta[0]) / noise_var_;
    return g;
  }

  State sample_params(RngStream& rng) const {
    State t(1);
    t[0] = std::sqrt(prior_var_) * rng.normal();
    return t;
  }

  Data sample_data(const State& theta, RngStream& rng) const {
    Data y(observations_);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      y[i] = theta[0] + std::sqrt(noise_var_) * rng.normal();
    return y;
  }

  std::pair<double, double> posterior_mean_var(const Data& y) const {
    const double prec = 1.0 / prior_var_ + static_cast<double>(y.size()) / noise_var_;
    const double var = 1.0 / prec;
    return {var * y.sum() / noise_var_, var};
  }

  double log_marginal_likelihood(const Data& y) const {
    const double n = static_cast<double>(y.size());
    if (n == 0.0) return 0.0;
    const double log_det = (n - 1.0) * std::log(noise_var_) +
                           std::log(noise_var_ + n * prior_var_);
    const double sum = y.sum();
    const double quad =
        (y.squaredNorm() - prior_var_ * sum * sum / (noise_var_ + n * prior_var_)) / noise_var_;
    return -0.5 * (n * log_two_pi + log_det + quad);
  }

  // Posterior CDF evaluated at theta; uniform over ancestral simulations.
  double posterior_cdf(double theta, const Data& y) const {
    const auto [m, v] = posterior_mean_var(y);
    return 0.5 * std::erfc(-(theta - m) / std::sqrt(2.0 * v));
  }

 private:
  double prior_var_, noise_var_;
  int observations_;
};

// ---------------------------------------------------------------------------
// Bayesian linear regression on a standardized design matrix. Weights carry
// standard normal priors. The noise scale is either fixed and known (the
// conjugate benchmark with a closed-form marginal likelihood) or carries an
// inverse-Gaussian or half-Cauchy prior; free scales are represented as their
// logarithm, with the Jacobian folded into the log prior, so every kernel
// works on an unconstrained vector.
enum class NoiseScalePrior { fixed, inverse_gaussian, half_cauchy };

class LinRegModel {
 public:
  using State = Eigen::VectorXd;
  using Data = Eigen::VectorXd;

  static LinRegModel fixed_noise(Eigen::MatrixXd design, double noise_scale) {
    return LinRegModel(std::move(design), NoiseScalePrior::fixed, noise_scale, 1.0, 1.0, 5.0);
  }

  static LinRegModel inverse_gaussian_noise(Eigen::MatrixXd design, double mean = 1.0,
                                            double shape = 1.0) {
    return LinRegModel(std::move(design), NoiseScalePrior::inverse_gaussian, 1.0, mean, shape, 5.0);
  }

  static LinRegModel half_cauchy_noise(Eigen::MatrixXd design, double scale = 5.0) {
    return LinRegModel(std::move(design), NoiseScalePrior::half_cauchy, 1.0, 1.0, 1.0, scale);
  }

  const Eigen::MatrixXd& design() const { return design_; }
  int observations() const { return static_cast<int>(design_.rows()); }
  int weights() const { return static_cast<int>(design_.cols()); }
  NoiseScalePrior noise_prior() const { return noise_prior_; }
  bool has_free_noise() const { return noise_prior_ != NoiseScalePrior::fixed; }
  int param_dim() const { return weights() + (has_free_noise() ? 1 : 0); }
  // index of the log noise-scale coordinate, -1 when the scale is fixed
  int noise_coordinate() const { return has_free_noise() ? weights() : -1; }
  double fixed_noise_scale() const { return fixed_noise_; }

  // Same model with the noise scale clamped to a known value; used when
  // simulating data at estimated hyperparameters.
  LinRegModel with_fixed_noise(double noise_scale) const {
    return fixed_noise(design_, noise_scale);
  }

  double noise_scale_of(const State& theta) const {
    return has_free_noise() ? std::exp(theta[weights()]) : fixed_noise_;
  }

  double log_prior(const State& theta) const {
    check_dim(theta);
    const int d = weights();
    double acc = -0.5 * theta.head(d).squaredNorm() - 0.5 * d * log_two_pi;
    if (has_free_noise()) {
      const double phi = theta[d];
      const double s = std::exp(phi);
      acc += log_noise_density(s) + phi;  // change of variables to log scale
    }
    return acc;
  }

  State grad_log_prior(const State& theta) const {
    check_dim(theta);
    const int d = weights();
    State g = State::Zero(theta.size());
    g.head(d) = -theta.head(d);
    if (has_free_noise()) {
      const double s = std::exp(theta[d]);
      g[d] = s * noise_density_dlog(s) + 1.0;
    }
    return g;
  }

  double log_likelihood(const State& theta, const Data& y) const {
    check_dim(theta);
    if (y.size() != design_.rows()) throw std::invalid_argument("linreg: data size mismatch");
    if (y.size() == 0) return 0.0;
    const double s = noise_scale_of(theta);
    const double n = static_cast<double>(y.size());
    const Eigen::VectorXd r = y - design_ * theta.head(weights());
    return -0.5 * r.squaredNorm() / (s * s) - n * std::log(s) - 0.5 * n * log_two_pi;
  }

  State grad_log_likelihood(const State& theta, const Data& y) const {
    check_dim(theta);
    State g = State::Zero(theta.size());
    if (y.size() == 0) return g;
    const double s = noise_scale_of(theta);
    const Eigen::VectorXd r = y - design_ * theta.head(weights());
    g.head(weights()) = design_.transpose() * r / (s * s);
    if (has_free_noise())
      g[weights()] = r.squaredNorm() / (s * s) - static_cast<double>(y.size());
    return g;
  }

  State sample_params(RngStream& rng) const {
    State t(param_dim());
    for (int i = 0; i < weights(); ++i) t[i] = rng.normal();
    if (has_free_noise()) t[weights()] = std::log(sample_noise_scale(rng));
    return t;
  }

  Data sample_data(const State& theta, RngStream& rng) const {
    check_dim(theta);
    const double s = noise_scale_of(theta);
    Data y = design_ * theta.head(weights());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += s * rng.normal();
    return y;
  }

  double sample_noise_scale(RngStream& rng) const {
    switch (noise_prior_) {
      case NoiseScalePrior::fixed:
        return fixed_noise_;
      case NoiseScalePrior::inverse_gaussian:
        return detail::sample_inverse_gaussian(ig_mean_, ig_shape_, rng);
      case NoiseScalePrior::half_cauchy:
        return cauchy_scale_ * std::tan(0.5 * std::numbers::pi * rng.uniform());
    }
    return fixed_noise_;
  }

  // --- closed forms for the fixed-noise conjugate case ---

  double log_marginal_likelihood(const Data& y) const {
    require_fixed("log_marginal_likelihood");
    const Eigen::Index n = y.size();
    if (n == 0) return 0.0;
    Eigen::MatrixXd cov = design_ * design_.transpose();
    cov.diagonal().array() += fixed_noise_ * fixed_noise_;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::domain_error("linreg marginal: covariance not positive definite");
    const double log_det =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double quad = y.dot(llt.solve(y));
    return -0.5 * (static_cast<double>(n) * log_two_pi + log_det + quad);
  }

  std::pair<Eigen::VectorXd, Eigen::MatrixXd> posterior_moments(const Data& y) const {
    require_fixed("posterior_moments");
    const double s2 = fixed_noise_ * fixed_noise_;
    Eigen::MatrixXd prec = design_.transpose() * design_ / s2;
    prec.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(weights(), weights()));
    const Eigen::VectorXd mean = llt.solve(design_.transpose() * y / s2);
    return {mean, cov};
  }

  // Independent exact posterior draw; only available in the conjugate case.
  State sample_posterior(const Data& y, RngStream& rng) const {
    const auto [mean, cov] = posterior_moments(y);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::domain_error("linreg posterior: covariance not positive definite");
    Eigen::VectorXd z(weights());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return mean + llt.matrixL() * z;
  }

 private:
  LinRegModel(Eigen::MatrixXd design, NoiseScalePrior prior, double fixed, double ig_mean,
              double ig_shape, double cauchy_scale)
      : design_(std::move(design)),
        noise_prior_(prior),
        fixed_noise_(fixed),
        ig_mean_(ig_mean),
        ig_shape_(ig_shape),
        cauchy_scale_(cauchy_scale) {
    if (design_.cols() < 1) throw std::invalid_argument("linreg: need at least one column");
    if (fixed <= 0.0 || ig_mean <= 0.0 || ig_shape <= 0.0 || cauchy_scale <= 0.0)
      throw std::invalid_argument("linreg: non-positive scale parameter");
  }

  void check_dim(const State& theta) const {
    if (theta.size() != param_dim()) throw std::invalid_argument("linreg: parameter size mismatch");
  }

  void require_fixed(const char* what) const {
    if (has_free_noise())
      throw std::invalid_argument(std::string("linreg: ") + what + " needs a fixed noise scale");
  }

  double log_noise_density(double s) const {
    if (noise_prior_ == NoiseScalePrior::inverse_gaussian) {
      const double d = s - ig_mean_;
      return 0.5 * (std::log(ig_shape_) - log_two_pi - 3.0 * std::log(s)) -
             ig_shape_ * d * d / (2.0 * ig_mean_ * ig_mean_ * s);
    }
    // half-Cauchy on the positive axis
    const double t = s / cauchy_scale_;
    return std::log(2.0) - std::log(std::numbers::pi) - std::log(cauchy_scale_) -
           std::log1p(t * t);
  }

  double noise_density_dlog(double s) const {
    if (noise_prior_ == NoiseScalePrior::inverse_gaussian)
      return -1.5 / s - ig_shape_ * (1.0 - ig_mean_ * ig_mean_ / (s * s)) /
                            (2.0 * ig_mean_ * ig_mean_);
    return -2.0 * s / (cauchy_scale_ * cauchy_scale_ + s * s);
  }

  Eigen::MatrixXd design_;
  NoiseScalePrior noise_prior_;
  double fixed_noise_, ig_mean_, ig_shape_, cauchy_scale_;
};

// ---------------------------------------------------------------------------
// Low-rank matrix factorization with spherical Gaussian priors and noise:
// Y (N x D) is approximated by U (N x K) times V (K x D). The uncollapsed
// representation carries both factors; the collapsed one integrates U out
// analytically, leaving rows y_i ~ N(0, sigma_u^2 V^T V + sigma^2 I). The
// covariance uses squared scales, which coincides with the unit-hyperparameter
// setting and is what makes the analytic marginalization of U exact.
enum class MfRepresentation { uncollapsed, collapsed };

class MatrixFactorizationModel {
 public:
  using State = Eigen::VectorXd;
  using Data = Eigen::MatrixXd;

  MatrixFactorizationModel(int rows, int rank, int cols,
                           MfRepresentation representation = MfRepresentation::uncollapsed,
                           double sigma_u = 1.0, double sigma_v = 1.0, double sigma_noise = 1.0)
      : rows_(rows),
        rank_(rank),
        cols_(cols),
        representation_(representation),
        sigma_u_(sigma_u),
        sigma_v_(sigma_v),
        sigma_noise_(sigma_noise) {
    if (rows < 1 || rank < 1 || cols < 1)
      throw std::invalid_argument("matrix factorization: non-positive dimensions");
    if (rank > std::min(rows, cols))
      throw std::invalid_argument("matrix factorization: rank exceeds min(rows, cols)");
    if (sigma_u <= 0.0 || sigma_v <= 0.0 || sigma_noise <= 0.0)
      throw std::invalid_argument("matrix factorization: non-positive scale");
  }

  int rows() const { return rows_; }
  int rank() const { return rank_; }
  int cols() const { return cols_; }
  MfRepresentation representation() const { return representation_; }
  MatrixFactorizationModel as(MfRepresentation rep) const {
    MatrixFactorizationModel copy = *this;
    copy.representation_ = rep;
    return copy;
  }

  int param_dim() const {
    return representation_ == MfRepresentation::uncollapsed ? rows_ * rank_ + rank_ * cols_
                                                            : rank_ * cols_;
  }

  Eigen::Map<const Eigen::MatrixXd> factor_u(const State& theta) const {
    return {theta.data(), rows_, rank_};
  }

  Eigen::Map<const Eigen::MatrixXd> factor_v(const State& theta) const {
    const int off = representation_ == MfRepresentation::uncollapsed ? rows_ * rank_ : 0;
    return {theta.data() + off, rank_, cols_};
  }

  double log_prior(const State& theta) const {
    check_dim(theta);
    if (representation_ == MfRepresentation::uncollapsed) {
      const auto u = factor_u(theta);
      const auto v = factor_v(theta);
      return gaussian_block(u, sigma_u_) + gaussian_block(v, sigma_v_);
    }
    return gaussian_block(factor_v(theta), sigma_v_);
  }

  State grad_log_prior(const State& theta) const {
    check_dim(theta);
    State g = -theta;
    if (representation_ == MfRepresentation::uncollapsed) {
      g.head(rows_ * rank_) /= sigma_u_ * sigma_u_;
      g.tail(rank_ * cols_) /= sigma_v_ * sigma_v_;
    } else {
      g /= sigma_v_ * sigma_v_;
    }
    return g;
  }

  double log_likelihood(const State& theta, const Data& y) const {
    check_data(y);
    check_dim(theta);
    if (representation_ == MfRepresentation::uncollapsed) {
      const double s2 = sigma_noise_ * sigma_noise_;
      const Eigen::MatrixXd r = y - factor_u(theta) * factor_v(theta);
      return -0.5 * r.squaredNorm() / s2 -
             0.5 * static_cast<double>(rows_ * cols_) * (std::log(s2) + log_two_pi);
    }
    const auto llt = row_covariance_llt(factor_v(theta));
    const double log_det =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const Eigen::MatrixXd half = llt.matrixL().solve(y.transpose());  // D x N
    return -0.5 * half.squaredNorm() - 0.5 * static_cast<double>(rows_) * log_det -
           0.5 * static_cast<double>(rows_ * cols_) * log_two_pi;
  }

  State grad_log_likelihood(const State& theta, const Data& y) const {
    check_data(y);
    check_dim(theta);
    State g(theta.size());
    if (representation_ == MfRepresentation::uncollapsed) {
      const double s2 = sigma_noise_ * sigma_noise_;
      const auto u = factor_u(theta);
      const auto v = factor_v(theta);
      const Eigen::MatrixXd r = y - u * v;
      Eigen::Map<Eigen::MatrixXd>(g.data(), rows_, rank_) = r * v.transpose() / s2;
      Eigen::Map<Eigen::MatrixXd>(g.data() + rows_ * rank_, rank_, cols_) =
          u.transpose() * r / s2;
      return g;
    }
    const auto v = factor_v(theta);
    const auto llt = row_covariance_llt(v);
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(cols_, cols_));
    const Eigen::MatrixXd w = inv * (y.transpose() * y) * inv;
    const double su2 = sigma_u_ * sigma_u_;
    Eigen::Map<Eigen::MatrixXd>(g.data(), rank_, cols_) =
        su2 * (v * w - static_cast<double>(rows_) * v * inv);
    return g;
  }

  // Ancestral draw of (U, V, Y); by construction the sampled factors are one
  // exact draw from the posterior given the sampled Y. The collapsed
  // representation keeps only V, which is its exact posterior sample for the
  // same Y.
  struct Simulation {
    Eigen::MatrixXd u, v, y;
  };

  Simulation simulate(RngStream& rng) const {
    Simulation s;
    s.u.resize(rows_, rank_);
    s.v.resize(rank_, cols_);
    for (Eigen::Index i = 0; i < s.u.size(); ++i) s.u.data()[i] = sigma_u_ * rng.normal();
    for (Eigen::Index i = 0; i < s.v.size(); ++i) s.v.data()[i] = sigma_v_ * rng.normal();
    s.y = s.u * s.v;
    for (Eigen::Index i = 0; i < s.y.size(); ++i) s.y.data()[i] += sigma_noise_ * rng.normal();
    return s;
  }

  State pack_uncollapsed(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) const {
    State theta(rows_ * rank_ + rank_ * cols_);
    Eigen::Map<Eigen::MatrixXd>(theta.data(), rows_, rank_) = u;
    Eigen::Map<Eigen::MatrixXd>(theta.data() + rows_ * rank_, rank_, cols_) = v;
    return theta;
  }

  State pack_collapsed(const Eigen::MatrixXd& v) const {
    State theta(rank_ * cols_);
    Eigen::Map<Eigen::MatrixXd>(theta.data(), rank_, cols_) = v;
    return theta;
  }

  State sample_params(RngStream& rng) const {
    const Simulation s = simulate(rng);
    return representation_ == MfRepresentation::uncollapsed ? pack_uncollapsed(s.u, s.v)
                                                            : pack_collapsed(s.v);
  }

  Data sample_data(const State& theta, RngStream& rng) const {
    check_dim(theta);
    if (representation_ == MfRepresentation::uncollapsed) {
      Data y = factor_u(theta) * factor_v(theta);
      for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += sigma_noise_ * rng.normal();
      return y;
    }
    const auto llt = row_covariance_llt(factor_v(theta));
    const Eigen::MatrixXd chol = llt.matrixL();
    Data y(rows_, cols_);
    Eigen::VectorXd z(cols_);
    for (int i = 0; i < rows_; ++i) {
      for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
      y.row(i) = (chol * z).transpose();
    }
    return y;
  }

 private:
  void check_dim(const State& theta) const {
    if (theta.size() != param_dim())
      throw std::invalid_argument("matrix factorization: parameter size mismatch");
  }

  void check_data(const Data& y) const {
    if (y.rows() != rows_ || y.cols() != cols_)
      throw std::invalid_argument("matrix factorization: data dimension mismatch");
  }

  template <class M>
  static double gaussian_block(const M& block, double sigma) {
    return -0.5 * block.squaredNorm() / (sigma * sigma) -
           0.5 * static_cast<double>(block.size()) * (2.0 * std::log(sigma) + log_two_pi);
  }

  Eigen::LLT<Eigen::MatrixXd> row_covariance_llt(
      const Eigen::Map<const Eigen::MatrixXd>& v) const {
    Eigen::MatrixXd cov = sigma_u_ * sigma_u_ * v.transpose() * v;
    cov.diagonal().array() += sigma_noise_ * sigma_noise_;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::domain_error("matrix factorization: row covariance not positive definite");
    return llt;
  }

  int rows_, rank_, cols_;
  MfRepresentation representation_;
  double sigma_u_, sigma_v_, sigma_noise_;
};

// Joint log densities under each representation, with gradients.
inline double mf_log_joint_uncollapsed(const MatrixFactorizationModel& model,
                                       const Eigen::VectorXd& theta, const Eigen::MatrixXd& y) {
  const auto m = model.as(MfRepresentation::uncollapsed);
  return m.log_prior(theta) + m.log_likelihood(theta, y);
}

inline Eigen::VectorXd mf_grad_log_joint_uncollapsed(const MatrixFactorizationModel& model,
                                                     const Eigen::VectorXd& theta,
                                                     const Eigen::MatrixXd& y) {
  const auto m = model.as(MfRepresentation::uncollapsed);
  return m.grad_log_prior(theta) + m.grad_log_likelihood(theta, y);
}

inline double mf_log_joint_collapsed(const MatrixFactorizationModel& model,
                                     const Eigen::VectorXd& theta, const Eigen::MatrixXd& y) {
  const auto m = model.as(MfRepresentation::collapsed);
  return m.log_prior(theta) + m.log_likelihood(theta, y);
}

inline Eigen::VectorXd mf_grad_log_joint_collapsed(const MatrixFactorizationModel& model,
                                                   const Eigen::VectorXd& theta,
                                                   const Eigen::MatrixXd& y) {
  const auto m = model.as(MfRepresentation::collapsed);
  return m.grad_log_prior(theta) + m.grad_log_likelihood(theta, y);
}

// Ancestral simulation: draws hyperparameter-conditioned parameters and a
// matching dataset; the returned parameters are one exact posterior sample
// for the returned data.
template <class Model>
struct SimulatedDataset {
  typename Model::State params;
  typename Model::Data data;
};

template <class Model>
SimulatedDataset<Model> simulate_dataset(const Model& model, std::uint64_t seed) {
  RngStream rng(seed);
  SimulatedDataset<Model> out;
  out.params = model.sample_params(rng);
  out.data = model.sample_data(out.params, rng);
  return out;
}

}  // namespace bread
