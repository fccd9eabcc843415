#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <stdexcept>

namespace bread {

namespace detail {

inline Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& cov, const char* which) {
  if (cov.rows() != cov.cols())
    throw std::invalid_argument("gaussian divergence: covariance must be square");
  if (!cov.isApprox(cov.transpose(), 1e-10))
    throw std::domain_error(std::string("gaussian divergence: covariance not symmetric: ") + which);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::domain_error(std::string("gaussian divergence: covariance not positive definite: ") + which);
  return llt;
}

inline double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace detail

// D_KL( N(mean1, cov1) || N(mean2, cov2) ), in nats.
inline double gaussian_kl(const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1,
                          const Eigen::VectorXd& mean2, const Eigen::MatrixXd& cov2) {
  if (mean1.size() != mean2.size() || cov1.rows() != mean1.size() || cov2.rows() != mean2.size())
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  auto llt1 = detail::checked_llt(cov1, "first");
  auto llt2 = detail::checked_llt(cov2, "second");
  const double d = static_cast<double>(mean1.size());
  const Eigen::VectorXd dm = mean2 - mean1;
  const double trace_term = llt2.solve(cov1).trace();
  const double quad_term = dm.dot(llt2.solve(dm));
  const double log_det_term = detail::log_det_from_llt(llt2) - detail::log_det_from_llt(llt1);
  return 0.5 * (trace_term + quad_term - d + log_det_term);
}

// Symmetrized KL (Jeffreys divergence) between two Gaussians, in nats.
inline double gaussian_jeffreys(const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1,
                                const Eigen::VectorXd& mean2, const Eigen::MatrixXd& cov2) {
  return gaussian_kl(mean1, cov1, mean2, cov2) + gaussian_kl(mean2, cov2, mean1, cov1);
}

// 1-D convenience overloads (variances, not standard deviations).
inline double gaussian_kl(double mean1, double var1, double mean2, double var2) {
  Eigen::VectorXd m1(1), m2(1);
  Eigen::MatrixXd c1(1, 1), c2(1, 1);
  m1 << mean1;
  m2 << mean2;
  c1 << var1;
  c2 << var2;
  return gaussian_kl(m1, c1, m2, c2);
}

inline double gaussian_jeffreys(double mean1, double var1, double mean2, double var2) {
  return gaussian_kl(mean1, var1, mean2, var2) + gaussian_kl(mean2, var2, mean1, var1);
}

}  // namespace bread
