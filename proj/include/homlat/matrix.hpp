#pragma once
// Admissible coefficient matrices: d x d, possibly non-symmetric, with
// symmetric part bounded below by lambda and spectral norm at most 1.
// Certification uses Eigen eigensolvers with a 1e-12 slack.

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "homlat/errors.hpp"

namespace homlat {

inline constexpr double elliptic_slack = 1e-12;

inline Eigen::MatrixXd to_eigen(std::span<const double> e, int d) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = e[static_cast<std::size_t>(i) * d + j];
  return m;
}

inline double spectral_norm(std::span<const double> e, int d) {
  return to_eigen(e, d).jacobiSvd().singularValues()(0);
}

inline double min_symmetric_eigenvalue(std::span<const double> e, int d) {
  const Eigen::MatrixXd m = to_eigen(e, d);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_symmetric_eigenvalue(std::span<const double> e, int d) {
  const Eigen::MatrixXd m = to_eigen(e, d);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(d - 1);
}

// Throws ValidationError unless v.av >= lambda|v|^2 and |av| <= |v| hold,
// both up to elliptic_slack.
inline void validate_elliptic(std::span<const double> e, int d, double lambda) {
  if (static_cast<int>(e.size()) != d * d)
    throw ValidationError("matrix entry count " + std::to_string(e.size()) +
                          " does not match dimension " + std::to_string(d));
  for (double x : e)
    if (!std::isfinite(x)) throw ValidationError("matrix has a non-finite entry");
  const double lo = min_symmetric_eigenvalue(e, d);
  if (lo < lambda - elliptic_slack)
    throw ValidationError("matrix symmetric part has eigenvalue " + std::to_string(lo) +
                          " below lambda = " + std::to_string(lambda));
  const double norm = spectral_norm(e, d);
  if (norm > 1.0 + elliptic_slack)
    throw ValidationError("matrix spectral norm " + std::to_string(norm) + " exceeds 1");
}

inline bool is_symmetric(std::span<const double> e, int d, double tol = 0.0) {
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::abs(e[static_cast<std::size_t>(i) * d + j] -
                   e[static_cast<std::size_t>(j) * d + i]) > tol)
        return false;
  return true;
}

// d x d identity as a flat row-major vector.
inline std::vector<double> identity_matrix(int d) {
  std::vector<double> m(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) m[static_cast<std::size_t>(i) * d + i] = 1.0;
  return m;
}

}  // namespace homlat
