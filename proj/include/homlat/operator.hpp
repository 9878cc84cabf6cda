#pragma once
// The massive non-symmetric elliptic operator
//   (A u)(x) = u(x)/T + (div* a grad u)(x)
// applied matrix-free in two passes: fluxes g_i(x) = sum_j a_ij(x) grad_j u(x),
// then the backward divergence. The adjoint of A is the same operator built
// on the pointwise transposed coefficients, which tests exploit.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "homlat/errors.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"

namespace homlat {

// Holds a reference to the coefficient field; the field must outlive the
// handle. apply() reuses an internal flux buffer, so a handle must not be
// shared across threads (each worker builds its own).
class OperatorHandle {
 public:
  OperatorHandle(const CoefficientField& a, double T) : a_(&a), T_(T) {
    if (!(T > 0.0)) throw ValidationError("operator needs T > 0");
  }

  const CoefficientField& coefficients() const { return *a_; }
  const TorusGrid& grid() const { return a_->grid(); }
  double T() const { return T_; }

  // out = u/T + div*(a grad u). `out` may not alias `u`.
  void apply(std::span<const double> u, std::span<double> out) const {
    const TorusGrid& grid = a_->grid();
    const int d = grid.dim();
    const std::int64_t n = grid.site_count();
    if (static_cast<std::int64_t>(u.size()) != n || static_cast<std::int64_t>(out.size()) != n)
      throw ValidationError("operator apply: size mismatch");
    flux_.resize(static_cast<std::size_t>(n) * d);
    for (std::int64_t s = 0; s < n; ++s) {
      double g[max_dim];
      for (int j = 0; j < d; ++j) g[j] = u[grid.neighbor(s, j, +1)] - u[s];
      double* f = flux_.data() + static_cast<std::size_t>(s) * d;
      a_->apply_at(s, g, f);
    }
    const double invT = 1.0 / T_;
    for (std::int64_t s = 0; s < n; ++s) {
      double acc = u[s] * invT;
      for (int i = 0; i < d; ++i) {
        const std::int64_t back = grid.neighbor(s, i, -1);
        acc += flux_[static_cast<std::size_t>(back) * d + i] -
               flux_[static_cast<std::size_t>(s) * d + i];
      }
      out[s] = acc;
    }
  }

  LatticeScalarField apply(const LatticeScalarField& u) const {
    LatticeScalarField out(u.grid_ptr());
    apply(u.values(), out.values());
    return out;
  }

  // Dense matrix assembly, for the direct-solve oracle and small tests.
  // Row x of the matrix reproduces apply() on basis vectors exactly.
  Eigen::MatrixXd dense_matrix() const {
    const TorusGrid& grid = a_->grid();
    const int d = grid.dim();
    const std::int64_t n = grid.site_count();
    if (n > 4096) throw CapacityError("dense assembly limited to 4096 sites");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    const double invT = 1.0 / T_;
    for (std::int64_t x = 0; x < n; ++x) m(x, x) += invT;
    // div*(a grad u)(x) = sum_i [flux_i(x-e_i) - flux_i(x)] with
    // flux_i(y) = sum_j a_ij(y) (u(y+e_j) - u(y)).
    for (std::int64_t x = 0; x < n; ++x) {
      for (int i = 0; i < d; ++i) {
        const std::int64_t xm = grid.neighbor(x, i, -1);
        for (int j = 0; j < d; ++j) {
          const double am = a_->entry(xm, i, j);
          const double ax = a_->entry(x, i, j);
          m(x, grid.neighbor(xm, j, +1)) += am;
          m(x, xm) -= am;
          m(x, grid.neighbor(x, j, +1)) -= ax;
          m(x, x) += ax;
        }
      }
    }
    return m;
  }

 private:
  const CoefficientField* a_;
  double T_;
  mutable std::vector<double> flux_;
};

}  // namespace homlat
