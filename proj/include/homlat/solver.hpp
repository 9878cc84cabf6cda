#pragma once
// Linear solves for the massive elliptic operator. The workhorse is
// BiCGSTAB preconditioned by the exact inverse of the constant-coefficient
// surrogate 1/T + c div* grad (applied spectrally), with a dense
// LU oracle for small grids and as an automatic fallback. Convergence is
// certified against the true residual, recomputed with a fresh operator
// application after the iteration stops.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homlat/calculus.hpp"
#include "homlat/errors.hpp"
#include "homlat/fft.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"
#include "homlat/operator.hpp"
#include "homlat/rng.hpp"

namespace homlat {

inline constexpr std::int64_t dense_solve_max_sites = 4096;

enum class SolveMethod { automatic, iterative, dense_oracle };

struct SolveOptions {
  double tol = 1e-10;              // relative residual target
  std::int64_t max_iterations = 0; // 0 means 20 * site_count
  SolveMethod method = SolveMethod::automatic;
  std::uint64_t init_seed = 0;     // 0 means zero initial guess
  bool use_preconditioner = true;
};

struct SolveReport {
  std::int64_t iterations = 0;
  double residual = 0.0;  // relative true residual at exit
  double rhs_norm = 0.0;
  int restarts = 0;
  std::string method;
};

namespace detail {

// Spectral application of (1/T + c div* grad)^{-1}.
class ConstantInversePreconditioner {
 public:
  ConstantInversePreconditioner(const TorusGrid& grid, double T, double c)
      : grid_(&grid), inv_symbol_(static_cast<std::size_t>(grid.site_count())) {
    const FrequencyGrid fg(std::make_shared<const TorusGrid>(grid.dim(), grid.side()));
    std::array<double, max_dim> xi{};
    for (std::int64_t s = 0; s < grid.site_count(); ++s) {
      fg.frequency(s, std::span<double>(xi.data(), grid.dim()));
      inv_symbol_[static_cast<std::size_t>(s)] =
          1.0 / (1.0 / T + c * laplace_symbol(std::span<const double>(xi.data(), grid.dim())));
    }
    buf_.resize(static_cast<std::size_t>(grid.site_count()));
    hat_.resize(static_cast<std::size_t>(grid.site_count()));
  }

  void apply(std::span<const double> in, std::span<double> out) const {
    const std::size_t n = inv_symbol_.size();
    for (std::size_t i = 0; i < n; ++i) buf_[i] = in[i];
    execute_dft(*grid_, FFTW_FORWARD, buf_.data(), hat_.data());
    for (std::size_t i = 0; i < n; ++i) hat_[i] *= inv_symbol_[i];
    execute_dft(*grid_, FFTW_BACKWARD, hat_.data(), buf_.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf_[i].real() * scale;
  }

 private:
  const TorusGrid* grid_;
  std::vector<double> inv_symbol_;
  mutable cvector buf_;
  mutable cvector hat_;
};

inline double dot_span(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Mean diagonal of the symmetric part, the natural constant-coefficient
// surrogate conductivity.
inline double mean_diagonal(const CoefficientField& a) {
  const int d = a.dim();
  double acc = 0.0;
  for (std::int64_t s = 0; s < a.grid().site_count(); ++s)
    for (int i = 0; i < d; ++i) acc += a.entry(s, i, i);
  return acc / (static_cast<double>(a.grid().site_count()) * d);
}

}  // namespace detail

// Dense LU solve; exact oracle for small problems.
inline LatticeScalarField solve_dense(const OperatorHandle& h, const LatticeScalarField& f,
                                      SolveReport* report = nullptr) {
  const TorusGrid& grid = h.grid();
  require_same_grid(grid, f.grid());
  const std::int64_t n = grid.site_count();
  if (n > dense_solve_max_sites)
    throw CapacityError("dense solve limited to " + std::to_string(dense_solve_max_sites) +
                        " sites, grid has " + std::to_string(n));
  const Eigen::MatrixXd m = h.dense_matrix();
  Eigen::VectorXd b(n);
  for (std::int64_t s = 0; s < n; ++s) b(s) = f[s];
  const Eigen::VectorXd x = Eigen::PartialPivLU<Eigen::MatrixXd>(m).solve(b);
  LatticeScalarField u(f.grid_ptr());
  for (std::int64_t s = 0; s < n; ++s) u[s] = x(s);
  if (report) {
    LatticeScalarField r(f.grid_ptr());
    h.apply(u.values(), r.values());
    double rn = 0.0;
    for (std::int64_t s = 0; s < n; ++s) {
      const double e = f[s] - r[s];
      rn += e * e;
    }
    report->iterations = 0;
    report->restarts = 0;
    report->rhs_norm = l2_norm(f.values());
    report->residual = report->rhs_norm > 0.0 ? std::sqrt(rn) / report->rhs_norm : std::sqrt(rn);
    report->method = "dense";
  }
  return u;
}

// Preconditioned BiCGSTAB. Throws SolverError if the residual target is not
// certified within the iteration budget.
inline LatticeScalarField solve_bicgstab(const OperatorHandle& h, const LatticeScalarField& f,
                                         const SolveOptions& opts, SolveReport* report) {
  const TorusGrid& grid = h.grid();
  require_same_grid(grid, f.grid());
  const std::int64_t n = grid.site_count();
  const std::size_t un = static_cast<std::size_t>(n);
  const std::int64_t max_iter =
      opts.max_iterations > 0 ? opts.max_iterations : 20 * n;

  LatticeScalarField x(f.grid_ptr());
  const double bnorm = l2_norm(f.values());
  if (report) {
    report->rhs_norm = bnorm;
    report->method = "bicgstab";
  }
  if (bnorm == 0.0) {
    // The operator is injective, so zero right-hand side forces the zero
    // solution exactly.
    if (report) {
      report->iterations = 0;
      report->restarts = 0;
      report->residual = 0.0;
      report->method = "zero-rhs";
    }
    return x;
  }

  if (opts.init_seed != 0) {
    CounterRng rng(opts.init_seed);
    for (std::int64_t s = 0; s < n; ++s) x[s] = rng.next_in(-1.0, 1.0);
  }

  const bool precond = opts.use_preconditioner;
  double c = precond ? detail::mean_diagonal(h.coefficients()) : 1.0;
  c = std::max(c, 1e-8);
  detail::ConstantInversePreconditioner K(grid, h.T(), c);

  std::vector<double> r(un), rhat(un), p(un), v(un), s(un), t(un), phat(un), shat(un), tmp(un);
  auto recompute_residual = [&]() {
    h.apply(x.values(), tmp);
    for (std::size_t i = 0; i < un; ++i) r[i] = f[static_cast<std::int64_t>(i)] - tmp[i];
  };
  recompute_residual();

  const double abs_tol = opts.tol * bnorm;
  const double breakdown = 1e-300;
  std::int64_t iter = 0;
  int restarts = 0;
  const int max_restarts = 8;
  double best_rel = l2_norm(r) / bnorm;

  auto finish = [&](double rel) -> LatticeScalarField {
    if (report) {
      report->iterations = iter;
      report->restarts = restarts;
      report->residual = rel;
    }
    return x;
  };

  while (true) {
    // (Re)start the Krylov recurrence from the current residual.
    for (std::size_t i = 0; i < un; ++i) {
      rhat[i] = r[i];
      p[i] = 0.0;
      v[i] = 0.0;
    }
    double rho_old = 1.0, alpha = 1.0, omega = 1.0;
    bool first = true;
    bool broke = false;

    while (iter < max_iter) {
      const double rho = detail::dot_span(rhat, r);
      if (std::abs(rho) < breakdown) {
        broke = true;
        break;
      }
      if (first) {
        for (std::size_t i = 0; i < un; ++i) p[i] = r[i];
        first = false;
      } else {
        if (std::abs(omega) < breakdown || std::abs(rho_old) < breakdown) {
          broke = true;
          break;
        }
        const double beta = (rho / rho_old) * (alpha / omega);
        for (std::size_t i = 0; i < un; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      }
      if (precond)
        K.apply(p, phat);
      else
        for (std::size_t i = 0; i < un; ++i) phat[i] = p[i];
      h.apply(phat, v);
      const double denom = detail::dot_span(rhat, v);
      if (std::abs(denom) < breakdown) {
        broke = true;
        break;
      }
      alpha = rho / denom;
      for (std::size_t i = 0; i < un; ++i) s[i] = r[i] - alpha * v[i];
      ++iter;
      if (l2_norm(s) <= abs_tol) {
        for (std::size_t i = 0; i < un; ++i) x[static_cast<std::int64_t>(i)] += alpha * phat[i];
        recompute_residual();
        const double rel = l2_norm(r) / bnorm;
        best_rel = std::min(best_rel, rel);
        if (rel <= opts.tol) return finish(rel);
        broke = true;  // true residual disagrees; restart from recomputed r
        break;
      }
      if (precond)
        K.apply(s, shat);
      else
        for (std::size_t i = 0; i < un; ++i) shat[i] = s[i];
      h.apply(shat, t);
      const double tt = detail::dot_span(t, t);
      if (tt < breakdown) {
        broke = true;
        break;
      }
      omega = detail::dot_span(t, s) / tt;
      for (std::size_t i = 0; i < un; ++i)
        x[static_cast<std::int64_t>(i)] += alpha * phat[i] + omega * shat[i];
      for (std::size_t i = 0; i < un; ++i) r[i] = s[i] - omega * t[i];
      const double rnorm = l2_norm(r);
      best_rel = std::min(best_rel, rnorm / bnorm);
      if (rnorm <= abs_tol) {
        recompute_residual();
        const double rel = l2_norm(r) / bnorm;
        best_rel = std::min(best_rel, rel);
        if (rel <= opts.tol) return finish(rel);
        broke = true;
        break;
      }
      rho_old = rho;
    }

    if (iter >= max_iter) break;
    if (broke) {
      ++restarts;
      if (restarts > max_restarts) break;
      recompute_residual();
      const double rel = l2_norm(r) / bnorm;
      best_rel = std::min(best_rel, rel);
      if (rel <= opts.tol) return finish(rel);
    }
  }

  if (report) {
    report->iterations = iter;
    report->restarts = restarts;
    report->residual = best_rel;
  }
  throw SolverError("bicgstab did not reach tol " + std::to_string(opts.tol) + " in " +
                        std::to_string(iter) + " iterations (best relative residual " +
                        std::to_string(best_rel) + ")",
                    best_rel);
}

inline LatticeScalarField solve(const OperatorHandle& h, const LatticeScalarField& f,
                                const SolveOptions& opts = {}, SolveReport* report = nullptr) {
  switch (opts.method) {
    case SolveMethod::dense_oracle:
      return solve_dense(h, f, report);
    case SolveMethod::iterative:
      return solve_bicgstab(h, f, opts, report);
    case SolveMethod::automatic:
      try {
        return solve_bicgstab(h, f, opts, report);
      } catch (const SolverError&) {
        if (h.grid().site_count() <= dense_solve_max_sites) return solve_dense(h, f, report);
        throw;
      }
  }
  throw ValidationError("unknown solve method");
}

inline LatticeScalarField solve(const OperatorHandle& h, const LatticeScalarField& f,
                                double tol) {
  SolveOptions opts;
  opts.tol = tol;
  return solve(h, f, opts);
}

inline LatticeScalarField apply_operator(const CoefficientField& a, double T,
                                         const LatticeScalarField& u) {
  return OperatorHandle(a, T).apply(u);
}

// ---------------------------------------------------------------------------
// Corrector and Green-function solves.

struct CorrectorReport {
  SolveReport solve;
  double xi_norm = 0.0;
  double sup_abs = 0.0;           // max_x |phi(x)|
  double sup_abs_over_xi = 0.0;   // max_x |phi(x)| / |xi|
  double energy_defect = 0.0;     // relative defect of the weak-form identity
};

struct CorrectorResult {
  LatticeScalarField phi;
  CorrectorReport report;
};

// Right-hand side of the corrector equation: -div*(a xi).
inline LatticeScalarField corrector_rhs(const CoefficientField& a, std::span<const double> xi) {
  const TorusGrid& grid = a.grid();
  const int d = grid.dim();
  LatticeVectorField flux(a.grid_ptr());
  for (std::int64_t s = 0; s < grid.site_count(); ++s) {
    double out[max_dim];
    a.apply_at(s, xi.data(), out);
    for (int i = 0; i < d; ++i) flux.at(s, i) = out[i];
  }
  LatticeScalarField b = divergence_star(flux);
  for (std::int64_t s = 0; s < grid.site_count(); ++s) b[s] = -b[s];
  return b;
}

// Solves phi/T + div*(a (grad phi + xi)) = 0 and reports the weak-form
// energy defect |(1/T) sum phi^2 + sum grad phi . a (grad phi + xi)| divided
// by the sum of the magnitudes of its three terms.
inline CorrectorResult solve_corrector(const CoefficientField& a, double T,
                                       std::span<const double> xi,
                                       const SolveOptions& opts = {}) {
  const TorusGrid& grid = a.grid();
  const int d = grid.dim();
  if (static_cast<int>(xi.size()) != d)
    throw ValidationError("xi dimension does not match grid");
  double xi_norm2 = 0.0;
  for (double c : xi) xi_norm2 += c * c;
  if (!(xi_norm2 > 0.0)) throw ValidationError("xi must be nonzero");

  const OperatorHandle h(a, T);
  CorrectorResult res;
  res.report.xi_norm = std::sqrt(xi_norm2);
  const LatticeScalarField b = corrector_rhs(a, xi);
  res.phi = solve(h, b, opts, &res.report.solve);

  res.report.sup_abs = max_abs(res.phi.values());
  res.report.sup_abs_over_xi = res.report.sup_abs / res.report.xi_norm;

  const LatticeVectorField g = gradient(res.phi);
  double mass = 0.0, energy = 0.0, cross = 0.0;
  for (std::int64_t s = 0; s < grid.site_count(); ++s) {
    mass += res.phi[s] * res.phi[s];
    double gp[max_dim], ag[max_dim], axi[max_dim];
    for (int k = 0; k < d; ++k) gp[k] = g.at(s, k);
    a.apply_at(s, gp, ag);
    a.apply_at(s, xi.data(), axi);
    for (int k = 0; k < d; ++k) {
      energy += gp[k] * ag[k];
      cross += gp[k] * axi[k];
    }
  }
  mass /= T;
  const double defect = std::abs(mass + energy + cross);
  const double scale = std::abs(mass) + std::abs(energy) + std::abs(cross);
  res.report.energy_defect = scale > 0.0 ? defect / scale : 0.0;
  return res;
}

// A corrector experiment: the grid, the mass scale, the slope direction, and
// how to solve. Consumers sample coefficients per-ensemble on `grid`.
struct CorrectorProblem {
  GridPtr grid;
  double T = 1.0;
  std::vector<double> xi;
  SolveOptions options;

  void validate() const {
    if (!grid) throw ValidationError("corrector problem has no grid");
    if (!(T > 0.0)) throw ValidationError("corrector problem needs T > 0");
    if (static_cast<int>(xi.size()) != grid->dim())
      throw ValidationError("xi dimension does not match grid");
    double n2 = 0.0;
    for (double c : xi) n2 += c * c;
    if (!(n2 > 0.0)) throw ValidationError("xi must be nonzero");
  }
};

inline CorrectorResult solve_corrector(const CoefficientField& a, const CorrectorProblem& p) {
  require_same_grid(a.grid(), *p.grid);
  return solve_corrector(a, p.T, p.xi, p.options);
}

struct GreenColumnReport {
  SolveReport solve;
  double row_sum = 0.0;         // sum_x G(x, y); equals T identically
  double row_sum_defect = 0.0;  // |row_sum - T| / T
};

struct GreenColumnResult {
  LatticeScalarField column;
  GreenColumnReport report;
};

// Column y of the Green function: G(., y) solves (1/T + div* a grad) u = delta_y.
inline GreenColumnResult solve_green(const CoefficientField& a, double T, std::int64_t y,
                                     const SolveOptions& opts = {}) {
  const TorusGrid& grid = a.grid();
  if (y < 0 || y >= grid.site_count()) throw ValidationError("green source site out of range");
  const OperatorHandle h(a, T);
  LatticeScalarField b(a.grid_ptr());
  b[y] = 1.0;
  GreenColumnResult res;
  res.column = solve(h, b, opts, &res.report.solve);
  res.report.row_sum = sum(res.column);
  res.report.row_sum_defect = std::abs(res.report.row_sum - T) / T;
  return res;
}

}  // namespace homlat
