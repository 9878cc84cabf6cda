#pragma once
// Monte Carlo moment estimation for the modified corrector: per-sample
// solves across an ensemble, site-0 and spatial-average estimators of
// |phi(0)|^{2p} and |grad phi(0) + xi|^{2p}, the homogenized-matrix
// estimator, T-ladder scaling studies, and exhaustive-enumeration
// consistency checks on small tori. Samples are keyed by (master_seed,
// index) and aggregated in index order, so reports are bit-identical for a
// fixed configuration regardless of the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homlat/calculus.hpp"
#include "homlat/ensemble.hpp"
#include "homlat/enumeration.hpp"
#include "homlat/errors.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"
#include "homlat/matrix.hpp"
#include "homlat/parallel.hpp"
#include "homlat/rng.hpp"
#include "homlat/solver.hpp"
#include "homlat/stats.hpp"

namespace homlat {

// Default torus side for a mass scale T: comfortably larger than the sqrt(T)
// decay scale so wraparound is negligible.
inline int default_side_for(double T) {
  const int quad = 4 * static_cast<int>(std::ceil(std::sqrt(std::max(T, 0.0))));
  return std::max(16, quad);
}

struct MomentSampleRow {
  std::int64_t sample = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  // Indexed like p_list.
  std::vector<double> phi0;      // |phi(0)|^{2p}
  std::vector<double> grad0;     // |grad phi(0) + xi|^{2p}
  std::vector<double> phi_avg;   // spatial averages of the same quantities
  std::vector<double> grad_avg;
  double phi0_signed = 0.0;      // phi(0) itself, for the mean-zero check
  double energy_defect = 0.0;
  std::vector<double> ahom;      // d x d row-major, empty unless computed
};

struct MomentReport {
  int dim = 0;
  int side = 0;
  double T = 0.0;
  double lambda = 0.0;
  std::vector<double> xi;
  std::vector<int> p_list;
  std::int64_t samples = 0;
  std::uint64_t master_seed = 0;
  // Indexed like p_list.
  std::vector<Summary> phi_site0;
  std::vector<Summary> phi_spatial;
  std::vector<Summary> grad_site0;
  std::vector<Summary> grad_spatial;
  Summary phi_mean;  // plain mean of phi(0), for the mean-zero check
  std::vector<double> ahom;     // mean d x d estimate (empty unless computed)
  std::vector<double> ahom_se;  // entrywise standard errors
  double ahom_sym_eig_min = 0.0;
  double ahom_sym_eig_max = 0.0;
  std::vector<MomentSampleRow> rows;
  std::vector<std::string> failures;  // "sample=<i> seed=<s> error=<what>"
  std::int64_t failed_count = 0;
};

namespace detail {

inline void validate_p_list(const std::vector<int>& p_list) {
  if (p_list.empty()) throw ValidationError("p list must not be empty");
  for (int p : p_list)
    if (p < 1 || p > 8) throw ValidationError("half-moment orders must lie in 1..8");
}

// One sample: draw the field, solve the corrector(s), fill the row.
inline MomentSampleRow run_moment_sample(const EnsembleSpec& spec,
                                         const CorrectorProblem& problem,
                                         const std::vector<int>& p_list,
                                         std::int64_t index, std::uint64_t master_seed,
                                         bool compute_ahom) {
  MomentSampleRow row;
  row.sample = index;
  row.seed = derive_seed(master_seed, static_cast<std::uint64_t>(index));
  const GridPtr& grid = problem.grid;
  const int d = grid->dim();
  const std::int64_t n = grid->site_count();

  try {
    const CoefficientField a = sample_field(spec, grid, row.seed);
    const CorrectorResult corr = solve_corrector(a, problem);
    row.energy_defect = corr.report.energy_defect;
    row.phi0_signed = corr.phi[0];

    const LatticeVectorField g = gradient(corr.phi);
    const std::size_t np = p_list.size();
    row.phi0.resize(np);
    row.grad0.resize(np);
    row.phi_avg.assign(np, 0.0);
    row.grad_avg.assign(np, 0.0);

    const double phi0_sq = corr.phi[0] * corr.phi[0];
    double grad0_sq = 0.0;
    for (int k = 0; k < d; ++k) {
      const double v = g.at(0, k) + problem.xi[static_cast<std::size_t>(k)];
      grad0_sq += v * v;
    }
    for (std::size_t ip = 0; ip < np; ++ip) {
      row.phi0[ip] = std::pow(phi0_sq, p_list[ip]);
      row.grad0[ip] = std::pow(grad0_sq, p_list[ip]);
    }
    for (std::int64_t s = 0; s < n; ++s) {
      const double ps = corr.phi[s] * corr.phi[s];
      double gs = 0.0;
      for (int k = 0; k < d; ++k) {
        const double v = g.at(s, k) + problem.xi[static_cast<std::size_t>(k)];
        gs += v * v;
      }
      for (std::size_t ip = 0; ip < np; ++ip) {
        row.phi_avg[ip] += std::pow(ps, p_list[ip]);
        row.grad_avg[ip] += std::pow(gs, p_list[ip]);
      }
    }
    for (std::size_t ip = 0; ip < np; ++ip) {
      row.phi_avg[ip] /= static_cast<double>(n);
      row.grad_avg[ip] /= static_cast<double>(n);
    }
    if (compute_ahom) {
      // One corrector per basis direction; reuse the main solve when xi is
      // that basis vector already.
      std::vector<LatticeVectorField> grads(static_cast<std::size_t>(d));
      for (int k = 0; k < d; ++k) {
        bool is_ek = true;
        for (int m = 0; m < d; ++m) {
          const double want = m == k ? 1.0 : 0.0;
          if (problem.xi[static_cast<std::size_t>(m)] != want) {
            is_ek = false;
            break;
          }
        }
        if (is_ek) {
          grads[static_cast<std::size_t>(k)] = g;
          continue;
        }
        std::vector<double> ek(static_cast<std::size_t>(d), 0.0);
        ek[static_cast<std::size_t>(k)] = 1.0;
        const CorrectorResult ck = solve_corrector(a, problem.T, ek, problem.options);
        grads[static_cast<std::size_t>(k)] = gradient(ck.phi);
      }
      row.ahom.assign(static_cast<std::size_t>(d) * d, 0.0);
      for (std::int64_t s = 0; s < n; ++s) {
        double cols[max_dim][max_dim];  // cols[j] = a(s) (e_j + grad phi_j)
        for (int j = 0; j < d; ++j) {
          double v[max_dim];
          for (int k = 0; k < d; ++k)
            v[k] = (k == j ? 1.0 : 0.0) + grads[static_cast<std::size_t>(j)].at(s, k);
          a.apply_at(s, v, cols[j]);
        }
        for (int i = 0; i < d; ++i) {
          double u[max_dim];
          for (int k = 0; k < d; ++k)
            u[k] = (k == i ? 1.0 : 0.0) + grads[static_cast<std::size_t>(i)].at(s, k);
          for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += u[k] * cols[j][k];
            row.ahom[static_cast<std::size_t>(i) * d + j] += acc;
          }
        }
      }
      for (double& v : row.ahom) v /= static_cast<double>(n);
    }
  } catch (const SolverError& e) {
    row.failed = true;
    row.error = e.what();
  }
  return row;
}

}  // namespace detail

inline MomentReport estimate_moments(const EnsembleSpec& spec, const std::vector<int>& p_list,
                                     const CorrectorProblem& problem, std::int64_t N,
                                     std::uint64_t master_seed, int jobs = 1,
                                     bool compute_ahom = true) {
  spec.validate();
  problem.validate();
  detail::validate_p_list(p_list);
  if (N < 2) throw ValidationError("moment estimation needs N >= 2");
  if (spec.dim != problem.grid->dim())
    throw ValidationError("ensemble dimension does not match grid");

  MomentReport rep;
  rep.dim = problem.grid->dim();
  rep.side = problem.grid->side();
  rep.T = problem.T;
  rep.lambda = spec.lambda;
  rep.xi = problem.xi;
  rep.p_list = p_list;
  rep.samples = N;
  rep.master_seed = master_seed;
  rep.rows.resize(static_cast<std::size_t>(N));

  parallel_for(N, jobs, [&](std::int64_t i) {
    rep.rows[static_cast<std::size_t>(i)] =
        detail::run_moment_sample(spec, problem, p_list, i, master_seed, compute_ahom);
  });

  std::size_t np = p_list.size();
  std::vector<std::vector<double>> phi0(np), grad0(np), phia(np), grada(np);
  std::vector<double> signed_vals;
  std::vector<std::vector<double>> ahom_entries;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const MomentSampleRow& row = rep.rows[i];
    if (row.failed) {
      ++rep.failed_count;
      rep.failures.push_back("sample=" + std::to_string(row.sample) +
                             " seed=" + std::to_string(row.seed) + " error=" + row.error);
      continue;
    }
    for (std::size_t ip = 0; ip < np; ++ip) {
      phi0[ip].push_back(row.phi0[ip]);
      grad0[ip].push_back(row.grad0[ip]);
      phia[ip].push_back(row.phi_avg[ip]);
      grada[ip].push_back(row.grad_avg[ip]);
    }
    signed_vals.push_back(row.phi0_signed);
    if (!row.ahom.empty()) {
      if (ahom_entries.empty()) ahom_entries.resize(row.ahom.size());
      for (std::size_t k = 0; k < row.ahom.size(); ++k)
        ahom_entries[k].push_back(row.ahom[k]);
    }
  }

  if (rep.failed_count * 20 > N) {
    std::string msg = "too many sample failures (" + std::to_string(rep.failed_count) + "/" +
                      std::to_string(N) + ")";
    for (std::size_t i = 0; i < rep.failures.size() && i < 3; ++i)
      msg += "; " + rep.failures[i];
    throw SolverError(msg, 0.0);
  }

  for (std::size_t ip = 0; ip < np; ++ip) {
    rep.phi_site0.push_back(summarize(phi0[ip]));
    rep.grad_site0.push_back(summarize(grad0[ip]));
    rep.phi_spatial.push_back(summarize(phia[ip]));
    rep.grad_spatial.push_back(summarize(grada[ip]));
  }
  rep.phi_mean = summarize(signed_vals);

  if (!ahom_entries.empty()) {
    const int d = rep.dim;
    rep.ahom.resize(static_cast<std::size_t>(d) * d);
    rep.ahom_se.resize(static_cast<std::size_t>(d) * d);
    for (std::size_t k = 0; k < ahom_entries.size(); ++k) {
      const Summary s = summarize(ahom_entries[k]);
      rep.ahom[k] = s.mean;
      rep.ahom_se[k] = s.se;
    }
    rep.ahom_sym_eig_min = min_symmetric_eigenvalue(rep.ahom, d);
    rep.ahom_sym_eig_max = max_symmetric_eigenvalue(rep.ahom, d);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// T-ladder studies.

struct GradientRatioCheck {
  int p = 1;
  double max_mean = 0.0;
  double min_mean = 0.0;
  double ratio = 0.0;          // max/min of the per-T means
  double ratio_3sigma = 0.0;   // (max - 3 se) / (min + 3 se), floored at 0
  bool within_factor_2 = false;
};

struct ScalingReport {
  int dim = 0;
  std::vector<double> ladder;
  std::vector<int> sides;
  std::int64_t samples = 0;
  std::uint64_t master_seed = 0;
  std::vector<int> p_list;
  std::vector<MomentReport> rungs;
  bool degenerate = false;  // all phi moments identically zero
  // d = 2: fit of the second phi moment against log T.
  LinearFit phi_fit_spatial;
  LinearFit phi_fit_site0;
  // All dimensions: stability ratios of the second phi moment.
  double phi_ratio = 0.0;
  double phi_ratio_3sigma = 0.0;
  std::vector<GradientRatioCheck> gradient_checks;  // one per p in p_list
};

namespace detail {

inline GradientRatioCheck gradient_ratio_from_rungs(std::span<const MomentReport> rungs,
                                                    std::size_t ip, int p) {
  GradientRatioCheck chk;
  chk.p = p;
  double mx = -1.0, mn = -1.0, se_mx = 0.0, se_mn = 0.0;
  for (const MomentReport& r : rungs) {
    const Summary& s = r.grad_spatial[ip];
    if (mx < 0.0 || s.mean > mx) {
      mx = s.mean;
      se_mx = s.se;
    }
    if (mn < 0.0 || s.mean < mn) {
      mn = s.mean;
      se_mn = s.se;
    }
  }
  chk.max_mean = mx;
  chk.min_mean = mn;
  chk.ratio = mn > 0.0 ? mx / mn : 0.0;
  const double lo = mx - 3.0 * se_mx;
  const double hi = mn + 3.0 * se_mn;
  chk.ratio_3sigma = hi > 0.0 ? std::max(0.0, lo) / hi : 0.0;
  chk.within_factor_2 = chk.ratio_3sigma <= 2.0;
  return chk;
}

}  // namespace detail

// Runs one estimate_moments per ladder entry with L = max(16, 4 ceil sqrt T)
// (or side_override when positive) and fits the growth of the second phi
// moment. The d = 2 regression needs >= 4 rungs; other dimensions compare
// against a constant and accept >= 2.
inline ScalingReport scaling_study(const EnsembleSpec& spec, std::span<const double> xi,
                                   std::span<const double> T_ladder, std::int64_t N,
                                   std::uint64_t master_seed,
                                   const std::vector<int>& p_list = {1, 2},
                                   const SolveOptions& options = {}, int jobs = 1,
                                   int side_override = 0, bool compute_ahom = false) {
  spec.validate();
  detail::validate_p_list(p_list);
  if (std::find(p_list.begin(), p_list.end(), 1) == p_list.end())
    throw ValidationError("scaling study needs p = 1 in the p list");
  const std::size_t min_rungs = spec.dim == 2 ? 4 : 2;
  if (T_ladder.size() < min_rungs)
    throw ValidationError("scaling ladder needs at least " + std::to_string(min_rungs) +
                          " entries for dimension " + std::to_string(spec.dim));
  for (std::size_t i = 0; i < T_ladder.size(); ++i) {
    if (!(T_ladder[i] >= 2.0)) throw ValidationError("ladder entries must satisfy T >= 2");
    if (i > 0 && !(T_ladder[i] > T_ladder[i - 1]))
      throw ValidationError("ladder must be strictly increasing");
  }
  if (N < 30) throw ValidationError("scaling study needs N >= 30 per rung");

  ScalingReport rep;
  rep.dim = spec.dim;
  rep.ladder.assign(T_ladder.begin(), T_ladder.end());
  rep.samples = N;
  rep.master_seed = master_seed;
  rep.p_list = p_list;

  const std::size_t ip1 =
      static_cast<std::size_t>(std::find(p_list.begin(), p_list.end(), 1) - p_list.begin());

  for (std::size_t r = 0; r < T_ladder.size(); ++r) {
    CorrectorProblem problem;
    const int side = side_override > 0 ? side_override : default_side_for(T_ladder[r]);
    problem.grid = make_grid(spec.dim, side);
    problem.T = T_ladder[r];
    problem.xi.assign(xi.begin(), xi.end());
    problem.options = options;
    rep.sides.push_back(side);
    rep.rungs.push_back(estimate_moments(spec, p_list, problem, N,
                                         derive_seed(master_seed, static_cast<std::uint64_t>(r)),
                                         jobs, compute_ahom));
  }

  double max_phi = 0.0;
  for (const MomentReport& r : rep.rungs)
    max_phi = std::max(max_phi, r.phi_spatial[ip1].mean);
  rep.degenerate = max_phi == 0.0;

  if (!rep.degenerate) {
    std::vector<double> lx, ys, y0;
    for (std::size_t r = 0; r < rep.rungs.size(); ++r) {
      lx.push_back(std::log(rep.ladder[r]));
      ys.push_back(rep.rungs[r].phi_spatial[ip1].mean);
      y0.push_back(rep.rungs[r].phi_site0[ip1].mean);
    }
    if (rep.dim == 2) {
      rep.phi_fit_spatial = fit_line(lx, ys);
      rep.phi_fit_site0 = fit_line(lx, y0);
    }
    double mx = -1.0, mn = -1.0, se_mx = 0.0, se_mn = 0.0;
    for (const MomentReport& r : rep.rungs) {
      const Summary& s = r.phi_spatial[ip1];
      if (mx < 0.0 || s.mean > mx) {
        mx = s.mean;
        se_mx = s.se;
      }
      if (mn < 0.0 || s.mean < mn) {
        mn = s.mean;
        se_mn = s.se;
      }
    }
    rep.phi_ratio = mn > 0.0 ? mx / mn : 0.0;
    const double hi = mn + 3.0 * se_mn;
    rep.phi_ratio_3sigma = hi > 0.0 ? std::max(0.0, mx - 3.0 * se_mx) / hi : 0.0;
  }

  for (std::size_t ip = 0; ip < p_list.size(); ++ip)
    rep.gradient_checks.push_back(
        detail::gradient_ratio_from_rungs(rep.rungs, ip, p_list[ip]));
  return rep;
}

// Theorem-style T-independence check for one half-order p: the spatial means
// of |grad phi(0) + xi|^{2p} across the ladder stay within a factor 2 after
// a 3-sigma allowance.
inline GradientRatioCheck gradient_moment_T_independence(
    const EnsembleSpec& spec, std::span<const double> xi, std::span<const double> T_ladder,
    int p, std::int64_t N, std::uint64_t master_seed, const SolveOptions& options = {},
    int jobs = 1, int side_override = 0) {
  spec.validate();
  if (T_ladder.size() < 2) throw ValidationError("T-independence needs >= 2 ladder entries");
  std::vector<MomentReport> rungs;
  const std::vector<int> p_list = {p};
  for (std::size_t r = 0; r < T_ladder.size(); ++r) {
    if (!(T_ladder[r] >= 2.0)) throw ValidationError("ladder entries must satisfy T >= 2");
    CorrectorProblem problem;
    const int side = side_override > 0 ? side_override : default_side_for(T_ladder[r]);
    problem.grid = make_grid(spec.dim, side);
    problem.T = T_ladder[r];
    problem.xi.assign(xi.begin(), xi.end());
    problem.options = options;
    rungs.push_back(estimate_moments(spec, p_list, problem, N,
                                     derive_seed(master_seed, static_cast<std::uint64_t>(r)),
                                     jobs, false));
  }
  return detail::gradient_ratio_from_rungs(rungs, 0, p);
}

// ---------------------------------------------------------------------------
// Exhaustive-enumeration consistency: exact moment and oscillation sides of
// the p-th moment inequality for phi(0), and the log-Sobolev pair for the
// first gradient component, on tori small enough to enumerate.

struct MomentOscillationReport {
  std::vector<InequalityReport> phi_moment_checks;  // one per p
  InequalityReport grad_lsi;
};

inline MomentOscillationReport moment_vs_oscillation_consistency(
    const EnsembleSpec& spec, const CorrectorProblem& problem,
    const std::vector<int>& p_list = {1, 2}) {
  spec.validate();
  problem.validate();
  detail::validate_p_list(p_list);
  if (!spec.is_finite())
    throw ValidationError("oscillation consistency requires a finite-state ensemble");

  const CorrectorProblem& pb = problem;
  const Observable phi0 = [&pb](const CoefficientField& a) {
    return solve_corrector(a, pb).phi[0];
  };
  const Observable grad0 = [&pb](const CoefficientField& a) {
    const CorrectorResult r = solve_corrector(a, pb);
    return r.phi[a.grid().neighbor(0, 0, +1)] - r.phi[0] + pb.xi[0];
  };

  MomentOscillationReport rep;
  for (int p : p_list)
    rep.phi_moment_checks.push_back(verify_functional_inequality(
        spec, problem.grid, phi0, InequalityKind::moment_p, p));
  rep.grad_lsi =
      verify_functional_inequality(spec, problem.grid, grad0, InequalityKind::log_sobolev);
  return rep;
}

}  // namespace homlat
