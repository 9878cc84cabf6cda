#pragma once
// Weighted gradient-estimate experiment for the constant-coefficient massive
// operator: random compactly supported g, spectral solve of
// (1/T) u + div* grad u = div* g, and the ratio
// |grad u|_{l^p_gamma} / |g|_{l^p_gamma} with weight (|x|+1)^gamma. The
// unweighted p = 2 case is a strict contraction; weighted cases are probed
// for stability across grid sizes.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "homlat/calculus.hpp"
#include "homlat/errors.hpp"
#include "homlat/fft.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"
#include "homlat/multipliers.hpp"
#include "homlat/rng.hpp"
#include "homlat/stats.hpp"
#include "homlat/weights.hpp"

namespace homlat {

struct CzTrialRow {
  int trial = 0;
  int side = 0;
  double p = 0.0;
  double gamma = 0.0;
  double ratio = 0.0;
  bool skipped = false;  // zero draw, excluded from statistics
};

struct CzReport {
  double p = 0.0;
  double gamma = 0.0;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  int trials_used = 0;
  std::vector<CzTrialRow> rows;
  // Ladder summary (one entry per grid side, in run order).
  std::vector<int> ladder_sides;
  std::vector<double> ladder_T;
  std::vector<double> ladder_max_ratio;
  double slope_vs_log_side = 0.0;  // fit of per-side max ratio on log L
};

namespace detail {

// grad of the (1/T + div* grad)^{-1} div* solve, all spectral.
inline LatticeVectorField cz_gradient_solve(const LatticeVectorField& g, double T) {
  const TorusGrid& grid = g.grid();
  const int d = grid.dim();
  const std::size_t n = static_cast<std::size_t>(grid.site_count());
  const std::vector<cvector> ghat = dft_components(g);
  const FrequencyGrid fg(g.grid_ptr());
  cvector uhat(n);
  std::array<double, max_dim> xi{};
  for (std::size_t s = 0; s < n; ++s) {
    fg.frequency(static_cast<std::int64_t>(s), std::span<double>(xi.data(), d));
    std::complex<double> acc = 0.0;
    for (int l = 0; l < d; ++l)
      acc += expm1_unit(-xi[static_cast<std::size_t>(l)]) * ghat[static_cast<std::size_t>(l)][s];
    uhat[s] = acc / (1.0 / T + laplace_symbol(std::span<const double>(xi.data(), d)));
  }
  LatticeVectorField out(g.grid_ptr());
  cvector chat(n), comp(n);
  for (int j = 0; j < d; ++j) {
    for (std::size_t s = 0; s < n; ++s) {
      fg.frequency(static_cast<std::int64_t>(s), std::span<double>(xi.data(), d));
      chat[s] = expm1_unit(xi[static_cast<std::size_t>(j)]) * uhat[s];
    }
    execute_dft(grid, FFTW_BACKWARD, chat.data(), comp.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (std::int64_t s = 0; s < grid.site_count(); ++s)
      out.at(s, j) = comp[static_cast<std::size_t>(s)].real() * scale;
  }
  return out;
}

// Uniform [-1,1] components on the centered box of side max(1, L/8),
// drawn in site order from one stream per trial.
inline LatticeVectorField cz_random_source(GridPtr grid, std::uint64_t trial_seed) {
  const int L = grid->side();
  const int b = std::max(1, L / 8);
  const int d = grid->dim();
  LatticeVectorField g(grid);
  CounterRng rng(trial_seed);
  std::array<int, max_dim> c{};
  for (std::int64_t s = 0; s < grid->site_count(); ++s) {
    grid->site_coords(s, std::span<int>(c.data(), d));
    bool inside = true;
    for (int k = 0; k < d; ++k) {
      const int m = grid->minimal_coord(c[static_cast<std::size_t>(k)]);
      if (!(2 * m > -b && 2 * m <= b)) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    for (int k = 0; k < d; ++k) g.at(s, k) = rng.next_in(-1.0, 1.0);
  }
  return g;
}

}  // namespace detail

inline void validate_cz_parameters(int dim, double p, double gamma) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw ValidationError("cz experiment needs 1 < p < infinity");
  const double cap = std::min(dim * (p - 1.0), 0.5);
  if (!(gamma >= 0.0) || gamma >= cap)
    throw ValidationError("cz experiment needs 0 <= gamma < min{d(p-1), 1/2}");
}

// Runs `trials` independent draws on one grid; appends rows and returns the
// max ratio over used trials.
inline double cz_run_single(CzReport& rep, GridPtr grid, double T, double p, double gamma,
                            int trials, std::uint64_t seed) {
  const WeightSpec w = WeightSpec::polynomial(gamma);
  double local_max = 0.0;
  for (int t = 0; t < trials; ++t) {
    CzTrialRow row;
    row.trial = t;
    row.side = grid->side();
    row.p = p;
    row.gamma = gamma;
    const LatticeVectorField g = detail::cz_random_source(grid, derive_seed(seed, static_cast<std::uint64_t>(t)));
    const double gnorm = weighted_norm(g, p, w);
    if (gnorm == 0.0) {
      row.skipped = true;
      rep.rows.push_back(row);
      continue;
    }
    const LatticeVectorField grad_u = detail::cz_gradient_solve(g, T);
    row.ratio = weighted_norm(grad_u, p, w) / gnorm;
    rep.rows.push_back(row);
    local_max = std::max(local_max, row.ratio);
  }
  return local_max;
}

inline CzReport cz_ratio_experiment(GridPtr grid, double T, double p, double gamma,
                                    int trials, std::uint64_t seed = 1) {
  validate_cz_parameters(grid->dim(), p, gamma);
  if (trials < 1) throw ValidationError("cz experiment needs at least one trial");
  if (!(T > 0.0)) throw ValidationError("cz experiment needs T > 0");
  CzReport rep;
  rep.p = p;
  rep.gamma = gamma;
  const double mx = cz_run_single(rep, grid, T, p, gamma, trials, seed);
  rep.ladder_sides.push_back(grid->side());
  rep.ladder_T.push_back(T);
  rep.ladder_max_ratio.push_back(mx);
  double acc = 0.0;
  for (const auto& row : rep.rows)
    if (!row.skipped) {
      acc += row.ratio;
      ++rep.trials_used;
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    }
  rep.mean_ratio = rep.trials_used > 0 ? acc / rep.trials_used : 0.0;
  return rep;
}

// Ladder version: one sub-experiment per side, T = side^2 unless overridden,
// plus the trend of the per-side max ratio against log side.
inline CzReport cz_ladder_experiment(int dim, std::span<const int> sides, double T_override,
                                     double p, double gamma, int trials,
                                     std::uint64_t seed = 1) {
  validate_cz_parameters(dim, p, gamma);
  if (sides.empty()) throw ValidationError("cz ladder needs at least one side");
  CzReport rep;
  rep.p = p;
  rep.gamma = gamma;
  for (std::size_t i = 0; i < sides.size(); ++i) {
    const int L = sides[i];
    GridPtr grid = make_grid(dim, L);
    const double T = T_override > 0.0 ? T_override : static_cast<double>(L) * L;
    const double mx = cz_run_single(rep, grid, T, p, gamma, trials,
                                    derive_seed(seed, static_cast<std::uint64_t>(i)));
    rep.ladder_sides.push_back(L);
    rep.ladder_T.push_back(T);
    rep.ladder_max_ratio.push_back(mx);
  }
  double acc = 0.0;
  for (const auto& row : rep.rows)
    if (!row.skipped) {
      acc += row.ratio;
      ++rep.trials_used;
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    }
  rep.mean_ratio = rep.trials_used > 0 ? acc / rep.trials_used : 0.0;
  if (rep.ladder_sides.size() >= 2) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < rep.ladder_sides.size(); ++i) {
      lx.push_back(std::log(static_cast<double>(rep.ladder_sides[i])));
      ly.push_back(rep.ladder_max_ratio[i]);
    }
    rep.slope_vs_log_side = fit_line(lx, ly).slope;
  }
  return rep;
}

}  // namespace homlat
