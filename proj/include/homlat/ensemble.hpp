#pragma once
// Random coefficient ensembles: i.i.d. per-site draws of admissible d x d
// matrices. Sampling is counter-based: the matrix at site x depends only on
// (sample-seed, x), so fields are reproducible regardless of traversal or
// thread order, and single-site resampling never disturbs other sites.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "homlat/errors.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"
#include "homlat/matrix.hpp"
#include "homlat/rng.hpp"

namespace homlat {

enum class EnsembleKind { constant, finite_state, diagonal_iid, antisymmetric_perturbation };

struct EnsembleState {
  std::vector<double> matrix;  // row-major d x d
  double prob = 0.0;
};

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::constant;
  int dim = 0;
  double lambda = 0.0;
  std::vector<EnsembleState> states;     // finite_state
  std::vector<double> constant_matrix;   // constant
  double diag_lo = 0.0, diag_hi = 0.0;   // diagonal_iid
  double nu = 0.0;                       // antisymmetric_perturbation

  static EnsembleSpec make_constant(int dim, double lambda, std::vector<double> matrix) {
    EnsembleSpec s;
    s.kind = EnsembleKind::constant;
    s.dim = dim;
    s.lambda = lambda;
    s.constant_matrix = std::move(matrix);
    s.validate();
    return s;
  }

  static EnsembleSpec make_finite_state(int dim, double lambda, std::vector<EnsembleState> st) {
    EnsembleSpec s;
    s.kind = EnsembleKind::finite_state;
    s.dim = dim;
    s.lambda = lambda;
    s.states = std::move(st);
    s.validate();
    return s;
  }

  static EnsembleSpec make_diagonal_iid(int dim, double lambda, double lo, double hi) {
    EnsembleSpec s;
    s.kind = EnsembleKind::diagonal_iid;
    s.dim = dim;
    s.lambda = lambda;
    s.diag_lo = lo;
    s.diag_hi = hi;
    s.validate();
    return s;
  }

  static EnsembleSpec make_antisymmetric(int dim, double lambda, double nu) {
    EnsembleSpec s;
    s.kind = EnsembleKind::antisymmetric_perturbation;
    s.dim = dim;
    s.lambda = lambda;
    s.nu = nu;
    s.validate();
    return s;
  }

  void validate() const {
    if (dim < 1 || dim > max_dim) throw ValidationError("ensemble dimension out of range");
    if (!(lambda > 0.0) || lambda > 1.0)
      throw ValidationError("ensemble lambda must lie in (0, 1]");
    switch (kind) {
      case EnsembleKind::constant:
        validate_elliptic(constant_matrix, dim, lambda);
        return;
      case EnsembleKind::finite_state: {
        if (states.empty()) throw ValidationError("finite-state ensemble has no states");
        double total = 0.0;
        for (const auto& st : states) {
          if (!(st.prob >= 0.0)) throw ValidationError("state probability must be >= 0");
          total += st.prob;
          validate_elliptic(st.matrix, dim, lambda);
        }
        if (std::abs(total - 1.0) > 1e-9)
          throw ValidationError("state probabilities sum to " + std::to_string(total) +
                                ", expected 1");
        return;
      }
      case EnsembleKind::diagonal_iid:
        if (!(diag_lo <= diag_hi)) throw ValidationError("diagonal range is empty");
        if (diag_lo < lambda - elliptic_slack)
          throw ValidationError("diagonal lower bound is below lambda");
        if (diag_hi > 1.0 + elliptic_slack)
          throw ValidationError("diagonal upper bound exceeds 1");
        return;
      case EnsembleKind::antisymmetric_perturbation:
        if (!(nu >= 0.0)) throw ValidationError("antisymmetric strength must be >= 0");
        if (dim == 1 && nu > 0.0)
          throw ValidationError("no nonzero antisymmetric matrix exists in dimension 1");
        if (lambda + nu > 1.0 + elliptic_slack)
          throw ValidationError("lambda + nu must not exceed 1");
        return;
    }
    throw ValidationError("unknown ensemble kind");
  }

  // Single-site law has finitely many values.
  bool is_finite() const { return kind == EnsembleKind::constant || kind == EnsembleKind::finite_state; }

  int state_count() const {
    if (kind == EnsembleKind::constant) return 1;
    if (kind == EnsembleKind::finite_state) return static_cast<int>(states.size());
    throw ValidationError("state_count requires a finite ensemble");
  }

  // State matrix / probability for finite ensembles (constant = one state).
  std::span<const double> state_matrix(int t) const {
    if (kind == EnsembleKind::constant) return constant_matrix;
    return states[static_cast<std::size_t>(t)].matrix;
  }
  double state_prob(int t) const {
    if (kind == EnsembleKind::constant) return 1.0;
    return states[static_cast<std::size_t>(t)].prob;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["dim"] = dim;
    j["lambda"] = lambda;
    switch (kind) {
      case EnsembleKind::constant:
        j["kind"] = "constant";
        j["matrix"] = constant_matrix;
        break;
      case EnsembleKind::finite_state: {
        j["kind"] = "finite_state";
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& st : states)
          arr.push_back({{"matrix", st.matrix}, {"prob", st.prob}});
        j["states"] = arr;
        break;
      }
      case EnsembleKind::diagonal_iid:
        j["kind"] = "diagonal_iid";
        j["lo"] = diag_lo;
        j["hi"] = diag_hi;
        break;
      case EnsembleKind::antisymmetric_perturbation:
        j["kind"] = "antisymmetric_perturbation";
        j["nu"] = nu;
        break;
    }
    return j;
  }

  static EnsembleSpec from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("ensemble spec must be a JSON object");
    const std::string kind = j.value("kind", "");
    const int dim = j.value("dim", 0);
    const double lambda = j.value("lambda", 0.0);
    if (kind == "constant")
      return make_constant(dim, lambda, j.at("matrix").get<std::vector<double>>());
    if (kind == "finite_state") {
      std::vector<EnsembleState> st;
      for (const auto& e : j.at("states")) {
        EnsembleState s;
        s.matrix = e.at("matrix").get<std::vector<double>>();
        s.prob = e.at("prob").get<double>();
        st.push_back(std::move(s));
      }
      return make_finite_state(dim, lambda, std::move(st));
    }
    if (kind == "diagonal_iid")
      return make_diagonal_iid(dim, lambda, j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "antisymmetric_perturbation")
      return make_antisymmetric(dim, lambda, j.at("nu").get<double>());
    throw ValidationError("unknown ensemble kind: '" + kind + "'");
  }
};

namespace detail {

// Cross-product matrix K(w) v = w x v; antisymmetric with |K(w)| = |w|.
inline void cross_matrix(const double w[3], double out[9]) {
  out[0] = 0.0;    out[1] = -w[2]; out[2] = w[1];
  out[3] = w[2];   out[4] = 0.0;   out[5] = -w[0];
  out[6] = -w[1];  out[7] = w[0];  out[8] = 0.0;
}

// Draws one site matrix into `out` (row-major d x d) from the per-site law.
inline void sample_site_matrix(const EnsembleSpec& spec, CounterRng& rng,
                               std::span<double> out) {
  const int d = spec.dim;
  switch (spec.kind) {
    case EnsembleKind::constant:
      for (int i = 0; i < d * d; ++i) out[static_cast<std::size_t>(i)] = spec.constant_matrix[static_cast<std::size_t>(i)];
      return;
    case EnsembleKind::finite_state: {
      const double u = rng.next_unit();
      double cdf = 0.0;
      std::size_t pick = spec.states.size() - 1;
      for (std::size_t t = 0; t < spec.states.size(); ++t) {
        cdf += spec.states[t].prob;
        if (u < cdf) {
          pick = t;
          break;
        }
      }
      const auto& m = spec.states[pick].matrix;
      for (int i = 0; i < d * d; ++i) out[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)];
      return;
    }
    case EnsembleKind::diagonal_iid: {
      for (int i = 0; i < d * d; ++i) out[static_cast<std::size_t>(i)] = 0.0;
      for (int i = 0; i < d; ++i)
        out[static_cast<std::size_t>(i) * d + i] = rng.next_in(spec.diag_lo, spec.diag_hi);
      return;
    }
    case EnsembleKind::antisymmetric_perturbation: {
      const double mu = rng.next_in(spec.lambda, 1.0 - spec.nu);
      for (int i = 0; i < d * d; ++i) out[static_cast<std::size_t>(i)] = 0.0;
      for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i) * d + i] = mu;
      if (spec.nu == 0.0) return;
      if (d == 2) {
        const double sign = rng.next_unit() < 0.5 ? 1.0 : -1.0;
        out[1] += spec.nu * sign;
        out[2] -= spec.nu * sign;
        return;
      }
      if (d == 3) {
        // Uniform direction via normalized components of a cube draw,
        // redrawn while degenerate.
        double w[3];
        double norm = 0.0;
        do {
          for (double& c : w) c = rng.next_in(-1.0, 1.0);
          norm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
        } while (norm < 1e-3);
        for (double& c : w) c /= norm;
        double k[9];
        cross_matrix(w, k);
        for (int i = 0; i < 9; ++i) out[static_cast<std::size_t>(i)] += spec.nu * k[static_cast<std::size_t>(i)];
        return;
      }
      // d == 4: random antisymmetric generator scaled to unit spectral norm.
      double g[16] = {};
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          const double v = rng.next_in(-1.0, 1.0);
          g[i * 4 + j] = v;
          g[j * 4 + i] = -v;
        }
      double norm = spectral_norm(std::span<const double>(g, 16), 4);
      if (norm < 1e-8) {
        g[0 * 4 + 1] = 1.0;
        g[1 * 4 + 0] = -1.0;
        norm = 1.0;
      }
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          out[static_cast<std::size_t>(i) * d + j] += spec.nu * g[i * 4 + j] / norm;
      return;
    }
  }
  throw ValidationError("unknown ensemble kind");
}

}  // namespace detail

// Draws the whole field for one sample. Each site consumes an independent
// stream keyed by (seed, site index).
inline CoefficientField sample_field(const EnsembleSpec& spec, GridPtr grid,
                                     std::uint64_t seed) {
  spec.validate();
  if (grid->dim() != spec.dim)
    throw ValidationError("ensemble dimension does not match grid");
  CoefficientField a(grid, spec.lambda);
  for (std::int64_t s = 0; s < grid->site_count(); ++s) {
    CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    detail::sample_site_matrix(spec, rng, a.block(s));
  }
  return a;
}

// (shift_field(a, z))(x) = a(x + z).
inline CoefficientField shift_field(const CoefficientField& a, std::span<const int> z) {
  const TorusGrid& grid = a.grid();
  if (static_cast<int>(z.size()) != grid.dim())
    throw ValidationError("shift vector dimension does not match grid");
  CoefficientField out(a.grid_ptr(), a.lambda());
  const int d = grid.dim();
  for (std::int64_t s = 0; s < grid.site_count(); ++s) {
    const std::int64_t src = grid.shifted(s, z);
    std::span<double> dst = out.block(s);
    std::span<const double> from = a.block(src);
    for (int i = 0; i < d * d; ++i) dst[static_cast<std::size_t>(i)] = from[static_cast<std::size_t>(i)];
  }
  return out;
}

using Observable = std::function<double(const CoefficientField&)>;

// Oscillation of an observable under resampling the single site `site`:
// sup minus inf over the per-site law, other sites frozen. Exact for finite
// ensembles (every state is substituted); Monte Carlo otherwise, where the
// current value participates alongside `resamples` fresh draws.
inline double oscillation_at(const Observable& obs, const CoefficientField& a,
                             std::int64_t site, const EnsembleSpec& spec,
                             int resamples = 32, std::uint64_t seed = 0x6f7363ull) {
  if (site < 0 || site >= a.grid().site_count())
    throw ValidationError("oscillation site out of range");
  CoefficientField work = a;
  const int d = spec.dim;
  std::vector<double> saved(work.block(site).begin(), work.block(site).end());
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  auto eval = [&]() {
    const double v = obs(work);
    if (!std::isfinite(v)) throw ValidationError("observable returned a non-finite value");
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  };
  if (spec.is_finite()) {
    for (int t = 0; t < spec.state_count(); ++t) {
      std::span<const double> m = spec.state_matrix(t);
      std::span<double> blk = work.block(site);
      for (int i = 0; i < d * d; ++i) blk[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)];
      eval();
    }
  } else {
    eval();  // current configuration counts
    for (int r = 0; r < resamples; ++r) {
      CounterRng rng(derive_seed(seed, (static_cast<std::uint64_t>(site) << 20) + static_cast<std::uint64_t>(r)));
      detail::sample_site_matrix(spec, rng, work.block(site));
      eval();
    }
  }
  std::span<double> blk = work.block(site);
  for (int i = 0; i < d * d; ++i) blk[static_cast<std::size_t>(i)] = saved[static_cast<std::size_t>(i)];
  return hi - lo;
}

// Two-state non-symmetric reference ensemble: state A has symmetric part
// lambda * identity plus a unit-spectral-norm antisymmetric part scaled so
// |A| = sqrt(lambda^2 + (1-lambda)^2) <= 1; state B is the identity. Both
// states have probability 1/2.
inline EnsembleSpec reference_two_state(int dim, double lambda = 0.25) {
  if (dim != 2 && dim != 3)
    throw ValidationError("reference two-state ensemble is defined for dimensions 2 and 3");
  const double nu = 1.0 - lambda;
  std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) a[static_cast<std::size_t>(i) * dim + i] = lambda;
  if (dim == 2) {
    a[1] += nu;
    a[2] -= nu;
  } else {
    const double inv = 1.0 / std::sqrt(3.0);
    const double w[3] = {inv, inv, inv};
    double k[9];
    detail::cross_matrix(w, k);
    for (int i = 0; i < 9; ++i) a[static_cast<std::size_t>(i)] += nu * k[static_cast<std::size_t>(i)];
  }
  std::vector<EnsembleState> states(2);
  states[0].matrix = std::move(a);
  states[0].prob = 0.5;
  states[1].matrix = identity_matrix(dim);
  states[1].prob = 0.5;
  return EnsembleSpec::make_finite_state(dim, lambda, std::move(states));
}

}  // namespace homlat
