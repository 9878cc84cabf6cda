#pragma once
// Exhaustive enumeration over finite-state ensembles on small tori, and the
// functional inequalities it certifies: spectral gap, log-Sobolev, and the
// p-th moment bound, each with the best (sharpest) constant the enumerated
// law admits. Configurations are base-s integers, site 0 the least
// significant digit, so single-site substitutions are index arithmetic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "homlat/ensemble.hpp"
#include "homlat/errors.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"

namespace homlat {

inline constexpr std::int64_t max_enumeration = std::int64_t(1) << 20;

struct EnumeratedObservable {
  GridPtr grid;
  int states = 0;
  std::int64_t configs = 0;
  std::vector<double> values;   // observable per configuration
  std::vector<double> weights;  // probability per configuration
};

inline EnumeratedObservable enumerate_observable(const EnsembleSpec& spec, GridPtr grid,
                                                 const Observable& obs) {
  spec.validate();
  if (!spec.is_finite())
    throw ValidationError("enumeration requires a finite-state ensemble");
  if (grid->dim() != spec.dim)
    throw ValidationError("ensemble dimension does not match grid");

  const int s = spec.state_count();
  const std::int64_t n = grid->site_count();
  std::int64_t configs = 1;
  for (std::int64_t k = 0; k < n; ++k) {
    if (configs > max_enumeration / s)
      throw CapacityError("enumeration exceeds " + std::to_string(max_enumeration) +
                          " configurations");
    configs *= s;
  }

  EnumeratedObservable out;
  out.grid = grid;
  out.states = s;
  out.configs = configs;
  out.values.resize(static_cast<std::size_t>(configs));
  out.weights.resize(static_cast<std::size_t>(configs));

  CoefficientField field(grid, spec.lambda);
  const int d = spec.dim;
  for (std::int64_t c = 0; c < configs; ++c) {
    double w = 1.0;
    std::int64_t rest = c;
    for (std::int64_t k = 0; k < n; ++k) {
      const int digit = static_cast<int>(rest % s);
      rest /= s;
      w *= spec.state_prob(digit);
      std::span<const double> m = spec.state_matrix(digit);
      std::span<double> blk = field.block(k);
      for (int i = 0; i < d * d; ++i) blk[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)];
    }
    const double v = obs(field);
    if (!std::isfinite(v)) throw ValidationError("observable returned a non-finite value");
    out.values[static_cast<std::size_t>(c)] = v;
    out.weights[static_cast<std::size_t>(c)] = w;
  }
  return out;
}

enum class InequalityKind { spectral_gap, log_sobolev, moment_p };

inline InequalityKind inequality_kind_from_string(const std::string& s) {
  if (s == "sg" || s == "spectral_gap") return InequalityKind::spectral_gap;
  if (s == "lsi" || s == "log_sobolev") return InequalityKind::log_sobolev;
  if (s == "sgp" || s == "moment_p") return InequalityKind::moment_p;
  throw ValidationError("unknown inequality kind: '" + s + "'");
}

inline const char* inequality_kind_to_string(InequalityKind k) {
  switch (k) {
    case InequalityKind::spectral_gap: return "spectral_gap";
    case InequalityKind::log_sobolev: return "log_sobolev";
    case InequalityKind::moment_p: return "moment_p";
  }
  return "unknown";
}

struct InequalityReport {
  InequalityKind kind = InequalityKind::spectral_gap;
  int p = 1;                  // moment_p order
  double lhs = 0.0;           // variance / entropy / centered 2p-th moment
  double osc_sum = 0.0;       // <sum_x osc^2> or <(sum_x osc^2)^p> for moment_p
  double rhs_at_unit = 0.0;   // right side with unit constant
  double ratio = 0.0;         // rhs_at_unit / lhs (0 when degenerate)
  // Sharpest admissible constant: largest rho for spectral_gap/log_sobolev
  // (right sides carry 1/rho and 1/(2 rho)), smallest C for moment_p.
  double best_constant = 0.0;
  bool degenerate = false;    // lhs and oscillations both vanish
  bool holds = false;
  std::int64_t configurations = 0;
};

// Mean, variance, entropy of the square, and oscillation aggregates of an
// enumerated observable; the inequality is certified by exhaustion.
inline InequalityReport verify_functional_inequality(const EnsembleSpec& spec, GridPtr grid,
                                                     const Observable& obs,
                                                     InequalityKind kind, int p = 1) {
  if (kind == InequalityKind::moment_p && p < 1)
    throw ValidationError("moment inequality needs p >= 1");
  const EnumeratedObservable e = enumerate_observable(spec, grid, obs);
  const std::int64_t n = grid->site_count();
  const int s = e.states;

  double wsum = 0.0, mean = 0.0;
  for (std::size_t c = 0; c < e.values.size(); ++c) {
    wsum += e.weights[c];
    mean += e.weights[c] * e.values[c];
  }
  mean /= wsum;

  // Per-configuration sum over sites of squared single-site oscillations.
  std::vector<double> osc2(e.values.size(), 0.0);
  std::int64_t stride = 1;
  for (std::int64_t k = 0; k < n; ++k) {
    for (std::int64_t c = 0; c < e.configs; ++c) {
      const std::int64_t digit = (c / stride) % s;
      const std::int64_t base = c - digit * stride;
      double hi = -std::numeric_limits<double>::infinity();
      double lo = std::numeric_limits<double>::infinity();
      for (int t = 0; t < s; ++t) {
        const double v = e.values[static_cast<std::size_t>(base + t * stride)];
        hi = std::max(hi, v);
        lo = std::min(lo, v);
      }
      const double osc = hi - lo;
      osc2[static_cast<std::size_t>(c)] += osc * osc;
    }
    stride *= s;
  }

  InequalityReport rep;
  rep.kind = kind;
  rep.p = p;
  rep.configurations = e.configs;

  double osc_mean = 0.0;
  for (std::size_t c = 0; c < osc2.size(); ++c) osc_mean += e.weights[c] * osc2[c];
  osc_mean /= wsum;

  switch (kind) {
    case InequalityKind::spectral_gap: {
      double var = 0.0;
      for (std::size_t c = 0; c < e.values.size(); ++c) {
        const double d0 = e.values[c] - mean;
        var += e.weights[c] * d0 * d0;
      }
      var /= wsum;
      rep.lhs = var;
      rep.osc_sum = osc_mean;
      rep.rhs_at_unit = osc_mean;
      break;
    }
    case InequalityKind::log_sobolev: {
      double m2 = 0.0;
      for (std::size_t c = 0; c < e.values.size(); ++c)
        m2 += e.weights[c] * e.values[c] * e.values[c];
      m2 /= wsum;
      double ent = 0.0;
      if (m2 > 0.0) {
        for (std::size_t c = 0; c < e.values.size(); ++c) {
          const double z2 = e.values[c] * e.values[c];
          if (z2 > 0.0) ent += e.weights[c] * z2 * std::log(z2 / m2);
        }
        ent /= wsum;
        ent = std::max(ent, 0.0);  // Jensen guarantees >= 0; clamp roundoff
      }
      rep.lhs = ent;
      rep.osc_sum = osc_mean;
      rep.rhs_at_unit = 0.5 * osc_mean;
      break;
    }
    case InequalityKind::moment_p: {
      double mom = 0.0, oscp = 0.0;
      for (std::size_t c = 0; c < e.values.size(); ++c) {
        mom += e.weights[c] * std::pow(std::abs(e.values[c] - mean), 2.0 * p);
        oscp += e.weights[c] * std::pow(osc2[c], static_cast<double>(p));
      }
      rep.lhs = mom / wsum;
      rep.osc_sum = oscp / wsum;
      rep.rhs_at_unit = rep.osc_sum;
      break;
    }
  }

  // A constant observable gives zero on both sides: the inequality holds for
  // every constant and no sharpest one exists.
  const double tiny = 1e-20 * (1.0 + mean * mean);
  if (rep.rhs_at_unit <= tiny && rep.lhs <= tiny) {
    rep.degenerate = true;
    rep.holds = true;
    rep.ratio = 0.0;
    rep.best_constant = 0.0;
    return rep;
  }
  rep.ratio = rep.lhs > 0.0 ? rep.rhs_at_unit / rep.lhs : 0.0;
  // Positive left side with vanishing oscillations cannot be dominated.
  rep.holds = rep.lhs <= tiny || rep.rhs_at_unit > 0.0;
  if (kind == InequalityKind::moment_p)
    rep.best_constant = rep.rhs_at_unit > 0.0
                            ? rep.lhs / rep.rhs_at_unit
                            : std::numeric_limits<double>::infinity();
  else
    rep.best_constant = rep.lhs > 0.0 ? rep.rhs_at_unit / rep.lhs
                                      : std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace homlat
