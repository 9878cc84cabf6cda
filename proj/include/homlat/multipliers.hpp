#pragma once
// Closed-form Fourier multipliers of the massive lattice operator and their
// continuum counterparts. With D(xi) = 1/T + sum_n |e^{i xi_n} - 1|^2:
//
//   lattice kernel      M(xi)  = (e^{i xi_j} - 1)(e^{-i xi_l} - 1) / D(xi),
//                       the symbol of grad_j (1/T + div* grad)^{-1} div*_l,
//   continuum kernel    Mc(xi) = xi_j xi_l / (1/T + |xi|^2),
//   star correction     M*(xi) = M*1 + (|xi|^2 / (1/T + |xi|^2)) M*2,
//     M*1 = 1 - 1/(h(xi_j) h(-xi_l)),
//     M*2 = sum_k xi_k^2 (1 - |h(xi_k)|^2) / (|xi|^2 h(xi_j) h(-xi_l)),
//   with h(z) = (e^{iz} - 1)/(iz), h(0) = 1.
//
// These close the exact algebraic identity M - Mc = M * M*, which holds to
// machine precision and is enforced by tests. At xi = 0 every kind except h
// evaluates to 0 by convention.

#include <cmath>
#include <complex>
#include <span>
#include <string>

#include "homlat/errors.hpp"

namespace homlat {

enum class MultiplierKind {
  lattice,           // "M_T"
  continuum,         // "M_T_cont"
  star_one,          // "M_star_1"
  star_two,          // "M_star_2"
  star,              // "M_star_T"
  h_factor,          // "h_factor"
  helmholtz_symbol,  // "helmholtz_symbol"
};

inline MultiplierKind multiplier_kind_from_string(const std::string& s) {
  if (s == "M_T") return MultiplierKind::lattice;
  if (s == "M_T_cont") return MultiplierKind::continuum;
  if (s == "M_star_1") return MultiplierKind::star_one;
  if (s == "M_star_2") return MultiplierKind::star_two;
  if (s == "M_star_T") return MultiplierKind::star;
  if (s == "h_factor") return MultiplierKind::h_factor;
  if (s == "helmholtz_symbol") return MultiplierKind::helmholtz_symbol;
  throw ValidationError("unknown multiplier kind: '" + s + "'");
}

inline std::string multiplier_kind_to_string(MultiplierKind k) {
  switch (k) {
    case MultiplierKind::lattice: return "M_T";
    case MultiplierKind::continuum: return "M_T_cont";
    case MultiplierKind::star_one: return "M_star_1";
    case MultiplierKind::star_two: return "M_star_2";
    case MultiplierKind::star: return "M_star_T";
    case MultiplierKind::h_factor: return "h_factor";
    case MultiplierKind::helmholtz_symbol: return "helmholtz_symbol";
  }
  return "?";
}

struct MultiplierSpec {
  MultiplierKind kind = MultiplierKind::lattice;
  int j = 1;  // direction indices, 1-based
  int l = 1;
  double T = 1.0;
  double lambda = 1.0;  // helmholtz_symbol only

  void validate(int dim) const {
    if (j < 1 || j > dim || l < 1 || l > dim)
      throw ValidationError("multiplier direction indices must lie in 1..d");
    if (!(T > 0.0)) throw ValidationError("multiplier needs T > 0");
    if (kind == MultiplierKind::helmholtz_symbol && !(lambda > 0.0 && lambda <= 1.0))
      throw ValidationError("helmholtz symbol needs lambda in (0, 1]");
  }
};

// e^{iz} - 1 evaluated without cancellation: cos z - 1 = -2 sin^2(z/2).
inline std::complex<double> expm1_unit(double z) {
  const double s = std::sin(0.5 * z);
  return {-2.0 * s * s, std::sin(z)};
}

// h(z) = (e^{iz} - 1)/(iz) = sin(z)/z + i (1 - cos z)/z, h(0) = 1.
inline std::complex<double> h_factor(double z) {
  if (z == 0.0) return {1.0, 0.0};
  const double s = std::sin(0.5 * z);
  return {std::sin(z) / z, 2.0 * s * s / z};
}

// |h(z)|^2 = 4 sin^2(z/2) / z^2.
inline double h_abs2(double z) {
  if (z == 0.0) return 1.0;
  const double s = std::sin(0.5 * z);
  return 4.0 * s * s / (z * z);
}

inline double lattice_quadratic(std::span<const double> xi) {
  double acc = 0.0;
  for (double z : xi) {
    const double s = std::sin(0.5 * z);
    acc += 4.0 * s * s;
  }
  return acc;
}

inline std::complex<double> eval_multiplier(const MultiplierSpec& spec,
                                            std::span<const double> xi) {
  const int d = static_cast<int>(xi.size());
  spec.validate(d);
  const double xj = xi[static_cast<std::size_t>(spec.j - 1)];
  const double xl = xi[static_cast<std::size_t>(spec.l - 1)];
  double xi2 = 0.0;
  for (double z : xi) xi2 += z * z;

  switch (spec.kind) {
    case MultiplierKind::h_factor:
      return h_factor(xj);
    case MultiplierKind::lattice: {
      const double D = 1.0 / spec.T + lattice_quadratic(xi);
      return expm1_unit(xj) * expm1_unit(-xl) / D;
    }
    case MultiplierKind::continuum:
      return {xj * xl / (1.0 / spec.T + xi2), 0.0};
    case MultiplierKind::helmholtz_symbol: {
      const double D = spec.lambda / spec.T + lattice_quadratic(xi);
      return expm1_unit(xj) * expm1_unit(-xl) / D;
    }
    case MultiplierKind::star_one: {
      if (xj == 0.0 && xl == 0.0) return {0.0, 0.0};
      return 1.0 - 1.0 / (h_factor(xj) * h_factor(-xl));
    }
    case MultiplierKind::star_two: {
      if (xi2 == 0.0) return {0.0, 0.0};
      double num = 0.0;
      for (double z : xi) num += z * z * (1.0 - h_abs2(z));
      return num / (xi2 * h_factor(xj) * h_factor(-xl));
    }
    case MultiplierKind::star: {
      MultiplierSpec part = spec;
      part.kind = MultiplierKind::star_one;
      const std::complex<double> m1 = eval_multiplier(part, xi);
      part.kind = MultiplierKind::star_two;
      const std::complex<double> m2 = eval_multiplier(part, xi);
      const double w = xi2 / (1.0 / spec.T + xi2);
      return m1 + w * m2;
    }
  }
  throw ValidationError("unknown multiplier kind");
}

// Defect of the exact algebra M - Mc = M * M* at one frequency.
inline double multiplier_identity_defect(double T, std::span<const double> xi, int j, int l) {
  MultiplierSpec spec;
  spec.T = T;
  spec.j = j;
  spec.l = l;
  spec.kind = MultiplierKind::lattice;
  const std::complex<double> m = eval_multiplier(spec, xi);
  spec.kind = MultiplierKind::continuum;
  const std::complex<double> mc = eval_multiplier(spec, xi);
  spec.kind = MultiplierKind::star;
  const std::complex<double> ms = eval_multiplier(spec, xi);
  return std::abs(m - mc - m * ms);
}

// Defect of the composition M* = M*1 + (|xi|^2/(1/T + |xi|^2)) M*2.
inline double star_decomposition_defect(double T, std::span<const double> xi, int j, int l) {
  MultiplierSpec spec;
  spec.T = T;
  spec.j = j;
  spec.l = l;
  spec.kind = MultiplierKind::star;
  const std::complex<double> ms = eval_multiplier(spec, xi);
  spec.kind = MultiplierKind::star_one;
  const std::complex<double> m1 = eval_multiplier(spec, xi);
  spec.kind = MultiplierKind::star_two;
  const std::complex<double> m2 = eval_multiplier(spec, xi);
  double xi2 = 0.0;
  for (double z : xi) xi2 += z * z;
  const double w = xi2 / (1.0 / T + xi2);
  return std::abs(ms - m1 - w * m2);
}

}  // namespace homlat
