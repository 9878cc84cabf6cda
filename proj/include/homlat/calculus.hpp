#pragma once
// Discrete calculus on the torus. Forward gradient
//   (grad u)_i(x) = u(x+e_i) - u(x)
// and its adjoint, the backward divergence
//   (div* g)(x) = sum_i g_i(x-e_i) - g_i(x),
// satisfy exact summation by parts: sum_x grad u . g = sum_x u div* g.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>

#include "homlat/errors.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"
#include "homlat/weights.hpp"

namespace homlat {

inline LatticeVectorField gradient(const LatticeScalarField& u) {
  LatticeVectorField g(u.grid_ptr());
  const TorusGrid& grid = u.grid();
  for (std::int64_t s = 0; s < grid.site_count(); ++s)
    for (int k = 0; k < grid.dim(); ++k)
      g.at(s, k) = u[grid.neighbor(s, k, +1)] - u[s];
  return g;
}

inline LatticeScalarField divergence_star(const LatticeVectorField& g) {
  LatticeScalarField u(g.grid_ptr());
  const TorusGrid& grid = g.grid();
  for (std::int64_t s = 0; s < grid.site_count(); ++s) {
    double acc = 0.0;
    for (int k = 0; k < grid.dim(); ++k)
      acc += g.at(grid.neighbor(s, k, -1), k) - g.at(s, k);
    u[s] = acc;
  }
  return u;
}

inline double dot(const LatticeScalarField& a, const LatticeScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  double acc = 0.0;
  for (std::int64_t s = 0; s < a.size(); ++s) acc += a[s] * b[s];
  return acc;
}

inline double dot(const LatticeVectorField& a, const LatticeVectorField& b) {
  require_same_grid(a.grid(), b.grid());
  double acc = 0.0;
  const std::span<const double> av = a.values();
  const std::span<const double> bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  return acc;
}

inline double sum(const LatticeScalarField& f) {
  double acc = 0.0;
  for (double x : f.values()) acc += x;
  return acc;
}

inline double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// (sum_x w(x) |f(x)|^p)^(1/p) with |f(x)| the per-site Euclidean magnitude.
inline double weighted_norm(const TorusGrid& grid, std::span<const double> values,
                            int components, double p, const WeightSpec& w) {
  if (!(p >= 1.0)) throw ValidationError("weighted norm needs p >= 1");
  w.validate(grid.dim());
  if (static_cast<std::int64_t>(values.size()) != grid.site_count() * components)
    throw ValidationError("field value count does not match grid");
  double acc = 0.0;
  for (std::int64_t s = 0; s < grid.site_count(); ++s) {
    double mag2 = 0.0;
    for (int c = 0; c < components; ++c) {
      const double x = values[static_cast<std::size_t>(s) * components + c];
      mag2 += x * x;
    }
    acc += weight_at(grid, s, w) * std::pow(mag2, 0.5 * p);
  }
  return std::pow(acc, 1.0 / p);
}

inline double weighted_norm(const LatticeScalarField& f, double p, const WeightSpec& w) {
  return weighted_norm(f.grid(), f.values(), 1, p, w);
}

inline double weighted_norm(const LatticeVectorField& f, double p, const WeightSpec& w) {
  return weighted_norm(f.grid(), f.values(), f.grid().dim(), p, w);
}

}  // namespace homlat
