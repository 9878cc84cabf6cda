#pragma once
// Site weights on the torus, built from the minimal-image distance to the
// origin. The pure power weight (|x|+1)^gamma is submultiplicative for
// gamma >= 0 because the quotient metric satisfies |x+y| <= |x|+|y|. The
// green-moment weight combines two powers and is generally not
// submultiplicative; it exists to weigh gradient sums of Green functions.

#include <cmath>
#include <cstdint>
#include <string>

#include "homlat/errors.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"

namespace homlat {

struct WeightSpec {
  enum class Kind { unit, polynomial_growth, green_moment };

  Kind kind = Kind::unit;
  double gamma = 0.0;  // polynomial_growth exponent
  double q = 1.0;      // green_moment order
  double T = 1.0;      // green_moment cutoff scale

  static WeightSpec unit() { return {}; }

  static WeightSpec polynomial(double gamma) {
    WeightSpec w;
    w.kind = Kind::polynomial_growth;
    w.gamma = gamma;
    return w;
  }

  static WeightSpec green_moment(double q, double T) {
    WeightSpec w;
    w.kind = Kind::green_moment;
    w.q = q;
    w.T = T;
    return w;
  }

  void validate(int dim) const {
    switch (kind) {
      case Kind::unit:
        return;
      case Kind::polynomial_growth:
        if (!(gamma >= 0.0)) throw ValidationError("polynomial weight needs gamma >= 0");
        return;
      case Kind::green_moment:
        if (dim < 2) throw ValidationError("green-moment weight needs dimension >= 2");
        if (!(q >= 1.0)) throw ValidationError("green-moment weight needs q >= 1");
        if (!(T > 0.0)) throw ValidationError("green-moment weight needs T > 0");
        return;
    }
    throw ValidationError("unknown weight kind");
  }
};

inline double weight_at(const TorusGrid& grid, std::int64_t site, const WeightSpec& w) {
  switch (w.kind) {
    case WeightSpec::Kind::unit:
      return 1.0;
    case WeightSpec::Kind::polynomial_growth:
      return std::pow(grid.site_radius(site) + 1.0, w.gamma);
    case WeightSpec::Kind::green_moment: {
      const double r1 = grid.site_radius(site) + 1.0;
      if (grid.dim() == 2)
        return std::pow(r1, 2.0 * (w.q - 1.0)) +
               std::pow(w.T, 1.0 - w.q) * std::pow(r1, 4.0 * (w.q - 1.0));
      return std::pow(r1, 2.0 * grid.dim() * (w.q - 1.0));
    }
  }
  throw ValidationError("unknown weight kind");
}

inline LatticeScalarField weight_field(GridPtr grid, const WeightSpec& w) {
  w.validate(grid->dim());
  LatticeScalarField f(grid);
  for (std::int64_t s = 0; s < grid->site_count(); ++s) f[s] = weight_at(*grid, s, w);
  return f;
}

}  // namespace homlat
