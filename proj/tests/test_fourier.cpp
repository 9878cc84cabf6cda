#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "test_helpers.hpp"

using namespace homlat;

namespace {
constexpr double pi = 3.14159265358979323846;
}

TEST_CASE("transform closed forms on a four-site ring") {
  auto grid = make_grid(1, 4);
  cvector f(4, 0.0);
  f[0] = 1.0;
  auto fhat = dft(*grid, f);
  for (const auto& v : fhat) CHECK(std::abs(v - 1.0) <= 1e-14);

  cvector g(4, 0.0);
  g[1] = 1.0;
  auto ghat = dft(*grid, g);
  for (int m = 0; m < 4; ++m) {
    const std::complex<double> want = std::exp(std::complex<double>(0.0, -2.0 * pi * m / 4.0));
    CHECK(std::abs(ghat[m] - want) <= 1e-14);
  }
}

TEST_CASE("inverse transform and Parseval") {
  auto grid = make_grid(2, 8);
  const auto f = helpers::random_scalar(grid, 17);
  cvector fc(f.values().begin(), f.values().end());
  const auto fhat = dft(*grid, fc);
  const auto back = idft(*grid, fhat);
  double sum2 = 0.0, sumhat2 = 0.0;
  for (std::int64_t s = 0; s < grid->site_count(); ++s) {
    CHECK(std::abs(back[s] - fc[s]) <= 1e-12);
    sum2 += std::norm(fc[s]);
    sumhat2 += std::norm(fhat[s]);
  }
  CHECK(sum2 == Catch::Approx(sumhat2 / static_cast<double>(grid->site_count())));
}

TEST_CASE("convolution shifts a point mass") {
  auto grid = make_grid(1, 4);
  LatticeScalarField f(grid), g(grid);
  f[0] = 1.0;
  f[1] = 2.0;
  g[1] = 1.0;
  const auto fg = convolve(f, g);
  CHECK(fg[0] == Catch::Approx(0.0).margin(1e-13));
  CHECK(fg[1] == Catch::Approx(1.0));
  CHECK(fg[2] == Catch::Approx(2.0));
  CHECK(fg[3] == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("frequencies fold into the half-open Brillouin zone") {
  auto grid = make_grid(1, 4);
  FrequencyGrid freq(grid);
  double xi[max_dim];
  freq.frequency(0, xi);
  CHECK(xi[0] == 0.0);
  freq.frequency(2, xi);
  CHECK(xi[0] == Catch::Approx(pi));  // +pi, not -pi
  freq.frequency(3, xi);
  CHECK(xi[0] == Catch::Approx(-pi / 2.0));
}

TEST_CASE("laplace symbol values") {
  const double z[1] = {pi};
  CHECK(laplace_symbol(std::span<const double>(z, 1)) == Catch::Approx(4.0));
  const double z2[2] = {0.0, 0.0};
  CHECK(laplace_symbol(std::span<const double>(z2, 2)) == 0.0);
}

TEST_CASE("constant-coefficient kernel on two sites") {
  auto grid = make_grid(1, 2);
  const auto G = green_constant(grid, 1.0, 1.0);
  CHECK(G[0] == Catch::Approx(0.6));
  CHECK(G[1] == Catch::Approx(0.4));
}

TEST_CASE("constant-coefficient kernel row sum and residual") {
  auto grid = make_grid(2, 16);
  const double T = 8.0;
  const auto G = green_constant(grid, T, 1.0);
  CHECK(sum(G) == Catch::Approx(T));  // hat G at frequency 0 is T

  // Applying the identity-coefficient operator recovers the point mass.
  const auto back = apply_operator(CoefficientField(grid, 1.0, identity_matrix(2)), T, G);
  for (std::int64_t s = 0; s < grid->site_count(); ++s)
    CHECK(std::abs(back[s] - (s == 0 ? 1.0 : 0.0)) <= 1e-12);
}

TEST_CASE("h factor bounds and endpoints") {
  CHECK(h_factor(0.0) == std::complex<double>(1.0, 0.0));
  for (int k = -400; k <= 400; ++k) {
    const double z = (pi * k) / 400.0;
    if (z <= -pi) continue;
    const auto h = h_factor(z);
    CHECK(std::abs(h) <= 1.0 + 1e-12);
    CHECK(1.0 / std::abs(h) <= pi / 2.0 + 1e-12);
    // |e^{iz} - 1|^2 = z^2 |h(z)|^2 ties the factor to the symbol.
    const auto e = expm1_unit(z);
    CHECK(std::norm(e) == Catch::Approx(z * z * std::norm(h)).margin(1e-14));
  }
}

TEST_CASE("lattice multiplier closed form at the zone edge") {
  MultiplierSpec spec;
  spec.kind = MultiplierKind::lattice;
  spec.j = 1;
  spec.l = 1;
  spec.T = 1.0;
  const double xi[1] = {pi};
  const auto v = eval_multiplier(spec, std::span<const double>(xi, 1));
  // (e^{i pi}-1)(e^{-i pi}-1) / (1 + |e^{i pi}-1|^2) = 4/5.
  CHECK(v.real() == Catch::Approx(0.8));
  CHECK(v.imag() == Catch::Approx(0.0).margin(1e-15));

  spec.kind = MultiplierKind::continuum;
  const auto c = eval_multiplier(spec, std::span<const double>(xi, 1));
  CHECK(c.real() == Catch::Approx(pi * pi / (1.0 + pi * pi)));
}

TEST_CASE("multiplier conventions at frequency zero") {
  MultiplierSpec spec;
  spec.T = 10.0;
  const double xi[2] = {0.0, 0.0};
  for (auto kind : {MultiplierKind::lattice, MultiplierKind::continuum,
                    MultiplierKind::star_one, MultiplierKind::star_two,
                    MultiplierKind::star}) {
    spec.kind = kind;
    CHECK(std::abs(eval_multiplier(spec, std::span<const double>(xi, 2))) == 0.0);
  }
  spec.kind = MultiplierKind::h_factor;
  CHECK(eval_multiplier(spec, std::span<const double>(xi, 2)) ==
        std::complex<double>(1.0, 0.0));
}

TEST_CASE("kind strings round trip") {
  for (const char* name : {"M_T", "M_T_cont", "M_star_1", "M_star_2", "M_star_T", "h_factor",
                           "helmholtz_symbol"})
    CHECK(multiplier_kind_to_string(multiplier_kind_from_string(name)) == std::string(name));
  CHECK_THROWS_AS(multiplier_kind_from_string("bogus"), ValidationError);
}

TEST_CASE("correction identity closes at machine precision") {
  CounterRng rng(2026);
  std::vector<double> xi(3);
  for (double T : {1.0, 10.0, 1000.0}) {
    double worst = 0.0, worst_star = 0.0;
    for (int t = 0; t < 300; ++t) {
      for (auto& x : xi) x = rng.next_in(-pi, pi);
      for (int j = 1; j <= 3; ++j)
        for (int l = 1; l <= 3; ++l) {
          worst = std::max(worst, multiplier_identity_defect(T, xi, j, l));
          worst_star = std::max(worst_star, star_decomposition_defect(T, xi, j, l));
        }
    }
    CHECK(worst <= 1e-12);
    CHECK(worst_star <= 1e-12);
  }
}

TEST_CASE("multiplier validation") {
  MultiplierSpec spec;
  spec.j = 3;  // out of range in dimension 2
  const double xi[2] = {0.1, 0.2};
  CHECK_THROWS_AS(eval_multiplier(spec, std::span<const double>(xi, 2)), ValidationError);
  spec.j = 1;
  spec.T = 0.0;
  CHECK_THROWS_AS(eval_multiplier(spec, std::span<const double>(xi, 2)), ValidationError);
}
