#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "test_helpers.hpp"

using namespace homlat;

TEST_CASE("grid validation and capacity") {
  CHECK_THROWS_AS(make_grid(0, 8), ValidationError);
  CHECK_THROWS_AS(make_grid(5, 8), ValidationError);
  CHECK_THROWS_AS(make_grid(2, 1), ValidationError);
  CHECK_THROWS_AS(make_grid(4, 64), CapacityError);  // 64^4 > 2^22
  CHECK(make_grid(2, 4)->site_count() == 16);
}

TEST_CASE("grid indexing round trips") {
  auto grid = make_grid(3, 6);
  int c[max_dim];
  for (std::int64_t s = 0; s < grid->site_count(); ++s) {
    grid->site_coords(s, c);
    CHECK(grid->index(std::span<const int>(c, 3)) == s);
  }
}

TEST_CASE("neighbors invert and wrap") {
  auto grid = make_grid(2, 5);
  for (std::int64_t s = 0; s < grid->site_count(); ++s)
    for (int ax = 0; ax < 2; ++ax) {
      CHECK(grid->neighbor(grid->neighbor(s, ax, +1), ax, -1) == s);
      CHECK(grid->neighbor(s, ax, +1) != s);
    }
  // Explicit wrap on the last column.
  int c[2] = {4, 2};
  const auto s = grid->index(std::span<const int>(c, 2));
  int cn[2] = {0, 2};
  CHECK(grid->neighbor(s, 0, +1) == grid->index(std::span<const int>(cn, 2)));
}

TEST_CASE("minimal image and site radius") {
  auto grid = make_grid(2, 16);
  CHECK(grid->minimal_coord(0) == 0);
  CHECK(grid->minimal_coord(8) == 8);    // 2*8 <= 16 keeps the positive rep
  CHECK(grid->minimal_coord(9) == -7);
  int c[2] = {3, 4};
  CHECK(grid->site_radius(grid->index(std::span<const int>(c, 2))) ==
        Catch::Approx(5.0));
  int far[2] = {15, 0};  // minimal image (-1, 0)
  CHECK(grid->site_radius(grid->index(std::span<const int>(far, 2))) ==
        Catch::Approx(1.0));
}

TEST_CASE("torus triangle inequality for minimal radii") {
  auto grid = make_grid(2, 12);
  CounterRng rng(7);
  int cx[2], cy[2], cz[2];
  for (int t = 0; t < 2000; ++t) {
    const auto x = static_cast<std::int64_t>(rng.next_u64() % grid->site_count());
    const auto y = static_cast<std::int64_t>(rng.next_u64() % grid->site_count());
    grid->site_coords(x, cx);
    grid->site_coords(y, cy);
    for (int k = 0; k < 2; ++k) cz[k] = (cx[k] + cy[k]) % grid->side();
    const auto z = grid->index(std::span<const int>(cz, 2));
    CHECK(grid->site_radius(z) <= grid->site_radius(x) + grid->site_radius(y) + 1e-12);
  }
}

TEST_CASE("gradient oracle on a four-site ring") {
  auto grid = make_grid(1, 4);
  LatticeScalarField u(grid);
  u[0] = 1.0;
  const auto g = gradient(u);
  CHECK(g.at(0, 0) == -1.0);
  CHECK(g.at(1, 0) == 0.0);
  CHECK(g.at(2, 0) == 0.0);
  CHECK(g.at(3, 0) == 1.0);
}

TEST_CASE("divergence of gradient of a point mass") {
  auto grid = make_grid(1, 4);
  LatticeScalarField u(grid);
  u[0] = 1.0;
  const auto lap = divergence_star(gradient(u));
  CHECK(lap[0] == 2.0);
  CHECK(lap[1] == -1.0);
  CHECK(lap[2] == 0.0);
  CHECK(lap[3] == -1.0);
}

TEST_CASE("summation by parts is exact") {
  for (int dim = 1; dim <= 3; ++dim) {
    auto grid = make_grid(dim, dim == 3 ? 6 : 10);
    const auto u = helpers::random_scalar(grid, 11 + dim);
    const auto g = helpers::random_vector(grid, 23 + dim);
    const double lhs = dot(gradient(u), g);
    const double rhs = dot(u, divergence_star(g));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("green-moment weight closed forms") {
  auto grid = make_grid(2, 16);
  int c[2] = {3, 4};  // radius 5
  const auto s = grid->index(std::span<const int>(c, 2));
  CHECK(weight_at(*grid, s, WeightSpec::green_moment(2.0, 4.0)) == Catch::Approx(360.0));
  // q = 1 collapses both terms to 1 in dimension 2.
  for (std::int64_t site = 0; site < grid->site_count(); site += 17)
    CHECK(weight_at(*grid, site, WeightSpec::green_moment(1.0, 64.0)) == 2.0);

  auto grid3 = make_grid(3, 8);
  int c3[3] = {1, 0, 0};
  const auto s3 = grid3->index(std::span<const int>(c3, 3));
  // (r+1)^{2 d (q-1)} with r = 1, d = 3, q = 2.
  CHECK(weight_at(*grid3, s3, WeightSpec::green_moment(2.0, 4.0)) == Catch::Approx(64.0));
}

TEST_CASE("weight validation") {
  auto grid = make_grid(2, 4);
  CHECK_THROWS_AS(weight_field(grid, WeightSpec::green_moment(0.5, 4.0)), ValidationError);
  CHECK_THROWS_AS(weight_field(grid, WeightSpec::green_moment(1.5, 0.0)), ValidationError);
  CHECK_THROWS_AS(weight_field(make_grid(1, 4), WeightSpec::green_moment(1.5, 4.0)),
                  ValidationError);
  CHECK_THROWS_AS(weight_field(grid, WeightSpec::polynomial(-0.1)), ValidationError);
  CHECK(weight_field(grid, WeightSpec::unit())[3] == 1.0);
}

TEST_CASE("power weight is submultiplicative on the torus") {
  auto grid = make_grid(2, 14);
  const double gamma = 0.4;
  CounterRng rng(99);
  int cx[2], cy[2], cz[2];
  const auto w = [&](std::int64_t s) {
    return std::pow(grid->site_radius(s) + 1.0, gamma);
  };
  for (int t = 0; t < 10000; ++t) {
    const auto x = static_cast<std::int64_t>(rng.next_u64() % grid->site_count());
    const auto y = static_cast<std::int64_t>(rng.next_u64() % grid->site_count());
    grid->site_coords(x, cx);
    grid->site_coords(y, cy);
    for (int k = 0; k < 2; ++k) cz[k] = (cx[k] + cy[k]) % grid->side();
    const auto z = grid->index(std::span<const int>(cz, 2));
    CHECK(w(z) <= w(x) * w(y) * (1.0 + 1e-12));
  }
}

TEST_CASE("weighted convolution inequality") {
  // With nu_g(x) = (|x|+1)^g and 1 + 1/r = 1/p + 1/q:
  //   (sum |f*g|^r nu_gamma)^{1/r}
  //     <= (sum |f|^p nu_{gamma p / r})^{1/p} (sum |g|^q nu_{gamma q / r})^{1/q}.
  auto grid = make_grid(2, 12);
  const double gamma = 0.45;
  const auto f = helpers::random_scalar(grid, 5);
  const auto g = helpers::random_scalar(grid, 6);
  const auto fg = convolve(f, g);
  const struct {
    double r, p, q;
  } triples[] = {{1, 1, 1}, {2, 1, 2}, {2, 2, 1}, {3, 1.2, 2}, {4, 2, 4.0 / 3.0}};
  for (const auto& t : triples) {
    const double lhs = weighted_norm(fg, t.r, WeightSpec::polynomial(gamma));
    const double rhs =
        weighted_norm(f, t.p, WeightSpec::polynomial(gamma * t.p / t.r)) *
        weighted_norm(g, t.q, WeightSpec::polynomial(gamma * t.q / t.r));
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("matrix certification") {
  const std::vector<double> rot = {0.25, 0.75, -0.75, 0.25};
  const std::vector<double> low = {0.2, 0.0, 0.0, 1.0};
  const std::vector<double> big = {1.1, 0.0, 0.0, 1.0};
  const std::vector<double> eye = identity_matrix(2);
  CHECK_NOTHROW(validate_elliptic(eye, 2, 1.0));
  CHECK(spectral_norm(rot, 2) == Catch::Approx(std::sqrt(0.625)));
  CHECK(min_symmetric_eigenvalue(rot, 2) == Catch::Approx(0.25));
  CHECK_NOTHROW(validate_elliptic(rot, 2, 0.25));
  // Symmetric part below lambda.
  CHECK_THROWS_AS(validate_elliptic(low, 2, 0.25), ValidationError);
  // Norm above 1.
  CHECK_THROWS_AS(validate_elliptic(big, 2, 0.25), ValidationError);
  CHECK(is_symmetric(eye, 2));
  CHECK_FALSE(is_symmetric(rot, 2));
}

TEST_CASE("seed derivation is deterministic and spreads") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CounterRng rng(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("field files round trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "homlat_field_io";
  fs::create_directories(dir);
  auto grid = make_grid(2, 6);
  const auto f = helpers::random_scalar(grid, 3);

  for (auto fmt : {FieldFileFormat::binary, FieldFileFormat::csv}) {
    const auto path =
        (dir / (fmt == FieldFileFormat::binary ? "f.hlf" : "f.csv")).string();
    write_scalar_field(path, f, fmt);
    const auto back = read_scalar_field(path);
    REQUIRE(back.grid() == *grid);
    for (std::int64_t s = 0; s < grid->site_count(); ++s) CHECK(back[s] == f[s]);
  }

  const auto bad = (dir / "bad.hlf").string();
  {
    std::FILE* fp = std::fopen(bad.c_str(), "wb");
    std::fputs("NOTAFIELD", fp);
    std::fclose(fp);
  }
  CHECK_THROWS_AS(read_scalar_field(bad), ValidationError);
}
