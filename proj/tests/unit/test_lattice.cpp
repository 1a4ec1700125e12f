#include <cmath>
#include <random>

#include "doctest.h"
#include "rbsde/lattice.hpp"

using namespace rbsde;

namespace {

AdaptedProcess random_process(int steps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  AdaptedProcess x(steps, 0.0);
  for (int i = 0; i <= steps; ++i)
    for (double& v : x.level(i)) v = u(rng);
  return x;
}

}  // namespace

TEST_CASE("grid endpoints are exact") {
  const TimeGrid g(0.7, 7);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(7) == 0.7);
  CHECK(g.dt() == doctest::Approx(0.1));
  CHECK_THROWS_AS(TimeGrid(1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(-1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(1.0, 63), std::invalid_argument);
}

TEST_CASE("brownian value and children") {
  const Lattice lat(1.0, 4);
  CHECK(lat.brownian({0, 0}) == 0.0);
  CHECK(lat.brownian({2, 2}) == doctest::Approx(2 * lat.sqrt_dt()));
  CHECK(lat.brownian({3, 0}) == doctest::Approx(-3 * lat.sqrt_dt()));
  CHECK(Lattice::up({2, 1}) == Node{3, 2});
  CHECK(Lattice::down({2, 1}) == Node{3, 1});
}

TEST_CASE("field access outside the tree throws") {
  AdaptedProcess x(3, 0.0);
  CHECK_THROWS_AS(x[(Node{4, 0})], std::out_of_range);
  CHECK_THROWS_AS(x[(Node{2, 3})], std::out_of_range);
  PredictableProcess p(3, 0.0);
  CHECK_THROWS_AS(p.for_step({3, 0}), std::out_of_range);
}

TEST_CASE("one-step expectation") {
  AdaptedProcess x(2, 0.0);
  SUBCASE("constant") {
    for (double& v : x.level(2)) v = 4.5;
    CHECK(conditional_expectation(x, {1, 0}) == 4.5);
    CHECK(conditional_expectation(x, {1, 1}) == 4.5);
  }
  SUBCASE("midpoint") {
    x[{2, 2}] = 2.0;
    x[{2, 1}] = 0.0;
    CHECK(conditional_expectation(x, {1, 1}) == 1.0);
  }
}

TEST_CASE("martingale increment coefficient") {
  const Lattice lat(1.0, 5);
  SUBCASE("constant carries no exposure") {
    const AdaptedProcess x(5, 2.0);
    CHECK(martingale_increment_coefficient(lat, x, {3, 1}) == 0.0);
  }
  SUBCASE("identity integrand") {
    const auto b = lat.adapted<double>([](Node, double, double w) { return w; });
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j <= i; ++j) CHECK(martingale_increment_coefficient(lat, b, {i, j}) == doctest::Approx(1.0));
  }
}

TEST_CASE("two-point reconstruction is exact") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Lattice lat(1.0 + rep * 0.1, 9);
    const AdaptedProcess x = random_process(9, rng);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j <= i; ++j) {
        const Node n{i, j};
        const double e = conditional_expectation(x, n), z = martingale_increment_coefficient(lat, x, n);
        const double up = x[Lattice::up(n)], down = x[Lattice::down(n)];
        const double scale = std::max({std::fabs(up), std::fabs(down), 1.0});
        CHECK(std::fabs(e + z * lat.sqrt_dt() - up) <= 4 * 2.3e-16 * scale);
        CHECK(std::fabs(e - z * lat.sqrt_dt() - down) <= 4 * 2.3e-16 * scale);
      }
  }
}

TEST_CASE("tower property against path enumeration") {
  std::mt19937_64 rng(5);
  const int n = 10;
  const AdaptedProcess x = random_process(n, rng);
  AdaptedProcess v = x;
  for (int i = n - 1; i >= 0; --i)
    for (int j = 0; j <= i; ++j) v[{i, j}] = conditional_expectation(v, {i, j});
  double mean = 0.0;
  for (std::uint64_t p = 0; p < (1u << n); ++p) mean += x[Path(p, n).node_at(n)];
  mean /= double(1u << n);
  CHECK(v[{0, 0}] == doctest::Approx(mean).epsilon(1e-13));

  double total = 0.0;
  for (int j = 0; j <= n; ++j) total += std::exp(log_node_probability({n, j}));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("paths") {
  const Path p(0b1011, 5);
  CHECK(p.node_at(0) == Node{0, 0});
  CHECK(p.node_at(2) == Node{2, 2});
  CHECK(p.node_at(3) == Node{3, 2});
  CHECK(p.node_at(5) == Node{5, 3});
  CHECK(p.up_at(3));
  CHECK_FALSE(p.up_at(2));
  CHECK_THROWS_AS(Path(0b100000, 5), std::invalid_argument);
}

TEST_CASE("increasing processes") {
  CHECK_THROWS_AS(IncreasingProcess(PredictableProcess(3, -1.0)), std::invalid_argument);
  const std::pair<int, double> atoms[] = {{2, 0.5}, {3, 1.5}};
  const IncreasingProcess rho = IncreasingProcess::from_atoms(3, atoms);
  CHECK_FALSE(rho.has_atom({0, 0}));
  CHECK(rho.atom({1, 1}) == 0.5);
  CHECK(rho.atom({2, 0}) == 1.5);
  CHECK(IncreasingProcess(3).is_zero());
  CHECK_FALSE(rho.is_zero());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PredictableProcess w(8, 0.0);
  for (int i = 0; i < 8; ++i)
    for (double& v : w.level(i)) v = u(rng) < 0.5 ? u(rng) : 0.0;
  const IncreasingProcess random(w);
  for (std::uint64_t bits = 0; bits < 256; ++bits) {
    const auto c = random.cumulative_along(Path(bits, 8));
    CHECK(c[0] == 0.0);
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k] >= c[k - 1]);
  }
}

TEST_CASE("extended reals") {
  const ExtReal a = ExtReal::neg_inf(), b(1.0), c = ExtReal::pos_inf();
  CHECK(a < b);
  CHECK(b < c);
  CHECK(-a == c);
  CHECK(max(a, b) == b);
  CHECK(min(b, c) == b);
  CHECK((c + 3.0).is_pos_inf());
  CHECK_THROWS_AS(ExtReal(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(ExtReal(std::numeric_limits<double>::infinity()), std::domain_error);
  CHECK(ExtReal::from_double(-std::numeric_limits<double>::infinity()).is_neg_inf());
  CHECK_THROWS_AS(ExtReal::pos_inf().value(), std::logic_error);
  CHECK(parse_ext_real("-inf").is_neg_inf());
  CHECK(parse_ext_real("2.5") == ExtReal(2.5));
  CHECK(to_string(ExtReal::pos_inf()) == "inf");
}
