#include "doctest.h"
#include "dsmp/regression.hpp"

#include <cmath>
#include <stdexcept>
#include <random>

using namespace dsmp;

namespace {

std::vector<std::vector<double>> gaussian_features(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> f(static_cast<std::size_t>(rows),
                                     std::vector<double>(static_cast<std::size_t>(cols)));
  for (auto& row : f)
    for (auto& v : row) v = g(eng);
  return f;
}

}  // namespace

TEST_CASE("monomial basis sizes") {
  CHECK(monomial_exponents(1, 2).size() == 3);
  CHECK(monomial_exponents(3, 2).size() == 10);
  CHECK(monomial_exponents(2, 3).size() == 10);
  CHECK(monomial_exponents(4, 2).size() == 15);
}

TEST_CASE("constants and basis elements are reproduced exactly") {
  const auto f = gaussian_features(500, 2, 3);
  std::vector<double> constant(500, 3.25);
  const FitResult a = polynomial_regression(f, constant, 2);
  for (double v : a.fitted) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));

  std::vector<double> first(500);
  for (int i = 0; i < 500; ++i) first[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)][0];
  const FitResult b = polynomial_regression(f, first, 1);
  for (int i = 0; i < 500; ++i) {
    CHECK(b.fitted[static_cast<std::size_t>(i)] ==
          doctest::Approx(first[static_cast<std::size_t>(i)]).epsilon(1e-10));
  }
}

TEST_CASE("quadratic coefficient recovery under noise") {
  const int rows = 20000;
  const auto f = gaussian_features(rows, 1, 17);
  std::mt19937_64 eng(18);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<double> y(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    const double z = f[static_cast<std::size_t>(i)][0];
    y[static_cast<std::size_t>(i)] = z * z + noise(eng);
  }
  const FitResult fit = polynomial_regression(f, y, 2);
  REQUIRE(fit.exponents.size() == 3);
  double coef_sq = 0.0;
  for (std::size_t m = 0; m < fit.exponents.size(); ++m) {
    if (fit.exponents[m] == std::vector<int>{2}) coef_sq = fit.coefficients[m];
  }
  CHECK(std::abs(coef_sq - 1.0) < 0.05);
}

TEST_CASE("projection is idempotent") {
  const auto f = gaussian_features(2000, 3, 5);
  std::mt19937_64 eng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> y(2000);
  for (auto& v : y) v = g(eng);
  const FitResult once = polynomial_regression(f, y, 2);
  const FitResult twice = polynomial_regression(f, once.fitted, 2);
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(std::abs(once.fitted[i] - twice.fitted[i]) < 1e-10);
  }
}

TEST_CASE("rank deficiency falls back to the minimum-norm solution") {
  const int rows = 800;
  auto f = gaussian_features(rows, 2, 7);
  for (auto& row : f) row[1] = 2.0 * row[0];  // exactly collinear
  std::vector<double> y(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) y[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)][0];
  const FitResult fit = polynomial_regression(f, y, 1);
  CHECK(fit.rank_deficient);
  for (int i = 0; i < rows; ++i) {
    CHECK(fit.fitted[static_cast<std::size_t>(i)] ==
          doctest::Approx(y[static_cast<std::size_t>(i)]).epsilon(1e-8));
  }
}

TEST_CASE("constant columns are dropped rather than flagged") {
  auto f = gaussian_features(400, 2, 9);
  for (auto& row : f) row[1] = 7.0;
  std::vector<double> y(400);
  for (int i = 0; i < 400; ++i) y[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)][0];
  const FitResult fit = polynomial_regression(f, y, 2);
  CHECK_FALSE(fit.rank_deficient);
  for (int i = 0; i < 400; ++i) {
    CHECK(fit.fitted[static_cast<std::size_t>(i)] ==
          doctest::Approx(y[static_cast<std::size_t>(i)]).epsilon(1e-9));
  }
}

TEST_CASE("sample-size guard") {
  const auto f = gaussian_features(50, 3, 4);
  std::vector<double> y(50, 1.0);
  CHECK_THROWS_AS(polynomial_regression(f, y, 2), std::domain_error);
  CHECK_THROWS_AS(polynomial_regression({}, {}, 2), std::domain_error);
}

TEST_CASE("evaluate matches fitted values on training rows") {
  const auto f = gaussian_features(600, 2, 13);
  std::vector<double> y(600);
  for (int i = 0; i < 600; ++i) {
    y[static_cast<std::size_t>(i)] =
        1.0 + f[static_cast<std::size_t>(i)][0] - 0.5 * f[static_cast<std::size_t>(i)][1];
  }
  const FitResult fit = polynomial_regression(f, y, 2);
  for (int i = 0; i < 600; i += 37) {
    CHECK(fit.evaluate(f[static_cast<std::size_t>(i)]) ==
          doctest::Approx(fit.fitted[static_cast<std::size_t>(i)]).epsilon(1e-9));
  }
}
