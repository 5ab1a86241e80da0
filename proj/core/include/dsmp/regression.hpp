// Least-squares projection onto a polynomial basis of per-path features; the
// conditional-expectation workhorse behind the backward solvers and the
// observation-filtration residual checks.
#pragma once

#include <cstddef>
#include <vector>

namespace dsmp {

// All monomials in `n_features` variables with total degree <= degree,
// enumerated deterministically (degree-major, then lexicographic).
std::vector<std::vector<int>> monomial_exponents(int n_features, int degree);

struct FitResult {
  std::vector<double> fitted;               // one value per input row
  std::vector<double> coefficients;         // per monomial, in raw feature units
  std::vector<std::vector<int>> exponents;  // monomial exponent tuples
  bool rank_deficient = false;
  int rank = 0;

  // Evaluate the fitted polynomial on a fresh feature row.
  double evaluate(const std::vector<double>& features) const;
};

// OLS of `values` on the monomial basis of `features` ([row][feature]).
// Degenerate (constant) feature columns are dropped before expansion;
// rank-deficient normal systems fall back to the minimum-norm solution and
// set rank_deficient. Requires rows >= 10 x basis size.
FitResult polynomial_regression(const std::vector<std::vector<double>>& features,
                                const std::vector<double>& values, int degree);

// Plain mean as a degenerate regression (intercept-only basis).
FitResult intercept_regression(const std::vector<double>& values);

}  // namespace dsmp
