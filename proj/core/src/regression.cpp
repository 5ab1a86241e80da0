#include "dsmp/regression.hpp"

#include <Eigen/Dense>

#include <functional>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dsmp {

std::vector<std::vector<int>> monomial_exponents(int n_features, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> current(static_cast<std::size_t>(n_features), 0);
  // Enumerate by total degree so the intercept comes first.
  for (int total = 0; total <= degree; ++total) {
    // Generate all tuples with sum == total in lexicographic order.
    std::function<void(int, int)> rec = [&](int idx, int remaining) {
      if (idx == n_features - 1) {
        current[static_cast<std::size_t>(idx)] = remaining;
        out.push_back(current);
        return;
      }
      for (int e = remaining; e >= 0; --e) {
        current[static_cast<std::size_t>(idx)] = e;
        rec(idx + 1, remaining - e);
      }
    };
    if (n_features == 0) {
      if (total == 0) out.push_back({});
      continue;
    }
    rec(0, total);
  }
  return out;
}

double FitResult::evaluate(const std::vector<double>& features) const {
  double acc = 0.0;
  for (std::size_t m = 0; m < exponents.size(); ++m) {
    double term = coefficients[m];
    for (std::size_t f = 0; f < exponents[m].size(); ++f) {
      for (int e = 0; e < exponents[m][f]; ++e) term *= features[f];
    }
    acc += term;
  }
  return acc;
}

FitResult intercept_regression(const std::vector<double>& values) {
  if (values.empty()) throw std::domain_error("intercept_regression: empty sample");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  FitResult res;
  res.fitted.assign(values.size(), mean);
  res.coefficients = {mean};
  res.exponents = {{}};
  res.rank = 1;
  return res;
}

FitResult polynomial_regression(const std::vector<std::vector<double>>& features,
                                const std::vector<double>& values, int degree) {
  const std::size_t rows = values.size();
  if (rows == 0) throw std::domain_error("polynomial_regression: empty sample");
  if (features.size() != rows) {
    throw std::invalid_argument("polynomial_regression: features/values size mismatch");
  }
  const std::size_t n_raw = features.front().size();
  if (n_raw == 0 || degree == 0) return intercept_regression(values);

  // Drop constant columns: they are collinear with the intercept and would
  // only manufacture rank deficiency (e.g. delayed state still on its
  // deterministic initial segment).
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < n_raw; ++f) {
    double lo = features[0][f], hi = features[0][f];
    for (std::size_t r = 1; r < rows; ++r) {
      lo = std::min(lo, features[r][f]);
      hi = std::max(hi, features[r][f]);
    }
    if (hi - lo > 1e-13 * std::max(1.0, std::abs(hi) + std::abs(lo))) keep.push_back(f);
  }
  if (keep.empty()) {
    FitResult res = intercept_regression(values);
    res.exponents = {std::vector<int>(n_raw, 0)};
    return res;
  }

  const auto reduced = monomial_exponents(static_cast<int>(keep.size()), degree);
  const std::size_t cols = reduced.size();
  if (rows < 10 * cols) {
    throw std::domain_error("polynomial_regression: need at least 10 paths per basis function");
  }

  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double term = 1.0;
      for (std::size_t f = 0; f < keep.size(); ++f) {
        const int e = reduced[c][f];
        for (int i = 0; i < e; ++i) term *= features[r][keep[f]];
      }
      design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = term;
    }
  }

  // Column equilibration keeps the decomposition well conditioned while the
  // coefficients map back to raw monomials by a single division.
  Eigen::VectorXd scale(static_cast<Eigen::Index>(cols));
  for (std::size_t c = 0; c < cols; ++c) {
    const double norm = design.col(static_cast<Eigen::Index>(c)).norm() /
                        std::sqrt(static_cast<double>(rows));
    scale(static_cast<Eigen::Index>(c)) = norm > 1e-300 ? norm : 1.0;
    design.col(static_cast<Eigen::Index>(c)) /= scale(static_cast<Eigen::Index>(c));
  }

  Eigen::Map<const Eigen::VectorXd> y(values.data(), static_cast<Eigen::Index>(rows));
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  cod.setThreshold(1e-10);

  FitResult res;
  res.rank = static_cast<int>(cod.rank());
  res.rank_deficient = res.rank < static_cast<int>(cols);

  Eigen::VectorXd beta;
  if (res.rank_deficient) {
    // Truncated SVD: the orthogonal-decomposition solve is not reliable on
    // exactly dependent columns, the clipped pseudo-inverse is.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    beta = svd.solve(y);
    res.rank = static_cast<int>(svd.rank());
  } else {
    beta = cod.solve(y);
  }

  Eigen::VectorXd fitted = design * beta;
  res.fitted.assign(fitted.data(), fitted.data() + fitted.size());

  // Re-express in the full raw-feature monomial list (dropped columns get 0).
  res.exponents = monomial_exponents(static_cast<int>(n_raw), degree);
  res.coefficients.assign(res.exponents.size(), 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<int> full(n_raw, 0);
    for (std::size_t f = 0; f < keep.size(); ++f) full[keep[f]] = reduced[c][f];
    for (std::size_t m = 0; m < res.exponents.size(); ++m) {
      if (res.exponents[m] == full) {
        res.coefficients[m] =
            beta(static_cast<Eigen::Index>(c)) / scale(static_cast<Eigen::Index>(c));
        break;
      }
    }
  }
  return res;
}

}  // namespace dsmp
