#include "filterstab/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "filterstab/errors.hpp"

namespace filterstab {

void SimplexProblem::add_row(std::vector<std::pair<std::size_t, double>> coeffs, double rhs) {
  if (!(rhs >= 0.0)) throw std::invalid_argument("SimplexProblem: rhs must be nonnegative");
  for (const auto& [var, c] : coeffs) {
    if (var >= num_vars()) throw std::out_of_range("SimplexProblem: variable index");
    (void)c;
  }
  rows_.push_back(Row{std::move(coeffs), rhs});
}

SimplexProblem::Solution SimplexProblem::maximize() const {
  constexpr double eps = 1e-12;
  const std::size_t m = rows_.size();
  const std::size_t n = objective_.size();
  const std::size_t width = n + 1;

  // Compact tableau: rows 0..m-1 are constraints, row m holds -reduced costs;
  // column n is the right-hand side.
  std::vector<double> t((m + 1) * width, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return t[r * width + c]; };
  for (std::size_t r = 0; r < m; ++r) {
    for (const auto& [var, c] : rows_[r].coeffs) at(r, var) += c;
    at(r, n) = rows_[r].rhs;
  }
  for (std::size_t j = 0; j < n; ++j) at(m, j) = -objective_[j];

  // Variable ids: 0..n-1 structural, n..n+m-1 slacks.
  std::vector<std::size_t> nonbasic(n);
  std::vector<std::size_t> basic(m);
  for (std::size_t j = 0; j < n; ++j) nonbasic[j] = j;
  for (std::size_t r = 0; r < m; ++r) basic[r] = n + r;

  const std::size_t max_pivots = 50 * (m + n) + 1000;
  std::size_t pivots = 0;
  std::size_t degenerate_run = 0;
  bool bland = false;

  while (true) {
    std::size_t enter = n;
    if (bland) {
      std::size_t best_id = std::numeric_limits<std::size_t>::max();
      for (std::size_t j = 0; j < n; ++j) {
        if (at(m, j) < -eps && nonbasic[j] < best_id) {
          best_id = nonbasic[j];
          enter = j;
        }
      }
    } else {
      double most = -eps;
      for (std::size_t j = 0; j < n; ++j) {
        if (at(m, j) < most) {
          most = at(m, j);
          enter = j;
        }
      }
    }
    if (enter == n) break;

    std::size_t leave = m;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      const double a = at(r, enter);
      if (a > eps) {
        const double ratio = at(r, n) / a;
        if (ratio < best_ratio - eps ||
            (std::abs(ratio - best_ratio) <= eps && leave < m && basic[r] < basic[leave])) {
          best_ratio = ratio;
          leave = r;
        }
      }
    }
    if (leave == m) throw NumericalError("simplex: problem is unbounded");

    degenerate_run = best_ratio <= eps ? degenerate_run + 1 : 0;
    if (degenerate_run > 50) bland = true;
    if (degenerate_run == 0) bland = false;

    const double p = at(leave, enter);
    for (std::size_t c = 0; c <= n; ++c) {
      if (c != enter) at(leave, c) /= p;
    }
    at(leave, enter) = 1.0 / p;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double factor = at(r, enter);
      if (factor == 0.0) continue;
      double* row = &t[r * width];
      const double* pivot_row = &t[leave * width];
      for (std::size_t c = 0; c <= n; ++c) {
        if (c != enter) row[c] -= factor * pivot_row[c];
      }
      row[enter] = -factor / p;
    }
    // Clean tiny negative right-hand sides produced by rounding.
    for (std::size_t r = 0; r < m; ++r) {
      if (at(r, n) < 0.0 && at(r, n) > -1e-11) at(r, n) = 0.0;
    }
    std::swap(basic[leave], nonbasic[enter]);
    if (++pivots > max_pivots) throw NumericalError("simplex: iteration limit reached");
  }

  Solution sol;
  sol.value = at(m, n);
  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (basic[r] < n) sol.x[basic[r]] = at(r, n);
  }
  sol.pivots = pivots;
  return sol;
}

}  // namespace filterstab
