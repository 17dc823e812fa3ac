#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace filterstab {

/// maximize c.x subject to A x <= b, x >= 0, with b >= 0 so that the origin is
/// a feasible starting vertex. Rows are sparse; the tableau is dense.
class SimplexProblem {
 public:
  explicit SimplexProblem(std::size_t num_vars) : objective_(num_vars, 0.0) {}

  std::size_t num_vars() const noexcept { return objective_.size(); }
  std::size_t num_rows() const noexcept { return rows_.size(); }

  void set_objective(std::size_t var, double coeff) { objective_.at(var) = coeff; }
  /// Adds sum_k coeffs[k].second * x[coeffs[k].first] <= rhs; rhs must be >= 0.
  void add_row(std::vector<std::pair<std::size_t, double>> coeffs, double rhs);

  struct Solution {
    double value = 0.0;
    std::vector<double> x;
    std::size_t pivots = 0;
  };

  /// Dantzig pricing with a switch to Bland's rule after a run of degenerate
  /// pivots. Throws NumericalError when unbounded or out of iterations.
  Solution maximize() const;

 private:
  struct Row {
    std::vector<std::pair<std::size_t, double>> coeffs;
    double rhs;
  };
  std::vector<double> objective_;
  std::vector<Row> rows_;
};

}  // namespace filterstab
