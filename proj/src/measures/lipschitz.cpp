#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "filterstab/errors.hpp"
#include "filterstab/measures.hpp"
#include "filterstab/simplex.hpp"

namespace filterstab {

namespace {

// A piece of a concave piecewise-linear function on [-1, 1]. The effective
// slope is `slope + offset`, where the offset is shared by all pieces.
struct Piece {
  double length;
  double slope;
};

void trim_front(std::deque<Piece>& pieces, double amount) {
  while (amount > 0.0 && !pieces.empty()) {
    Piece& p = pieces.front();
    if (p.length <= amount) {
      amount -= p.length;
      pieces.pop_front();
    } else {
      p.length -= amount;
      amount = 0.0;
    }
  }
}

void trim_back(std::deque<Piece>& pieces, double amount) {
  while (amount > 0.0 && !pieces.empty()) {
    Piece& p = pieces.back();
    if (p.length <= amount) {
      amount -= p.length;
      pieces.pop_back();
    } else {
      p.length -= amount;
      amount = 0.0;
    }
  }
}

}  // namespace

double lipschitz_ball_sup_line(std::span<const double> xs, std::span<const double> weights) {
  if (xs.size() != weights.size()) throw std::invalid_argument("lipschitz_ball_sup_line: size mismatch");
  if (xs.empty()) throw std::invalid_argument("lipschitz_ball_sup_line: no points");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("lipschitz_ball_sup_line: points not increasing");
  }

  // Dynamic programme over sorted atoms: V_i(f) is the best partial objective
  // with f_i = f. V_i is concave piecewise linear; the Lipschitz window turns
  // into a plateau inserted at the argmax, adding w_i f shifts every slope.
  // `left` holds the pieces left of the argmax (front = the -1 end), `right`
  // the pieces to its right (front = adjacent to the argmax).
  std::deque<Piece> left{{1.0, 0.0}};
  std::deque<Piece> right{{1.0, 0.0}};
  double offset = 0.0;
  double best = 0.0;       // V at the argmax
  double left_len = 1.0;   // argmax position is -1 + left_len

  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) {
      const double g = std::min(xs[i] - xs[i - 1], 2.0);
      left.push_back({g, -offset});
      right.push_front({g, -offset});
      trim_front(left, g);
      trim_back(right, g);
    }
    offset += weights[i];
    best += weights[i] * (-1.0 + left_len);
    while (!left.empty() && left.back().slope + offset < 0.0) {
      const Piece p = left.back();
      left.pop_back();
      left_len -= p.length;
      best -= (p.slope + offset) * p.length;
      right.push_front(p);
    }
    while (!right.empty() && right.front().slope + offset > 0.0) {
      const Piece p = right.front();
      right.pop_front();
      left_len += p.length;
      best += (p.slope + offset) * p.length;
      left.push_back(p);
    }
  }
  return best;
}

double lipschitz_ball_sup_dense(std::span<const Point> points, std::span<const double> weights) {
  const std::size_t n = points.size();
  if (n != weights.size()) throw std::invalid_argument("lipschitz_ball_sup_dense: size mismatch");
  if (n == 0) throw std::invalid_argument("lipschitz_ball_sup_dense: no points");

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (points[i] - points[j]).norm();
      if (!(d > 0.0)) throw std::invalid_argument("lipschitz_ball_sup_dense: repeated point");
      dist[i * n + j] = dist[j * n + i] = d;
    }
  }

  // Shifted variables g_i = f_i + 1 in [0, 2] make the origin feasible.
  SimplexProblem lp(n);
  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lp.set_objective(i, weights[i]);
    shift += weights[i];
    lp.add_row({{i, 1.0}}, 2.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dij = dist[i * n + j];
      if (dij >= 2.0) continue;  // implied by the box
      bool implied = false;
      for (std::size_t k = 0; k < n && !implied; ++k) {
        if (k == i || k == j) continue;
        implied = dist[i * n + k] + dist[k * n + j] <= dij;
      }
      if (!implied) lp.add_row({{i, 1.0}, {j, -1.0}}, dij);
    }
  }
  return lp.maximize().value - shift;
}

double lipschitz_ball_sup(std::span<const Point> points, std::span<const double> weights, BlMethod method) {
  if (points.empty()) throw std::invalid_argument("lipschitz_ball_sup: no points");
  const auto dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw DimensionError("lipschitz_ball_sup: mixed dimensions");
  }
  if (method == BlMethod::automatic) method = dim == 1 ? BlMethod::line : BlMethod::dense_lp;
  if (method == BlMethod::dense_lp) return lipschitz_ball_sup_dense(points, weights);
  if (dim != 1) throw DimensionError("lipschitz_ball_sup: line method needs d = 1");

  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a][0] < points[b][0]; });
  std::vector<double> xs(order.size());
  std::vector<double> ws(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    xs[k] = points[order[k]][0];
    ws[k] = weights[order[k]];
  }
  return lipschitz_ball_sup_line(xs, ws);
}

double bl_distance(const DiscreteMeasure& a, const DiscreteMeasure& b, BlMethod method) {
  if (a.dim() != b.dim()) throw DimensionError("bl_distance: dimension mismatch");
  // Merge the two canonical (lexicographically sorted) supports.
  std::vector<Point> points;
  std::vector<double> w;
  points.reserve(a.size() + b.size());
  w.reserve(a.size() + b.size());
  auto less = [](const Point& x, const Point& y) {
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
  };
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && less(a.atoms()[i], b.atoms()[j]))) {
      points.push_back(a.atoms()[i]);
      w.push_back(a.weights()[i++]);
    } else if (i == a.size() || less(b.atoms()[j], a.atoms()[i])) {
      points.push_back(b.atoms()[j]);
      w.push_back(-b.weights()[j++]);
    } else {
      points.push_back(a.atoms()[i]);
      w.push_back(a.weights()[i++] - b.weights()[j++]);
    }
  }
  if (method == BlMethod::automatic) method = a.dim() == 1 ? BlMethod::line : BlMethod::dense_lp;
  double value = 0.0;
  if (method == BlMethod::line) {
    if (a.dim() != 1) throw DimensionError("bl_distance: line method needs d = 1");
    std::vector<double> xs(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) xs[k] = points[k][0];
    value = lipschitz_ball_sup_line(xs, w);
  } else {
    value = lipschitz_ball_sup_dense(points, w);
  }
  return std::clamp(value, 0.0, 2.0);
}

}  // namespace filterstab
