#include <algorithm>
#include <cmath>
#include <limits>

#include "dhg/solvers.hpp"

namespace dhg {

SaddlePoint find_saddle(std::span<const double> a, int rows, int cols) {
  // maximin row and minimax column, lowest index on ties
  int best_row = 0;
  double maximin = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < rows; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (int j = 0; j < cols; ++j) m = std::min(m, a[static_cast<std::size_t>(i * cols + j)]);
    if (m > maximin) {
      maximin = m;
      best_row = i;
    }
  }
  int best_col = 0;
  double minimax = std::numeric_limits<double>::infinity();
  for (int j = 0; j < cols; ++j) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows; ++i) m = std::max(m, a[static_cast<std::size_t>(i * cols + j)]);
    if (m < minimax) {
      minimax = m;
      best_col = j;
    }
  }
  SaddlePoint sp;
  if (minimax - maximin <= 1e-12 * std::max(1.0, std::fabs(maximin))) {
    sp.found = true;
    sp.value = maximin;
    sp.row = best_row;
    sp.col = best_col;
  }
  return sp;
}

MatrixGameSolution solve_matrix_game(std::span<const double> payoff, int rows, int cols) {
  if (rows <= 0 || cols <= 0 || payoff.size() != static_cast<std::size_t>(rows * cols))
    throw std::invalid_argument("matrix game: bad dimensions");
  for (double v : payoff)
    if (!std::isfinite(v)) throw std::invalid_argument("matrix game: non-finite payoff");

  MatrixGameSolution sol;
  sol.row.assign(static_cast<std::size_t>(rows), 0.0);
  sol.col.assign(static_cast<std::size_t>(cols), 0.0);
  if (SaddlePoint sp = find_saddle(payoff, rows, cols); sp.found) {
    sol.value = sp.value;
    sol.row[static_cast<std::size_t>(sp.row)] = 1.0;
    sol.col[static_cast<std::size_t>(sp.col)] = 1.0;
    return sol;
  }

  // Shift to a strictly positive matrix A, then solve the column player's LP
  //   max sum(y)  s.t.  A y <= 1, y >= 0
  // with a dense tableau and Bland's rule. value(A) = 1 / sum(y); the row
  // strategy comes from the slack duals.
  const double shift = 1.0 - *std::min_element(payoff.begin(), payoff.end());
  const int m = rows, n = cols, width = n + m + 1;
  std::vector<double> t(static_cast<std::size_t>((m + 1) * width), 0.0);
  auto at = [&](int i, int j) -> double& { return t[static_cast<std::size_t>(i * width + j)]; };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) at(i, j) = payoff[static_cast<std::size_t>(i * n + j)] + shift;
    at(i, n + i) = 1.0;
    at(i, width - 1) = 1.0;
  }
  for (int j = 0; j < n; ++j) at(m, j) = 1.0;  // reduced costs
  std::vector<int> basis(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  const double eps = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    int enter = -1;
    for (int j = 0; j < n + m; ++j)
      if (at(m, j) > eps) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      double c = at(i, enter);
      if (c <= eps) continue;
      double r = at(i, width - 1) / c;
      if (r < best - 1e-15 || (std::fabs(r - best) <= 1e-15 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        best = r;
        leave = i;
      }
    }
    if (leave < 0) throw std::runtime_error("matrix game: unbounded LP");
    double piv = at(leave, enter);
    for (int j = 0; j < width; ++j) at(leave, j) /= piv;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      double f = at(i, enter);
      if (f == 0.0) continue;
      for (int j = 0; j < width; ++j) at(i, j) -= f * at(leave, j);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    int b = basis[static_cast<std::size_t>(i)];
    if (b < n) {
      sol.col[static_cast<std::size_t>(b)] = at(i, width - 1);
      total += at(i, width - 1);
    }
  }
  if (!(total > 0.0)) throw std::runtime_error("matrix game: degenerate LP solution");
  double dual_total = 0.0;
  for (int i = 0; i < m; ++i) {
    double u = std::max(0.0, -at(m, n + i));
    sol.row[static_cast<std::size_t>(i)] = u;
    dual_total += u;
  }
  for (auto& y : sol.col) y = std::max(0.0, y) / total;
  for (auto& x : sol.row) x /= dual_total;
  sol.value = 1.0 / total - shift;
  return sol;
}

}  // namespace dhg
