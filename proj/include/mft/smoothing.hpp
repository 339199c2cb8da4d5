#pragma once

// Lagged moving averages and knot-freezing of coefficient paths.
//
// The averaged value at time t is the mean of the raw path over the window
// [t - 2 eps, t - eps], with the raw path extended to negative times by its
// value at 0. Every averaged value therefore depends only on raw data at
// times <= t - eps.

#include "mft/market.hpp"
#include "mft/trace.hpp"

#include <algorithm>
#include <sstream>

namespace mft {

namespace detail {

/// Cells [first, first + width) of the lagged window for node i, clamped at cell 0.
inline std::vector<std::size_t> lag_window(std::size_t i, std::size_t width) {
  std::vector<std::size_t> cells(width);
  for (std::size_t j = 0; j < width; ++j) {
    const auto offset = static_cast<long long>(i) - 2 * static_cast<long long>(width) +
                        static_cast<long long>(j);
    cells[j] = offset < 0 ? 0 : static_cast<std::size_t>(offset);
  }
  return cells;
}

}  // namespace detail

inline CoefficientPath epsilon_average(const CoefficientPath& path, double eps,
                                       double condition_bound = kDefaultConditionBound) {
  const TimeGrid& grid = path.grid();
  const std::size_t width = grid.steps_in(eps);
  std::vector<NodePtr> out;
  out.reserve(grid.nodes());
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const auto cells = detail::lag_window(i, width);
    const NodePtr& first = path.node_ptr(cells.front());
    const bool uniform = std::all_of(cells.begin(), cells.end(),
                                     [&](std::size_t c) { return path.node_ptr(c) == first; });
    if (uniform) {
      out.push_back(first);
      continue;
    }
    double r = 0.0;
    Vector a = Vector::Zero(first->a.size());
    Matrix sigma = Matrix::Zero(first->sigma.rows(), first->sigma.cols());
    for (std::size_t c : cells) {
      r += path.r(c);
      a += path.a(c);
      sigma += path.sigma(c);
    }
    const double w = static_cast<double>(width);
    try {
      out.push_back(MarketNode::make(r / w, a / w, sigma / w, condition_bound));
    } catch (const InvariantError& e) {
      std::ostringstream os;
      os << "averaged coefficients invalid at node " << i << " (t=" << grid.time(i) << "): " << e.what();
      throw InvariantError(os.str());
    }
  }
  return CoefficientPath(grid, std::move(out));
}

/// Same lagged window applied to a strategy trace.
inline StrategyTrace average_strategy_trace(const StrategyTrace& trace, double eps) {
  const std::size_t width = trace.grid.steps_in(eps);
  StrategyTrace out{trace.grid, {}};
  out.pi.reserve(trace.pi.size());
  for (std::size_t i = 0; i < trace.pi.size(); ++i) {
    const auto cells = detail::lag_window(i, width);
    const Vector& first = trace.pi.at(cells.front());
    const bool uniform = std::all_of(cells.begin(), cells.end(),
                                     [&](std::size_t c) { return trace.pi.at(c) == first; });
    if (uniform) {
      out.pi.push_back(first);
      continue;
    }
    Vector acc = Vector::Zero(first.size());
    for (std::size_t c : cells) acc += trace.pi.at(c);
    out.pi.push_back(acc / static_cast<double>(width));
  }
  return out;
}

/// Holds the coefficients constant between consecutive knots.
/// Knots are times on the grid with 0 = t_0 < ... < t_N = T.
inline CoefficientPath freeze_on_grid(const CoefficientPath& path, const std::vector<double>& knots) {
  const TimeGrid& grid = path.grid();
  if (knots.size() < 2) throw std::invalid_argument("freeze_on_grid: need at least the knots 0 and T");
  std::vector<std::size_t> idx;
  idx.reserve(knots.size());
  for (double t : knots) idx.push_back(grid.node_of(t));
  if (idx.front() != 0 || idx.back() != grid.steps()) {
    throw std::invalid_argument("freeze_on_grid: knots must start at 0 and end at T");
  }
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (idx[k] <= idx[k - 1]) throw std::invalid_argument("freeze_on_grid: knots must be strictly increasing");
  }
  std::vector<NodePtr> out(grid.nodes());
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    for (std::size_t i = idx[k]; i < idx[k + 1]; ++i) out[i] = path.node_ptr(idx[k]);
  }
  out[grid.steps()] = path.node_ptr(grid.steps());
  return CoefficientPath(grid, std::move(out));
}

}  // namespace mft
