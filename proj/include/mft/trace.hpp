#pragma once

#include "mft/market.hpp"

#include <cmath>
#include <vector>

namespace mft {

/// Portfolio proportions chosen at each node; entry i applies on [t_i, t_{i+1}).
struct StrategyTrace {
  TimeGrid grid;
  std::vector<Vector> pi;

  double sup_norm() const {
    double s = 0.0;
    for (const auto& p : pi) s = std::max(s, p.norm());
    return s;
  }
};

/// Log discounted wealth Y_i = log X~(t_i) at every node.
struct WealthPath {
  TimeGrid grid;
  double initial_wealth = 1.0;
  std::vector<double> log_wealth;

  double terminal_log() const { return log_wealth.back(); }
  double terminal() const { return std::exp(log_wealth.back()); }
};

}  // namespace mft
