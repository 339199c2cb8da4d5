#pragma once

// Self-financing discounted wealth in log space. With step coefficients the
// exponential solution is exact on every cell, so positivity is structural.

#include "mft/strategy.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

namespace mft {

struct SimulationResult {
  WealthPath wealth;
  StrategyTrace trace;
  std::vector<ProjectionCertificate> certificates;
};

/// Relative slack allowed when checking |pi| against the declared bound.
inline constexpr double kBoundSlack = 1e-9;

inline SimulationResult simulate_log_wealth(const CoefficientPath& coeffs, const BrownianPath& brownian,
                                            const Strategy& strategy, double x0) {
  if (!(x0 > 0.0) || !std::isfinite(x0)) throw std::invalid_argument("initial wealth must be finite and > 0");
  if (!(coeffs.grid() == brownian.grid())) throw std::invalid_argument("coefficient and Brownian grids differ");
  if (coeffs.dimension() != brownian.dimension()) {
    throw std::invalid_argument("coefficient and Brownian dimensions differ");
  }
  const TimeGrid& grid = coeffs.grid();
  const double dt = grid.dt();
  const double bound = strategy.bound(coeffs.bounds());
  const double limit = bound * (1.0 + kBoundSlack) + 1e-300;

  SimulationResult out{WealthPath{grid, x0, {}}, StrategyTrace{grid, {}}, {}};
  auto& y = out.wealth.log_wealth;
  y.reserve(grid.nodes());
  out.trace.pi.reserve(grid.steps());
  y.push_back(std::log(x0));

  auto policy = strategy.begin_path();
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    Vector pi = policy->decide(History(i, coeffs, brownian, std::span<const double>(y.data(), i + 1)));
    auto fail = [&](const char* what) {
      std::ostringstream os;
      os << "strategy '" << strategy.label() << "' " << what << " at node " << i << " (t=" << grid.time(i) << ")";
      throw InvariantError(os.str());
    };
    if (static_cast<std::size_t>(pi.size()) != coeffs.dimension()) fail("returned a vector of the wrong size");
    if (!pi.allFinite()) fail("returned non-finite proportions");
    const double norm = pi.norm();
    if (norm > limit) fail("exceeded its declared bound");
    if (norm > 0.0 && premium_vanishes(coeffs.node(i))) fail("traded while the risk premium is zero");
    y.push_back(y.back() + log_wealth_increment(pi, coeffs.node(i), dt, brownian.increment(i)));
    out.trace.pi.push_back(std::move(pi));
  }
  const auto certs = policy->certificates();
  out.certificates.assign(certs.begin(), certs.end());
  return out;
}

inline double discount_exponent(const CoefficientPath& coeffs) {
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs.grid().steps(); ++i) acc += coeffs.r(i);
  return acc * coeffs.grid().dt();
}

/// Undiscounted terminal wealth X(T) = exp(Y_M + sum r_i dt).
inline double undiscount(const WealthPath& wealth, const CoefficientPath& coeffs) {
  if (!(wealth.grid == coeffs.grid())) throw std::invalid_argument("undiscount: grid mismatch");
  return std::exp(wealth.terminal_log() + discount_exponent(coeffs));
}

/// One row per node: path,node,t,log_wealth,wealth,pi_1..pi_n (pi empty on the last node).
inline void write_wealth_header(std::ostream& os, std::size_t n) {
  os << "path,node,t,log_wealth,discounted_wealth";
  for (std::size_t k = 1; k <= n; ++k) os << ",pi_" << k;
  os << '\n';
}

inline void write_wealth_rows(std::ostream& os, std::size_t path, const WealthPath& w, const StrategyTrace& tr,
                              std::size_t n) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < w.log_wealth.size(); ++i) {
    os << path << ',' << i << ',' << w.grid.time(i) << ',' << w.log_wealth[i] << ',' << std::exp(w.log_wealth[i]);
    for (std::size_t k = 0; k < n; ++k) {
      os << ',';
      if (i < tr.pi.size()) os << tr.pi[i](static_cast<Eigen::Index>(k));
    }
    os << '\n';
  }
}

inline void write_certificate_header(std::ostream& os) {
  os << "path,node,nu,base_volatility,projected_volatility,drift_gap,base_norm,projected_norm\n";
}

inline void write_certificate_rows(std::ostream& os, std::size_t path, std::span<const ProjectionCertificate> certs) {
  os << std::setprecision(17);
  for (const auto& c : certs) {
    os << path << ',' << c.node << ',' << c.nu << ',' << c.base_volatility << ',' << c.projected_volatility << ','
       << c.drift_gap << ',' << c.base_norm << ',' << c.projected_norm << '\n';
  }
}

}  // namespace mft
