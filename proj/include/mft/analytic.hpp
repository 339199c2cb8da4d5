#pragma once

// Closed-form oracles for deterministic coefficients and deterministic-in-time
// strategies. Then Y(T) = log X~(T) is Gaussian with
//   m = log X0 + sum_i (pi_i^T a~_i - |pi_i^T sigma_i|^2 / 2) dt,
//   v = sum_i |pi_i^T sigma_i|^2 dt.

#include "mft/model.hpp"
#include "mft/utility.hpp"
#include "mft/wealth.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <numbers>

namespace mft {

struct GaussianMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline GaussianMoments gaussian_log_wealth_moments(const CoefficientPath& coeffs, const StrategyTrace& trace,
                                                   double x0) {
  if (!(x0 > 0.0)) throw std::invalid_argument("initial wealth must be > 0");
  if (!(coeffs.grid() == trace.grid) || trace.pi.size() != coeffs.grid().steps()) {
    throw std::invalid_argument("gaussian_log_wealth_moments: trace does not match the coefficient grid");
  }
  const double dt = coeffs.grid().dt();
  double drift = 0.0, var = 0.0;
  for (std::size_t i = 0; i < trace.pi.size(); ++i) {
    const auto& m = coeffs.node(i);
    const double q = (m.sigma.transpose() * trace.pi[i]).squaredNorm();
    drift += trace.pi[i].dot(m.a_tilde) - 0.5 * q;
    var += q;
  }
  return {std::log(x0) + drift * dt, var * dt};
}

/// Moments for a deterministic model and a deterministic-in-time strategy;
/// throws InvariantError for random inputs.
inline GaussianMoments gaussian_log_wealth_moments(const CoefficientModel& model, const Strategy& strategy,
                                                   const TimeGrid& grid, double x0) {
  if (!model.is_deterministic() || !strategy.deterministic_in_time()) {
    throw InvariantError("Gaussian oracle needs deterministic coefficients and a deterministic-in-time strategy");
  }
  const auto coeffs = model.sample(grid, 0);
  const BrownianPath still(grid, Matrix::Zero(static_cast<Eigen::Index>(coeffs.dimension()),
                                              static_cast<Eigen::Index>(grid.steps())));
  const auto sim = simulate_log_wealth(coeffs, still, strategy, x0);
  return gaussian_log_wealth_moments(coeffs, sim.trace, x0);
}

struct GaussianExpectation {
  double value = 0.0;
  double quadrature_error = 0.0;  // |I(P) - I(P/2)|; 0 for closed forms
  double tail_bound = 0.0;        // mass outside +-10 sd times the utility there
};

/// E U(exp(Y)), Y ~ N(m, v). Closed forms for log and power utilities, composite
/// Gauss-Legendre quadrature in the standardized variable otherwise.
inline GaussianExpectation expected_utility_gaussian(const UtilitySpec& spec, double m, double v,
                                                     std::size_t panels = 4096) {
  if (!(v >= 0.0) || !std::isfinite(m) || !std::isfinite(v)) {
    throw std::invalid_argument("expected_utility_gaussian: need finite m and v >= 0");
  }
  if (spec.kind() == UtilityKind::Log) return {m, 0.0, 0.0};
  if (spec.kind() == UtilityKind::Power) {
    const double d = spec.kind_param();
    return {-std::exp(-d * m + 0.5 * d * d * v), 0.0, 0.0};
  }
  if (v == 0.0) return {spec(std::exp(m)), 0.0, 0.0};
  if (panels < 2) throw std::invalid_argument("expected_utility_gaussian: need >= 2 panels");

  const double sd = std::sqrt(v);
  const double width = 10.0;
  auto integrand = [&](double z) {
    return spec(std::exp(m + sd * z)) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  auto composite = [&](std::size_t p) {
    const double h = 2.0 * width / static_cast<double>(p);
    double acc = 0.0, comp = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double a = -width + h * static_cast<double>(j);
      const double term = boost::math::quadrature::gauss<double, 20>::integrate(integrand, a, a + h);
      // Neumaier summation
      const double t = acc + term;
      comp += std::abs(acc) >= std::abs(term) ? (acc - t) + term : (term - t) + acc;
      acc = t;
    }
    return acc + comp;
  };
  const double fine = composite(panels);
  const double coarse = composite(panels / 2);
  GaussianExpectation out;
  out.value = fine;
  out.quadrature_error = std::abs(fine - coarse);
  const double tail_mass = std::erfc(width / std::sqrt(2.0));
  out.tail_bound = tail_mass * (std::abs(spec(std::exp(m - width * sd))) + std::abs(spec(std::exp(m + width * sd))));
  if (!std::isfinite(out.value) || out.quadrature_error > 1e-6 * std::max(1.0, std::abs(out.value))) {
    throw NumericError("expected_utility_gaussian: quadrature did not converge for '" + spec.name() + "'");
  }
  return out;
}

}  // namespace mft
