#pragma once

// Monte Carlo estimation of J(pi) = E U(X~(T)) with per-path seed streams.
//
// Path k draws its coefficients from derive_seed(seed, "coeff", k) and its
// Brownian increments from derive_seed(seed, "brownian", k). Per-path results
// are stored by index and reduced in index order, so estimates are identical
// for every thread count.

#include "mft/analytic.hpp"
#include "mft/model.hpp"
#include "mft/projection.hpp"
#include "mft/smoothing.hpp"
#include "mft/utility.hpp"
#include "mft/wealth.hpp"

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

namespace mft {

struct RunOptions {
  std::size_t paths = 10000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  std::string label;
};

struct PairedComparison {
  std::string label;
  std::vector<double> differences;  // U(projected) - U(base), per path
  double mean_difference = 0.0;
  double std_error = 0.0;
  double fraction_nonnegative = 0.0;
  MCEstimate base;
  MCEstimate projected;
};

inline std::uint64_t coefficient_seed(std::uint64_t master, std::size_t path) {
  return derive_seed(master, "coeff", path);
}
inline std::uint64_t brownian_seed(std::uint64_t master, std::size_t path) {
  return derive_seed(master, "brownian", path);
}

/// Runs body(k) for k in [0, count) on up to `threads` threads. If any call
/// throws, the exception of the lowest failing index is rethrown.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t lo = count * t / threads, hi = count * (t + 1) / threads;
      for (std::size_t k = lo; k < hi; ++k) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (k < failed_at) {
            failed_at = k;
            failure = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// Neumaier-compensated sum in index order.
inline double stable_sum(const std::vector<double>& xs) {
  double acc = 0.0, comp = 0.0;
  for (double x : xs) {
    const double t = acc + x;
    comp += std::abs(acc) >= std::abs(x) ? (acc - t) + x : (x - t) + acc;
    acc = t;
  }
  return acc + comp;
}

inline MCEstimate summarize(const std::vector<double>& values, std::uint64_t seed, std::string label) {
  if (values.size() < 2) throw std::invalid_argument("Monte Carlo estimate needs at least 2 paths");
  const double n = static_cast<double>(values.size());
  const double mean = stable_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) sq[k] = (values[k] - mean) * (values[k] - mean);
  const double var = stable_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n), values.size(), seed, std::move(label)};
}

namespace detail {

inline void check_options(const RunOptions& opt) {
  if (opt.paths < 2) throw std::invalid_argument("paths must be >= 2");
}

inline double checked_utility(const UtilitySpec& spec, double log_wealth, std::size_t path, std::uint64_t seed) {
  const double x = std::exp(log_wealth);
  const double u = x > 0.0 && std::isfinite(x) ? spec(x) : std::numeric_limits<double>::quiet_NaN();
  if (!std::isfinite(u)) {
    std::ostringstream os;
    os << "utility '" << spec.name() << "' is not finite on path " << path << " (coefficient seed "
       << coefficient_seed(seed, path) << ", Brownian seed " << brownian_seed(seed, path) << ", log wealth "
       << log_wealth << ")";
    throw NumericError(os.str());
  }
  return u;
}

}  // namespace detail

/// Terminal log discounted wealth of every path.
inline std::vector<double> terminal_log_wealths(const CoefficientModel& model, const Strategy& strategy,
                                                const TimeGrid& grid, double x0, const RunOptions& opt) {
  detail::check_options(opt);
  std::vector<double> out(opt.paths);
  parallel_for(opt.paths, opt.threads, [&](std::size_t k) {
    const auto coeffs = model.sample(grid, coefficient_seed(opt.seed, k));
    const auto bm = sample_brownian(grid, brownian_seed(opt.seed, k), model.dimension());
    out[k] = simulate_log_wealth(coeffs, bm, strategy, x0).wealth.terminal_log();
  });
  return out;
}

inline std::vector<MCEstimate> expected_utilities(const CoefficientModel& model, const Strategy& strategy,
                                                  const std::vector<UtilitySpec>& specs, double x0,
                                                  const TimeGrid& grid, const RunOptions& opt) {
  const auto ys = terminal_log_wealths(model, strategy, grid, x0, opt);
  std::vector<MCEstimate> out;
  for (const auto& spec : specs) {
    std::vector<double> u(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) u[k] = detail::checked_utility(spec, ys[k], k, opt.seed);
    out.push_back(summarize(u, opt.seed, strategy.label() + "|" + spec.name()));
  }
  return out;
}

inline MCEstimate expected_utility(const CoefficientModel& model, const Strategy& strategy, const UtilitySpec& spec,
                                   double x0, const TimeGrid& grid, const RunOptions& opt) {
  return expected_utilities(model, strategy, {spec}, x0, grid, opt).front();
}

/// Both strategies on identical coefficient and Brownian draws, one comparison per utility.
inline std::vector<PairedComparison> paired_compare(const CoefficientModel& model, const Strategy& base,
                                                    const Strategy& projected, const std::vector<UtilitySpec>& specs,
                                                    double x0, const TimeGrid& grid, const RunOptions& opt) {
  detail::check_options(opt);
  std::vector<double> yb(opt.paths), yp(opt.paths);
  parallel_for(opt.paths, opt.threads, [&](std::size_t k) {
    const auto coeffs = model.sample(grid, coefficient_seed(opt.seed, k));
    const auto bm = sample_brownian(grid, brownian_seed(opt.seed, k), model.dimension());
    yb[k] = simulate_log_wealth(coeffs, bm, base, x0).wealth.terminal_log();
    yp[k] = simulate_log_wealth(coeffs, bm, projected, x0).wealth.terminal_log();
  });
  std::vector<PairedComparison> out;
  for (const auto& spec : specs) {
    std::vector<double> ub(opt.paths), up(opt.paths), d(opt.paths);
    std::size_t nonneg = 0;
    for (std::size_t k = 0; k < opt.paths; ++k) {
      ub[k] = detail::checked_utility(spec, yb[k], k, opt.seed);
      up[k] = detail::checked_utility(spec, yp[k], k, opt.seed);
      d[k] = up[k] - ub[k];
      nonneg += d[k] >= 0.0 ? 1 : 0;
    }
    PairedComparison pc;
    pc.label = base.label() + "|" + spec.name();
    pc.base = summarize(ub, opt.seed, base.label() + "|" + spec.name());
    pc.projected = summarize(up, opt.seed, projected.label() + "|" + spec.name());
    const auto diff = summarize(d, opt.seed, pc.label);
    pc.mean_difference = diff.mean;
    pc.std_error = diff.std_error;
    pc.fraction_nonnegative = static_cast<double>(nonneg) / static_cast<double>(opt.paths);
    pc.differences = std::move(d);
    out.push_back(std::move(pc));
  }
  return out;
}

inline PairedComparison paired_compare(const CoefficientModel& model, const Strategy& base, const Strategy& projected,
                                       const UtilitySpec& spec, double x0, const TimeGrid& grid,
                                       const RunOptions& opt) {
  return paired_compare(model, base, projected, std::vector<UtilitySpec>{spec}, x0, grid, opt).front();
}

/// max_x (F_a(x) - F_b(x)) over all sample points, with F the empirical CDFs.
/// A value <= 0 means the sample a first-order dominates the sample b.
inline double cdf_dominance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("cdf_dominance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double worst = -std::numeric_limits<double>::infinity();
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    worst = std::max(worst, static_cast<double>(i) / na - static_cast<double>(j) / nb);
  }
  return worst;
}

/// Dvoretzky-Kiefer-Wolfowitz half-width: P(sup|F_n - F| > band) <= alpha.
inline double dkw_band(std::size_t n, double alpha) {
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

/// Tolerance for cdf_dominance of two independent samples of size n at level alpha
/// (each ECDF within its band at level alpha / 2).
inline double two_sample_dkw_tolerance(std::size_t n, double alpha) {
  return 2.0 * dkw_band(n, alpha / 2.0);
}

/// J(constant_nu_strategy(nu)) for every nu in the grid, all on the same seeds.
inline std::vector<MCEstimate> sweep_nu(const CoefficientModel& model, const std::vector<double>& nu_grid,
                                        const UtilitySpec& spec, double x0, const TimeGrid& grid,
                                        const RunOptions& opt) {
  std::vector<MCEstimate> out;
  for (double nu : nu_grid) {
    if (!std::isfinite(nu)) throw std::invalid_argument("sweep_nu: non-finite nu");
    out.push_back(expected_utility(model, *constant_nu_strategy(nu), spec, x0, grid, opt));
  }
  return out;
}

struct ConvergenceRow {
  double eps = 0.0;
  std::string utility;
  MCEstimate averaged;  // J_eps(pi_eps)
  MCEstimate original;  // J(pi)
  double abs_difference = 0.0;
  double difference_std_error = 0.0;
};

/// For each eps: the base strategy's trace is eps-averaged and replayed on the
/// eps-averaged market with the same Brownian increments.
inline std::vector<ConvergenceRow> convergence_experiment(const CoefficientModel& model, const Strategy& base,
                                                          const std::vector<UtilitySpec>& specs,
                                                          const std::vector<double>& eps_list, double x0,
                                                          const TimeGrid& grid, const RunOptions& opt) {
  detail::check_options(opt);
  if (eps_list.empty()) throw std::invalid_argument("convergence_experiment: empty eps list");
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    grid.steps_in(eps_list[e]);
    if (e > 0 && !(eps_list[e] < eps_list[e - 1])) {
      throw std::invalid_argument("convergence_experiment: eps list must be decreasing");
    }
  }
  std::vector<double> y(opt.paths);
  std::vector<std::vector<double>> ye(eps_list.size(), std::vector<double>(opt.paths));
  parallel_for(opt.paths, opt.threads, [&](std::size_t k) {
    const auto coeffs = model.sample(grid, coefficient_seed(opt.seed, k));
    const auto bm = sample_brownian(grid, brownian_seed(opt.seed, k), model.dimension());
    const auto sim = simulate_log_wealth(coeffs, bm, base, x0);
    y[k] = sim.wealth.terminal_log();
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      const auto avg_coeffs = epsilon_average(coeffs, eps_list[e], model.condition_bound());
      const auto avg_pi = trace_strategy(average_strategy_trace(sim.trace, eps_list[e]));
      ye[e][k] = simulate_log_wealth(avg_coeffs, bm, *avg_pi, x0).wealth.terminal_log();
    }
  });
  std::vector<ConvergenceRow> out;
  for (const auto& spec : specs) {
    std::vector<double> u(opt.paths);
    for (std::size_t k = 0; k < opt.paths; ++k) u[k] = detail::checked_utility(spec, y[k], k, opt.seed);
    const auto original = summarize(u, opt.seed, base.label() + "|" + spec.name());
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      std::vector<double> ue(opt.paths), d(opt.paths);
      for (std::size_t k = 0; k < opt.paths; ++k) {
        ue[k] = detail::checked_utility(spec, ye[e][k], k, opt.seed);
        d[k] = ue[k] - u[k];
      }
      ConvergenceRow row;
      row.eps = eps_list[e];
      row.utility = spec.name();
      row.averaged = summarize(ue, opt.seed, base.label() + "|eps|" + spec.name());
      row.original = original;
      const auto diff = summarize(d, opt.seed, "difference");
      row.abs_difference = std::abs(diff.mean);
      row.difference_std_error = diff.std_error;
      out.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace mft
