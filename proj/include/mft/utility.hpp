#pragma once

// Utilities of the form
//   U(x) = U0(x) - sum_k U_k(x) x^{-delta_k} + U_{N+1}(x) log x,
// with U_k >= 0 (k >= 1), inf U0 > -inf, sup U_k < inf and U_{N+1} bounded on (0, 1).
// Component bounds are declared metadata and are verified on a grid.

#include "mft/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace mft {

enum class UtilityKind { Log, Power, General };

class UtilitySpec {
 public:
  using Fn = std::function<double(double)>;

  struct PowerTerm {
    Fn weight;
    double delta = 1.0;
    double declared_sup = std::numeric_limits<double>::infinity();
  };

  UtilitySpec(std::string name, Fn u0, double u0_declared_inf, std::vector<PowerTerm> terms, Fn log_weight,
              double log_weight_declared_sup, UtilityKind kind = UtilityKind::General, double kind_param = 0.0)
      : name_(std::move(name)),
        u0_(std::move(u0)),
        u0_inf_(u0_declared_inf),
        terms_(std::move(terms)),
        log_weight_(std::move(log_weight)),
        log_sup_(log_weight_declared_sup),
        kind_(kind),
        kind_param_(kind_param) {
    for (const auto& t : terms_) {
      if (!(t.delta > 0.0) || !std::isfinite(t.delta)) throw std::invalid_argument("utility: delta_k must be in (0, inf)");
    }
  }

  const std::string& name() const { return name_; }
  UtilityKind kind() const { return kind_; }
  /// delta for UtilityKind::Power.
  double kind_param() const { return kind_param_; }

  const Fn& u0() const { return u0_; }
  const std::vector<PowerTerm>& terms() const { return terms_; }
  const Fn& log_weight() const { return log_weight_; }
  double u0_declared_inf() const { return u0_inf_; }
  double log_weight_declared_sup() const { return log_sup_; }

  double operator()(double x) const {
    if (!(x > 0.0)) {
      std::ostringstream os;
      os << "utility '" << name_ << "' evaluated at x = " << x << " (needs x > 0)";
      throw std::invalid_argument(os.str());
    }
    double u = u0_(x);
    for (const auto& t : terms_) {
      const double w = t.weight(x);
      if (w != 0.0) u -= w * std::pow(x, -t.delta);
    }
    const double lw = log_weight_(x);
    if (lw != 0.0) u += lw * std::log(x);
    return u;
  }

 private:
  std::string name_;
  Fn u0_;
  double u0_inf_;
  std::vector<PowerTerm> terms_;
  Fn log_weight_;
  double log_sup_;
  UtilityKind kind_;
  double kind_param_;
};

inline double eval_utility(const UtilitySpec& spec, double x) { return spec(x); }

namespace detail {
inline double zero_fn(double) { return 0.0; }
inline double one_fn(double) { return 1.0; }
}  // namespace detail

inline UtilitySpec log_utility() {
  return UtilitySpec("log", detail::zero_fn, 0.0, {}, detail::one_fn, 1.0, UtilityKind::Log);
}

/// U(x) = -x^{-delta}.
inline UtilitySpec power_utility(double delta) {
  std::ostringstream os;
  os << "power(" << delta << ")";
  return UtilitySpec(os.str(), detail::zero_fn, 0.0, {{detail::one_fn, delta, 1.0}}, detail::zero_fn, 0.0,
                     UtilityKind::Power, delta);
}

/// Bounded increasing U0(x) = min(sqrt(x), cap).
inline UtilitySpec capped_sqrt_utility(double cap = 10.0) {
  if (!(cap > 0.0)) throw std::invalid_argument("capped sqrt utility: cap must be > 0");
  std::ostringstream os;
  os << "capped-sqrt(" << cap << ")";
  return UtilitySpec(
      os.str(), [cap](double x) { return std::min(std::sqrt(x), cap); }, 0.0, {}, detail::zero_fn, 0.0);
}

/// U0 interpolating the breakpoints linearly, constant beyond the end points.
inline UtilitySpec piecewise_linear_utility(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() < 2 || xs.size() != ys.size()) {
    throw std::invalid_argument("piecewise-linear utility: need >= 2 matching breakpoints");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw std::invalid_argument("piecewise-linear utility: non-finite breakpoint");
    if (i > 0 && !(xs[i] > xs[i - 1])) throw std::invalid_argument("piecewise-linear utility: x must be strictly increasing");
  }
  const double inf = *std::min_element(ys.begin(), ys.end());
  auto fn = [xs = std::move(xs), ys = std::move(ys)](double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto j = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + w * (ys[j] - ys[j - 1]);
  };
  return UtilitySpec("piecewise-linear", std::move(fn), inf, {}, detail::zero_fn, 0.0);
}

/// The standard set: log, -x^{-delta} for delta in {0.5, 1, 2}, and min(sqrt x, 10).
inline std::vector<UtilitySpec> builtin_utilities() {
  return {log_utility(), power_utility(0.5), power_utility(1.0), power_utility(2.0), capped_sqrt_utility(10.0)};
}

/// U0 -> min(U0, K) and U_{N+1} -> min(U_{N+1}, K).
inline UtilitySpec cap_utility(const UtilitySpec& spec, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("cap_utility: K must be > 0");
  std::ostringstream os;
  os << spec.name() << "|cap=" << k;
  auto u0 = [f = spec.u0(), k](double x) { return std::min(f(x), k); };
  auto lw = [f = spec.log_weight(), k](double x) { return std::min(f(x), k); };
  UtilityKind kind = UtilityKind::General;
  if (spec.kind() == UtilityKind::Power || (spec.kind() == UtilityKind::Log && k >= 1.0)) kind = spec.kind();
  return UtilitySpec(os.str(), std::move(u0), std::min(spec.u0_declared_inf(), k), spec.terms(), std::move(lw),
                     std::min(spec.log_weight_declared_sup(), k), kind, spec.kind_param());
}

// ---------------------------------------------------------------------------

inline std::vector<double> log_spaced_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw std::invalid_argument("log_spaced_grid: need 0 < lo < hi, count >= 2");
  std::vector<double> g(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline std::vector<double> default_admissibility_grid() { return log_spaced_grid(1e-6, 1e6, 10000); }

struct AdmissibilityIssue {
  std::string check;
  double x = 0.0;      // first offending location
  double value = 0.0;  // value there
  std::size_t count = 0;
  std::string message;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityIssue> issues;
  std::vector<std::string> notes;

  bool passed() const { return issues.empty(); }
  bool has(const std::string& check) const {
    return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.check == check; });
  }
};

inline AdmissibilityReport check_admissible(const UtilitySpec& spec, const std::vector<double>& grid) {
  AdmissibilityReport rep;
  std::map<std::string, std::size_t> slot;
  auto flag = [&](const std::string& check, double x, double value, const std::string& msg) {
    auto [it, fresh] = slot.emplace(check, rep.issues.size());
    if (fresh) rep.issues.push_back({check, x, value, 0, msg});
    ++rep.issues[it->second].count;
  };

  if (grid.empty() || grid.front() > 1e-6 || grid.back() < 1e6) {
    flag("grid", grid.empty() ? 0.0 : grid.front(), 0.0, "diagnostic grid must span at least [1e-6, 1e6]");
  }
  if (!std::is_sorted(grid.begin(), grid.end())) flag("grid", 0.0, 0.0, "diagnostic grid must be increasing");

  if (!(spec.u0_declared_inf() > -std::numeric_limits<double>::infinity())) {
    flag("u0-inf", 0.0, spec.u0_declared_inf(), "inf U0 must be declared finite");
  }
  for (std::size_t k = 0; k < spec.terms().size(); ++k) {
    if (!std::isfinite(spec.terms()[k].declared_sup)) {
      flag("term-sup", 0.0, spec.terms()[k].declared_sup, "sup U_k must be declared finite");
    }
  }
  if (!std::isfinite(spec.log_weight_declared_sup())) {
    flag("log-weight-sup", 0.0, spec.log_weight_declared_sup(), "sup of U_{N+1} on (0,1) must be declared finite");
  }

  const double tol = 1e-12;
  double prev = -std::numeric_limits<double>::infinity();
  double prev_x = 0.0;
  for (double x : grid) {
    if (!(x > 0.0)) {
      flag("grid", x, 0.0, "grid points must be > 0");
      continue;
    }
    const double u0 = spec.u0()(x);
    if (!std::isfinite(u0)) flag("finite", x, u0, "U0 is not finite");
    if (u0 < spec.u0_declared_inf() - tol * std::max(1.0, std::abs(spec.u0_declared_inf()))) {
      flag("u0-inf", x, u0, "U0 falls below its declared infimum");
    }
    for (const auto& t : spec.terms()) {
      const double w = t.weight(x);
      if (!std::isfinite(w)) flag("finite", x, w, "U_k is not finite");
      if (w < 0.0) flag("sign", x, w, "U_k must be >= 0");
      if (w > t.declared_sup * (1.0 + tol)) flag("term-sup", x, w, "U_k exceeds its declared supremum");
    }
    const double lw = spec.log_weight()(x);
    if (!std::isfinite(lw)) flag("finite", x, lw, "U_{N+1} is not finite");
    if (lw < 0.0) flag("sign", x, lw, "U_{N+1} must be >= 0");
    if (x < 1.0 && lw > spec.log_weight_declared_sup() * (1.0 + tol)) {
      flag("log-weight-sup", x, lw, "U_{N+1} exceeds its declared supremum on (0,1)");
    }
    const double u = spec(x);
    if (std::isfinite(u) && std::isfinite(prev) && u < prev - tol * std::max(1.0, std::abs(prev))) {
      std::ostringstream os;
      os << "U decreases between x = " << prev_x << " and x = " << x;
      flag("monotone", x, u, os.str());
    }
    prev = u;
    prev_x = x;
  }

  // Growth of U0 above: informational only, the hypotheses do not bound U0 from above.
  if (grid.size() >= 3 && grid.back() > 1.0) {
    const double top = spec.u0()(grid.back());
    const double one = spec.u0()(1.0);
    if (std::isfinite(top) && top - one > 1e3 * std::max(1.0, std::abs(one))) {
      const std::size_t m = grid.size();
      const double x0 = grid[m - 3], x1 = grid[m - 2], x2 = grid[m - 1];
      const double s1 = (spec.u0()(x1) - spec.u0()(x0)) / (x1 - x0);
      const double s2 = (spec.u0()(x2) - spec.u0()(x1)) / (x2 - x1);
      std::ostringstream os;
      os << "U0 appears unbounded above (U0(" << grid.back() << ") = " << top << ")";
      if (s2 > s1) {
        os << "; U0 is convex at the top of the grid, so under bounded admissible strategies the "
              "mutual fund restriction can degenerate to the zero strategy";
      }
      rep.notes.push_back(os.str());
    }
  }
  return rep;
}

inline AdmissibilityReport check_admissible(const UtilitySpec& spec) {
  return check_admissible(spec, default_admissibility_grid());
}

}  // namespace mft
