#pragma once

// Portfolio strategies. A Strategy is an immutable description; each simulated
// path obtains its own PathPolicy from begin_path(), which may keep per-path
// state. Policies only see the observable history up to the current node.

#include "mft/market.hpp"
#include "mft/trace.hpp"

#include <bit>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>

namespace mft {

inline bool premium_vanishes(const MarketNode& node) {
  return node.theta.norm() < kZeroPremiumThreshold;
}

/// Observable data at node i: coefficients at nodes <= i, Brownian increments
/// on cells < i (so w(t_0..t_i)) and the strategy's own log wealth Y_0..Y_i.
/// Access to the future throws std::out_of_range.
class History {
 public:
  History(std::size_t node, const CoefficientPath& coeffs, const BrownianPath& brownian,
          std::span<const double> log_wealth)
      : node_(node), coeffs_(&coeffs), brownian_(&brownian), log_wealth_(log_wealth) {
    if (log_wealth_.size() != node + 1) throw std::invalid_argument("History: wealth history must end at the node");
  }

  std::size_t node() const { return node_; }
  const TimeGrid& grid() const { return coeffs_->grid(); }
  std::size_t dimension() const { return coeffs_->dimension(); }
  double time() const { return grid().time(node_); }

  const MarketNode& market(std::size_t j) const {
    if (j > node_) throw std::out_of_range("History: coefficient access beyond the current node");
    return coeffs_->node(j);
  }
  const MarketNode& current() const { return coeffs_->node(node_); }

  /// Increment on cell j, observable once node j + 1 is reached.
  Eigen::VectorXd increment(std::size_t j) const {
    if (j >= node_) throw std::out_of_range("History: Brownian increment not yet observable");
    return brownian_->increment(j);
  }

  std::span<const double> log_wealth() const { return log_wealth_; }
  double current_log_wealth() const { return log_wealth_.back(); }

  /// Same observables with a different wealth history.
  History with_wealth(std::span<const double> log_wealth) const {
    return History(node_, *coeffs_, *brownian_, log_wealth);
  }

 private:
  std::size_t node_;
  const CoefficientPath* coeffs_;
  const BrownianPath* brownian_;
  std::span<const double> log_wealth_;
};

struct ProjectionCertificate {
  std::size_t node = 0;
  double base_volatility = 0.0;       // |pi^T sigma|
  double projected_volatility = 0.0;  // |pi_hat^T sigma|
  double drift_gap = 0.0;             // pi_hat^T a~ - pi^T a~
  double nu = 0.0;
  double base_norm = 0.0;       // |pi|
  double projected_norm = 0.0;  // |pi_hat|
};

class PathPolicy {
 public:
  virtual ~PathPolicy() = default;
  virtual Vector decide(const History& h) = 0;
  /// Projection certificates recorded so far on this path (lifted strategies only).
  virtual std::span<const ProjectionCertificate> certificates() const { return {}; }
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::unique_ptr<PathPolicy> begin_path() const = 0;
  /// Declared sup |pi| for a market with the given suprema.
  virtual double bound(const MarketBounds& market) const = 0;
  virtual std::string label() const = 0;
  /// True if pi_i depends only on the node and the coefficients (no Brownian or wealth feedback).
  virtual bool deterministic_in_time() const { return false; }
};

using StrategyPtr = std::shared_ptr<const Strategy>;

// ---------------------------------------------------------------------------

namespace detail {

template <class Fn>
class StatelessPolicy final : public PathPolicy {
 public:
  explicit StatelessPolicy(const Fn* fn) : fn_(fn) {}
  Vector decide(const History& h) override { return (*fn_)(h); }

 private:
  const Fn* fn_;
};

}  // namespace detail

/// Strategy given by a pure rule of the observable history.
class RuleStrategy : public Strategy {
 public:
  using Rule = std::function<Vector(const History&)>;

  RuleStrategy(std::string label, double bound, Rule rule, bool deterministic = false)
      : label_(std::move(label)), bound_(bound), rule_(std::move(rule)), deterministic_(deterministic) {}

  std::unique_ptr<PathPolicy> begin_path() const override {
    return std::make_unique<detail::StatelessPolicy<Rule>>(&rule_);
  }
  double bound(const MarketBounds&) const override { return bound_; }
  std::string label() const override { return label_; }
  bool deterministic_in_time() const override { return deterministic_; }

 private:
  std::string label_;
  double bound_;
  Rule rule_;
  bool deterministic_;
};

inline StrategyPtr zero_strategy() {
  return std::make_shared<RuleStrategy>(
      "zero", 0.0, [](const History& h) { return Vector::Zero(static_cast<Eigen::Index>(h.dimension())); },
      true);
}

/// Fixed proportions (zero wherever the risk premium vanishes).
inline StrategyPtr constant_strategy(Vector pi, std::string label = "constant") {
  if (!pi.allFinite()) throw std::invalid_argument("constant strategy: non-finite proportions");
  const double bound = pi.norm();
  return std::make_shared<RuleStrategy>(
      std::move(label), bound,
      [pi = std::move(pi)](const History& h) -> Vector {
        if (static_cast<std::size_t>(pi.size()) != h.dimension()) {
          throw std::invalid_argument("constant strategy: dimension does not match the market");
        }
        if (premium_vanishes(h.current())) return Vector::Zero(pi.size());
        return pi;
      },
      true);
}

/// Scales the base weights up after losses and down after gains:
/// pi = w (1 + kappa tanh(-(Y_i - Y_0) / scale)).
inline StrategyPtr contrarian_strategy(Vector weights, double kappa, double scale,
                                       std::string label = "contrarian") {
  if (!(scale > 0.0)) throw std::invalid_argument("contrarian strategy: scale must be > 0");
  const double bound = weights.norm() * (1.0 + std::abs(kappa));
  return std::make_shared<RuleStrategy>(
      std::move(label), bound,
      [w = std::move(weights), kappa, scale](const History& h) -> Vector {
        if (premium_vanishes(h.current())) return Vector::Zero(w.size());
        const double move = h.current_log_wealth() - h.log_wealth().front();
        return w * (1.0 + kappa * std::tanh(-move / scale));
      });
}

/// Bounded proportions drawn uniformly from the ball of the given radius by
/// hashing the node index and the most recent observed Brownian increment.
inline StrategyPtr randomized_strategy(double radius, std::uint64_t salt, std::string label = "randomized") {
  if (!(radius >= 0.0)) throw std::invalid_argument("randomized strategy: radius must be >= 0");
  return std::make_shared<RuleStrategy>(std::move(label), radius, [radius, salt](const History& h) -> Vector {
    const auto n = static_cast<Eigen::Index>(h.dimension());
    if (premium_vanishes(h.current())) return Vector::Zero(n);
    std::uint64_t key = splitmix64(salt ^ splitmix64(h.node()));
    if (h.node() > 0) {
      const Vector dw = h.increment(h.node() - 1);
      for (Eigen::Index k = 0; k < dw.size(); ++k) key = splitmix64(key ^ std::bit_cast<std::uint64_t>(dw(k)));
    }
    Engine eng(key);
    Vector dir(n);
    standard_normals(eng, dir.data(), static_cast<std::size_t>(n));
    const double len = dir.norm();
    if (len == 0.0) return Vector::Zero(n);
    const double radial = radius * std::pow(uniform01(eng), 1.0 / static_cast<double>(n));
    return dir * (radial / len);
  });
}

/// Replays a recorded trace; proportions are zeroed where the premium vanishes.
inline StrategyPtr trace_strategy(StrategyTrace trace, std::string label = "trace") {
  const double bound = trace.sup_norm();
  auto shared = std::make_shared<const StrategyTrace>(std::move(trace));
  return std::make_shared<RuleStrategy>(
      std::move(label), bound,
      [shared](const History& h) -> Vector {
        if (!(shared->grid == h.grid())) throw std::invalid_argument("trace strategy: grid mismatch");
        const Vector& p = shared->pi.at(h.node());
        if (static_cast<std::size_t>(p.size()) != h.dimension()) {
          throw std::invalid_argument("trace strategy: dimension does not match the market");
        }
        if (premium_vanishes(h.current())) return Vector::Zero(p.size());
        return p;
      },
      true);
}

// ---------------------------------------------------------------------------
// Mutual fund strategies: pi^T = nu theta^T sigma^{-1}.

/// sigma^{-T} theta, i.e. the proportions of the nu = 1 fund at this node.
inline Vector fund_direction(const MarketNode& node) {
  return node.lu.transpose().solve(node.theta);
}

class MutualFundStrategy : public Strategy {
 public:
  using NuRule = std::function<double(const History&)>;

  MutualFundStrategy(std::string label, double nu_bound, NuRule nu, bool deterministic = false)
      : label_(std::move(label)), nu_bound_(nu_bound), nu_(std::move(nu)), deterministic_(deterministic) {}

  double nu(const History& h) const { return nu_(h); }

  std::unique_ptr<PathPolicy> begin_path() const override {
    struct Policy final : PathPolicy {
      const MutualFundStrategy* s;
      explicit Policy(const MutualFundStrategy* owner) : s(owner) {}
      Vector decide(const History& h) override {
        const MarketNode& m = h.current();
        if (premium_vanishes(m)) return Vector::Zero(static_cast<Eigen::Index>(h.dimension()));
        return s->nu_(h) * fund_direction(m);
      }
    };
    return std::make_unique<Policy>(this);
  }

  /// |pi| <= |nu| |sigma^{-T} theta| <= nu_bound sup|theta| sup||sigma^{-1}||.
  double bound(const MarketBounds& m) const override { return nu_bound_ * m.theta_norm * m.sigma_inv_norm; }
  std::string label() const override { return label_; }
  bool deterministic_in_time() const override { return deterministic_; }

 private:
  std::string label_;
  double nu_bound_;
  NuRule nu_;
  bool deterministic_;
};

using MutualFundPtr = std::shared_ptr<const MutualFundStrategy>;

inline MutualFundPtr constant_nu_strategy(double nu) {
  if (!std::isfinite(nu)) throw std::invalid_argument("constant_nu_strategy: nu must be finite");
  std::ostringstream os;
  os << "nu=" << nu;
  return std::make_shared<MutualFundStrategy>(os.str(), std::abs(nu), [nu](const History&) { return nu; }, true);
}

/// The growth-optimal fund: nu = 1, pi^T = theta^T sigma^{-1} = a~^T (sigma sigma^T)^{-1}.
inline MutualFundPtr log_optimal_strategy() {
  return std::make_shared<MutualFundStrategy>("log-optimal", 1.0, [](const History&) { return 1.0; }, true);
}

}  // namespace mft
