#pragma once

// Random coefficient models. Every model draws its randomness from its own
// seed, never from the Brownian stream, so sampled coefficients are
// independent of the driving Wiener process.

#include "mft/market.hpp"
#include "mft/smoothing.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <optional>
#include <sstream>
#include <string>

namespace mft {

struct MarketState {
  double r = 0.0;
  Vector a;
  Matrix sigma;
};

enum class ModelKind { ConstantRandom, RegimeSwitching, PiecewiseResampled };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::ConstantRandom: return "constant-random";
    case ModelKind::RegimeSwitching: return "regime-switching";
    case ModelKind::PiecewiseResampled: return "piecewise-resampled";
  }
  return "unknown";
}

class CoefficientModel {
 public:
  /// One state drawn at t = 0 with the given probabilities, held for the whole horizon.
  static CoefficientModel constant_random(std::vector<MarketState> states, std::vector<double> probabilities,
                                          double condition_bound = kDefaultConditionBound) {
    CoefficientModel m(ModelKind::ConstantRandom, std::move(states), condition_bound);
    m.probabilities_ = m.checked_distribution(std::move(probabilities), "probabilities");
    return m;
  }

  /// Deterministic market: a single state.
  static CoefficientModel constant(MarketState state, double condition_bound = kDefaultConditionBound) {
    return constant_random({std::move(state)}, {1.0}, condition_bound);
  }

  /// Continuous-time Markov chain over the states with generator `rates`
  /// (off-diagonal entries are jump intensities per year, rows sum to zero).
  /// The initial regime is drawn from `initial`, or from the stationary law when empty.
  static CoefficientModel regime_switching(std::vector<MarketState> states, Matrix rates,
                                           std::vector<double> initial = {},
                                           double condition_bound = kDefaultConditionBound) {
    CoefficientModel m(ModelKind::RegimeSwitching, std::move(states), condition_bound);
    const auto k = static_cast<Eigen::Index>(m.nodes_.size());
    if (rates.rows() != k || rates.cols() != k) throw InvariantError("rates: generator must be K x K");
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        if (!std::isfinite(rates(i, j))) throw InvariantError("rates: non-finite entry");
        if (i != j && rates(i, j) < 0.0) throw InvariantError("rates: off-diagonal intensities must be >= 0");
      }
      if (std::abs(rates.row(i).sum()) > 1e-9 * (1.0 + rates.row(i).cwiseAbs().sum())) {
        throw InvariantError("rates: generator rows must sum to zero");
      }
    }
    m.generator_ = std::move(rates);
    m.probabilities_ = initial.empty() ? m.stationary_distribution()
                                       : m.checked_distribution(std::move(initial), "initial");
    return m;
  }

  /// A fresh state is drawn i.i.d. from `probabilities` every `interval` years.
  static CoefficientModel piecewise_resampled(std::vector<MarketState> states, std::vector<double> probabilities,
                                              double interval, double condition_bound = kDefaultConditionBound) {
    CoefficientModel m(ModelKind::PiecewiseResampled, std::move(states), condition_bound);
    m.probabilities_ = m.checked_distribution(std::move(probabilities), "probabilities");
    if (!(interval > 0.0) || !std::isfinite(interval)) throw InvariantError("resample interval must be > 0");
    m.interval_ = interval;
    return m;
  }

  ModelKind kind() const { return kind_; }
  std::size_t dimension() const { return nodes_.front()->dimension(); }
  std::size_t state_count() const { return nodes_.size(); }
  const MarketNode& state(std::size_t k) const { return *nodes_.at(k); }
  const std::vector<double>& probabilities() const { return probabilities_; }
  const Matrix& generator() const { return generator_; }
  double resample_interval() const { return interval_; }
  double condition_bound() const { return condition_bound_; }
  std::optional<double> averaging_window() const { return averaging_eps_; }

  /// True when every sampled path is the same: a single reachable state and no averaging lag effects.
  bool is_deterministic() const {
    std::size_t reachable = 0;
    for (double p : probabilities_) reachable += p > 0.0 ? 1 : 0;
    if (kind_ == ModelKind::RegimeSwitching) return nodes_.size() == 1;
    return reachable == 1;
  }

  /// Suprema over the model's raw states.
  MarketBounds bounds() const {
    MarketBounds b;
    for (const auto& n : nodes_) b.include(*n);
    return b;
  }

  /// Stationary law of the regime chain (solves pi Q = 0, sum pi = 1).
  std::vector<double> stationary_distribution() const {
    const auto k = generator_.rows();
    Matrix system = generator_.transpose();
    system.row(k - 1).setOnes();
    Vector rhs = Vector::Zero(k);
    rhs(k - 1) = 1.0;
    Eigen::FullPivLU<Matrix> lu(system);
    if (!lu.isInvertible()) throw InvariantError("rates: regime chain has no unique stationary distribution");
    Vector p = lu.solve(rhs);
    return {p.data(), p.data() + p.size()};
  }

  /// Wraps the model so every sampled path is replaced by its lagged eps-average.
  CoefficientModel averaged(double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("averaging window must be > 0");
    CoefficientModel m = *this;
    m.averaging_eps_ = eps;
    return m;
  }

  CoefficientPath sample(const TimeGrid& grid, std::uint64_t seed) const {
    Engine eng(seed);
    std::vector<NodePtr> path(grid.nodes());
    switch (kind_) {
      case ModelKind::ConstantRandom: {
        const auto s = draw(eng, probabilities_);
        std::fill(path.begin(), path.end(), nodes_[s]);
        break;
      }
      case ModelKind::RegimeSwitching: {
        const Matrix step = (generator_ * grid.dt()).exp();
        std::size_t s = draw(eng, probabilities_);
        path[0] = nodes_[s];
        std::vector<double> row(nodes_.size());
        for (std::size_t i = 1; i < grid.nodes(); ++i) {
          for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = std::max(0.0, step(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)));
          }
          s = draw(eng, row);
          path[i] = nodes_[s];
        }
        break;
      }
      case ModelKind::PiecewiseResampled: {
        const std::size_t width = grid.steps_in(interval_);
        std::size_t s = 0;
        for (std::size_t i = 0; i < grid.nodes(); ++i) {
          if (i % width == 0 && i < grid.nodes() - 1) s = draw(eng, probabilities_);
          path[i] = nodes_[s];
        }
        break;
      }
    }
    CoefficientPath raw(grid, std::move(path));
    if (averaging_eps_) return epsilon_average(raw, *averaging_eps_, condition_bound_);
    return raw;
  }

 private:
  CoefficientModel(ModelKind kind, std::vector<MarketState> states, double condition_bound)
      : kind_(kind), condition_bound_(condition_bound) {
    if (states.empty()) throw InvariantError("states: model needs at least one state");
    if (!(condition_bound >= 1.0)) throw InvariantError("condition bound must be >= 1");
    for (std::size_t k = 0; k < states.size(); ++k) {
      try {
        nodes_.push_back(MarketNode::make(states[k].r, std::move(states[k].a), std::move(states[k].sigma),
                                          condition_bound));
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "states[" << k << "]: " << e.what();
        throw InvariantError(os.str());
      }
      if (nodes_.back()->dimension() != nodes_.front()->dimension()) {
        throw InvariantError("states: all states must have the same number of assets");
      }
    }
  }

  std::vector<double> checked_distribution(std::vector<double> p, const char* field) const {
    if (p.size() != nodes_.size()) {
      throw InvariantError(std::string(field) + ": one probability per state required");
    }
    double total = 0.0;
    for (double x : p) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw InvariantError(std::string(field) + ": probabilities must be >= 0");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvariantError(std::string(field) + ": probabilities must sum to 1");
    return p;
  }

  static std::size_t draw(Engine& eng, const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform01(eng) * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (weights[j] <= 0.0) continue;
      last = j;
      acc += weights[j];
      if (u < acc) return j;
    }
    return last;
  }

  ModelKind kind_;
  std::vector<NodePtr> nodes_;
  std::vector<double> probabilities_;
  Matrix generator_;
  double interval_ = 0.0;
  double condition_bound_;
  std::optional<double> averaging_eps_;
};

inline CoefficientPath sample_coefficients(const CoefficientModel& model, const TimeGrid& grid,
                                           std::uint64_t seed) {
  return model.sample(grid, seed);
}

/// Model whose sampled paths are eps-averaged before use; the risk premium of
/// each averaged node is recomputed from the averaged volatility and excess return.
inline CoefficientModel averaged_market_model(const CoefficientModel& model, double eps) {
  return model.averaged(eps);
}

}  // namespace mft
