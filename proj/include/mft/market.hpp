#pragma once

// Market coefficients and the Brownian driver on a uniform time grid.
//
// Coefficients are left-continuous step functions: the values stored at node
// i hold on the cell [t_i, t_{i+1}). Every node carries its own validated
// state (rate, appreciation rates, volatility) together with the derived
// excess return, risk premium and an LU factorization of the volatility.

#include "mft/core.hpp"

#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

namespace mft {

class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw std::invalid_argument("time grid horizon must be finite and > 0");
    }
    if (steps < 1) throw std::invalid_argument("time grid needs at least one step");
  }

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }
  double time(std::size_t i) const {
    return i == steps_ ? horizon_ : horizon_ * static_cast<double>(i) / static_cast<double>(steps_);
  }

  /// Index of the node at time t; throws if t is not a grid node.
  std::size_t node_of(double t) const {
    const double x = t / dt();
    const double k = std::round(x);
    if (k < 0.0 || k > static_cast<double>(steps_) || std::abs(x - k) > 1e-9 * std::max(1.0, x)) {
      std::ostringstream os;
      os << "time " << t << " is not a node of the grid (T=" << horizon_ << ", M=" << steps_ << ")";
      throw std::invalid_argument(os.str());
    }
    return static_cast<std::size_t>(k);
  }

  /// Number of steps spanned by a duration that must be a positive multiple of dt.
  std::size_t steps_in(double duration) const {
    const double x = duration / dt();
    const double k = std::round(x);
    if (!(duration > 0.0) || k < 1.0 || std::abs(x - k) > 1e-9 * std::max(1.0, x)) {
      std::ostringstream os;
      os << "duration " << duration << " is not a positive multiple of the grid step " << dt();
      throw std::invalid_argument(os.str());
    }
    return static_cast<std::size_t>(k);
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.horizon_ == b.horizon_ && a.steps_ == b.steps_;
  }

 private:
  double horizon_;
  std::size_t steps_;
};

/// a - r * 1.
inline Vector excess_returns(const Vector& a, double r) {
  return a.array() - r;
}

/// Solves sigma * theta = a_tilde. Throws InvariantError for singular sigma.
inline Vector risk_premium(const Matrix& sigma, const Vector& a_tilde) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != a_tilde.size()) {
    throw std::invalid_argument("risk_premium: dimension mismatch");
  }
  Eigen::FullPivLU<Matrix> lu(sigma);
  if (!lu.isInvertible()) throw InvariantError("risk_premium: volatility matrix is singular");
  return lu.solve(a_tilde);
}

/// One validated market state: (r, a, sigma) plus derived quantities.
struct MarketNode {
  double r = 0.0;
  Vector a;
  Matrix sigma;
  Vector a_tilde;
  Vector theta;
  double sigma_norm = 0.0;      // largest singular value
  double sigma_inv_norm = 0.0;  // 1 / smallest singular value
  Eigen::PartialPivLU<Matrix> lu;

  std::size_t dimension() const { return static_cast<std::size_t>(a.size()); }
  double condition_number() const { return sigma_norm * sigma_inv_norm; }

  static std::shared_ptr<const MarketNode> make(double r, Vector a, Matrix sigma,
                                                double condition_bound = kDefaultConditionBound) {
    const auto n = a.size();
    if (n < 1) throw std::invalid_argument("market state needs at least one asset");
    if (sigma.rows() != n || sigma.cols() != n) {
      throw std::invalid_argument("volatility matrix must be n x n with n = number of assets");
    }
    if (!std::isfinite(r) || !a.allFinite() || !sigma.allFinite()) {
      throw InvariantError("market state has non-finite entries");
    }
    if (r < 0.0) {
      std::ostringstream os;
      os << "short rate must be >= 0 (got " << r << ")";
      throw InvariantError(os.str());
    }
    Eigen::JacobiSVD<Matrix> svd(sigma);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0) || smax / smin > condition_bound) {
      std::ostringstream os;
      os << "volatility matrix is singular or ill-conditioned (condition number "
         << (smin > 0.0 ? smax / smin : INFINITY) << ", bound " << condition_bound << ")";
      throw InvariantError(os.str());
    }
    auto node = std::make_shared<MarketNode>();
    node->r = r;
    node->a = std::move(a);
    node->sigma = std::move(sigma);
    node->a_tilde = excess_returns(node->a, r);
    node->lu.compute(node->sigma);
    node->theta = node->lu.solve(node->a_tilde);
    node->sigma_norm = smax;
    node->sigma_inv_norm = 1.0 / smin;
    return node;
  }
};

using NodePtr = std::shared_ptr<const MarketNode>;

/// Suprema over a set of market states, used for strategy bounds.
struct MarketBounds {
  double theta_norm = 0.0;
  double sigma_norm = 0.0;
  double sigma_inv_norm = 0.0;

  void include(const MarketNode& node) {
    theta_norm = std::max(theta_norm, node.theta.norm());
    sigma_norm = std::max(sigma_norm, node.sigma_norm);
    sigma_inv_norm = std::max(sigma_inv_norm, node.sigma_inv_norm);
  }
};

/// Discretized trajectory of the market coefficients, one state per grid node.
class CoefficientPath {
 public:
  CoefficientPath(TimeGrid grid, std::vector<NodePtr> nodes) : grid_(grid), nodes_(std::move(nodes)) {
    if (nodes_.size() != grid_.nodes()) {
      throw std::invalid_argument("coefficient path needs exactly one state per grid node");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!nodes_[i]) throw std::invalid_argument("coefficient path has an empty node");
      if (nodes_[i]->dimension() != nodes_[0]->dimension()) {
        throw std::invalid_argument("coefficient path mixes market dimensions");
      }
    }
  }

  /// Path holding one state at every node.
  static CoefficientPath constant(TimeGrid grid, NodePtr node) {
    return CoefficientPath(grid, std::vector<NodePtr>(grid.nodes(), std::move(node)));
  }

  const TimeGrid& grid() const { return grid_; }
  std::size_t dimension() const { return nodes_.front()->dimension(); }
  const MarketNode& node(std::size_t i) const { return *nodes_.at(i); }
  const NodePtr& node_ptr(std::size_t i) const { return nodes_.at(i); }
  const std::vector<NodePtr>& nodes() const { return nodes_; }

  double r(std::size_t i) const { return node(i).r; }
  const Vector& a(std::size_t i) const { return node(i).a; }
  const Matrix& sigma(std::size_t i) const { return node(i).sigma; }
  const Vector& a_tilde(std::size_t i) const { return node(i).a_tilde; }
  const Vector& theta(std::size_t i) const { return node(i).theta; }

  MarketBounds bounds() const {
    MarketBounds b;
    for (const auto& n : nodes_) b.include(*n);
    return b;
  }

 private:
  TimeGrid grid_;
  std::vector<NodePtr> nodes_;
};

/// Brownian increments dw_i over the cells [t_i, t_{i+1}), one column per step.
class BrownianPath {
 public:
  BrownianPath(TimeGrid grid, Matrix increments) : grid_(grid), increments_(std::move(increments)) {
    if (static_cast<std::size_t>(increments_.cols()) != grid_.steps() || increments_.rows() < 1) {
      throw std::invalid_argument("Brownian path needs an n x M increment matrix");
    }
  }

  const TimeGrid& grid() const { return grid_; }
  std::size_t dimension() const { return static_cast<std::size_t>(increments_.rows()); }
  auto increment(std::size_t i) const { return increments_.col(static_cast<Eigen::Index>(i)); }
  const Matrix& increments() const { return increments_; }

 private:
  TimeGrid grid_;
  Matrix increments_;
};

/// Exact log discounted wealth change over one cell with step coefficients:
/// (pi^T a~ - |pi^T sigma|^2 / 2) dt + pi^T sigma dw.
inline double log_wealth_increment(const Vector& pi, const MarketNode& m, double dt,
                                   const Eigen::Ref<const Vector>& dw) {
  double quad = 0.0, noise = 0.0;
  for (Eigen::Index k = 0; k < m.sigma.cols(); ++k) {
    const double vol = m.sigma.col(k).dot(pi);
    quad += vol * vol;
    noise += vol * dw(k);
  }
  return (pi.dot(m.a_tilde) - 0.5 * quad) * dt + noise;
}

using Engine = std::mt19937_64;

/// Uniform draw on [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Fills `out` with independent standard normals using the polar method.
inline void standard_normals(Engine& eng, double* out, std::size_t count) {
  std::size_t k = 0;
  while (k < count) {
    double u, v, s;
    do {
      u = 2.0 * uniform01(eng) - 1.0;
      v = 2.0 * uniform01(eng) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    out[k++] = u * f;
    if (k < count) out[k++] = v * f;
  }
}

inline BrownianPath sample_brownian(const TimeGrid& grid, std::uint64_t seed, std::size_t n) {
  if (n < 1) throw std::invalid_argument("sample_brownian: dimension must be >= 1");
  Engine eng(seed);
  Matrix inc(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.steps()));
  standard_normals(eng, inc.data(), static_cast<std::size_t>(inc.size()));
  inc *= std::sqrt(grid.dt());
  return BrownianPath(grid, std::move(inc));
}

}  // namespace mft
