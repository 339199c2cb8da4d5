#pragma once

// Projection of an arbitrary portfolio onto the mutual fund direction.
//
// Among all f with |f^T sigma| = |pi^T sigma|, the drift f^T a~ is maximal at
// f^T = nu theta^T sigma^{-1} with nu = |pi^T sigma| / |theta|. Writing
// u = sigma^T f, the drift is u . theta, so the maximizer is u parallel to
// theta with the prescribed length.

#include "mft/strategy.hpp"

#include <limits>
#include <vector>

namespace mft {

struct ProjectionResult {
  Vector pi_hat;
  ProjectionCertificate certificate;
};

inline ProjectionResult project_to_mft(const Vector& pi, const MarketNode& m) {
  if (static_cast<std::size_t>(pi.size()) != m.dimension()) {
    throw std::invalid_argument("project_to_mft: dimension mismatch");
  }
  ProjectionResult out;
  auto& c = out.certificate;
  const Vector base_vol = m.sigma.transpose() * pi;
  c.base_volatility = base_vol.norm();
  c.base_norm = pi.norm();
  const double theta_norm = m.theta.norm();
  if (theta_norm < kZeroPremiumThreshold) {
    out.pi_hat = Vector::Zero(pi.size());
    c.drift_gap = -pi.dot(m.a_tilde);
    return out;
  }
  c.nu = c.base_volatility / theta_norm;
  out.pi_hat = c.nu * fund_direction(m);
  c.projected_volatility = (m.sigma.transpose() * out.pi_hat).norm();
  c.projected_norm = out.pi_hat.norm();
  c.drift_gap = out.pi_hat.dot(m.a_tilde) - pi.dot(m.a_tilde);
  return out;
}

inline ProjectionResult project_to_mft(const Vector& pi, const Matrix& sigma, const Vector& a_tilde) {
  // The node validation would reject an r < 0; the rate plays no role here.
  auto node = MarketNode::make(0.0, a_tilde, sigma, std::numeric_limits<double>::infinity());
  return project_to_mft(pi, *node);
}

/// C with sup|pi_hat| <= C sup|pi|: |pi_hat| = nu |theta^T sigma^{-1}| <= |pi^T sigma| ||sigma^{-1}||.
inline double mft_bound_constant(double sigma_norm_sup, double sigma_inv_norm_sup) {
  if (!std::isfinite(sigma_norm_sup) || !std::isfinite(sigma_inv_norm_sup)) {
    throw std::invalid_argument("mft_bound_constant: bounds must be finite");
  }
  return sigma_norm_sup * sigma_inv_norm_sup;
}

inline double mft_bound_constant(const MarketBounds& b) {
  return mft_bound_constant(b.sigma_norm, b.sigma_inv_norm);
}

/// Strategy that runs the base strategy on its own companion wealth and trades
/// the projection of the base proportions. The companion log wealth is advanced
/// from observables only, so the projected proportions stay adapted.
class LiftedStrategy : public Strategy {
 public:
  explicit LiftedStrategy(StrategyPtr base) : base_(std::move(base)) {
    if (!base_) throw std::invalid_argument("lift_projection: null base strategy");
  }

  const StrategyPtr& base() const { return base_; }

  std::unique_ptr<PathPolicy> begin_path() const override {
    return std::make_unique<Policy>(base_->begin_path());
  }
  double bound(const MarketBounds& m) const override { return mft_bound_constant(m) * base_->bound(m); }
  std::string label() const override { return "projected(" + base_->label() + ")"; }
  bool deterministic_in_time() const override { return base_->deterministic_in_time(); }

 private:
  class Policy final : public PathPolicy {
   public:
    explicit Policy(std::unique_ptr<PathPolicy> base) : base_(std::move(base)) {}

    Vector decide(const History& h) override {
      const std::size_t i = h.node();
      if (i != companion_.size()) {
        throw std::logic_error("lifted strategy must be evaluated at consecutive nodes from 0");
      }
      if (i == 0) {
        companion_.push_back(h.log_wealth().front());
      } else {
        const double dt = h.grid().dt();
        companion_.push_back(companion_.back() + log_wealth_increment(last_base_, h.market(i - 1), dt,
                                                                      h.increment(i - 1)));
      }
      last_base_ = base_->decide(h.with_wealth(companion_));
      auto projected = project_to_mft(last_base_, h.current());
      projected.certificate.node = i;
      certificates_.push_back(projected.certificate);
      return std::move(projected.pi_hat);
    }

    std::span<const ProjectionCertificate> certificates() const override { return certificates_; }

   private:
    std::unique_ptr<PathPolicy> base_;
    std::vector<double> companion_;
    Vector last_base_;
    std::vector<ProjectionCertificate> certificates_;
  };

  StrategyPtr base_;
};

inline StrategyPtr lift_projection(StrategyPtr base) {
  return std::make_shared<LiftedStrategy>(std::move(base));
}

}  // namespace mft
