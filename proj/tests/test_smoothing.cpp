#include "test_helpers.hpp"

#include <gtest/gtest.h>

namespace mft {
namespace {

using testing::mat;
using testing::vec;

CoefficientPath step_rate_path(const TimeGrid& g) {
  const auto low = MarketNode::make(0.0, vec({0.08}), mat({{0.2}}));
  const auto high = MarketNode::make(0.1, vec({0.15}), mat({{0.3}}));
  std::vector<NodePtr> nodes;
  for (std::size_t i = 0; i < g.nodes(); ++i) nodes.push_back(g.time(i) < g.horizon() / 2 ? low : high);
  return CoefficientPath(g, nodes);
}

double grid_l2(const CoefficientPath& a, const CoefficientPath& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.grid().steps(); ++i) {
    acc += ((a.r(i) - b.r(i)) * (a.r(i) - b.r(i)) + (a.a_tilde(i) - b.a_tilde(i)).squaredNorm() +
            (a.sigma(i) - b.sigma(i)).squaredNorm()) *
           a.grid().dt();
  }
  return acc;
}

TEST(EpsilonAverage, ConstantPathUnchanged) {
  TimeGrid g(1.0, 32);
  const auto c = CoefficientPath::constant(g, MarketNode::make(0.05, vec({0.1}), mat({{0.2}})));
  const auto avg = epsilon_average(c, 0.125);
  for (std::size_t i = 0; i < g.nodes(); ++i) EXPECT_EQ(avg.r(i), 0.05);
}

TEST(EpsilonAverage, StepPathWindowArithmetic) {
  const double horizon = 1.0;
  TimeGrid g(horizon, 64);
  const auto avg = epsilon_average(step_rate_path(g), horizon / 8);
  // window for t = 5T/8 is [3T/8, T/2): rate 0 there
  EXPECT_EQ(avg.r(g.node_of(5 * horizon / 8)), 0.0);
  // t = 3T/4: window [T/2, 5T/8): rate 0.1
  EXPECT_NEAR(avg.r(g.node_of(3 * horizon / 4)), 0.1, 1e-15);
  // t = 11T/16: window [7T/16, 9T/16): half and half
  EXPECT_NEAR(avg.r(g.node_of(11 * horizon / 16)), 0.05, 1e-15);
  // before the first full window: raw value at 0
  EXPECT_EQ(avg.r(0), 0.0);
  EXPECT_THROW(epsilon_average(step_rate_path(g), 0.01), std::invalid_argument);
}

TEST(EpsilonAverage, LagProperty) {
  const auto model = testing::two_asset_regime_model();
  TimeGrid g(1.0, 64);
  const double eps = 1.0 / 16;
  const std::size_t lag = g.steps_in(eps);
  const auto raw = model.sample(g, 3);
  const auto avg = epsilon_average(raw, eps);
  const auto other = MarketNode::make(0.2, vec({0.4, -0.3}), mat({{0.9, 0.1}, {0.2, 0.8}}));
  for (std::size_t i : {std::size_t{10}, std::size_t{30}, std::size_t{64}}) {
    // perturb raw data on (t_i - eps, t_i]
    auto nodes = raw.nodes();
    for (std::size_t j = i - lag + 1; j <= i; ++j) nodes[j] = other;
    const auto perturbed = epsilon_average(CoefficientPath(g, nodes), eps);
    EXPECT_EQ(perturbed.r(i), avg.r(i));
    EXPECT_EQ(perturbed.sigma(i), avg.sigma(i));
    EXPECT_EQ(perturbed.a(i), avg.a(i));
  }
}

TEST(EpsilonAverage, BoundsDoNotGrow) {
  const auto model = testing::two_asset_regime_model();
  TimeGrid g(1.0, 64);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto raw = model.sample(g, s);
    const auto avg = epsilon_average(raw, 1.0 / 8);
    double raw_r = 0, avg_r = 0, raw_s = 0, avg_s = 0, raw_a = 0, avg_a = 0;
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      raw_r = std::max(raw_r, std::abs(raw.r(i)));
      avg_r = std::max(avg_r, std::abs(avg.r(i)));
      raw_s = std::max(raw_s, raw.sigma(i).cwiseAbs().maxCoeff());
      avg_s = std::max(avg_s, avg.sigma(i).cwiseAbs().maxCoeff());
      raw_a = std::max(raw_a, raw.a(i).cwiseAbs().maxCoeff());
      avg_a = std::max(avg_a, avg.a(i).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(avg_r, raw_r * (1 + 1e-15));
    EXPECT_LE(avg_s, raw_s * (1 + 1e-15));
    EXPECT_LE(avg_a, raw_a * (1 + 1e-15));
  }
}

TEST(EpsilonAverage, ConvergesAsWindowShrinks) {
  const auto model = testing::two_asset_regime_model();
  TimeGrid g(1.0, 256);
  const std::vector<double> eps{1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
  std::vector<double> mean(eps.size(), 0.0);
  const std::size_t paths = 400;
  for (std::uint64_t s = 0; s < paths; ++s) {
    const auto raw = model.sample(g, 40 + s);
    for (std::size_t e = 0; e < eps.size(); ++e) mean[e] += grid_l2(epsilon_average(raw, eps[e]), raw) / paths;
  }
  for (std::size_t e = 1; e < eps.size(); ++e) EXPECT_LT(mean[e], mean[e - 1]) << "eps " << eps[e];
}

TEST(EpsilonAverage, SingularAverageIsReported) {
  TimeGrid g(1.0, 8);
  const auto plus = MarketNode::make(0.0, vec({0.1, 0.1}), mat({{1.0, 0.0}, {0.0, 1.0}}));
  const auto minus = MarketNode::make(0.0, vec({0.1, 0.1}), mat({{-1.0, 0.0}, {0.0, 1.0}}));
  std::vector<NodePtr> nodes;
  for (std::size_t i = 0; i < g.nodes(); ++i) nodes.push_back(i % 2 ? minus : plus);
  try {
    epsilon_average(CoefficientPath(g, nodes), 0.25);
    FAIL() << "expected InvariantError";
  } catch (const InvariantError& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
  }
}

TEST(AverageStrategyTrace, ConstantAndBounded) {
  TimeGrid g(1.0, 32);
  StrategyTrace flat{g, std::vector<Vector>(g.steps(), vec({0.3, -0.2}))};
  const auto avg = average_strategy_trace(flat, 1.0 / 8);
  for (const auto& p : avg.pi) EXPECT_EQ(p, vec({0.3, -0.2}));

  Engine eng(9);
  for (int trial = 0; trial < 50; ++trial) {
    StrategyTrace tr{g, {}};
    for (std::size_t i = 0; i < g.steps(); ++i) tr.pi.push_back(testing::random_vector(eng, 2, 1.0));
    EXPECT_LE(average_strategy_trace(tr, 1.0 / 16).sup_norm(), tr.sup_norm() * (1 + 1e-15));
  }
}

TEST(AverageStrategyTrace, ConvergesAsWindowShrinks) {
  TimeGrid g(1.0, 256);
  StrategyTrace tr{g, {}};
  for (std::size_t i = 0; i < g.steps(); ++i) tr.pi.push_back(vec({g.time(i) < 0.3 ? 0.2 : (g.time(i) < 0.7 ? -0.5 : 0.8)}));
  double prev = INFINITY;
  for (double eps : {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const auto avg = average_strategy_trace(tr, eps);
    double d = 0.0;
    for (std::size_t i = 0; i < g.steps(); ++i) d += (avg.pi[i] - tr.pi[i]).squaredNorm() * g.dt();
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(FreezeOnGrid, Basics) {
  const auto model = testing::two_asset_regime_model();
  TimeGrid g(1.0, 16);
  const auto raw = model.sample(g, 8);

  std::vector<double> full;
  for (std::size_t i = 0; i < g.nodes(); ++i) full.push_back(g.time(i));
  const auto same = freeze_on_grid(raw, full);
  for (std::size_t i = 0; i < g.nodes(); ++i) EXPECT_EQ(same.node_ptr(i), raw.node_ptr(i));

  const auto one = freeze_on_grid(raw, {0.0, 1.0});
  for (std::size_t i = 0; i < g.steps(); ++i) EXPECT_EQ(one.node_ptr(i), raw.node_ptr(0));

  const auto quarters = freeze_on_grid(raw, {0.0, 0.25, 0.5, 0.75, 1.0});
  for (std::size_t i = 0; i < g.steps(); ++i) EXPECT_EQ(quarters.node_ptr(i), raw.node_ptr(i - i % 4));

  const auto c = CoefficientPath::constant(g, MarketNode::make(0.01, vec({0.1}), mat({{0.2}})));
  const auto frozen = freeze_on_grid(c, {0.0, 0.5, 1.0});
  for (std::size_t i = 0; i < g.nodes(); ++i) EXPECT_EQ(frozen.r(i), 0.01);

  EXPECT_THROW(freeze_on_grid(raw, {0.0, 0.3, 1.0}), std::invalid_argument);
  EXPECT_THROW(freeze_on_grid(raw, {0.25, 1.0}), std::invalid_argument);
  EXPECT_THROW(freeze_on_grid(raw, {0.0, 0.5, 0.5, 1.0}), std::invalid_argument);
}

TEST(AveragedMarketModel, WrapsSampling) {
  const auto model = testing::two_asset_regime_model();
  const auto averaged = averaged_market_model(model, 1.0 / 8);
  TimeGrid g(1.0, 64);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto direct = epsilon_average(model.sample(g, s), 1.0 / 8);
    const auto wrapped = averaged.sample(g, s);
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      EXPECT_EQ(wrapped.sigma(i), direct.sigma(i));
      EXPECT_EQ(wrapped.theta(i), direct.theta(i));
      // theta recomputed from the averaged volatility and excess return
      EXPECT_TRUE((wrapped.sigma(i) * wrapped.theta(i)).isApprox(wrapped.a_tilde(i), 1e-12));
    }
  }
  const auto constant = CoefficientModel::constant({0.01, vec({0.05}), mat({{0.2}})});
  const auto c = averaged_market_model(constant, 0.25).sample(g, 1);
  for (std::size_t i = 0; i < g.nodes(); ++i) EXPECT_EQ(c.r(i), 0.01);
}

}  // namespace
}  // namespace mft
