#include "mft/utility.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace mft {
namespace {

TEST(EvalUtility, BuiltInValues) {
  EXPECT_EQ(eval_utility(log_utility(), 1.0), 0.0);
  EXPECT_DOUBLE_EQ(eval_utility(power_utility(1.0), 2.0), -0.5);
  EXPECT_DOUBLE_EQ(eval_utility(capped_sqrt_utility(10.0), 4.0), 2.0);
  EXPECT_DOUBLE_EQ(eval_utility(capped_sqrt_utility(10.0), 400.0), 10.0);
  EXPECT_THROW(eval_utility(log_utility(), 0.0), std::invalid_argument);
  EXPECT_THROW(eval_utility(log_utility(), -1.0), std::invalid_argument);
}

TEST(EvalUtility, AssemblyMatchesTermByTerm) {
  const UtilitySpec spec(
      "mixed", [](double x) { return std::min(x, 5.0); }, 0.0,
      {{[](double x) { return 1.0 / (1.0 + x); }, 0.5, 1.0}, {[](double) { return 2.0; }, 2.0, 2.0}},
      [](double x) { return x < 1.0 ? 0.5 : 0.25; }, 0.5);
  for (double x : {1e-3, 0.2, 1.0, 3.7, 42.0}) {
    const double expected = std::min(x, 5.0) - (1.0 / (1.0 + x)) * std::pow(x, -0.5) - 2.0 * std::pow(x, -2.0) +
                            (x < 1.0 ? 0.5 : 0.25) * std::log(x);
    EXPECT_NEAR(spec(x), expected, 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST(CheckAdmissible, BuiltInsPass) {
  for (const auto& spec : builtin_utilities()) {
    const auto rep = check_admissible(spec);
    EXPECT_TRUE(rep.passed()) << spec.name() << ": " << (rep.issues.empty() ? "" : rep.issues.front().message);
  }
  EXPECT_TRUE(check_admissible(piecewise_linear_utility({0.5, 1.0, 4.0}, {-1.0, 0.0, 1.0})).passed());
}

TEST(CheckAdmissible, ConvexU0PassesWithNote) {
  const UtilitySpec square("square", [](double x) { return x * x; }, 0.0, {}, [](double) { return 0.0; }, 0.0);
  const auto rep = check_admissible(square);
  EXPECT_TRUE(rep.passed());
  ASSERT_FALSE(rep.notes.empty());
  EXPECT_NE(rep.notes.front().find("unbounded above"), std::string::npos);
  EXPECT_NE(rep.notes.front().find("convex"), std::string::npos);
}

TEST(CheckAdmissible, LogWeightMustBeBoundedNearZero) {
  const UtilitySpec linear_weight("x log x-ish", [](double) { return 0.0; }, 0.0, {}, [](double x) { return x; }, 1.0);
  EXPECT_FALSE(check_admissible(linear_weight).has("log-weight-sup"));
  const UtilitySpec inverse_weight("log/x", [](double) { return 0.0; }, 0.0, {}, [](double x) { return 1.0 / x; }, 1.0);
  const auto rep = check_admissible(inverse_weight);
  EXPECT_TRUE(rep.has("log-weight-sup"));
  const UtilitySpec undeclared("log/x", [](double) { return 0.0; }, 0.0, {}, [](double x) { return 1.0 / x; },
                               INFINITY);
  EXPECT_TRUE(check_admissible(undeclared).has("log-weight-sup"));
}

TEST(CheckAdmissible, FlagsSignBoundsAndMonotonicity) {
  const UtilitySpec quadratic("quadratic", [](double x) { return x - 0.1 * x * x; }, -INFINITY, {},
                              [](double) { return 0.0; }, 0.0);
  const auto rep = check_admissible(quadratic);
  EXPECT_TRUE(rep.has("monotone"));
  EXPECT_TRUE(rep.has("u0-inf"));

  const UtilitySpec negative_weight("neg", [](double) { return 0.0; }, 0.0, {{[](double) { return -1.0; }, 1.0, 1.0}},
                                    [](double) { return 0.0; }, 0.0);
  EXPECT_TRUE(check_admissible(negative_weight).has("sign"));

  const UtilitySpec big_weight("big", [](double) { return 0.0; }, 0.0, {{[](double x) { return x; }, 1.0, 10.0}},
                               [](double) { return 0.0; }, 0.0);
  EXPECT_TRUE(check_admissible(big_weight).has("term-sup"));

  EXPECT_TRUE(check_admissible(log_utility(), log_spaced_grid(1e-2, 1e2, 100)).has("grid"));
}

TEST(CapUtility, CapsU0AndLogWeight) {
  const auto capped_log = cap_utility(log_utility(), 1.0);
  for (double x : {1e-4, 0.5, 1.0, 7.0, 1e5}) EXPECT_EQ(capped_log(x), log_utility()(x));
  EXPECT_EQ(capped_log.kind(), UtilityKind::Log);

  const UtilitySpec linear("linear", [](double x) { return x; }, 0.0, {}, [](double) { return 0.0; }, 0.0);
  const auto capped = cap_utility(linear, 10.0);
  EXPECT_EQ(capped(3.0), 3.0);
  EXPECT_EQ(capped(30.0), 10.0);
  EXPECT_TRUE(check_admissible(capped).passed());
  EXPECT_THROW(cap_utility(linear, 0.0), std::invalid_argument);
}

TEST(CapUtility, MonotoneInTheCap) {
  const UtilitySpec spec("mix", [](double x) { return std::sqrt(x); }, 0.0, {{[](double) { return 1.0; }, 1.0, 1.0}},
                         [](double x) { return 1.0 + std::min(x, 3.0); }, 4.0);
  const UtilitySpec no_log("no-log", [](double x) { return std::sqrt(x); }, 0.0,
                           {{[](double) { return 1.0; }, 1.0, 1.0}}, detail::zero_fn, 0.0);
  const std::vector<double> caps{0.5, 1.0, 2.0, 5.0, 20.0, 1e3, 1e6};
  auto check = [&](const UtilitySpec& s, double x) {
    double prev = -INFINITY;
    for (double k : caps) {
      const double v = cap_utility(s, k)(x);
      EXPECT_GE(v, prev) << s.name() << " x=" << x << " K=" << k;
      EXPECT_LE(v, s(x) + 1e-15);
      prev = v;
    }
    EXPECT_NEAR(prev, s(x), 1e-12 * std::max(1.0, std::abs(s(x))));
  };
  for (double x : {1.0, 2.0, 9.0, 100.0, 1e4}) check(spec, x);
  for (double x : {0.01, 0.3, 1.0, 9.0, 1e4}) check(no_log, x);
}

TEST(CapUtility, CappedLogWeightBelowOne) {
  // min(U_{N+1}, K) log x grows as K shrinks when log x < 0
  const UtilitySpec spec("weighted-log", detail::zero_fn, 0.0, {}, [](double) { return 2.0; }, 2.0);
  const double x = 0.5;
  EXPECT_DOUBLE_EQ(cap_utility(spec, 1.0)(x), std::log(x));
  EXPECT_DOUBLE_EQ(spec(x), 2.0 * std::log(x));
  EXPECT_GT(cap_utility(spec, 1.0)(x), spec(x));
}

}  // namespace
}  // namespace mft
