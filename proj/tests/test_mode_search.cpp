#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "radmode/mode_search.hpp"

using namespace radmode;

namespace {

CoordinateSchedule untruncated_gaussian() {
  return CoordinateSchedule::custom(
      [](std::uint64_t k) -> ScalarLaw { return Gaussian(0.0, 1.0 / double(k)); });
}

}  // namespace

TEST(FiniteDimMode, ExponentialThreeDimensions) {
  const auto m = finite_dim_mode(CoordinateSchedule::exp_k(), 3, BoxShape(0.5));
  EXPECT_EQ(m.center, (FiniteCenter{{1, 0.5}, {2, 0.5}, {3, 0.5}}));
  const long double want =
      oracle::partial_product(3, [](std::uint64_t k) { return 1.0L - std::exp(-(long double)k); });
  EXPECT_NEAR(m.probability, double(want), 1e-15);
}

TEST(FiniteDimMode, SymmetricGaussianModeIsZero) {
  for (std::uint64_t d : {1u, 4u, 20u}) EXPECT_TRUE(finite_dim_mode(untruncated_gaussian(), d, BoxShape(0.3)).center.empty());
}

TEST(FiniteDimMode, SingleExponentialCoordinate) {
  const auto unit_rate = CoordinateSchedule::custom([](std::uint64_t) -> ScalarLaw { return Exponential(1.0); });
  const auto m = finite_dim_mode(unit_rate, 1, BoxShape(0.5));
  EXPECT_EQ(m.center, (FiniteCenter{{1, 0.5}}));
  EXPECT_NEAR(m.probability, 0.63212055882855767840, 1e-15);
  EXPECT_THROW(finite_dim_mode(unit_rate, 0, BoxShape(0.5)), PreconditionError);
}

TEST(FiniteDimMode, NotBeatenByPerturbations) {
  const auto schedule = CoordinateSchedule::gauss_cond();
  const BoxShape shape(0.7);
  const std::uint64_t d = 6;
  const auto m = finite_dim_mode(schedule, d, shape);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(0.0, 0.2);
  for (int i = 0; i < 1000; ++i) {
    FiniteCenter c;
    for (std::uint64_t k = 1; k <= d; ++k) c.set(k, m.center[k] + z(gen));
    EXPECT_LE(truncated_product(schedule, c, shape, d), m.probability);
  }
}

TEST(EscapeDiagnostic, ExponentialMaximizingSequence) {
  const auto rep = escape_diagnostic(CoordinateSchedule::exp_k(), BoxShape(0.5), 50, 80);
  ASSERT_EQ(rep.records.size(), 50u);
  EXPECT_EQ(rep.verdict, EscapeVerdict::kNonAttainmentSuspected);
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& rec = rep.records[i];
    EXPECT_EQ(rec.n, i + 1);
    EXPECT_GT(rec.gap_lower, 0.0);
    EXPECT_LE(rec.gap_lower, rec.gap_upper);
    EXPECT_TRUE(rec.improvable);
    EXPECT_EQ(rec.improvement_index, rec.n + 1);
    EXPECT_EQ(rec.highest_modified, rec.n);
    if (i > 0) {
      EXPECT_LT(rec.gap, rep.records[i - 1].gap);
      EXPECT_GE(rec.ball.lower, rep.records[i - 1].ball.lower);
    }
    // m0 (1 - prod_{n<k<=80} f_k(0) / f_k*) in extended precision.
    long double ratio = 1.0L;
    for (std::uint64_t k = rec.n + 1; k <= 80; ++k)
      ratio *= (1.0L - std::exp(-0.5L * k)) / (1.0L - std::exp(-(long double)k));
    const long double want = oracle::kExpM0HalfRadius * (1.0L - ratio);
    EXPECT_NEAR(rec.gap, double(want), 1e-6 * double(want) + 1e-22) << "n=" << rec.n;
  }
  EXPECT_LT(rep.records.back().gap, 1e-10);
  // Truncated at K = 80 the gap is 1.0798897791755698e-11; the untruncated
  // gap 1.0798901095164602e-11 must sit inside the rigorous bounds.
  EXPECT_NEAR(rep.records.back().gap, 1.0798897791755698e-11, 5e-18);
  EXPECT_LE(rep.records.back().gap_lower, 1.0798901095164602e-11);
  EXPECT_GE(rep.records.back().gap_upper, 1.0798901095164602e-11);
  EXPECT_NE(rep.summary().find("not a proof"), std::string::npos);
}

TEST(EscapeDiagnostic, ExponentialVerdictAcrossRadii) {
  for (double r : {0.25, 0.5, 1.0}) {
    const auto rep = escape_diagnostic(CoordinateSchedule::exp_k(), BoxShape(r), 30, 60);
    EXPECT_EQ(rep.verdict, EscapeVerdict::kNonAttainmentSuspected) << "r=" << r;
    for (std::size_t i = 1; i < rep.records.size(); ++i)
      EXPECT_LE(rep.records[i].gap, rep.records[i - 1].gap);
  }
}

TEST(EscapeDiagnostic, SymmetricGaussianIsAttainedImmediately) {
  const auto rep = escape_diagnostic(untruncated_gaussian(), BoxShape(1.0), 5, 10);
  EXPECT_EQ(rep.verdict, EscapeVerdict::kAttainedAtFiniteCenter);
  EXPECT_EQ(rep.attained_at, 1u);
  EXPECT_FALSE(rep.records[0].improvable);
}

TEST(EscapeDiagnostic, ConditionedGaussianEscapes) {
  for (auto norm : {Normalization::kNormalized, Normalization::kUnnormalized}) {
    const auto rep = escape_diagnostic(CoordinateSchedule::gauss_cond(norm), BoxShape(2.0), 30, 30);
    EXPECT_EQ(rep.verdict, EscapeVerdict::kNonAttainmentSuspected) << to_string(norm);
    for (const auto& rec : rep.records) EXPECT_GT(rec.improvement_index, rec.n);
  }
}

TEST(EscapeDiagnostic, Preconditions) {
  EXPECT_THROW(escape_diagnostic(CoordinateSchedule::exp_k(), BoxShape(0.5), 0, 10), PreconditionError);
  EXPECT_THROW(escape_diagnostic(CoordinateSchedule::exp_k(), BoxShape(0.5), 20, 10), PreconditionError);
}

TEST(RampCenter, Shape) {
  const PathGrid g(10);
  const auto c = ramp_center(Ceiling(RunningMax{}, 0.5), 0.2, g);
  EXPECT_EQ(c[0], 0.0);
  EXPECT_DOUBLE_EQ(c[1], 0.25);
  EXPECT_DOUBLE_EQ(c[2], 0.5);
  EXPECT_DOUBLE_EQ(c[7], 0.5);
}

TEST(PathModeSearch, RunningMaxRampsClimbTowardTheLimit) {
  const PathGrid g(512);
  const std::vector<double> s{0.5, 0.25, 0.1, 0.05, 0.01};
  const auto h = path_mode_search(RunningMax{}, 0.5, g, s, 20000, 13);
  ASSERT_EQ(h.steps.size(), s.size());
  for (std::size_t j = 1; j < h.steps.size(); ++j) {
    EXPECT_EQ(h.steps[j].lost, 0u);
    EXPECT_GE(h.steps[j].paired_difference, 0.0);
    EXPECT_GE(h.best_objective(j), h.best_objective(j - 1));
  }
  EXPECT_GT(h.steps[1].paired_difference, 0.0);
  const double limit = double(oracle::kTwoPhi1Minus1);
  EXPECT_LT(h.best().objective.p_hat, limit + 4.0 * h.best().objective.std_error);
  EXPECT_GT(h.best().objective.p_hat, limit - 0.03);
}

TEST(PathModeSearch, ReflectedRampsAreDominanceConsistent) {
  const PathGrid g(256);
  const auto h = path_mode_search(ReflectedWiener{}, 1.0, g, {0.5, 0.2, 0.05}, 5000, 3);
  for (std::size_t j = 1; j < h.steps.size(); ++j) {
    EXPECT_EQ(h.steps[j].lost, 0u);
    EXPECT_GE(h.steps[j].paired_difference, 0.0);
  }
}

TEST(PathModeSearch, ReproducibleAndValidated) {
  const PathGrid g(128);
  const auto a = path_mode_search(ConditionedWiener{}, 1.0, g, {0.3}, 1000, 4);
  const auto b = path_mode_search(ConditionedWiener{}, 1.0, g, {0.3}, 1000, 4, {2});
  EXPECT_EQ(a.steps[0].objective.hits, b.steps[0].objective.hits);
  EXPECT_EQ(a.acceptance_rate, b.acceptance_rate);
  EXPECT_GT(a.acceptance_rate, 0.0);
  EXPECT_THROW(path_mode_search(RunningMax{}, 1.0, g, {0.2, 0.3}, 10, 1), PreconditionError);
  EXPECT_THROW(path_mode_search(RunningMax{}, 1.0, g, {}, 10, 1), PreconditionError);
  EXPECT_THROW(path_mode_search(Wiener{}, 1.0, g, {0.2}, 10, 1), PreconditionError);
}
