// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "hybridpar/partition_tuner.hpp"
#include "test_support.hpp"

namespace hybridpar {
namespace {

using testing::dense_var;
using testing::make_cluster;
using testing::make_graph;
using testing::sparse_var;

CostModelParams theta(double t0, double t1, double t2, std::vector<Sample> samples = {}) {
  return CostModelParams{t0, t1, t2, std::move(samples)};
}

Evaluator curve(double t0, double t1, double t2) {
  return [=](std::uint64_t p) {
    const double x = static_cast<double>(p);
    return t0 + t1 / x + t2 * x;
  };
}

std::vector<Sample> sample_at(const Evaluator& f, std::initializer_list<std::uint64_t> ps) {
  std::vector<Sample> out;
  for (auto p : ps) out.push_back({p, f(p)});
  return out;
}

std::vector<std::uint64_t> partitions_of(const std::vector<Sample>& samples) {
  std::vector<std::uint64_t> out;
  for (const auto& s : samples) out.push_back(s.partitions);
  return out;
}

// Independent oracle: unconstrained normal equations in (1, 1/P, P) solved by
// Cramer's rule in long double.
std::array<long double, 3> normal_equation_fit(const std::vector<Sample>& samples) {
  long double a[3][3] = {};
  long double b[3] = {};
  for (const auto& s : samples) {
    const long double p = s.partitions;
    const long double row[3] = {1.0L, 1.0L / p, p};
    for (int i = 0; i < 3; ++i) {
      b[i] += row[i] * s.time_us;
      for (int j = 0; j < 3; ++j) a[i][j] += row[i] * row[j];
    }
  }
  auto det3 = [](long double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const long double d = det3(a);
  std::array<long double, 3> out{};
  for (int k = 0; k < 3; ++k) {
    long double m[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] = j == k ? b[i] : a[i][j];
    }
    out[k] = det3(m) / d;
  }
  return out;
}

void expect_relative(double actual, double expected, double tol) {
  EXPECT_LE(std::abs(actual - expected), tol * std::abs(expected)) << actual << " vs " << expected;
}

TEST(PredictTime, AtTheAnalyticMinimum) { EXPECT_DOUBLE_EQ(predict_time(theta(10, 1000, 0.1), 100), 30.0); }

TEST(PredictTime, ConstantModel) {
  for (std::uint64_t p : {1u, 7u, 1000u}) EXPECT_DOUBLE_EQ(predict_time(theta(5, 0, 0), p), 5.0);
}

TEST(PredictTime, SmallPartitionCount) { EXPECT_DOUBLE_EQ(predict_time(theta(10, 1000, 0.1), 8), 135.8); }

TEST(FitTheta, RecoversNoiselessCurve) {
  const auto samples = sample_at(curve(10, 1000, 0.1), {8, 16, 32, 64, 128});
  const CostModelParams p = fit_theta(samples);
  expect_relative(p.theta0, 10.0, 1e-6);
  expect_relative(p.theta1, 1000.0, 1e-6);
  expect_relative(p.theta2, 0.1, 1e-6);
  EXPECT_EQ(p.samples, samples);
}

TEST(FitTheta, ConstantDataGivesConstantModel) {
  const CostModelParams p = fit_theta({{2, 42.0}, {4, 42.0}, {8, 42.0}});
  EXPECT_NEAR(p.theta0, 42.0, 1e-9);
  EXPECT_NEAR(p.theta1, 0.0, 1e-9);
  EXPECT_NEAR(p.theta2, 0.0, 1e-9);
}

TEST(FitTheta, TwoDistinctPartitionCountsRejected) {
  EXPECT_THROW(fit_theta({{2, 1.0}, {4, 2.0}}), InsufficientSamplesError);
  EXPECT_THROW(fit_theta({{2, 1.0}, {4, 2.0}, {4, 3.0}, {2, 1.5}}), InsufficientSamplesError);
  EXPECT_THROW(fit_theta({}), InsufficientSamplesError);
}

TEST(FitTheta, MatchesNormalEquationsWhenUnconstrainedOptimumIsFeasible) {
  const std::vector<Sample> samples{{4, 120.0}, {8, 71.0}, {16, 52.0}, {32, 49.0}, {64, 55.0}};
  const auto oracle = normal_equation_fit(samples);
  ASSERT_GT(oracle[1], 0.0L);
  ASSERT_GT(oracle[2], 0.0L);
  const CostModelParams p = fit_theta(samples);
  expect_relative(p.theta0, static_cast<double>(oracle[0]), 1e-9);
  expect_relative(p.theta1, static_cast<double>(oracle[1]), 1e-9);
  expect_relative(p.theta2, static_cast<double>(oracle[2]), 1e-9);
}

TEST(FitTheta, NegativeOverheadClampedToZero) {
  // Times fall faster than 1/P alone explains, pushing theta2 negative when unconstrained.
  const std::vector<Sample> samples{{1, 100.0}, {2, 48.0}, {4, 20.0}, {8, 5.0}};
  ASSERT_LT(normal_equation_fit(samples)[2], 0.0L);
  const CostModelParams p = fit_theta(samples);
  EXPECT_GE(p.theta1, 0.0);
  EXPECT_EQ(p.theta2, 0.0);
  EXPECT_EQ(optimal_P(p), 8u);
}

TEST(FitTheta, MeasuredLanguageModelPartitionSweep) {
  const std::vector<std::pair<std::uint64_t, double>> throughput{
      {8, 50.5e3}, {16, 78.6e3}, {32, 96.5e3}, {64, 96.1e3}, {128, 98.9e3}, {256, 93.2e3}};
  std::vector<Sample> samples;
  for (const auto& [p, t] : throughput) samples.push_back({p, 1e9 / t});
  const CostModelParams fit = fit_theta(samples);
  const std::uint64_t best = optimal_P(fit);
  EXPECT_GE(best, 32u);
  EXPECT_LE(best, 256u);
  EXPECT_GE(best, 64u);  // within a factor of 2 of the best observed 128
}

TEST(OptimalP, InteriorMinimum) { EXPECT_EQ(optimal_P(theta(10, 1000, 0.1, {{4, 0}, {128, 0}})), 100u); }

TEST(OptimalP, ClampedToLargestSample) { EXPECT_EQ(optimal_P(theta(10, 1000, 0.1, {{4, 0}, {64, 0}})), 64u); }

TEST(OptimalP, ClampedToSmallestSample) { EXPECT_EQ(optimal_P(theta(10, 1000, 0.1, {{128, 0}, {512, 0}})), 128u); }

TEST(OptimalP, DegenerateCoefficients) {
  EXPECT_EQ(optimal_P(theta(10, 1000, 0.0, {{4, 0}, {8, 0}, {32, 0}})), 32u);
  EXPECT_EQ(optimal_P(theta(10, 0.0, 0.1, {{4, 0}, {8, 0}, {32, 0}})), 4u);
}

TEST(OptimalP, RoundsToTheBetterNeighbour) {
  // sqrt(1000 / 0.09) = 105.4; compare 105 and 106 by predicted time.
  const CostModelParams p = theta(0, 1000, 0.09, {{1, 0}, {1000, 0}});
  const std::uint64_t expected = predict_time(p, 106) < predict_time(p, 105) ? 106 : 105;
  EXPECT_EQ(optimal_P(p), expected);
}

TEST(OptimalP, UnfittedRejected) { EXPECT_THROW(optimal_P(theta(1, 1, 1)), UnfittedModelError); }

TEST(SampleSearch, HandTraceOfTheReferenceCurve) {
  const auto samples = sample_search(curve(10, 1000, 0.1), 8, 0.10, 1 << 20);
  EXPECT_EQ(partitions_of(samples), (std::vector<std::uint64_t>{4, 8, 16, 32, 64, 128}));
}

TEST(SampleSearch, IncreasingEvaluatorWalksDownToOne) {
  const auto samples = sample_search([](std::uint64_t p) { return static_cast<double>(p); }, 4, 0.10, 1 << 20);
  EXPECT_EQ(partitions_of(samples), (std::vector<std::uint64_t>{1, 2, 4, 8}));
}

TEST(SampleSearch, ConstantEvaluatorProbesOneStepEachWay) {
  const auto samples = sample_search([](std::uint64_t) { return 5.0; }, 8, 0.10, 1 << 20);
  EXPECT_EQ(partitions_of(samples), (std::vector<std::uint64_t>{4, 8, 16}));
}

TEST(SampleSearch, EachPartitionCountEvaluatedOnce) {
  std::map<std::uint64_t, int> calls;
  sample_search(
      [&](std::uint64_t p) {
        ++calls[p];
        return curve(10, 1000, 0.1)(p);
      },
      8, 0.10, 1 << 20);
  for (const auto& [p, n] : calls) EXPECT_EQ(n, 1) << p;
}

TEST(SampleSearch, StopsAtMaxP) {
  const auto samples = sample_search(curve(0, 1e6, 0.0), 4, 0.10, 16);
  EXPECT_EQ(samples.back().partitions, 16u);
}

TEST(SampleSearch, ZeroThresholdStopsOnFirstIncrease) {
  // 64 -> 128 still improves by 1.4 units, which a 10% rule would ignore.
  const auto samples = sample_search(curve(10, 1000, 0.1), 8, 0.0, 1 << 20);
  EXPECT_EQ(partitions_of(samples), (std::vector<std::uint64_t>{4, 8, 16, 32, 64, 128, 256}));
}

TEST(SampleSearch, EvaluatorFailureCarriesPartitionCount) {
  try {
    sample_search(
        [](std::uint64_t p) -> double {
          if (p == 32) throw std::runtime_error("out of memory");
          return 1000.0 / static_cast<double>(p);
        },
        8, 0.10, 1 << 20);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_EQ(e.partitions(), 32u);
    EXPECT_NE(std::string(e.what()).find("out of memory"), std::string::npos);
  }
}

TEST(TuneWithEvaluator, RecoversReferenceOptimum) {
  const TuneResult r = tune_with_evaluator(curve(10, 1000, 0.1), 8, 0.10, 1 << 20);
  EXPECT_EQ(r.best_P, 100u);
  EXPECT_EQ(r.samples_taken, 6u);
  EXPECT_NEAR(r.predicted_time_us, 30.0, 1e-6);
}

TEST(Tune, LanguageModelOnEightBySixCluster) {
  const GraphSpec g = testing::load_graph_fixture("lm.json");
  const ClusterSpec c = testing::load_cluster_fixture("cluster8x6.json");
  const auto builder = [&](std::uint64_t p) { return transform_hybrid(g, c, {}, uniform_partitions(g, p)); };
  const TuneResult r = tune(g, c, builder, ComputeProfile::from_graph(g));
  EXPECT_LE(r.samples_taken, 12u);
  EXPECT_GE(r.best_P, r.params.samples.front().partitions);
  EXPECT_LE(r.best_P, r.params.samples.back().partitions);
  EXPECT_GT(r.best_P, 8u);
}

TEST(Tune, GraphWithoutSparseVariablesRejected) {
  const GraphSpec g = testing::load_graph_fixture("resnet50.json");
  const ClusterSpec c = testing::load_cluster_fixture("cluster8x6.json");
  EXPECT_THROW(tune(g, c, [&](std::uint64_t) { return transform_ar(g, c); }, ComputeProfile::from_graph(g)), TuneError);
}

TEST(Tune, LinearOverheadProfileLandsNearCurveMinimum) {
  // Per-partition aggregation work falls as 1/P and stitching grows as P, so
  // the simulated time is exactly Eq.-shaped in P on partition counts that divide the variable.
  const GraphSpec g = make_graph({sparse_var("emb", 1 << 20, 1.0, true, 4)}, 1000.0);
  const ClusterSpec c = make_cluster(4, 1, 100.0, 0.0);
  ComputeProfile profile = ComputeProfile::from_graph(g);
  profile.partition_overhead_us = 5.0;
  profile.agg_us_per_mb = 200.0;
  const auto builder = [&](std::uint64_t p) { return transform_ps(g, c, true, uniform_partitions(g, p)); };
  const TuneResult r = tune(g, c, builder, profile);
  const double ideal = std::sqrt(r.params.theta1 / r.params.theta2);
  ASSERT_GE(ideal, static_cast<double>(r.params.samples.front().partitions));
  ASSERT_LE(ideal, static_cast<double>(r.params.samples.back().partitions));
  EXPECT_LE(std::abs(static_cast<double>(r.best_P) - ideal), 1.0);
}

TEST(UniformPartitions, OnlyPartitionableVariablesAndClamped) {
  const GraphSpec g = make_graph({dense_var("d", 100), sparse_var("s", 10, 0.5), sparse_var("t", 100, 0.5, false)});
  const PartitionMap m = uniform_partitions(g, 64);
  EXPECT_EQ(m, (PartitionMap{{"s", 10}}));
}

TEST(TunerProperties, FitIdempotenceOnRandomCurves) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> t0(0.0, 1e5), t1(1.0, 1e6), t2(1e-3, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = t0(rng), b = t1(rng), c = t2(rng);
    std::vector<Sample> samples;
    const int count = std::uniform_int_distribution<int>(3, 8)(rng);
    std::uint64_t p = std::uniform_int_distribution<std::uint64_t>(1, 8)(rng);
    for (int i = 0; i < count; ++i, p *= 2) samples.push_back({p, curve(a, b, c)(p)});
    const CostModelParams fit = fit_theta(samples);
    ASSERT_NEAR(fit.theta1, b, 1e-6 * b) << trial;
    ASSERT_NEAR(fit.theta2, c, 1e-6 * c) << trial;
    ASSERT_NEAR(fit.theta0, a, 1e-6 * std::max(1.0, a) + 1e-9 * (b + c * 1024)) << trial;
  }
}

TEST(TunerProperties, ScaleInvarianceOfBestP) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> noise(0.9, 1.1), scale(1e-3, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Sample> samples;
    for (std::uint64_t p = 2; p <= 256; p *= 2) samples.push_back({p, curve(50, 4000, 0.5)(p) * noise(rng)});
    const double k = scale(rng);
    std::vector<Sample> scaled = samples;
    for (auto& s : scaled) s.time_us *= k;
    const CostModelParams a = fit_theta(samples);
    const CostModelParams b = fit_theta(scaled);
    ASSERT_NEAR(b.theta1, k * a.theta1, 1e-6 * std::max(1.0, k * a.theta1));
    ASSERT_NEAR(b.theta2, k * a.theta2, 1e-6 * std::max(1.0, k * a.theta2));
    ASSERT_EQ(optimal_P(a), optimal_P(b)) << trial;
  }
}

TEST(TunerProperties, BestPNeverExtrapolates) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> t(0.0, 1e4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Sample> samples;
    const std::uint64_t lo = std::uniform_int_distribution<std::uint64_t>(1, 32)(rng);
    const int count = std::uniform_int_distribution<int>(3, 7)(rng);
    for (int i = 0; i < count; ++i) samples.push_back({lo << i, t(rng)});
    const CostModelParams fit = fit_theta(samples);
    ASSERT_GE(fit.theta1, 0.0);
    ASSERT_GE(fit.theta2, 0.0);
    const std::uint64_t best = optimal_P(fit);
    ASSERT_GE(best, samples.front().partitions);
    ASSERT_LE(best, samples.back().partitions);
  }
}

TEST(TunerProperties, FittedCurveIsConvex) {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> t(1.0, 1e4);
  for (int trial = 0; trial < 200; ++trial) {
    const CostModelParams p = theta(t(rng), t(rng), t(rng) * 1e-3);
    for (std::uint64_t x = 2; x < 200; ++x) {
      ASSERT_GT(predict_time(p, x - 1) + predict_time(p, x + 1) - 2 * predict_time(p, x), 0.0);
    }
  }
}

TEST(TunerProperties, SearchEconomy) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 300; ++trial) {
    const std::uint64_t start = std::uint64_t{1} << std::uniform_int_distribution<int>(0, 6)(rng);
    const std::uint64_t max_p = start << std::uniform_int_distribution<int>(0, 8)(rng);
    std::uniform_real_distribution<double> t(1.0, 100.0);
    std::mt19937_64 eval_rng(rng());
    const auto samples = sample_search([&](std::uint64_t) { return t(eval_rng); }, start, 0.1, max_p);
    const double bound = 2 + std::log2(static_cast<double>(max_p) / start) + std::log2(static_cast<double>(start));
    ASSERT_LE(static_cast<double>(samples.size()), bound) << trial;
  }
}

}  // namespace
}  // namespace hybridpar
