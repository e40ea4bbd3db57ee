// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hybridpar/graph_model.hpp"
#include "hybridpar/net_sim.hpp"
#include "hybridpar/placement.hpp"

namespace hybridpar {

struct Sample {
  std::uint64_t partitions = 1;
  double time_us = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// iter_time(P) = fixed + parallel / P + overhead * P
struct CostModelParams {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::vector<Sample> samples;

  friend bool operator==(const CostModelParams&, const CostModelParams&) = default;
};

struct TuneResult {
  std::uint64_t best_P = 1;
  CostModelParams params;
  std::uint64_t samples_taken = 0;
  double predicted_time_us = 0.0;

  friend bool operator==(const TuneResult&, const TuneResult&) = default;
};

using Evaluator = std::function<double(std::uint64_t partitions)>;
using PlanBuilder = std::function<DistributedPlan(std::uint64_t partitions)>;

double predict_time(const CostModelParams& params, std::uint64_t partitions);

// Least squares in the basis (1, 1/P, P) with theta1, theta2 >= 0. Throws
// InsufficientSamplesError with fewer than three distinct P.
CostModelParams fit_theta(const std::vector<Sample>& samples);

// Integer minimizer of the fitted model, restricted to the sampled P range.
std::uint64_t optimal_P(const CostModelParams& params);

// Adaptive doubling then halving from start_P, continuing in each direction
// only while a probe improves on the previous one by more than `threshold`.
std::vector<Sample> sample_search(const Evaluator& evaluator, std::uint64_t start_P, double threshold = 0.10,
                                  std::uint64_t max_P = std::uint64_t{1} << 20);

struct TuneOptions {
  double threshold = 0.10;
  std::uint32_t iterations = 100;
  TrainingOptions training;
  // 0 means "bounded by the smallest partitionable variable".
  std::uint64_t max_P = 0;
};

// search + fit + argmin against an arbitrary evaluator.
TuneResult tune_with_evaluator(const Evaluator& evaluator, std::uint64_t start_P, double threshold,
                               std::uint64_t max_P);

// Tunes one shared P for every partitionable variable, scoring each candidate
// with simulate_training on plan_builder(P). Starts from the machine count.
TuneResult tune(const GraphSpec& graph, const ClusterSpec& cluster, const PlanBuilder& plan_builder,
                const ComputeProfile& profile, const TuneOptions& options = {});

// Same P for every partitionable variable of the graph.
PartitionMap uniform_partitions(const GraphSpec& graph, std::uint64_t partitions);

}  // namespace hybridpar
