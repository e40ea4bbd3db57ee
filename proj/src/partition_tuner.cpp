// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hybridpar/partition_tuner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Dense>

namespace hybridpar {
namespace {

struct Fit {
  std::array<double, 3> theta{0.0, 0.0, 0.0};
  double sse = std::numeric_limits<double>::infinity();
};

double basis(int column, double p) {
  switch (column) {
    case 0: return 1.0;
    case 1: return 1.0 / p;
    default: return p;
  }
}

// Least squares over the given free columns; the others are pinned at zero.
// Columns are scaled to unit norm before the QR solve.
Fit solve_subset(const std::vector<Sample>& samples, const std::vector<int>& free) {
  const auto rows = static_cast<Eigen::Index>(samples.size());
  const auto cols = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double p = static_cast<double>(samples[i].partitions);
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = basis(free[j], p);
    y(i) = samples[i].time_us;
  }
  Eigen::VectorXd scale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (scale(j) > 0.0) a.col(j) /= scale(j);
  }
  const Eigen::VectorXd scaled = a.colPivHouseholderQr().solve(y);

  Fit fit;
  for (Eigen::Index j = 0; j < cols; ++j) fit.theta[free[j]] = scale(j) > 0.0 ? scaled(j) / scale(j) : 0.0;
  fit.sse = 0.0;
  for (const auto& s : samples) {
    const double p = static_cast<double>(s.partitions);
    const double r = s.time_us - (fit.theta[0] + fit.theta[1] / p + fit.theta[2] * p);
    fit.sse += r * r;
  }
  return fit;
}

double evaluate_at(const Evaluator& evaluator, std::uint64_t partitions) {
  try {
    return evaluator(partitions);
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(partitions, e.what());
  }
}

std::size_t distinct_partitions(const std::vector<Sample>& samples) {
  std::set<std::uint64_t> ps;
  for (const auto& s : samples) ps.insert(s.partitions);
  return ps.size();
}

}  // namespace

double predict_time(const CostModelParams& params, std::uint64_t partitions) {
  const double p = static_cast<double>(std::max<std::uint64_t>(partitions, 1));
  return params.theta0 + params.theta1 / p + params.theta2 * p;
}

CostModelParams fit_theta(const std::vector<Sample>& samples) {
  if (distinct_partitions(samples) < 3) {
    throw InsufficientSamplesError("fitting needs samples at 3 or more distinct partition counts");
  }
  // Exact solution of the two-sided nonnegativity constraint: fit every
  // active set and keep the best feasible one.
  const std::vector<std::vector<int>> candidates{{0, 1, 2}, {0, 2}, {0, 1}, {0}};
  Fit best;
  for (const auto& free : candidates) {
    Fit fit = solve_subset(samples, free);
    if (fit.theta[1] < 0.0 || fit.theta[2] < 0.0) continue;
    if (fit.sse < best.sse) best = fit;
  }
  CostModelParams params;
  params.theta0 = best.theta[0];
  params.theta1 = best.theta[1];
  params.theta2 = best.theta[2];
  params.samples = samples;
  return params;
}

std::uint64_t optimal_P(const CostModelParams& params) {
  if (params.samples.empty()) throw UnfittedModelError("optimal_P needs a fitted model with samples");
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t hi = 0;
  for (const auto& s : params.samples) {
    lo = std::min(lo, s.partitions);
    hi = std::max(hi, s.partitions);
  }
  if (params.theta1 <= 0.0) return lo;
  if (params.theta2 <= 0.0) return hi;

  const double x = std::sqrt(params.theta1 / params.theta2);
  if (x >= static_cast<double>(hi)) return hi;
  if (x <= static_cast<double>(lo)) return lo;
  const auto down = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(x)));
  const auto up = static_cast<std::uint64_t>(std::ceil(x));
  const std::uint64_t pick = predict_time(params, up) < predict_time(params, down) ? up : down;
  return std::clamp(pick, lo, hi);
}

std::vector<Sample> sample_search(const Evaluator& evaluator, std::uint64_t start_P, double threshold,
                                  std::uint64_t max_P) {
  max_P = std::max<std::uint64_t>(max_P, 1);
  start_P = std::clamp<std::uint64_t>(start_P, 1, max_P);
  auto improves = [threshold](double previous, double next) { return previous - next > threshold * previous; };

  std::vector<Sample> samples;
  const double start_time = evaluate_at(evaluator, start_P);
  samples.push_back({start_P, start_time});

  double previous = start_time;
  for (std::uint64_t p = start_P; p <= max_P / 2;) {
    p *= 2;
    const double t = evaluate_at(evaluator, p);
    samples.push_back({p, t});
    if (!improves(previous, t)) break;
    previous = t;
  }

  previous = start_time;
  for (std::uint64_t p = start_P; p > 1;) {
    p /= 2;
    const double t = evaluate_at(evaluator, p);
    samples.push_back({p, t});
    if (!improves(previous, t)) break;
    previous = t;
  }

  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.partitions < b.partitions; });
  return samples;
}

TuneResult tune_with_evaluator(const Evaluator& evaluator, std::uint64_t start_P, double threshold,
                               std::uint64_t max_P) {
  std::vector<Sample> samples = sample_search(evaluator, start_P, threshold, max_P);
  // A search pinned against P=1 or max_P can end with two points; widen it.
  while (distinct_partitions(samples) < 3) {
    const std::uint64_t hi = samples.back().partitions;
    const std::uint64_t lo = samples.front().partitions;
    std::uint64_t probe = 0;
    if (hi <= max_P / 2) {
      probe = hi * 2;
    } else if (lo > 1) {
      probe = lo / 2;
    } else {
      throw InsufficientSamplesError("partition range too narrow to fit the cost model");
    }
    samples.push_back({probe, evaluate_at(evaluator, probe)});
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.partitions < b.partitions; });
  }

  TuneResult result;
  result.params = fit_theta(samples);
  result.best_P = optimal_P(result.params);
  result.samples_taken = samples.size();
  result.predicted_time_us = predict_time(result.params, result.best_P);
  return result;
}

PartitionMap uniform_partitions(const GraphSpec& graph, std::uint64_t partitions) {
  PartitionMap map;
  for (const auto& v : graph.variables) {
    if (v.partitionable) map[v.name] = std::clamp<std::uint64_t>(partitions, 1, v.elements);
  }
  return map;
}

TuneResult tune(const GraphSpec& graph, const ClusterSpec& cluster, const PlanBuilder& plan_builder,
                const ComputeProfile& profile, const TuneOptions& options) {
  std::uint64_t bound = 0;
  for (const auto& v : graph.variables) {
    if (v.partitionable && v.is_sparse()) bound = bound == 0 ? v.elements : std::min(bound, v.elements);
  }
  if (bound == 0) throw TuneError("graph '" + graph.name + "' has no partitionable sparse variable");
  for (const auto& v : graph.variables) {
    if (v.partitionable) bound = std::min(bound, v.elements);
  }
  if (options.max_P > 0) bound = std::min(bound, options.max_P);

  const Evaluator evaluator = [&](std::uint64_t p) {
    const DistributedPlan plan = plan_builder(p);
    return simulate_training(plan, graph, cluster, profile, options.iterations, options.training).mean_iter_time_us;
  };
  return tune_with_evaluator(evaluator, cluster.machines, options.threshold, bound);
}

}  // namespace hybridpar
