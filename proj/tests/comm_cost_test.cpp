// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "hybridpar/comm_cost.hpp"
#include "hybridpar/placement.hpp"
#include "test_support.hpp"

namespace hybridpar {
namespace {

using testing::dense_var;
using testing::make_cluster;
using testing::make_graph;
using testing::sparse_var;

// Independent oracle: enumerate the point-to-point transfers of each pattern
// and tally them per machine, without the closed forms.
std::vector<MachineTraffic> enumerate_ps(std::uint32_t n, std::uint32_t owner, std::uint64_t payload) {
  std::vector<MachineTraffic> t(n);
  for (std::uint32_t m = 0; m < n; ++m) {
    if (m == owner) continue;
    t[m].egress_bytes += payload;  // push gradient
    t[owner].ingress_bytes += payload;
    t[owner].egress_bytes += payload;  // pull new value
    t[m].ingress_bytes += payload;
  }
  return t;
}

std::vector<MachineTraffic> enumerate_ring(std::uint32_t n, std::uint64_t w) {
  std::vector<MachineTraffic> t(n);
  if (n < 2) return t;
  const std::uint64_t chunk = (w + n - 1) / n;
  for (std::uint32_t step = 0; step < 2 * (n - 1); ++step) {
    for (std::uint32_t i = 0; i < n; ++i) {
      t[i].egress_bytes += chunk;
      t[(i + 1) % n].ingress_bytes += chunk;
    }
  }
  return t;
}

std::vector<MachineTraffic> enumerate_gather(std::uint32_t n, std::uint64_t payload) {
  std::vector<MachineTraffic> t(n);
  for (std::uint32_t step = 0; step + 1 < n; ++step) {
    for (std::uint32_t i = 0; i < n; ++i) {
      t[i].egress_bytes += payload;
      t[(i + 1) % n].ingress_bytes += payload;
    }
  }
  return t;
}

TEST(TransferOneVariable, DensePsOwnerCarriesNMinusOneShares) {
  const TransferReport r = transfer_one_variable(dense_var("w", 1000), Mechanism::PS, make_cluster(4), 0u);
  EXPECT_EQ(r.per_machine[0].total(), 6000u);
  EXPECT_EQ(r.per_machine[0].egress_bytes, 3000u);
  EXPECT_EQ(r.per_machine[0].ingress_bytes, 3000u);
  for (int m = 1; m < 4; ++m) EXPECT_EQ(r.per_machine[m].total(), 2000u);
  EXPECT_EQ(r.per_machine, enumerate_ps(4, 0, 1000));
  EXPECT_EQ(r.bottleneck_machine, 0u);
  EXPECT_EQ(r.bottleneck_bytes(), 3000u);
}

TEST(TransferOneVariable, DenseArRingShares) {
  // 1500 bytes each way per machine; both directions together give 4w(N-1)/N = 3000.
  const TransferReport r = transfer_one_variable(dense_var("w", 1000), Mechanism::AR, make_cluster(4), std::nullopt);
  for (const auto& t : r.per_machine) {
    EXPECT_EQ(t.egress_bytes, 1500u);
    EXPECT_EQ(t.ingress_bytes, 1500u);
    EXPECT_EQ(t.total(), 4u * 1000 * 3 / 4);
  }
  EXPECT_EQ(r.per_machine, enumerate_ring(4, 1000));
}

TEST(TransferOneVariable, SingleMachineMovesNothing) {
  for (Mechanism mech : {Mechanism::AR, Mechanism::PS}) {
    for (const VariableSpec& v : {dense_var("d", 100), sparse_var("s", 100, 0.3)}) {
      const auto owner = mech == Mechanism::PS ? std::optional<std::uint32_t>(0) : std::nullopt;
      const TransferReport r = transfer_one_variable(v, mech, make_cluster(1), owner);
      ASSERT_EQ(r.per_machine.size(), 1u);
      EXPECT_EQ(r.per_machine[0].total(), 0u);
      EXPECT_EQ(r.total_bytes, 0u);
    }
  }
}

TEST(TransferOneVariable, SparseArAllGathervShares) {
  // alpha w = 1000, 2 alpha w (N-1) = 8000 split evenly per direction.
  const TransferReport r =
      transfer_one_variable(sparse_var("s", 10000, 0.1), Mechanism::AR, make_cluster(5), std::nullopt);
  for (const auto& t : r.per_machine) {
    EXPECT_EQ(t.egress_bytes, 4000u);
    EXPECT_EQ(t.ingress_bytes, 4000u);
  }
  EXPECT_EQ(r.per_machine, enumerate_gather(5, 1000));
}

TEST(TransferOneVariable, SparsePsUsesTouchedShare) {
  const TransferReport r = transfer_one_variable(sparse_var("s", 10000, 0.1), Mechanism::PS, make_cluster(5), 2u);
  EXPECT_EQ(r.per_machine, enumerate_ps(5, 2, 1000));
  EXPECT_EQ(r.per_machine[2].total(), 2u * 1000 * 4);
  EXPECT_EQ(r.per_machine[0].total(), 2000u);
}

TEST(TransferOneVariable, OwnerRules) {
  const ClusterSpec c = make_cluster(3);
  EXPECT_THROW(transfer_one_variable(dense_var("w", 10), Mechanism::PS, c, 3u), std::out_of_range);
  EXPECT_THROW(transfer_one_variable(dense_var("w", 10), Mechanism::PS, c, std::nullopt), std::invalid_argument);
  EXPECT_THROW(transfer_one_variable(dense_var("w", 10), Mechanism::AR, c, 0u), std::invalid_argument);
}

TEST(TransferOneVariable, SparseIndexBytesOptional) {
  const VariableSpec s = sparse_var("s", 1000, 0.1, true, 4);
  const auto plain = transfer_one_variable(s, Mechanism::PS, make_cluster(2), 0u);
  const auto indexed = transfer_one_variable(s, Mechanism::PS, make_cluster(2), 0u, {true});
  // 100 touched rows: 400 value bytes plus 400 index bytes.
  EXPECT_EQ(plain.per_machine[1].egress_bytes, 400u);
  EXPECT_EQ(indexed.per_machine[1].egress_bytes, 800u);
}

TEST(TransferModel, BalancedDensePsMatchesManyVariableFormula) {
  std::vector<VariableSpec> vars;
  for (int i = 0; i < 4; ++i) vars.push_back(dense_var("v" + std::to_string(i), 1000));
  const GraphSpec g = make_graph(vars);
  const ClusterSpec c = make_cluster(4);
  const DistributedPlan plan = transform_ps(g, c, true);
  const TransferReport r = transfer_model(g, plan, c);
  // 4wm(N-1)/N with w = 1000, m = 4, N = 4 -> 12000 per machine, 6000 each way.
  for (const auto& t : r.per_machine) {
    EXPECT_EQ(t.egress_bytes, 6000u);
    EXPECT_EQ(t.ingress_bytes, 6000u);
  }
}

TEST(TransferModel, DenseGraphPsEqualsAr) {
  std::vector<VariableSpec> vars;
  for (int i = 0; i < 8; ++i) vars.push_back(dense_var("v" + std::to_string(i), 800));
  const GraphSpec g = make_graph(vars);
  const ClusterSpec c = make_cluster(8);
  const auto ps = transfer_model(g, transform_ps(g, c, true), c);
  const auto ar = transfer_model(g, transform_ar(g, c), c);
  EXPECT_EQ(ps.per_machine, ar.per_machine);
  EXPECT_EQ(ar.per_machine[0].total(), 4ull * 800 * 8 * 7 / 8);
}

TEST(TransferModel, SparseGraphArOverPsIsHalfTheMachines) {
  for (std::uint32_t n = 2; n <= 8; ++n) {
    std::vector<VariableSpec> vars;
    for (std::uint32_t i = 0; i < n; ++i) vars.push_back(sparse_var("s" + std::to_string(i), 10000, 0.1, false));
    const GraphSpec g = make_graph(vars);
    const ClusterSpec c = make_cluster(n);
    const auto ps = transfer_model(g, transform_ps(g, c, true), c);
    const auto ar = transfer_model(g, transform_ar(g, c), c);
    for (std::uint32_t m = 0; m < n; ++m) {
      // AR * 2 == PS * N is the exact form of AR / PS = N / 2.
      EXPECT_EQ(2 * ar.per_machine[m].total(), n * ps.per_machine[m].total()) << "N=" << n;
    }
  }
}

TEST(TransferModel, PartitionedPiecesSumToWhole) {
  const GraphSpec g = make_graph({sparse_var("s", 12000, 0.25)});
  const ClusterSpec c = make_cluster(3);
  const auto plan = transform_ps(g, c, true, {{"s", 6}});
  const auto r = transfer_model(g, plan, c);
  // Each of the 6 pieces moves 500 touched bytes; 2 pieces are homed per server.
  for (const auto& t : r.per_machine) {
    EXPECT_EQ(t.egress_bytes, 2u * 500 * 2 + 4u * 500);
    EXPECT_EQ(t.egress_bytes, t.ingress_bytes);
  }
}

TEST(CompareArchitectures, LanguageModelHybridBeatsAr) {
  const GraphSpec g = testing::load_graph_fixture("lm.json");
  const ClusterSpec c = testing::load_cluster_fixture("cluster8x6.json");
  const auto table = compare_architectures(g, c, {}, {{"embedding", 128}, {"softmax", 128}});
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_LT(table.find(Architecture::hybrid)->bottleneck_bytes, table.find(Architecture::AR)->bottleneck_bytes);
  EXPECT_LE(table.find(Architecture::hybrid)->bottleneck_bytes, table.find(Architecture::PS_opt)->bottleneck_bytes);
}

TEST(CompareArchitectures, DenseOnlyHybridRowEqualsAr) {
  const GraphSpec g = testing::load_graph_fixture("resnet50.json");
  const ClusterSpec c = testing::load_cluster_fixture("cluster8x6.json");
  const auto table = compare_architectures(g, c);
  const auto* ar = table.find(Architecture::AR);
  const auto* hy = table.find(Architecture::hybrid);
  EXPECT_EQ(hy->bottleneck_bytes, ar->bottleneck_bytes);
  EXPECT_EQ(hy->transfer, ar->transfer);
  EXPECT_DOUBLE_EQ(hy->analytic_time_us, ar->analytic_time_us);
}

TEST(CompareArchitectures, SparseOnlyArIsFourTimesPsOnEightMachines) {
  std::vector<VariableSpec> vars;
  for (int i = 0; i < 8; ++i) vars.push_back(sparse_var("s" + std::to_string(i), 80000, 0.05, false));
  const GraphSpec g = make_graph(vars);
  const auto table = compare_architectures(g, make_cluster(8));
  EXPECT_EQ(table.find(Architecture::AR)->bottleneck_bytes, 4 * table.find(Architecture::PS_opt)->bottleneck_bytes);
}

TEST(CompareArchitectures, AnalyticTimeIsBottleneckOverBandwidthPlusCompute) {
  const GraphSpec g = make_graph({dense_var("w", 1000000, 4)}, 500.0);
  const ClusterSpec c = make_cluster(4, 1, 10.0);
  const auto table = compare_architectures(g, c);
  const auto* ar = table.find(Architecture::AR);
  EXPECT_DOUBLE_EQ(ar->analytic_time_us, static_cast<double>(ar->bottleneck_bytes) / 1250.0 + 500.0);
}

TEST(CommCostProperties, ConservationAndOracleAgreement) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 400; ++trial) {
    const std::uint32_t n = std::uniform_int_distribution<std::uint32_t>(1, 8)(rng);
    const std::uint64_t elements = std::uniform_int_distribution<std::uint64_t>(1, 100000)(rng);
    const double alpha = std::uniform_real_distribution<double>(0.001, 1.0)(rng);
    const VariableSpec d = dense_var("d", elements, 4);
    const VariableSpec s = sparse_var("s", elements, alpha, false, 4);
    const std::uint32_t owner = std::uniform_int_distribution<std::uint32_t>(0, n - 1)(rng);
    const ClusterSpec c = make_cluster(n);

    const auto dps = transfer_one_variable(d, Mechanism::PS, c, owner);
    const auto sps = transfer_one_variable(s, Mechanism::PS, c, owner);
    const auto dar = transfer_one_variable(d, Mechanism::AR, c, std::nullopt);
    const auto sar = transfer_one_variable(s, Mechanism::AR, c, std::nullopt);
    ASSERT_EQ(dps.per_machine, enumerate_ps(n, owner, d.size_bytes()));
    ASSERT_EQ(sps.per_machine, enumerate_ps(n, owner, payload_bytes(s)));
    ASSERT_EQ(dar.per_machine, enumerate_ring(n, d.size_bytes()));
    ASSERT_EQ(sar.per_machine, enumerate_gather(n, payload_bytes(s)));
    for (const auto* r : {&dps, &sps, &dar, &sar}) {
      std::uint64_t eg = 0, in = 0;
      for (const auto& t : r->per_machine) {
        eg += t.egress_bytes;
        in += t.ingress_bytes;
      }
      ASSERT_EQ(eg, in);
      ASSERT_EQ(r->total_bytes, eg + in);
      ASSERT_EQ(r->bottleneck_bytes(), [&] {
        std::uint64_t worst = 0;
        for (const auto& t : r->per_machine) worst = std::max({worst, t.egress_bytes, t.ingress_bytes});
        return worst;
      }());
    }
    if (n >= 2) {
      // Owner asymmetry of dense PS.
      const std::uint32_t other = (owner + 1) % n;
      ASSERT_EQ(dps.per_machine[owner].total(), (n - 1) * dps.per_machine[other].total());
    }
  }
}

TEST(CommCostProperties, SparseTotalsStrictlyIncreaseWithAlpha) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const std::uint32_t n = std::uniform_int_distribution<std::uint32_t>(2, 8)(rng);
    const std::uint64_t elements = std::uniform_int_distribution<std::uint64_t>(1000, 1000000)(rng);
    const double a1 = std::uniform_real_distribution<double>(0.001, 0.9)(rng);
    // Separate the two alphas by at least one element so the touched count differs.
    const double a2 = std::min(1.0, a1 + 2.0 / static_cast<double>(elements) +
                                        std::uniform_real_distribution<double>(0.0, 0.1)(rng));
    const ClusterSpec c = make_cluster(n);
    for (Mechanism mech : {Mechanism::AR, Mechanism::PS}) {
      const auto owner = mech == Mechanism::PS ? std::optional<std::uint32_t>(0) : std::nullopt;
      const auto lo = transfer_one_variable(sparse_var("s", elements, a1, false, 4), mech, c, owner);
      const auto hi = transfer_one_variable(sparse_var("s", elements, a2, false, 4), mech, c, owner);
      ASSERT_LT(lo.total_bytes, hi.total_bytes);
    }
  }
}

}  // namespace
}  // namespace hybridpar
