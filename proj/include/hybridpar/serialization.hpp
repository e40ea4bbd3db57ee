// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hybridpar/comm_cost.hpp"
#include "hybridpar/graph_model.hpp"
#include "hybridpar/net_sim.hpp"
#include "hybridpar/partition_tuner.hpp"
#include "hybridpar/placement.hpp"

namespace hybridpar {

using nlohmann::json;

void to_json(json& j, const VariableSpec& v);
void to_json(json& j, const GraphSpec& g);
void to_json(json& j, const ClusterSpec& c);

void to_json(json& j, const PlacedNode& n);
void from_json(const json& j, PlacedNode& n);
void to_json(json& j, const DistributedPlan& p);
void from_json(const json& j, DistributedPlan& p);

void to_json(json& j, const TransferReport& r);
void from_json(const json& j, TransferReport& r);

void to_json(json& j, const Message& m);
void from_json(const json& j, Message& m);
void to_json(json& j, const IterationStats& s);
void from_json(const json& j, IterationStats& s);

void to_json(json& j, const Sample& s);
void from_json(const json& j, Sample& s);
void to_json(json& j, const CostModelParams& p);
void from_json(const json& j, CostModelParams& p);
void to_json(json& j, const TuneResult& r);
void from_json(const json& j, TuneResult& r);

// Parses a plan document; throws ParseError or ValidationError.
DistributedPlan plan_from_json_text(std::string_view text);

// One row per machine: machine,egress_bytes,ingress_bytes,total_bytes
std::string transfer_report_csv(const TransferReport& report);

// One JSON object per line, in trace order.
std::string trace_json_lines(const std::vector<Message>& trace);

// Shortest round-trip decimal form, shared by every CSV writer.
std::string format_number(double value);

}  // namespace hybridpar
