// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hybridpar/serialization.hpp"

#include <sstream>

namespace hybridpar {
namespace {

json location_json(const Location& loc) { return json{{"machine", loc.machine}, {"device", to_string(loc.device)}}; }

Location location_from(const json& j) {
  return Location{j.at("machine").get<std::uint32_t>(), device_from_string(j.at("device").get<std::string>())};
}

}  // namespace

void to_json(json& j, const VariableSpec& v) {
  j = json{{"name", v.name},         {"elements", v.elements}, {"elem_bytes", v.elem_bytes},
           {"alpha", v.alpha},       {"kind", to_string(v.kind)}, {"partitionable", v.partitionable}};
}

void to_json(json& j, const GraphSpec& g) {
  j = json{{"name", g.name},
           {"batch_per_gpu", g.batch_per_gpu},
           {"compute_us_per_gpu", g.compute_us_per_gpu},
           {"variables", g.variables}};
}

void to_json(json& j, const ClusterSpec& c) {
  j = json{{"machines", c.machines},
           {"gpus_per_machine", c.gpus_per_machine},
           {"nic_gbps", c.nic_gbps},
           {"latency_us", c.latency_us},
           {"intra_gbps", c.intra_gbps}};
}

void to_json(json& j, const PlacedNode& n) {
  j = json{{"id", n.id}, {"role", to_string(n.role)}, {"machine", n.location.machine},
           {"device", to_string(n.location.device)}, {"chief", n.chief}};
  j["variable"] = n.variable ? json(*n.variable) : json(nullptr);
  j["partition"] = n.partition ? json(*n.partition) : json(nullptr);
}

void from_json(const json& j, PlacedNode& n) {
  n.id = j.at("id").get<std::string>();
  n.role = node_role_from_string(j.at("role").get<std::string>());
  n.location = location_from(j);
  n.chief = j.value("chief", false);
  n.variable.reset();
  n.partition.reset();
  if (j.contains("variable") && !j.at("variable").is_null()) n.variable = j.at("variable").get<std::string>();
  if (j.contains("partition") && !j.at("partition").is_null()) n.partition = j.at("partition").get<std::uint64_t>();
}

void to_json(json& j, const DistributedPlan& p) {
  json mechs = json::object();
  for (const auto& [name, mech] : p.mech_of) mechs[name] = to_string(mech);
  j = json{{"architecture", to_string(p.architecture)},
           {"nodes", p.nodes},
           {"mechanisms", mechs},
           {"partitions", p.partitions_of},
           {"chief", json{{"machine", p.chief.machine}, {"gpu", p.chief.gpu}}},
           {"local_agg", p.local_agg_enabled}};
}

void from_json(const json& j, DistributedPlan& p) {
  p.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  p.nodes = j.at("nodes").get<std::vector<PlacedNode>>();
  p.mech_of.clear();
  for (const auto& [name, mech] : j.at("mechanisms").items()) p.mech_of[name] = mechanism_from_string(mech.get<std::string>());
  p.partitions_of = j.at("partitions").get<std::map<std::string, std::uint64_t>>();
  p.chief = GpuId{j.at("chief").at("machine").get<std::uint32_t>(), j.at("chief").at("gpu").get<std::uint32_t>()};
  p.local_agg_enabled = j.at("local_agg").get<bool>();
}

DistributedPlan plan_from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed plan: ") + e.what());
  }
  try {
    return doc.get<DistributedPlan>();
  } catch (const json::exception& e) {
    throw ValidationError("plan", e.what());
  }
}

void to_json(json& j, const TransferReport& r) {
  json machines = json::array();
  for (std::size_t m = 0; m < r.per_machine.size(); ++m) {
    const auto& t = r.per_machine[m];
    machines.push_back({{"machine", m}, {"egress_bytes", t.egress_bytes}, {"ingress_bytes", t.ingress_bytes}});
  }
  j = json{{"per_machine", machines}, {"bottleneck_machine", r.bottleneck_machine}, {"total_bytes", r.total_bytes}};
}

void from_json(const json& j, TransferReport& r) {
  std::vector<MachineTraffic> machines;
  for (const auto& m : j.at("per_machine")) {
    machines.push_back({m.at("egress_bytes").get<std::uint64_t>(), m.at("ingress_bytes").get<std::uint64_t>()});
  }
  r = TransferReport::from_machines(std::move(machines));
}

void to_json(json& j, const Message& m) {
  j = json{{"src", location_json(m.src)},
           {"dst", location_json(m.dst)},
           {"bytes", m.bytes},
           {"variable", m.tag.variable},
           {"phase", to_string(m.tag.phase)},
           {"step", m.step}};
  j["partition"] = m.tag.partition ? json(*m.tag.partition) : json(nullptr);
}

void from_json(const json& j, Message& m) {
  m.src = location_from(j.at("src"));
  m.dst = location_from(j.at("dst"));
  m.bytes = j.at("bytes").get<std::uint64_t>();
  m.tag.variable = j.at("variable").get<std::string>();
  m.tag.phase = comm_phase_from_string(j.at("phase").get<std::string>());
  m.tag.partition.reset();
  if (!j.at("partition").is_null()) m.tag.partition = j.at("partition").get<std::uint64_t>();
  m.step = j.at("step").get<std::uint32_t>();
}

void to_json(json& j, const IterationStats& s) {
  j = json{{"iter_time_us", s.iter_time_us},
           {"phase_times", s.phase_times},
           {"per_machine_bytes", s.per_machine_bytes},
           {"messages", s.trace.size()}};
}

void from_json(const json& j, IterationStats& s) {
  s.iter_time_us = j.at("iter_time_us").get<double>();
  s.phase_times = j.at("phase_times").get<std::map<std::string, double>>();
  s.per_machine_bytes = j.at("per_machine_bytes").get<TransferReport>();
  s.trace.clear();
}

void to_json(json& j, const Sample& s) { j = json{{"P", s.partitions}, {"time_us", s.time_us}}; }

void from_json(const json& j, Sample& s) {
  s.partitions = j.at("P").get<std::uint64_t>();
  s.time_us = j.at("time_us").get<double>();
}

void to_json(json& j, const CostModelParams& p) {
  j = json{{"theta0", p.theta0}, {"theta1", p.theta1}, {"theta2", p.theta2}, {"samples", p.samples}};
}

void from_json(const json& j, CostModelParams& p) {
  p.theta0 = j.at("theta0").get<double>();
  p.theta1 = j.at("theta1").get<double>();
  p.theta2 = j.at("theta2").get<double>();
  p.samples = j.at("samples").get<std::vector<Sample>>();
}

void to_json(json& j, const TuneResult& r) {
  j = json{{"best_P", r.best_P},
           {"theta", json{{"theta0", r.params.theta0}, {"theta1", r.params.theta1}, {"theta2", r.params.theta2}}},
           {"samples", r.params.samples},
           {"samples_taken", r.samples_taken},
           {"predicted_time_us", r.predicted_time_us}};
}

void from_json(const json& j, TuneResult& r) {
  r.best_P = j.at("best_P").get<std::uint64_t>();
  const auto& theta = j.at("theta");
  r.params.theta0 = theta.at("theta0").get<double>();
  r.params.theta1 = theta.at("theta1").get<double>();
  r.params.theta2 = theta.at("theta2").get<double>();
  r.params.samples = j.at("samples").get<std::vector<Sample>>();
  r.samples_taken = j.at("samples_taken").get<std::uint64_t>();
  r.predicted_time_us = j.at("predicted_time_us").get<double>();
}

std::string transfer_report_csv(const TransferReport& report) {
  std::ostringstream out;
  out << "machine,egress_bytes,ingress_bytes,total_bytes\n";
  for (std::size_t m = 0; m < report.per_machine.size(); ++m) {
    const auto& t = report.per_machine[m];
    out << m << ',' << t.egress_bytes << ',' << t.ingress_bytes << ',' << t.total() << '\n';
  }
  return out.str();
}

std::string trace_json_lines(const std::vector<Message>& trace) {
  std::string out;
  for (const auto& m : trace) {
    out += json(m).dump();
    out += '\n';
  }
  return out;
}

std::string format_number(double value) { return json(value).dump(); }

}  // namespace hybridpar
