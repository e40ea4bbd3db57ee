// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hybridpar/graph_model.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>

#include <json.hpp>

namespace hybridpar {
namespace {

using nlohmann::json;

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ValidationError(where + key, "unknown key");
  }
}

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field.empty() ? "<root>" : field, "expected an object");
}

std::uint64_t get_count(const json& obj, const std::string& where, const char* key,
                        std::uint64_t min_value) {
  const std::string field = where + key;
  if (!obj.contains(key)) throw ValidationError(field, "missing required field");
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ValidationError(field, "expected an integer");
  if (v.is_number_unsigned()) {
    auto n = v.get<std::uint64_t>();
    if (n < min_value) throw ValidationError(field, "must be >= " + std::to_string(min_value));
    return n;
  }
  auto n = v.get<std::int64_t>();
  if (n < static_cast<std::int64_t>(min_value)) {
    throw ValidationError(field, "must be >= " + std::to_string(min_value));
  }
  return static_cast<std::uint64_t>(n);
}

double get_number(const json& obj, const std::string& where, const char* key) {
  const std::string field = where + key;
  if (!obj.contains(key)) throw ValidationError(field, "missing required field");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(field, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(field, "must be finite");
  return d;
}

std::string get_string(const json& obj, const std::string& where, const char* key) {
  const std::string field = where + key;
  if (!obj.contains(key)) throw ValidationError(field, "missing required field");
  const json& v = obj.at(key);
  if (!v.is_string()) throw ValidationError(field, "expected a string");
  return v.get<std::string>();
}

void validate_variable(const VariableSpec& var, const std::string& where) {
  if (var.name.empty()) throw ValidationError(where + "name", "must not be empty");
  if (var.elements < 1) throw ValidationError(where + "elements", "must be >= 1");
  if (var.elem_bytes < 1) throw ValidationError(where + "elem_bytes", "must be >= 1");
  if (var.kind == VarKind::dense && var.alpha != 1.0) {
    throw ValidationError(where + "alpha", "dense variables must have alpha = 1");
  }
  if (!(var.alpha > 0.0 && var.alpha <= 1.0)) {
    throw ValidationError(where + "alpha", "must lie in (0, 1]");
  }
}

}  // namespace

std::string_view to_string(VarKind kind) {
  return kind == VarKind::dense ? "dense" : "sparse";
}

const VariableSpec* GraphSpec::find(std::string_view var_name) const {
  for (const auto& v : variables) {
    if (v.name == var_name) return &v;
  }
  return nullptr;
}

void validate(const GraphSpec& graph) {
  if (graph.name.empty()) throw ValidationError("name", "must not be empty");
  if (graph.batch_per_gpu < 1) throw ValidationError("batch_per_gpu", "must be >= 1");
  if (!(graph.compute_us_per_gpu >= 0.0)) {
    throw ValidationError("compute_us_per_gpu", "must be >= 0");
  }
  if (graph.variables.empty()) throw ValidationError("variables", "at least one variable required");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < graph.variables.size(); ++i) {
    const std::string where = "variables[" + std::to_string(i) + "].";
    validate_variable(graph.variables[i], where);
    if (!seen.insert(graph.variables[i].name).second) {
      throw ValidationError(where + "name", "duplicate variable name '" + graph.variables[i].name + "'");
    }
  }
}

void validate(const ClusterSpec& cluster) {
  if (cluster.machines < 1) throw ValidationError("machines", "must be >= 1");
  if (cluster.gpus_per_machine < 1) throw ValidationError("gpus_per_machine", "must be >= 1");
  if (!(cluster.nic_gbps > 0.0)) throw ValidationError("nic_gbps", "must be > 0");
  if (!(cluster.intra_gbps > 0.0)) throw ValidationError("intra_gbps", "must be > 0");
  if (!(cluster.latency_us >= 0.0)) throw ValidationError("latency_us", "must be >= 0");
}

GraphSpec load_graph_spec(std::string_view text) {
  const json doc = parse_document(text);
  require_object(doc, "");
  reject_unknown_keys(doc, "", {"name", "batch_per_gpu", "compute_us_per_gpu", "variables"});

  GraphSpec graph;
  graph.name = get_string(doc, "", "name");
  graph.batch_per_gpu = doc.contains("batch_per_gpu") ? get_count(doc, "", "batch_per_gpu", 1) : 1;
  graph.compute_us_per_gpu = get_number(doc, "", "compute_us_per_gpu");

  if (!doc.contains("variables")) throw ValidationError("variables", "missing required field");
  const json& vars = doc.at("variables");
  if (!vars.is_array()) throw ValidationError("variables", "expected an array");

  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string where = "variables[" + std::to_string(i) + "].";
    const json& jv = vars[i];
    require_object(jv, "variables[" + std::to_string(i) + "]");
    reject_unknown_keys(jv, where, {"name", "elements", "elem_bytes", "alpha", "kind", "partitionable"});

    VariableSpec var;
    var.name = get_string(jv, where, "name");
    var.elements = get_count(jv, where, "elements", 1);
    if (jv.contains("elem_bytes")) {
      auto eb = get_count(jv, where, "elem_bytes", 1);
      if (eb > 0xFFFFFFFFull) throw ValidationError(where + "elem_bytes", "too large");
      var.elem_bytes = static_cast<std::uint32_t>(eb);
    }
    const std::string kind = get_string(jv, where, "kind");
    if (kind == "dense") {
      var.kind = VarKind::dense;
    } else if (kind == "sparse") {
      var.kind = VarKind::sparse;
    } else {
      throw ValidationError(where + "kind", "expected \"dense\" or \"sparse\"");
    }
    if (jv.contains("alpha")) {
      var.alpha = get_number(jv, where, "alpha");
    } else if (var.kind == VarKind::sparse) {
      throw ValidationError(where + "alpha", "required for sparse variables");
    }
    if (jv.contains("partitionable")) {
      if (!jv.at("partitionable").is_boolean()) {
        throw ValidationError(where + "partitionable", "expected a boolean");
      }
      var.partitionable = jv.at("partitionable").get<bool>();
    }
    graph.variables.push_back(std::move(var));
  }

  validate(graph);
  return graph;
}

ClusterSpec load_cluster_spec(std::string_view text) {
  const json doc = parse_document(text);
  require_object(doc, "");
  reject_unknown_keys(doc, "", {"machines", "gpus_per_machine", "nic_gbps", "latency_us", "intra_gbps"});

  ClusterSpec cluster;
  auto machines = get_count(doc, "", "machines", 1);
  auto gpus = get_count(doc, "", "gpus_per_machine", 1);
  if (machines > 0xFFFFFFFFull) throw ValidationError("machines", "too large");
  if (gpus > 0xFFFFFFFFull) throw ValidationError("gpus_per_machine", "too large");
  cluster.machines = static_cast<std::uint32_t>(machines);
  cluster.gpus_per_machine = static_cast<std::uint32_t>(gpus);
  cluster.nic_gbps = get_number(doc, "", "nic_gbps");
  cluster.latency_us = doc.contains("latency_us") ? get_number(doc, "", "latency_us") : 0.0;
  cluster.intra_gbps = doc.contains("intra_gbps") ? get_number(doc, "", "intra_gbps") : 8.0 * cluster.nic_gbps;
  validate(cluster);
  return cluster;
}

double model_alpha(const GraphSpec& graph) {
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& v : graph.variables) {
    weighted += static_cast<double>(v.elements) * v.alpha;
    total += static_cast<double>(v.elements);
  }
  return total > 0.0 ? weighted / total : 1.0;
}

PartitionSet partition_variable(const VariableSpec& var, std::uint64_t partitions) {
  if (partitions < 1) throw PartitionCountError("partition count must be >= 1 for '" + var.name + "'");
  if (partitions > 1 && !var.partitionable) {
    throw PartitionCountError("variable '" + var.name + "' is not partitionable");
  }
  if (partitions > var.elements) {
    throw PartitionCountError("partition count " + std::to_string(partitions) + " exceeds " +
                              std::to_string(var.elements) + " elements of '" + var.name + "'");
  }
  PartitionSet set{var.name, partitions, {}};
  set.partitions.reserve(partitions);
  const std::uint64_t base = var.elements / partitions;
  const std::uint64_t extra = var.elements % partitions;
  for (std::uint64_t i = 0; i < partitions; ++i) {
    set.partitions.push_back({i, base + (i < extra ? 1 : 0)});
  }
  return set;
}

std::vector<std::uint64_t> shard_count(std::uint64_t total_items, std::uint64_t workers) {
  if (workers < 1) throw std::invalid_argument("shard_count: workers must be >= 1");
  std::vector<std::uint64_t> counts(workers, total_items / workers);
  for (std::uint64_t i = 0; i < total_items % workers; ++i) ++counts[i];
  return counts;
}

std::uint64_t touched_elements(double alpha, std::uint64_t elements) {
  if (alpha >= 1.0) return elements;
  const double exact = alpha * static_cast<double>(elements);
  const double nearest = std::round(exact);
  if (std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact)) {
    return static_cast<std::uint64_t>(nearest);
  }
  return std::min(elements, static_cast<std::uint64_t>(std::ceil(exact)));
}

std::uint64_t payload_bytes(const VariableSpec& var, std::uint64_t elements) {
  return touched_elements(var.alpha, elements) * var.elem_bytes;
}

}  // namespace hybridpar
