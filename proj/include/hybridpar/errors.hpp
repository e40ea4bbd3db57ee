// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace hybridpar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed JSON document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed document whose content breaks a domain invariant. `field()`
// names the offending key, e.g. "variables[1].alpha".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class PartitionCountError : public Error {
 public:
  using Error::Error;
};

class MechanismMismatchError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

class UnfittedModelError : public Error {
 public:
  using Error::Error;
};

class TuneError : public Error {
 public:
  using Error::Error;
};

// Bad command-line configuration or an unreadable input file.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Raised by sample_search when the evaluator throws; carries the P that failed.
class EvaluationError : public Error {
 public:
  EvaluationError(std::uint64_t partitions, const std::string& what)
      : Error("evaluation failed at P=" + std::to_string(partitions) + ": " + what),
        partitions_(partitions) {}
  std::uint64_t partitions() const noexcept { return partitions_; }

 private:
  std::uint64_t partitions_;
};

}  // namespace hybridpar
