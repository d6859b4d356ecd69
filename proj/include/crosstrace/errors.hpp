// Copyright 2026 The crosstrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROSSTRACE_ERRORS_HPP_
#define CROSSTRACE_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crosstrace {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input line; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Event stream not sorted by timestamp.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// Unknown pid, unresolvable egress target, or similar lookup failure.
class MappingError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  enum class Reason { too_few_samples, zero_variance };

  FitError(Reason reason, const std::string& what) : Error(what), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Invalid workload or experiment specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

/// Ground truth does not cover the dataset being scored.
class CoverageError : public Error {
 public:
  using Error::Error;
};

}  // namespace crosstrace

#endif  // CROSSTRACE_ERRORS_HPP_
