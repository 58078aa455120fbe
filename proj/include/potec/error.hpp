// Copyright 2026 The POTEC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POTEC_ERROR_HPP
#define POTEC_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace potec {

enum class ErrorCode {
  kConfig = 1,       // invalid configuration or precondition on inputs
  kContract = 2,     // API misuse: dimension mismatch, non-simplex input, ...
  kNumeric = 3,      // non-finite values where finite ones are required
  kDivision = 4,     // zero propensity in an importance weight
  kUnsupported = 5,  // operation not available in this mode
  kIo = 6,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by importance-weighted estimators when a record carries a zero
// propensity. The offending record index is kept for diagnostics.
class DivisionError : public Error {
 public:
  DivisionError(std::size_t record, const std::string& message)
      : Error(ErrorCode::kDivision, message), record_(record) {}

  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const char* message) {
  if (!condition) throw Error(code, message);
}

}  // namespace potec

#endif  // POTEC_ERROR_HPP
