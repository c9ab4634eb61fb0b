// stc/base/error.hpp

// Copyright 2026  The STC Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef STC_BASE_ERROR_HPP_
#define STC_BASE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace stc {

enum class ErrorKind {
  kDecode,
  kEmptyInput,
  kShape,
  kConfig,
  kImbalance,
  kSplit,
  kLabelling,
  kNumeric,
  kDivergence,
  kRegistry,
  kNoViablePath,
  kValidation,
  kNotFound,
  kConflict,
  kAllocation,
  kLoad,
  kInput,
  kIo,
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDecode: return "decode error";
    case ErrorKind::kEmptyInput: return "empty-input error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kImbalance: return "imbalance error";
    case ErrorKind::kSplit: return "split error";
    case ErrorKind::kLabelling: return "labelling error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kDivergence: return "divergence error";
    case ErrorKind::kRegistry: return "registry error";
    case ErrorKind::kNoViablePath: return "no-viable-path error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kNotFound: return "not-found error";
    case ErrorKind::kConflict: return "conflict error";
    case ErrorKind::kAllocation: return "allocation error";
    case ErrorKind::kLoad: return "load error";
    case ErrorKind::kInput: return "input error";
    case ErrorKind::kIo: return "io error";
  }
  return "error";
}

/// Domain error carrying a machine-checkable kind. All library failures
/// surface as this type; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

}  // namespace stc

#endif  // STC_BASE_ERROR_HPP_
