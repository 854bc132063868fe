// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace awemet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error categories mirror the C API status codes (and the CLI exit codes).
enum class ErrorCode {
  Usage = 2,    // invalid arguments, malformed configs
  Numeric = 3,  // audit failures, divergence, undefined metrics
  Io = 4,       // file problems, version mismatches
  Internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorCode::Usage, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorCode::Numeric, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorCode::Io, msg);
}
[[noreturn]] inline void throw_internal(const std::string& msg) {
  throw Error(ErrorCode::Internal, msg);
}

}  // namespace awemet
