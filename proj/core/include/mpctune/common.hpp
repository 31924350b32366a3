// Copyright 2026 The mpctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mpctune {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Discrete-time plant x+ = f(x, u).
using Dynamics = std::function<Vec(const Vec& x, const Vec& u)>;

enum class ErrorCode {
  DimensionMismatch,
  NotStronglyConvex,
  MaxIterExceeded,
  QpFailed,
  SingularKkt,
  RankDeficientData,
  NoConvergence,
  NonFiniteDirection,
  ConfigError,
  ParseError,
  EmptyDirectory,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status and a machine-readable report.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Componentwise bounds; infinite entries mean the side is unconstrained.
struct Box {
  Vec lower;
  Vec upper;

  static Box unbounded(Eigen::Index n) {
    return {Vec::Constant(n, -kInf), Vec::Constant(n, kInf)};
  }

  Eigen::Index size() const { return lower.size(); }
  bool contains(const Vec& x) const;
  Vec project(const Vec& x) const;
  /// 1-norm distance from x to the box, exact coordinatewise.
  double dist1(const Vec& x) const;
  void validate(std::string_view what) const;
};

void require(bool ok, ErrorCode code, const std::string& what);

inline void require_dims(bool ok, const std::string& what) {
  require(ok, ErrorCode::DimensionMismatch, what);
}

bool all_finite(const Mat& m);

}  // namespace mpctune
