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

#include "mpctune/common.hpp"

#include <algorithm>

namespace mpctune {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotStronglyConvex: return "NotStronglyConvex";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::QpFailed: return "QpFailed";
    case ErrorCode::SingularKkt: return "SingularKkt";
    case ErrorCode::RankDeficientData: return "RankDeficientData";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonFiniteDirection: return "NonFiniteDirection";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyDirectory: return "EmptyDirectory";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

bool all_finite(const Mat& m) { return m.allFinite(); }

bool Box::contains(const Vec& x) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > upper[i] || x[i] < lower[i]) return false;
  }
  return true;
}

Vec Box::project(const Vec& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

double Box::dist1(const Vec& x) const {
  double d = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    d += std::max({0.0, x[i] - upper[i], lower[i] - x[i]});
  }
  return d;
}

void Box::validate(std::string_view what) const {
  require_dims(lower.size() == upper.size(),
               std::string(what) + ": lower/upper size mismatch");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    require(!(lower[i] > upper[i]), ErrorCode::ConfigError,
            std::string(what) + ": lower bound exceeds upper bound at index " +
                std::to_string(i));
  }
}

}  // namespace mpctune
