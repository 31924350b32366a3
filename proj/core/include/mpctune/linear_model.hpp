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

#include "mpctune/common.hpp"

namespace mpctune {

/// Affine prediction model x+ = A x + B u + c.
struct LinearModel {
  Mat A;
  Mat B;
  /// Zero for a purely linear model.
  Vec c;
  double fit_residual = 0.0;

  static LinearModel linear(Mat A, Mat B) {
    Vec c = Vec::Zero(A.rows());
    return {std::move(A), std::move(B), std::move(c), 0.0};
  }

  Eigen::Index n_x() const { return A.rows(); }
  Eigen::Index n_u() const { return B.cols(); }

  Vec step(const Vec& x, const Vec& u) const { return A * x + B * u + c; }

  void validate() const {
    require_dims(A.rows() == A.cols(), "model: A must be square");
    require_dims(B.rows() == A.rows(), "model: B rows must match A");
    require_dims(c.size() == A.rows(), "model: offset size must match A");
  }
};

}  // namespace mpctune
