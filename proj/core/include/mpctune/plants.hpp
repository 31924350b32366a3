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

/**
 * @file
 * @brief Nonlinear quadcopter plant, least-squares identification of an
 * affine prediction model, DARE and LQR, and closed-loop data collection.
 */

#include "mpctune/linear_model.hpp"
#include "mpctune/rng.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace mpctune {

/// Plus-configuration quadrotor. Rotor 1 sits on +x, 2 on +y, 3 on -x and
/// 4 on -y; rotors 1 and 3 spin so that their drag torque is +z.
struct QuadcopterParams {
  double mass = 0.5;
  double Ix = 3.2e-3;
  double Iy = 3.2e-3;
  double Iz = 5.5e-3;
  double arm = 0.17;
  double g0 = 9.81;
  /// Thrust per rotor is k_f w^2; with the defaults hover is 360 rad/s.
  double k_f = 0.5 * 9.81 / (4.0 * 360.0 * 360.0);
  /// Drag torque per rotor is k_m w^2.
  double k_m = 1.5e-7;
  double omega_max = 630.0;
  double dt = 0.02;

  void validate() const;
};

inline constexpr Eigen::Index kQuadStates = 12;
inline constexpr Eigen::Index kQuadInputs = 4;

/// Rotor speed whose total thrust balances gravity.
double hover_speed(const QuadcopterParams& p);

/// State x = (p, v, (phi, theta, psi), (p, q, r)) with ZYX Euler angles and
/// body-frame rates. Returns dx/dt for rotor speeds u (not clamped).
Vec quad_derivative(const QuadcopterParams& p, const Vec& x, const Vec& u);

/// One RK4 step over p.dt. Rotor speeds are clamped to [0, omega_max]; the
/// optional flag reports whether clamping happened.
Vec quad_dynamics(const QuadcopterParams& p, const Vec& x, const Vec& u,
                  bool* clamped = nullptr);

Dynamics quadcopter_plant(const QuadcopterParams& p);

/// Continuous-time Jacobians at hover (any position, zero yaw).
struct ContinuousLinearization {
  Mat A;
  Mat B;
};
ContinuousLinearization hover_jacobian(const QuadcopterParams& p);

/// RK4 applied to the linearized ODE around (x_op, hover input), written as
/// an affine model in absolute coordinates.
LinearModel hover_linearization(const QuadcopterParams& p, const Vec& x_op);

/// Exact discretization by a truncated Taylor series of exp([A B; 0 0] dt).
/// Order 4 coincides with one RK4 step of the linear ODE.
std::pair<Mat, Mat> discretize(const Mat& A, const Mat& B, double dt, int order = 4);

struct Transition {
  int t = 0;
  Vec x;
  Vec u;
  Vec x_next;
};
using Dataset = std::vector<Transition>;

struct FitOptions {
  /// Also fit the constant c in x+ = A x + B u + c.
  bool with_offset = false;
  double ridge = 1e-10;
};

/// Ridge-regularized least squares. Throws RankDeficientData if the
/// regressor stack does not have full column rank.
LinearModel fit_linear_model(const Dataset& data, const FitOptions& options = {});

struct DareOptions {
  double tol = 1e-12;
  int max_iter = 200000;
};

/// Fixed-point iteration P <- A'PA - A'PB (R + B'PB)^-1 B'PA + Q.
/// Throws NoConvergence on divergence or when max_iter is exhausted.
Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
               const DareOptions& options = {});

/// Max-abs entry of A'PA - P - A'PB (R + B'PB)^-1 B'PA + Q.
double dare_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                     const Mat& P);

/// K = (R + B'PB)^-1 B'PA, for u = -K x.
Mat lqr_gain(const Mat& A, const Mat& B, const Mat& R, const Mat& P);

double spectral_radius(const Mat& M);

using DataPolicy = std::function<Vec(const Vec& x, CounterRng& rng)>;
using StateSampler = std::function<Vec(CounterRng& rng)>;

/// n_traj rollouts of length T_data. Trajectory i draws its initial state and
/// any policy noise from the stream (seed, i).
Dataset collect_trajectories(const Dynamics& plant, const DataPolicy& policy,
                             int n_traj, int T_data, const StateSampler& x0_sampler,
                             std::uint64_t seed);

/// CSV with a header row t,x0..,u0..,xn0..; numbers use 17 significant digits.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace mpctune
