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

#include "mpctune/plants.hpp"

#include "mpctune/csv.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mpctune {

void QuadcopterParams::validate() const {
  require(mass > 0 && Ix > 0 && Iy > 0 && Iz > 0 && arm > 0 && g0 > 0 &&
              k_f > 0 && k_m > 0 && omega_max > 0 && dt > 0,
          ErrorCode::ConfigError, "quadcopter: constants must be positive");
}

double hover_speed(const QuadcopterParams& p) {
  return std::sqrt(p.mass * p.g0 / (4.0 * p.k_f));
}

Vec quad_derivative(const QuadcopterParams& p, const Vec& x, const Vec& u) {
  require_dims(x.size() == kQuadStates && u.size() == kQuadInputs,
               "quad_dynamics: state or input size");
  const Eigen::Array4d w2 = u.array().square();
  const double thrust = p.k_f * w2.sum();
  const double tau_phi = p.arm * p.k_f * (w2[1] - w2[3]);
  const double tau_theta = p.arm * p.k_f * (w2[2] - w2[0]);
  const double tau_psi = p.k_m * (w2[0] - w2[1] + w2[2] - w2[3]);

  const double phi = x[6], th = x[7], psi = x[8];
  const double pr = x[9], qr = x[10], rr = x[11];
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(th), st = std::sin(th);
  const double cp = std::cos(psi), sp = std::sin(psi);

  Vec dx(kQuadStates);
  dx.head(3) = x.segment(3, 3);
  const double a = thrust / p.mass;
  dx[3] = a * (cp * st * cf + sp * sf);
  dx[4] = a * (sp * st * cf - cp * sf);
  dx[5] = a * (ct * cf) - p.g0;
  dx[6] = pr + (sf * qr + cf * rr) * st / ct;
  dx[7] = cf * qr - sf * rr;
  dx[8] = (sf * qr + cf * rr) / ct;
  dx[9] = ((p.Iy - p.Iz) * qr * rr + tau_phi) / p.Ix;
  dx[10] = ((p.Iz - p.Ix) * pr * rr + tau_theta) / p.Iy;
  dx[11] = ((p.Ix - p.Iy) * pr * qr + tau_psi) / p.Iz;
  return dx;
}

Vec quad_dynamics(const QuadcopterParams& p, const Vec& x, const Vec& u,
                  bool* clamped) {
  const Vec uc = u.cwiseMax(0.0).cwiseMin(p.omega_max);
  if (clamped) *clamped = (uc.array() != u.array()).any();
  const double h = p.dt;
  const Vec k1 = quad_derivative(p, x, uc);
  const Vec k2 = quad_derivative(p, x + 0.5 * h * k1, uc);
  const Vec k3 = quad_derivative(p, x + 0.5 * h * k2, uc);
  const Vec k4 = quad_derivative(p, x + h * k3, uc);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Dynamics quadcopter_plant(const QuadcopterParams& p) {
  p.validate();
  return [p](const Vec& x, const Vec& u) { return quad_dynamics(p, x, u); };
}

ContinuousLinearization hover_jacobian(const QuadcopterParams& p) {
  const double w = hover_speed(p);
  ContinuousLinearization lin;
  lin.A = Mat::Zero(kQuadStates, kQuadStates);
  lin.A.block(0, 3, 3, 3).setIdentity();
  lin.A(3, 7) = p.g0;
  lin.A(4, 6) = -p.g0;
  lin.A.block(6, 9, 3, 3).setIdentity();

  lin.B = Mat::Zero(kQuadStates, kQuadInputs);
  const double df = 2.0 * p.k_f * w;
  lin.B.row(5).setConstant(df / p.mass);
  lin.B(9, 1) = p.arm * df / p.Ix;
  lin.B(9, 3) = -p.arm * df / p.Ix;
  lin.B(10, 2) = p.arm * df / p.Iy;
  lin.B(10, 0) = -p.arm * df / p.Iy;
  const double dm = 2.0 * p.k_m * w / p.Iz;
  lin.B.row(11) << dm, -dm, dm, -dm;
  return lin;
}

std::pair<Mat, Mat> discretize(const Mat& A, const Mat& B, double dt, int order) {
  const Eigen::Index n = A.rows(), m = B.cols();
  Mat M = Mat::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A * dt;
  M.topRightCorner(n, m) = B * dt;
  Mat E = Mat::Identity(n + m, n + m);
  Mat term = Mat::Identity(n + m, n + m);
  for (int k = 1; k <= order; ++k) {
    term = term * M / static_cast<double>(k);
    E += term;
  }
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

LinearModel hover_linearization(const QuadcopterParams& p, const Vec& x_op) {
  require_dims(x_op.size() == kQuadStates, "hover_linearization: x_op size");
  const auto lin = hover_jacobian(p);
  auto [Ad, Bd] = discretize(lin.A, lin.B, p.dt);
  const Vec u_op = Vec::Constant(kQuadInputs, hover_speed(p));
  LinearModel m{Ad, Bd, x_op - Ad * x_op - Bd * u_op, 0.0};
  return m;
}

LinearModel fit_linear_model(const Dataset& data, const FitOptions& options) {
  require(!data.empty(), ErrorCode::RankDeficientData, "fit_linear_model: empty dataset");
  const Eigen::Index nx = data.front().x.size();
  const Eigen::Index nu = data.front().u.size();
  const Eigen::Index nr = nx + nu + (options.with_offset ? 1 : 0);
  const auto ns = static_cast<Eigen::Index>(data.size());
  require(ns >= nr, ErrorCode::RankDeficientData,
          "fit_linear_model: " + std::to_string(ns) + " samples for " +
              std::to_string(nr) + " regressors");

  Mat Phi(ns, nr);
  Mat Y(ns, nx);
  for (Eigen::Index i = 0; i < ns; ++i) {
    const Transition& tr = data[static_cast<std::size_t>(i)];
    require_dims(tr.x.size() == nx && tr.u.size() == nu && tr.x_next.size() == nx,
                 "fit_linear_model: inconsistent sample sizes");
    Phi.row(i).head(nx) = tr.x.transpose();
    Phi.row(i).segment(nx, nu) = tr.u.transpose();
    if (options.with_offset) Phi(i, nr - 1) = 1.0;
    Y.row(i) = tr.x_next.transpose();
  }
  Eigen::ColPivHouseholderQR<Mat> qr(Phi);
  require(qr.rank() == nr, ErrorCode::RankDeficientData,
          "fit_linear_model: regressor rank " + std::to_string(qr.rank()) +
              " < " + std::to_string(nr));

  // Ridge-augmented least squares, solved by QR instead of forming the
  // normal equations so the conditioning is not squared.
  Mat Phi_aug = Mat::Zero(ns + nr, nr);
  Phi_aug.topRows(ns) = Phi;
  Phi_aug.bottomRows(nr).diagonal().setConstant(std::sqrt(options.ridge));
  Mat Y_aug = Mat::Zero(ns + nr, nx);
  Y_aug.topRows(ns) = Y;
  const Mat Theta = Phi_aug.householderQr().solve(Y_aug);  // nr x nx

  LinearModel m;
  m.A = Theta.topRows(nx).transpose();
  m.B = Theta.middleRows(nx, nu).transpose();
  m.c = options.with_offset ? Vec(Theta.row(nr - 1).transpose()) : Vec::Zero(nx);
  m.fit_residual = std::sqrt((Y - Phi * Theta).squaredNorm() / static_cast<double>(ns));
  return m;
}

namespace {

Mat riccati_map(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P) {
  const Mat BtP = B.transpose() * P;
  const Mat K = (R + BtP * B).ldlt().solve(BtP * A);
  Mat next = A.transpose() * P * A - A.transpose() * P * B * K + Q;
  return 0.5 * (next + next.transpose());
}

}  // namespace

Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
               const DareOptions& options) {
  const Eigen::Index n = A.rows();
  require_dims(A.cols() == n && B.rows() == n && Q.rows() == n && Q.cols() == n &&
                   R.rows() == B.cols() && R.cols() == B.cols(),
               "solve_dare: dimension mismatch");
  Mat P = Q;
  for (int it = 0; it < options.max_iter; ++it) {
    const Mat next = riccati_map(A, B, Q, R, P);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e15) {
      throw Error(ErrorCode::NoConvergence, "solve_dare: iteration diverged");
    }
    const double delta = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (delta <= options.tol * std::max(1.0, P.cwiseAbs().maxCoeff())) return P;
  }
  throw Error(ErrorCode::NoConvergence, "solve_dare: no convergence within max_iter");
}

double dare_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                     const Mat& P) {
  return (riccati_map(A, B, Q, R, P) - P).cwiseAbs().maxCoeff();
}

Mat lqr_gain(const Mat& A, const Mat& B, const Mat& R, const Mat& P) {
  const Mat BtP = B.transpose() * P;
  return (R + BtP * B).ldlt().solve(BtP * A);
}

double spectral_radius(const Mat& M) {
  return Eigen::EigenSolver<Mat>(M, false).eigenvalues().cwiseAbs().maxCoeff();
}

Dataset collect_trajectories(const Dynamics& plant, const DataPolicy& policy,
                             int n_traj, int T_data, const StateSampler& x0_sampler,
                             std::uint64_t seed) {
  require(n_traj >= 0 && T_data >= 0, ErrorCode::ConfigError,
          "collect_trajectories: counts must be nonnegative");
  Dataset data;
  data.reserve(static_cast<std::size_t>(n_traj) * static_cast<std::size_t>(T_data));
  for (int i = 0; i < n_traj; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    Vec x = x0_sampler(rng);
    for (int t = 0; t < T_data; ++t) {
      Vec u = policy(x, rng);
      Vec xn = plant(x, u);
      data.push_back({t, x, u, xn});
      x = std::move(xn);
    }
  }
  return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  const Eigen::Index nx = data.empty() ? 0 : data.front().x.size();
  const Eigen::Index nu = data.empty() ? 0 : data.front().u.size();
  std::vector<std::string> head{"t"};
  for (Eigen::Index i = 0; i < nx; ++i) head.push_back("x" + std::to_string(i));
  for (Eigen::Index i = 0; i < nu; ++i) head.push_back("u" + std::to_string(i));
  for (Eigen::Index i = 0; i < nx; ++i) head.push_back("xn" + std::to_string(i));
  out << join_csv(head) << '\n';
  for (const Transition& tr : data) {
    std::vector<std::string> row{std::to_string(tr.t)};
    for (double v : tr.x) row.push_back(format_double(v));
    for (double v : tr.u) row.push_back(format_double(v));
    for (double v : tr.x_next) row.push_back(format_double(v));
    out << join_csv(row) << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot read " + path.string());
  const std::string ctx = path.string();
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError,
          ctx + ": missing header");
  const auto head = split_csv(line);
  Eigen::Index nx = 0, nu = 0, nxn = 0;
  require(!head.empty() && head[0] == "t", ErrorCode::ParseError,
          ctx + ": first column must be t");
  for (std::size_t i = 1; i < head.size(); ++i) {
    const std::string& h = head[i];
    if (h.rfind("xn", 0) == 0) ++nxn;
    else if (h.rfind("x", 0) == 0) ++nx;
    else if (h.rfind("u", 0) == 0) ++nu;
    else throw Error(ErrorCode::ParseError, ctx + ": unknown column " + h);
  }
  require(nx == nxn, ErrorCode::ParseError, ctx + ": x and xn column counts differ");
  Dataset data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    const std::string where = ctx + ":" + std::to_string(lineno);
    require(f.size() == head.size(), ErrorCode::ParseError, where + ": wrong field count");
    Transition tr;
    tr.t = static_cast<int>(parse_double(f[0], where));
    tr.x.resize(nx);
    tr.u.resize(nu);
    tr.x_next.resize(nx);
    std::size_t c = 1;
    for (Eigen::Index i = 0; i < nx; ++i) tr.x[i] = parse_double(f[c++], where);
    for (Eigen::Index i = 0; i < nu; ++i) tr.u[i] = parse_double(f[c++], where);
    for (Eigen::Index i = 0; i < nx; ++i) tr.x_next[i] = parse_double(f[c++], where);
    data.push_back(std::move(tr));
  }
  return data;
}

}  // namespace mpctune
