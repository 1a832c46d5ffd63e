// SPDX-License-Identifier: Apache-2.0
//
// tpemimo: multi-cell massive-MIMO downlink precoding toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <vector>

#include "tpemimo/channel.hpp"
#include "tpemimo/common.hpp"
#include "tpemimo/scenario.hpp"

namespace tpemimo {

// A list of covariance matrices with multiplicities. K() is the effective user
// count; groups of users sharing one matrix enter once with count > 1.
struct WeightedMats {
  std::vector<MatC> mats;
  std::vector<int> count;

  int K() const;
  static WeightedMats from_list(const std::vector<MatC>& list);
};

// Solution of the fixed point
//   T(t) = (I + (1/K) sum_k t R_k / (1 + t delta_k))^{-1},
//   delta_k = (1/K) tr(R_k T(t)),
// with delta stored per distinct matrix.
struct FixedPointState {
  double t = 0.0;
  MatC T;
  VecR delta;      // per distinct matrix
  double residual = 0.0;
  int iterations = 0;
};

// Second-order deterministic equivalent
//   T_bar = T Theta T + t^2 T [(1/K) sum_k R_k delta_bar_k / (1 + t delta_k)^2] T,
//   delta_bar = (I - t^2 J)^{-1} v.
struct SecondOrderState {
  MatC T_bar;
  VecR delta_bar;  // per distinct matrix
  MatR Jmat;       // per distinct pair, multiplicity-weighted system matrix
  VecR v;
};

// Derivatives at t = 0 of the resolvent fixed point: T_n[i] = T^{(i)},
// delta_n[i][g] = delta_g^{(i)}, for i = 0..D.
struct DerivativeTable {
  int D = 0;
  int K = 0;
  std::vector<MatC> T_n;
  std::vector<VecR> delta_n;

  // Scalar derivative sequence of one distinct matrix g.
  std::vector<double> delta_seq(int g) const;
};

// Deterministic SINR tables for TPE precoding. Entries are stored per group;
// the per-user accessors resolve through user_group.
struct SinrModelTPE {
  int L = 0, K = 0, G = 0;
  std::vector<int> J;  // per cell
  double sigma2 = 0.0;
  std::vector<std::vector<int>> user_group;                     // [j][m]
  std::vector<std::vector<VecR>> a_bar_g;                       // [j][g], length J_j
  std::vector<std::vector<std::vector<MatR>>> B_bar_g;          // [l][j][g], J_l x J_l
  std::vector<MatR> C_bar;                                      // [l]

  const VecR& a_bar(int j, int m) const { return a_bar_g[j][user_group[j][m]]; }
  const MatR& B_bar(int l, int j, int m) const { return B_bar_g[l][j][user_group[j][m]]; }
};

// RZF deterministic equivalents. theta/kappa tables are stored per group.
struct RzfDetEq {
  int L = 0, K = 0, G = 0;
  std::vector<std::vector<int>> user_group;  // [j][m]
  std::vector<double> beta_bar;              // [l]
  std::vector<VecR> delta;                   // [l][g], at t = 1/phi_l
  std::vector<VecR> delta_bar;               // [l][g]
  std::vector<std::vector<VecR>> theta;      // [l][j][g]
  std::vector<std::vector<VecR>> theta_bar;  // [l][j][g]
  std::vector<std::vector<VecC>> kappa;      // [l][j][g]
  std::vector<std::vector<VecC>> kappa_bar;  // [l][j][g]
  std::vector<VecR> zeta;                    // [l][g] = 1/(phi_l + delta_{l,g})
  std::vector<std::vector<double>> gamma_bar;  // [j][m]
};

// Damped Picard iteration for the resolvent fixed point (damping 0.5, sup-norm
// tolerance on the delta update). t may be any value for which the iteration
// contracts; t = 0 returns T = I exactly. Throws std::runtime_error carrying the
// last residual when max_iter is exhausted.
FixedPointState solve_fixed_point(double t, const WeightedMats& R, double tol = 1e-10,
                               int max_iter = 10000);

// Complex-argument variant of the same fixed point (used by the analytic
// derivative oracles; the resolvent is analytic in a neighborhood of 0).
void solve_fixed_point_complex(cxd t, const WeightedMats& R, MatC* T_out, VecC* delta_out,
                            double tol = 1e-12, int max_iter = 10000);

SecondOrderState solve_second_order(double t, const WeightedMats& R, const MatC& Theta,
                                const FixedPointState& fp);

// Derivatives of T(t), delta(t) at t = 0 up to order D via the Leibniz recursion
//   q_g := 1/(1 + t delta_g):   q_g^{(n)} = -sum_{j=1}^n C(n,j) j delta_g^{(j-1)} q_g^{(n-j)}
//   F^{(i)} = (i/K) sum_g c_g q_g^{(i-1)} Phi_g
//   T^{(i)} = -sum_{k=1}^i C(i,k) T^{(i-k)} F^{(k)},   delta_g^{(i)} = (1/K) tr(Phi_g T^{(i)}).
DerivativeTable derivative_tables(const WeightedMats& Phi, int D);

// X_bar^{(n)} from a user's delta derivative sequence:
// X_bar(t) = delta(t)/(1 + t delta(t)).
std::vector<double> xbar_derivatives(const std::vector<double>& delta_n, int D);

// Z_bar^{(n)} for Z_bar(t) = (1/K) tr(R T(t)) - t |(1/K) tr(Phi T(t))|^2 / (1 + t delta(t)).
// The cross term keeps the conjugate from |.|^2 (Phi is non-Hermitian across cells).
std::vector<double> zbar_derivatives(const DerivativeTable& table,
                                     const std::vector<double>& delta_n, const MatC& R,
                                     const MatC& Phi, int D);

// a_bar, B_bar, C_bar tables:
//   [a]_n = (-1)^n/n! X_bar^{(n)},
//   [B]_{n,p} = (-1)^{n+p+1}/(n+p+1)! Z_bar^{(n+p+1)},
//   [C]_{n,p} = (-1)^{n+p+1}/(n+p+1)! (1/K) tr(T^{(n+p+1)}).
SinrModelTPE assemble_sinr_model(const CovarianceSet& covs, const EstimationModel& model,
                                 double sigma2, const std::vector<int>& J);

// Restriction of a model to smaller per-cell orders (tables are nested).
SinrModelTPE slice_model(const SinrModelTPE& model, const std::vector<int>& J);

// gamma_bar_{j,m} = (w_j.a)^2 / (sigma2/K + sum_l w_l^T B_{l,j,m} w_l - (w_j.a)^2).
// Throws std::runtime_error on a nonpositive denominator.
std::vector<std::vector<double>> tpe_sinr_detequiv(const SinrModelTPE& model,
                                                   const std::vector<VecR>& w);

// RZF deterministic SINR. Evaluates T_l, T_bar_l at t = 1/phi_l with R-list
// (Phi_{l,l,k})_k and Theta = I, then
//   gamma_bar_{j,m} = P_j beta_bar_j (delta_{j,m} zeta_{j,m})^2 /
//     (sigma2/K + sum_l P_l (beta_bar_l/phi_l) [theta - zeta |kappa|^2 - theta_bar
//        + 2 zeta Re(conj(kappa) kappa_bar) - zeta^2 |kappa|^2 delta_bar]
//      - P_j beta_bar_j (delta_{j,m} zeta_{j,m})^2).
// The noise term sigma2/K and the per-cell powers P_l multiply a formulation that
// some references print only for P = 1 and without noise; the bracket keeps all
// four terms under the sum over l, and |.|^2 is used since kappa is complex for
// cross-cell terms. This grouping is the one that matches Monte-Carlo RZF.
RzfDetEq rzf_sinr_detequiv(const CovarianceSet& covs, const EstimationModel& model,
                           const std::vector<double>& phi, double sigma2,
                           const std::vector<double>& P);

}  // namespace tpemimo
