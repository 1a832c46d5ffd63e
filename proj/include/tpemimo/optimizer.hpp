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

#include <memory>
#include <string>
#include <vector>

#include "tpemimo/common.hpp"
#include "tpemimo/detequiv.hpp"
#include "tpemimo/precoders.hpp"

namespace tpemimo {

// Weighted max-min fairness problem over TPE coefficients, self-contained so it
// can be dumped and re-run offline.
struct MaxMinProblem {
  int L = 0, K = 0;
  std::vector<int> J;
  double sigma2 = 0.0;
  std::vector<double> P;                         // per cell
  std::vector<std::vector<VecR>> a;              // [j][m]
  std::vector<std::vector<std::vector<MatR>>> B; // [l][j][m]
  std::vector<MatR> C;                           // [l]
  std::vector<std::vector<double>> nu;           // [j][m], > 0

  void validate() const;  // throws std::invalid_argument

  static MaxMinProblem from_model(const SinrModelTPE& model,
                                  const std::vector<std::vector<double>>& nu,
                                  const std::vector<double>& P);

  std::string dump_json() const;
  static MaxMinProblem load_json(const std::string& text);
};

enum class Feasibility { kFeasible, kInfeasible };

struct FeasibilityResult {
  Feasibility status = Feasibility::kInfeasible;
  std::vector<MatR> W;    // certificate when feasible
  double margin = 0.0;    // worst SINR-constraint slack, -max_i c_i(W)
};

// Backend interface for the per-xi convex feasibility subproblem (Eq.-(21)-style
// constraints). Implementations must decide within absolute tolerance tol.
class SdpFeasibilityBackend {
 public:
  virtual ~SdpFeasibilityBackend() = default;
  virtual FeasibilityResult check(double xi, const MaxMinProblem& problem, double tol) = 0;
};

// Max-slack log-barrier interior-point backend: maximizes s subject to
// c_{j,m}(W) + s <= 0, tr(C_l W_l) = P_l, W_l PSD, where
// c_{j,m}(W) = (1 - 2^{-nu xi}) (sigma2/K + sum_l tr(B_{l,j,m} W_l)) - a^T W_j a.
// The noise term is kept in the constraint (its omission would make the SINRs
// scale-invariant). The slack and tr(W_l) are capped to keep the feasible set
// compact; the caps are far outside the region where rank-one solutions live.
class BarrierSdpBackend : public SdpFeasibilityBackend {
 public:
  FeasibilityResult check(double xi, const MaxMinProblem& problem, double tol) override;
};

struct OptimizationResult {
  double xi_star = 0.0;
  std::vector<MatR> W;
  std::vector<TpeCoefficients> w;
  std::vector<double> rank_gap;  // lambda_2/lambda_1 per cell
  double feasibility_margin = 0.0;
  int iterations = 0;
};

// xi_max = min_{j,m} log2(1 + a^T (B_{j,j,m} - a a^T)^{-1} a) / nu_{j,m};
// the inverse is regularized by 1e-12 I when needed.
double upper_bound_xi(const MaxMinProblem& problem);

// Decides feasibility of the SINR constraints at rate target xi. A null backend
// uses a process-wide BarrierSdpBackend.
FeasibilityResult feasibility_check(double xi, const MaxMinProblem& problem,
                                    double tol = 1e-7,
                                    SdpFeasibilityBackend* backend = nullptr);

// Bisection over xi in [0, xi_max] down to width epsilon; returns the last
// feasible certificate and the rank-one extraction.
OptimizationResult bisection_solve(const MaxMinProblem& problem, double epsilon = 1e-3,
                                   SdpFeasibilityBackend* backend = nullptr);

// Principal eigenvector of each W_l, scaled so w^T C_l w = P_l exactly; sign fixed
// so that w^T a >= 0 for the cell's first user when a_first is given.
std::vector<TpeCoefficients> extract_rank_one(const std::vector<MatR>& W,
                                              const std::vector<MatR>& C,
                                              const std::vector<double>& P,
                                              const std::vector<VecR>* a_first = nullptr);

// nu_{j,m} = max(log2(1 + gamma_bar_{j,m}), 1e-6) from the RZF deterministic SINRs.
std::vector<std::vector<double>> rzf_mimic_weights(const RzfDetEq& rzf);

}  // namespace tpemimo
