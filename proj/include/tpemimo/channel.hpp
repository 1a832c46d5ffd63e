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

#include "tpemimo/common.hpp"
#include "tpemimo/scenario.hpp"

namespace tpemimo {

// One coherence block of true channels h_{l,j,m} = R_{l,j,m}^{1/2} z.
struct ChannelDraw {
  std::vector<std::vector<std::vector<VecC>>> h;  // [l][j][m], length M
  long trial_index = 0;
};

// MMSE estimation statistics. Phi(l, j, k) = R_{l,l,k} S_{l,k} R_{l,j,k} is the
// cross-correlation E[h_hat_{l,l,k} h_{l,j,k}^H]; first index is the estimating cell.
struct EstimationModel {
  int L = 0, K = 0, M = 0, G = 0;
  double rho_tr = 0.0;
  std::vector<std::vector<int>> user_group;            // [j][m]
  std::vector<std::vector<MatC>> S;                    // [l][g]
  std::vector<std::vector<std::vector<MatC>>> Phi_g;   // [l][j][g]
  std::vector<std::vector<MatC>> filter;               // [l][g] = R_{l,l,g} S_{l,g}

  const MatC& S_of(int l, int m) const { return S[l][user_group[l][m]]; }
  const MatC& Phi(int l, int j, int m) const { return Phi_g[l][j][user_group[j][m]]; }
  const MatC& Phi_group(int l, int j, int g) const { return Phi_g[l][j][g]; }
};

// Channel estimates h_hat_{j,j,k}, stacked per cell as M x K matrices.
struct EstimateSet {
  std::vector<MatC> H_hat;  // [j], M x K
};

// Precomputes the Hermitian square roots of all covariances for fast sampling.
class ChannelSampler {
 public:
  explicit ChannelSampler(const CovarianceSet& covs);
  ChannelDraw sample(Rng& rng, long trial_index = 0) const;

 private:
  const CovarianceSet* covs_;
  std::vector<MatC> sqrts_;  // parallel to covs_->mats
};

inline ChannelDraw sample_channels(const ChannelSampler& sampler, Rng& rng) {
  return sampler.sample(rng);
}

// S_{j,k} = (rho_tr^{-1} I + sum_l R_{j,l,k})^{-1} and Phi_{j,l,k} = R_{j,j,k} S_{j,k} R_{j,l,k}.
// Logs to stderr if any S system is conditioned worse than 1e12.
EstimationModel compute_estimation_model(const CovarianceSet& covs, double rho_tr);

// Forms y_{j,k} = sum_l h_{j,l,k} + rho_tr^{-1/2} b with fresh noise and returns
// h_hat_{j,j,k} = R_{j,j,k} S_{j,k} y_{j,k}.
EstimateSet mmse_estimate(const ChannelDraw& draw, const EstimationModel& model,
                          double rho_tr, Rng& rng);

}  // namespace tpemimo
