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

#include "tpemimo/channel.hpp"

#include <cmath>
#include <iostream>

namespace tpemimo {

ChannelSampler::ChannelSampler(const CovarianceSet& covs) : covs_(&covs) {
  sqrts_.reserve(covs.mats.size());
  for (const MatC& R : covs.mats) sqrts_.push_back(hermitian_sqrt(R));
}

ChannelDraw ChannelSampler::sample(Rng& rng, long trial_index) const {
  const int L = covs_->L, K = covs_->K, M = covs_->M;
  ChannelDraw d;
  d.trial_index = trial_index;
  d.h.assign(std::size_t(L),
             std::vector<std::vector<VecC>>(std::size_t(L),
                                            std::vector<VecC>(std::size_t(K))));
  VecC z(M);
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < L; ++j)
      for (int m = 0; m < K; ++m) {
        for (int i = 0; i < M; ++i) z(i) = rng.cgaussian();
        d.h[l][j][m] = sqrts_[std::size_t(covs_->idx[l][j][covs_->user_group[j][m]])] * z;
      }
  return d;
}

EstimationModel compute_estimation_model(const CovarianceSet& covs, double rho_tr) {
  const int L = covs.L, M = covs.M, G = covs.G;
  EstimationModel model;
  model.L = L;
  model.K = covs.K;
  model.M = M;
  model.G = G;
  model.rho_tr = rho_tr;
  model.user_group = covs.user_group;
  model.S.assign(std::size_t(L), std::vector<MatC>(std::size_t(G)));
  model.filter.assign(std::size_t(L), std::vector<MatC>(std::size_t(G)));
  model.Phi_g.assign(std::size_t(L),
                     std::vector<std::vector<MatC>>(std::size_t(L),
                                                    std::vector<MatC>(std::size_t(G))));
  const MatC eye = MatC::Identity(M, M);
  for (int l = 0; l < L; ++l)
    for (int g = 0; g < G; ++g) {
      MatC A = eye / rho_tr;
      for (int j = 0; j < L; ++j) A += covs.R_group(l, j, g);
      Eigen::SelfAdjointEigenSolver<MatC> es(A);
      const double lmin = es.eigenvalues().minCoeff();
      const double lmax = es.eigenvalues().maxCoeff();
      if (!(lmin > 0.0) || lmax / lmin > 1e12)
        std::cerr << "[channel] ill-conditioned pilot system at cell " << l
                  << " group " << g << " (cond ~ " << lmax / lmin << ")\n";
      model.S[l][g] = A.llt().solve(eye);
      model.filter[l][g] = covs.R_group(l, l, g) * model.S[l][g];
      for (int j = 0; j < L; ++j)
        model.Phi_g[l][j][g] = model.filter[l][g] * covs.R_group(l, j, g);
    }
  return model;
}

EstimateSet mmse_estimate(const ChannelDraw& draw, const EstimationModel& model,
                          double rho_tr, Rng& rng) {
  const int L = model.L, K = model.K, M = model.M;
  const double noise_sd = 1.0 / std::sqrt(rho_tr);
  EstimateSet est;
  est.H_hat.assign(std::size_t(L), MatC(M, K));
  VecC y(M);
  for (int j = 0; j < L; ++j)
    for (int k = 0; k < K; ++k) {
      y.setZero();
      for (int l = 0; l < L; ++l) y += draw.h[j][l][k];
      for (int i = 0; i < M; ++i) y(i) += noise_sd * rng.cgaussian();
      est.H_hat[j].col(k) = model.filter[j][model.user_group[j][k]] * y;
    }
  return est;
}

}  // namespace tpemimo
