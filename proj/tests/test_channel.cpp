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

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tpemimo/channel.hpp"

using namespace tpemimo;

namespace {

// Hand-built covariance set: L cells, K users, G groups, random PSD matrices.
CovarianceSet toy_covs(int L, int K, int M, int G, Rng& rng, double scale = 0.5) {
  CovarianceSet covs;
  covs.L = L;
  covs.K = K;
  covs.M = M;
  covs.G = G;
  covs.user_group.assign(std::size_t(L), std::vector<int>(std::size_t(K)));
  for (int j = 0; j < L; ++j)
    for (int m = 0; m < K; ++m) covs.user_group[j][m] = m % G;
  covs.idx.assign(std::size_t(L),
                  std::vector<std::vector<int>>(std::size_t(L), std::vector<int>(std::size_t(G))));
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < L; ++j)
      for (int g = 0; g < G; ++g) {
        covs.idx[l][j][g] = int(covs.mats.size());
        covs.mats.push_back(oracles::random_psd(M, scale, rng));
      }
  return covs;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("sampled channels have the requested covariance (MC)") {
  Rng rng(101);
  CovarianceSet covs = toy_covs(1, 1, 4, 1, rng, 0.8);
  ChannelSampler sampler(covs);
  const int N = 20000;
  MatC acc = MatC::Zero(4, 4);
  Rng draws = Rng(55);
  for (int n = 0; n < N; ++n) {
    Rng r = draws.derive(1, n);
    ChannelDraw d = sampler.sample(r, n);
    acc += d.h[0][0][0] * d.h[0][0][0].adjoint();
  }
  acc /= double(N);
  const MatC& R = covs.R(0, 0, 0);
  CHECK((acc - R).norm() / R.norm() < 0.05);
}

TEST_CASE("same-group users share covariance but not realizations") {
  Rng rng(7);
  CovarianceSet covs = toy_covs(1, 4, 4, 2, rng);
  ChannelSampler sampler(covs);
  Rng r = Rng(9).derive(2, 0);
  ChannelDraw d = sampler.sample(r);
  CHECK(&covs.R(0, 0, 0) == &covs.R(0, 0, 2));
  CHECK((d.h[0][0][0] - d.h[0][0][2]).norm() > 1e-6);
}

TEST_CASE("sampling and estimation are bitwise deterministic") {
  Rng rng(31);
  CovarianceSet covs = toy_covs(2, 2, 4, 1, rng);
  ChannelSampler sampler(covs);
  EstimationModel model = compute_estimation_model(covs, 10.0);
  Rng r1 = Rng(77).derive(0, 3);
  Rng r2 = Rng(77).derive(0, 3);
  ChannelDraw d1 = sampler.sample(r1, 3);
  ChannelDraw d2 = sampler.sample(r2, 3);
  EstimateSet e1 = mmse_estimate(d1, model, 10.0, r1);
  EstimateSet e2 = mmse_estimate(d2, model, 10.0, r2);
  for (int l = 0; l < 2; ++l)
    for (int j = 0; j < 2; ++j)
      for (int m = 0; m < 2; ++m)
        CHECK(d1.h[l][j][m] == d2.h[l][j][m]);
  for (int j = 0; j < 2; ++j) CHECK(e1.H_hat[j] == e2.H_hat[j]);
}

TEST_CASE("estimation model matches dense formulas") {
  Rng rng(13);
  const int L = 2, K = 2, M = 3, G = 1;
  CovarianceSet covs = toy_covs(L, K, M, G, rng);
  const double rho_tr = 7.5;
  EstimationModel model = compute_estimation_model(covs, rho_tr);
  for (int l = 0; l < L; ++l) {
    MatC A = MatC::Identity(M, M) / rho_tr;
    for (int j = 0; j < L; ++j) A += covs.R(l, j, 0);
    MatC S_ref = A.inverse();
    CHECK((model.S_of(l, 0) - S_ref).norm() < 1e-12);
    for (int j = 0; j < L; ++j) {
      MatC Phi_ref = covs.R(l, l, 0) * S_ref * covs.R(l, j, 0);
      CHECK((model.Phi(l, j, 0) - Phi_ref).norm() < 1e-12);
    }
    CHECK((model.filter[l][0] - covs.R(l, l, 0) * S_ref).norm() < 1e-12);
  }
}

TEST_CASE("estimate covariance and pilot-contamination cross terms (MC)") {
  Rng rng(23);
  const int L = 2, K = 1, M = 4, G = 1;
  CovarianceSet covs = toy_covs(L, K, M, G, rng, 0.7);
  const double rho_tr = 5.0;
  ChannelSampler sampler(covs);
  EstimationModel model = compute_estimation_model(covs, rho_tr);
  const int N = 20000;
  MatC cov_hat = MatC::Zero(M, M);   // E[hhat hhat^H]
  MatC cross_own = MatC::Zero(M, M); // E[hhat h_{0,0}^H]
  MatC cross_oth = MatC::Zero(M, M); // E[hhat h_{0,1}^H]
  Rng draws = Rng(321);
  for (int n = 0; n < N; ++n) {
    Rng r = draws.derive(0, n);
    ChannelDraw d = sampler.sample(r, n);
    EstimateSet est = mmse_estimate(d, model, rho_tr, r);
    VecC hhat = est.H_hat[0].col(0);
    cov_hat += hhat * hhat.adjoint();
    cross_own += hhat * d.h[0][0][0].adjoint();
    cross_oth += hhat * d.h[0][1][0].adjoint();
  }
  cov_hat /= double(N);
  cross_own /= double(N);
  cross_oth /= double(N);
  const MatC& Phi_own = model.Phi(0, 0, 0);
  const MatC& Phi_oth = model.Phi(0, 1, 0);
  CHECK((cov_hat - Phi_own).norm() / Phi_own.norm() < 0.06);
  CHECK((cross_own - Phi_own).norm() / Phi_own.norm() < 0.06);
  CHECK((cross_oth - Phi_oth).norm() / Phi_oth.norm() < 0.08);
  CHECK(Phi_oth.norm() > 1e-3);  // contamination is really there
}

TEST_CASE("estimates become exact as training SNR grows (single cell)") {
  Rng rng(41);
  CovarianceSet covs = toy_covs(1, 1, 4, 1, rng, 1.0);
  EstimationModel model = compute_estimation_model(covs, 1e8);
  const MatC& R = covs.R(0, 0, 0);
  CHECK((model.Phi(0, 0, 0) - R).norm() / R.norm() < 1e-6);
}

TEST_CASE("estimate covariance never exceeds the prior covariance in trace") {
  Rng rng(5);
  CovarianceSet covs = toy_covs(3, 4, 6, 2, rng);
  EstimationModel model = compute_estimation_model(covs, 31.6227766016837933);
  for (int l = 0; l < 3; ++l)
    for (int g = 0; g < 2; ++g) {
      double t_phi = model.Phi_group(l, l, g).trace().real();
      double t_r = covs.R_group(l, l, g).trace().real();
      CHECK(t_phi <= t_r + 1e-12);
      CHECK(t_phi > 0.0);
      const MatC& P = model.Phi_group(l, l, g);
      CHECK((P - P.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("estimate matrices have the right shape and group wiring") {
  Rng rng(3);
  CovarianceSet covs = toy_covs(2, 6, 5, 3, rng);
  ChannelSampler sampler(covs);
  EstimationModel model = compute_estimation_model(covs, 10.0);
  Rng r = Rng(4).derive(0, 0);
  ChannelDraw d = sampler.sample(r);
  EstimateSet est = mmse_estimate(d, model, 10.0, r);
  REQUIRE(int(est.H_hat.size()) == 2);
  CHECK(est.H_hat[0].rows() == 5);
  CHECK(est.H_hat[0].cols() == 6);
  CHECK(&model.Phi(0, 1, 0) == &model.Phi(0, 1, 3));  // users 0 and 3 share group 0
  CHECK(&model.S_of(1, 2) == &model.S_of(1, 5));
}

}  // TEST_SUITE
