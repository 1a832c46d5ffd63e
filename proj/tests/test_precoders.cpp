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
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "tpemimo/precoders.hpp"

using namespace tpemimo;

namespace {

MatC random_channel(int M, int K, Rng& rng) {
  MatC H(M, K);
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < K; ++k) H(i, k) = rng.cgaussian();
  return H;
}

double tx_power(const MatC& G, int K) { return (G * G.adjoint()).trace().real() / K; }

double direction_gap(const MatC& A, const MatC& B) {
  return (A / A.norm() - B / B.norm()).norm();
}

}  // namespace

TEST_SUITE("precoders") {

TEST_CASE("rzf: exact power normalization and dense-inverse agreement") {
  Rng rng(2);
  const int M = 10, K = 6;
  MatC H = random_channel(M, K, rng);
  const double phi = 0.3, P = 1.7;
  PrecodingMatrix pm = rzf_precoder(H, phi, P);
  CHECK(tx_power(pm.G, K) == doctest::Approx(P).epsilon(1e-12));
  CHECK(pm.P_target == doctest::Approx(P));

  MatC raw = (H * H.adjoint() + double(K) * phi * MatC::Identity(M, M)).inverse() * H *
             std::sqrt(double(K));
  double beta = std::sqrt(P * double(K) / (raw * raw.adjoint()).trace().real());
  CHECK((pm.G - beta * raw).norm() < 1e-10 * raw.norm());
}

TEST_CASE("rzf: heavy regularization collapses to the mrt direction") {
  Rng rng(8);
  MatC H = random_channel(8, 5, rng);
  PrecodingMatrix rzf = rzf_precoder(H, 1e8, 1.0);
  PrecodingMatrix mrt = mrt_precoder(H, 1.0);
  CHECK(direction_gap(rzf.G, mrt.G) < 1e-6);
}

TEST_CASE("mrt: proportional to the estimate, exact power, zero input throws") {
  Rng rng(12);
  const int M = 7, K = 4;
  MatC H = random_channel(M, K, rng);
  PrecodingMatrix pm = mrt_precoder(H, 0.9);
  CHECK(tx_power(pm.G, K) == doctest::Approx(0.9).epsilon(1e-12));
  double c = std::sqrt(0.9 * double(K) / (H * H.adjoint()).trace().real());
  CHECK((pm.G - c * H).norm() < 1e-12 * H.norm());
  CHECK_THROWS_AS(mrt_precoder(MatC::Zero(M, K), 1.0), std::invalid_argument);
}

TEST_CASE("tpe: matches the dense matrix-polynomial oracle") {
  Rng rng(21);
  const int M = 12, K = 8;
  MatC H = random_channel(M, K, rng);
  TpeCoefficients w;
  w.w = VecR(4);
  w.w << 0.7, -0.3, 0.11, 0.05;
  TpeOpCount ops;
  PrecodingMatrix pm = tpe_precoder(H, w, &ops);

  MatC A = H * H.adjoint() / double(K);
  MatC S = H / std::sqrt(double(K));
  std::vector<double> wv(w.w.data(), w.w.data() + w.J());
  MatC ref = oracles::dense_matrix_polynomial(wv, A, S);
  CHECK((pm.G - ref).norm() < 1e-10 * ref.norm());
  CHECK(ops.mm_products == 0);
  CHECK(ops.mk_passes == 2 * (w.J() - 1));
}

TEST_CASE("tpe: order one is a scaled mrt and costs no passes") {
  Rng rng(33);
  MatC H = random_channel(6, 4, rng);
  TpeCoefficients w;
  w.w = VecR(1);
  w.w << 0.44;
  TpeOpCount ops;
  PrecodingMatrix pm = tpe_precoder(H, w, &ops);
  CHECK((pm.G - 0.44 * H / 2.0).norm() < 1e-14);  // sqrt(K) = 2
  CHECK(ops.mk_passes == 0);
  PrecodingMatrix mrt = mrt_precoder(H, 1.0);
  CHECK(direction_gap(pm.G, mrt.G) < 1e-12);
}

TEST_CASE("taylor coefficients: hand values at J = 1 and J = 2") {
  TpeCoefficients w1 = taylor_initial_coeffs(1, 2.0, 0.3, 0.5);
  REQUIRE(w1.J() == 1);
  CHECK(w1.w(0) == doctest::Approx(1.0));  // beta * kappa

  TpeCoefficients w2 = taylor_initial_coeffs(2, 1.0, 0.0, 1.0);
  REQUIRE(w2.J() == 2);
  CHECK(w2.w(0) == doctest::Approx(2.0));
  CHECK(w2.w(1) == doctest::Approx(-1.0));
}

TEST_CASE("taylor coefficients: tpe direction converges to rzf as J grows") {
  Rng rng(45);
  const int M = 6, K = 24;
  MatC H = random_channel(M, K, rng);
  const double phi = 0.5;
  MatC A = H * H.adjoint() / double(K);
  Eigen::SelfAdjointEigenSolver<MatC> es(A);
  const double kappa = 1.0 / (es.eigenvalues().maxCoeff() + phi);

  PrecodingMatrix rzf = rzf_precoder(H, phi, 1.0);
  double prev = 2.0;
  for (int J : {4, 8, 16, 32}) {
    TpeCoefficients w = taylor_initial_coeffs(J, 1.0, phi, kappa);
    PrecodingMatrix tpe = tpe_precoder(H, w);
    double gap = direction_gap(tpe.G, rzf.G);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("power iteration estimate stays below and near the true extreme") {
  Rng rng(66);
  for (int rep = 0; rep < 5; ++rep) {
    MatC H = random_channel(10, 14, rng);
    MatC A = H * H.adjoint() / 14.0;
    Eigen::SelfAdjointEigenSolver<MatC> es(A);
    const double truth = es.eigenvalues().maxCoeff();
    const double est = estimate_lambda_max(H, 20);
    CHECK(est <= truth * (1.0 + 1e-12));
    CHECK(est > 0.80 * truth);
  }
}

TEST_CASE("normalize_tpe_power: exact quadratic constraint and scale invariance") {
  Rng rng(9);
  const int J = 4;
  MatR X(J, J);
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j) X(i, j) = rng.gaussian();
  MatR C = X * X.transpose() + 0.1 * MatR::Identity(J, J);
  TpeCoefficients w;
  w.w = VecR(J);
  w.w << 0.3, -0.2, 0.05, 0.01;
  const double P = 2.5;
  TpeCoefficients wn = normalize_tpe_power(w, C, P);
  CHECK(wn.w.dot(C * wn.w) == doctest::Approx(P).epsilon(1e-12));

  TpeCoefficients w_scaled;
  w_scaled.w = 17.0 * w.w;
  TpeCoefficients wn2 = normalize_tpe_power(w_scaled, C, P);
  CHECK((wn.w - wn2.w).norm() < 1e-12);

  TpeCoefficients zero;
  zero.w = VecR::Zero(J);
  CHECK_THROWS_AS(normalize_tpe_power(zero, C, P), std::invalid_argument);
}

}  // TEST_SUITE
