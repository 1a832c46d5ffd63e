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
#include "tpemimo/scenario.hpp"

using namespace tpemimo;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.L = 3;
  cfg.K = 40;
  cfg.M = 16;
  cfg.G = 2;
  cfg.finalize();
  return cfg;
}

double wrap_pi(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("config validation rejects bad fields") {
  ScenarioConfig cfg = small_config();
  cfg.K = 41;  // not divisible by G = 2
  CHECK_THROWS_AS(cfg.finalize(), std::invalid_argument);

  cfg = small_config();
  cfg.r_inner = 300.0;
  CHECK_THROWS_AS(cfg.finalize(), std::invalid_argument);

  cfg = small_config();
  cfg.phi = {0.1, -0.1, 0.1};
  CHECK_THROWS_AS(cfg.finalize(), std::invalid_argument);

  cfg = small_config();
  cfg.J = {0, 5, 5};
  CHECK_THROWS_AS(cfg.finalize(), std::invalid_argument);
}

TEST_CASE("config json round trip") {
  const char* text = R"({"L":2,"K":8,"M":12,"G":2,"rho_dl":20.0,"phi":[0.05,0.05],"seed":7})";
  ScenarioConfig cfg = ScenarioConfig::from_json_text(text);
  CHECK(cfg.L == 2);
  CHECK(cfg.K == 8);
  CHECK(cfg.M == 12);
  CHECK(cfg.seed == 7);
  CHECK(cfg.sigma2() == doctest::Approx(0.05));
  CHECK(cfg.phi[1] == doctest::Approx(0.05));
  CHECK(cfg.P.size() == 2);  // defaults expanded
  CHECK(cfg.J.size() == 2);
}

TEST_CASE("round-robin group split: G=2, K=40 gives 20 users each") {
  ScenarioConfig cfg = small_config();
  Rng rng(3);
  Geometry geo = build_geometry(cfg, rng);
  for (int j = 0; j < cfg.L; ++j) {
    int count[2] = {0, 0};
    for (int m = 0; m < cfg.K; ++m) count[geo.user_group[j][m]]++;
    CHECK(count[0] == 20);
    CHECK(count[1] == 20);
  }
}

TEST_CASE("group radii stay inside the [35, 250] annulus and own sector") {
  ScenarioConfig cfg = small_config();
  for (int drop = 0; drop < 20; ++drop) {
    Rng rng = Rng(11).derive(0, drop);
    Geometry geo = build_geometry(cfg, rng);
    for (int j = 0; j < cfg.L; ++j)
      for (int g = 0; g < cfg.G; ++g) {
        double r = geo.group_position[j][g].norm();
        CHECK(r >= cfg.r_inner);
        CHECK(r <= cfg.r_outer);
        double az = std::atan2(geo.group_position[j][g].y(), geo.group_position[j][g].x());
        CHECK(std::abs(wrap_pi(az - geo.boresight[j])) <= kPi / cfg.L + 1e-12);
      }
  }
}

TEST_CASE("geometry is bitwise deterministic in (seed, drop)") {
  ScenarioConfig cfg = small_config();
  Rng r1 = Rng(42).derive(0, 5);
  Rng r2 = Rng(42).derive(0, 5);
  Geometry a = build_geometry(cfg, r1);
  Geometry b = build_geometry(cfg, r2);
  for (int j = 0; j < cfg.L; ++j)
    for (int g = 0; g < cfg.G; ++g) {
      CHECK(a.group_position[j][g].x() == b.group_position[j][g].x());
      CHECK(a.group_position[j][g].y() == b.group_position[j][g].y());
    }
  for (int l = 0; l < cfg.L; ++l)
    for (int j = 0; j < cfg.L; ++j) {
      for (int m = 0; m < cfg.K; ++m) CHECK(a.d[l][j][m] == b.d[l][j][m]);
      for (int g = 0; g < cfg.G; ++g) CHECK(a.theta[l][j][g] == b.theta[l][j][g]);
    }
}

TEST_CASE("antenna gain: boresight, 3 dB reference point, floor") {
  CHECK(antenna_gain_db(0.0, 70.0) == doctest::Approx(0.0));
  CHECK(antenna_gain_db(70.0 * kPi / 180.0, 70.0) == doctest::Approx(-12.0));
  CHECK(antenna_gain_db(kPi, 70.0) == doctest::Approx(-30.0));
  // maximal at boresight
  for (double th = -3.0; th <= 3.0; th += 0.1)
    CHECK(antenna_gain_db(th, 70.0) <= antenna_gain_db(0.0, 70.0) + 1e-12);
}

TEST_CASE("pathloss: zero distance, reference distance, frozen far value") {
  CHECK(pathloss(0.0, 30.0, 3.7) == doctest::Approx(1.0));
  CHECK(pathloss(30.0, 30.0, 3.7) == doctest::Approx(0.5));
  CHECK(pathloss(300.0, 30.0, 3.7) == doctest::Approx(1.9948645e-4).epsilon(1e-5));
  // monotone decreasing
  double prev = 2.0;
  for (double d = 0.0; d <= 400.0; d += 7.0) {
    double p = pathloss(d, 30.0, 3.7);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("one-ring: diagonal equals scale exactly") {
  MatC R = one_ring_covariance(0.4, 10.0 * kPi / 180.0, 0.5, 12, 0.37);
  for (int u = 0; u < 12; ++u) {
    CHECK(std::abs(R(u, u).real() - 0.37) < 1e-13);
    CHECK(std::abs(R(u, u).imag()) < 1e-13);
  }
  CHECK_THROWS_AS(one_ring_covariance(0.4, 0.0, 0.5, 8, 1.0), std::invalid_argument);
}

TEST_CASE("one-ring: spread -> 0 limit is the steering-vector outer product") {
  const int M = 8;
  const double theta = 0.7, d = 0.5, scale = 1.0;
  MatC R = one_ring_covariance(theta, 1e-6, d, M, scale);
  VecC a(M);
  for (int u = 0; u < M; ++u)
    a(u) = std::polar(1.0, 2.0 * kPi * d * u * std::sin(theta));
  MatC ref = scale * (a * a.adjoint());
  CHECK((R - ref).norm() < 1e-4);
}

TEST_CASE("one-ring: PSD up to quadrature error on random instances") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    double theta = (rng.uniform() - 0.5) * 2.0;
    double spread = (2.0 + 28.0 * rng.uniform()) * kPi / 180.0;
    double scale = 0.1 + rng.uniform();
    MatC R = one_ring_covariance(theta, spread, 0.5, 16, scale);
    Eigen::SelfAdjointEigenSolver<MatC> es(R);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * scale);
    CHECK((R - R.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("one-ring: doubling quadrature nodes changes entries by < 1e-8") {
  MatC R1 = one_ring_covariance(0.9, 10.0 * kPi / 180.0, 0.5, 24, 1.0, 256);
  MatC R2 = one_ring_covariance(0.9, 10.0 * kPi / 180.0, 0.5, 24, 1.0, 512);
  CHECK((R1 - R2).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("covariances: group sharing, Hermiticity, trace bound") {
  ScenarioConfig cfg = small_config();
  Rng rng(5);
  Geometry geo = build_geometry(cfg, rng);
  CovarianceSet covs = build_covariances(cfg, geo);
  for (int l = 0; l < cfg.L; ++l)
    for (int j = 0; j < cfg.L; ++j) {
      // same group -> identical matrix object
      CHECK(&covs.R(l, j, 0) == &covs.R(l, j, cfg.G));
      for (int g = 0; g < cfg.G; ++g) {
        const MatC& R = covs.R_group(l, j, g);
        CHECK((R - R.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(R.trace().real() / cfg.M <= 1.0 + 1e-12);
        CHECK(R.trace().real() / cfg.M > 0.0);
        Eigen::SelfAdjointEigenSolver<MatC> es(R);
        double nrm = es.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(es.eigenvalues().minCoeff() >= -1e-9 * nrm);
      }
    }
}

}  // TEST_SUITE
