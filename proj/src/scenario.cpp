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

#include "tpemimo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tpemimo {

namespace {

double wrap_pi(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) a -= 2.0 * kPi;
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// three-term Legendre recurrence. Symmetric; only half the roots are solved.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(kPi * (double(i) + 0.75) / (double(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * z * p1 - double(k) * p2) / double(k + 1);
      }
      pp = double(n) * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

template <typename T>
void expand_or_check(std::vector<T>& v, int L, T fill, const char* name) {
  if (v.empty()) v.assign(std::size_t(L), fill);
  if (int(v.size()) != L)
    throw std::invalid_argument(std::string(name) + ": expected length L");
}

void parse_into(const nlohmann::json& js, ScenarioConfig& c) {
  auto get = [&js](const char* key, auto& dst) {
    if (js.contains(key)) js.at(key).get_to(dst);
  };
  get("L", c.L);
  get("K", c.K);
  get("M", c.M);
  get("G", c.G);
  get("r_inner", c.r_inner);
  get("r_outer", c.r_outer);
  get("delta_pl", c.delta_pl);
  get("d0", c.d0);
  get("theta_3db", c.theta_3db);
  get("ant_spacing", c.ant_spacing);
  if (js.contains("ang_spread_deg"))
    c.ang_spread = js.at("ang_spread_deg").get<double>() * kPi / 180.0;
  if (js.contains("rho_tr_db"))
    c.rho_tr = std::pow(10.0, js.at("rho_tr_db").get<double>() / 10.0);
  if (js.contains("rho_dl_db"))
    c.rho_dl = std::pow(10.0, js.at("rho_dl_db").get<double>() / 10.0);
  get("rho_tr", c.rho_tr);
  get("rho_dl", c.rho_dl);
  get("P", c.P);
  get("J", c.J);
  get("phi", c.phi);
  get("seed", c.seed);
  get("n_drops", c.n_drops);
  get("n_trials", c.n_trials);
}

}  // namespace

void ScenarioConfig::finalize() {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (M < 1) throw std::invalid_argument("M must be >= 1");
  if (G < 1 || G > K) throw std::invalid_argument("G must be in [1, K]");
  if (K % G != 0) throw std::invalid_argument("K must be divisible by G");
  if (!(r_inner > 0.0) || !(r_outer > r_inner))
    throw std::invalid_argument("need 0 < r_inner < r_outer");
  if (!(delta_pl > 0.0)) throw std::invalid_argument("delta_pl must be > 0");
  if (!(d0 > 0.0)) throw std::invalid_argument("d0 must be > 0");
  if (!(theta_3db > 0.0)) throw std::invalid_argument("theta_3db must be > 0");
  if (!(ant_spacing > 0.0)) throw std::invalid_argument("ant_spacing must be > 0");
  if (!(ang_spread > 0.0)) throw std::invalid_argument("ang_spread must be > 0");
  if (!(rho_tr > 0.0)) throw std::invalid_argument("rho_tr must be > 0");
  if (!(rho_dl > 0.0)) throw std::invalid_argument("rho_dl must be > 0");
  if (n_drops < 1) throw std::invalid_argument("n_drops must be >= 1");
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");

  expand_or_check(P, L, 1.0, "P");
  expand_or_check(J, L, 5, "J");
  expand_or_check(phi, L, sigma2(), "phi");
  for (double p : P)
    if (!(p > 0.0)) throw std::invalid_argument("P entries must be > 0");
  for (int j : J)
    if (j < 1) throw std::invalid_argument("J entries must be >= 1");
  for (double f : phi)
    if (!(f > 0.0)) throw std::invalid_argument("phi entries must be > 0");
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  nlohmann::json js = nlohmann::json::parse(text);
  ScenarioConfig c;
  parse_into(js, c);
  c.finalize();
  return c;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

int CovarianceSet::users_in_group(int j, int g) const {
  return int(std::count(user_group[j].begin(), user_group[j].end(), g));
}

Geometry build_geometry(const ScenarioConfig& config, Rng& rng) {
  const int L = config.L, K = config.K, G = config.G;
  Geometry geo;
  geo.bs_position.assign(std::size_t(L), Eigen::Vector2d::Zero());
  geo.boresight.resize(std::size_t(L));
  for (int j = 0; j < L; ++j)
    geo.boresight[j] = wrap_pi(kPi / 2.0 + double(j) * 2.0 * kPi / double(L));

  geo.group_position.assign(std::size_t(L), std::vector<Eigen::Vector2d>(std::size_t(G)));
  geo.user_group.assign(std::size_t(L), std::vector<int>(std::size_t(K)));
  for (int j = 0; j < L; ++j) {
    for (int g = 0; g < G; ++g) {
      const double u_r = rng.uniform();
      const double u_a = rng.uniform();
      const double r = std::sqrt(config.r_inner * config.r_inner +
                                 u_r * (config.r_outer * config.r_outer -
                                        config.r_inner * config.r_inner));
      const double az = geo.boresight[j] + (u_a - 0.5) * 2.0 * kPi / double(L);
      geo.group_position[j][g] = r * Eigen::Vector2d(std::cos(az), std::sin(az));
    }
    for (int m = 0; m < K; ++m) geo.user_group[j][m] = m % G;
  }

  geo.d.assign(std::size_t(L),
               std::vector<std::vector<double>>(std::size_t(L),
                                                std::vector<double>(std::size_t(K))));
  geo.theta.assign(std::size_t(L),
                   std::vector<std::vector<double>>(std::size_t(L),
                                                    std::vector<double>(std::size_t(G))));
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < L; ++j) {
      for (int g = 0; g < G; ++g) {
        const Eigen::Vector2d rel = geo.group_position[j][g] - geo.bs_position[l];
        geo.theta[l][j][g] = wrap_pi(std::atan2(rel.y(), rel.x()) - geo.boresight[l]);
      }
      for (int m = 0; m < K; ++m) {
        const int g = geo.user_group[j][m];
        geo.d[l][j][m] = (geo.group_position[j][g] - geo.bs_position[l]).norm();
      }
    }
  return geo;
}

double antenna_gain_db(double theta, double theta_3db) {
  const double deg = theta * 180.0 / kPi;
  return -std::min(12.0 * (deg / theta_3db) * (deg / theta_3db), 30.0);
}

double pathloss(double d, double d0, double delta_pl) {
  return 1.0 / (1.0 + std::pow(d / d0, delta_pl));
}

MatC one_ring_covariance(double theta, double spread, double ant_spacing, int M,
                         double scale, int quad_nodes) {
  if (!(spread > 0.0)) throw std::invalid_argument("one_ring_covariance: spread must be > 0");
  if (M < 1) throw std::invalid_argument("one_ring_covariance: M must be >= 1");
  if (quad_nodes < 2) throw std::invalid_argument("one_ring_covariance: need >= 2 nodes");

  std::vector<double> xs, ws;
  gauss_legendre(quad_nodes, xs, ws);

  // First column c(k) = scale * E[exp(i 2 pi d k sin(alpha))], alpha uniform on
  // [theta - spread, theta + spread]; expectation via normalized quadrature so
  // that c(0) == scale exactly.
  VecC col = VecC::Zero(M);
  double wsum = 0.0;
  for (int q = 0; q < quad_nodes; ++q) {
    const double alpha = theta + spread * xs[std::size_t(q)];
    const double s = std::sin(alpha);
    const double wq = ws[std::size_t(q)];
    wsum += wq;
    const double phase = 2.0 * kPi * ant_spacing * s;
    for (int k = 0; k < M; ++k)
      col(k) += wq * std::polar(1.0, phase * double(k));
  }
  col *= scale / wsum;

  MatC R(M, M);
  for (int u = 0; u < M; ++u)
    for (int v = 0; v < M; ++v)
      R(u, v) = (u >= v) ? col(u - v) : std::conj(col(v - u));
  return R;
}

CovarianceSet build_covariances(const ScenarioConfig& config, const Geometry& geometry) {
  const int L = config.L, K = config.K, M = config.M, G = config.G;
  CovarianceSet covs;
  covs.L = L;
  covs.K = K;
  covs.M = M;
  covs.G = G;
  covs.user_group = geometry.user_group;
  covs.idx.assign(std::size_t(L),
                  std::vector<std::vector<int>>(std::size_t(L), std::vector<int>(std::size_t(G))));
  covs.mats.reserve(std::size_t(L) * std::size_t(L) * std::size_t(G));
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < L; ++j)
      for (int g = 0; g < G; ++g) {
        int rep = 0;
        while (geometry.user_group[j][rep] != g) ++rep;
        const double th = geometry.theta[l][j][g];
        const double gain = std::pow(10.0, antenna_gain_db(th, config.theta_3db) / 10.0);
        const double pl = pathloss(geometry.d[l][j][rep], config.d0, config.delta_pl);
        covs.idx[l][j][g] = int(covs.mats.size());
        covs.mats.push_back(one_ring_covariance(th, config.ang_spread, config.ant_spacing,
                                                M, gain * pl));
      }
  return covs;
}

}  // namespace tpemimo
