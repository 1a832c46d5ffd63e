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

#include <string>
#include <vector>

#include "tpemimo/common.hpp"

namespace tpemimo {

// All physical and run-control constants of a simulation scenario.
// Angles are radians unless the name says otherwise; powers/SNRs are linear.
struct ScenarioConfig {
  int L = 3;    // cells
  int K = 40;   // users per cell
  int M = 160;  // BS antennas
  int G = 2;    // user groups per cell (K must be divisible by G)

  double r_inner = 35.0;   // annulus inner radius [m]
  double r_outer = 250.0;  // annulus outer radius [m]
  double delta_pl = 3.7;   // pathloss exponent
  double d0 = 30.0;        // pathloss reference distance [m]
  double theta_3db = 70.0; // half-power beamwidth [deg]
  double ant_spacing = 0.5;                  // antenna spacing [wavelengths]
  double ang_spread = 10.0 * kPi / 180.0;    // one-ring azimuth spread [rad]

  double rho_tr = 31.6227766016837933;  // effective training SNR (15 dB)
  double rho_dl = 10.0;                 // downlink SNR P/sigma^2 (10 dB)

  std::vector<double> P;    // per-cell per-user power; empty -> all 1
  std::vector<int> J;       // per-cell TPE order; empty -> all 5
  std::vector<double> phi;  // per-cell RZF regularization; empty -> all sigma2()

  std::uint64_t seed = 1;
  int n_drops = 10;
  int n_trials = 500;

  double sigma2() const { return 1.0 / rho_dl; }  // P normalized to 1

  // Expands empty P/J/phi defaults and validates all invariants.
  // Throws std::invalid_argument on violation.
  void finalize();

  static ScenarioConfig from_json_file(const std::string& path);
  static ScenarioConfig from_json_text(const std::string& text);
};

// Cell layout and one user-position drop.
struct Geometry {
  std::vector<Eigen::Vector2d> bs_position;  // [l]
  std::vector<double> boresight;             // [l], rad

  std::vector<std::vector<Eigen::Vector2d>> group_position;  // [j][g]
  std::vector<std::vector<int>> user_group;                  // [j][m]

  std::vector<std::vector<std::vector<double>>> d;      // [l][j][m], meters
  std::vector<std::vector<std::vector<double>>> theta;  // [l][j][g], rad from cell l boresight
};

// Covariance matrices R_{l,j,m} (source cell l, user m of cell j). Users in one
// group of one cell share a matrix, so storage is per (l, j, g) with an index map.
struct CovarianceSet {
  int L = 0, K = 0, M = 0, G = 0;
  std::vector<std::vector<int>> user_group;       // [j][m]
  std::vector<MatC> mats;                         // distinct matrices
  std::vector<std::vector<std::vector<int>>> idx; // [l][j][g] -> mats index

  const MatC& R_group(int l, int j, int g) const { return mats[idx[l][j][g]]; }
  const MatC& R(int l, int j, int m) const { return R_group(l, j, user_group[j][m]); }
  int users_in_group(int j, int g) const;
};

// Samples G group positions per cell uniformly over the cell's sector of the
// annulus, assigns users round-robin to groups, and fills all distance/angle tables.
Geometry build_geometry(const ScenarioConfig& config, Rng& rng);

// -min(12 (theta/theta_3db)^2, 30) dB, theta given in radians, theta_3db in degrees.
double antenna_gain_db(double theta, double theta_3db);

// 1 / (1 + (d/d0)^delta_pl).
double pathloss(double d, double d0, double delta_pl);

// One-ring covariance: entry (u,v) = scale/(2*spread) * integral over
// [theta-spread, theta+spread] of exp(i*2*pi*ant_spacing*(u-v)*sin(alpha)).
// Gauss-Legendre quadrature with quad_nodes nodes. Throws on spread <= 0.
MatC one_ring_covariance(double theta, double spread, double ant_spacing, int M,
                         double scale, int quad_nodes = 256);

// R_{l,j,m} for all triples, scaled by antenna pattern and pathloss.
CovarianceSet build_covariances(const ScenarioConfig& config, const Geometry& geometry);

}  // namespace tpemimo
