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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tpemimo/channel.hpp"
#include "tpemimo/common.hpp"
#include "tpemimo/detequiv.hpp"
#include "tpemimo/optimizer.hpp"
#include "tpemimo/precoders.hpp"
#include "tpemimo/scenario.hpp"

namespace tpemimo {

// Everything needed to simulate one user-position drop.
struct ScenarioData {
  ScenarioConfig config;
  Geometry geometry;
  CovarianceSet covs;
  EstimationModel model;

  static ScenarioData build(const ScenarioConfig& config, int drop_index);
};

// Maps the per-trial estimates to one precoding matrix per cell.
using PrecoderFactory = std::function<std::vector<PrecodingMatrix>(const EstimateSet&)>;

// Per-(j,m) empirical SINR statistics plus jackknife standard errors.
struct EmpiricalSinr {
  std::vector<std::vector<double>> gamma;        // [j][m]
  std::vector<std::vector<double>> rate_stderr;  // [j][m], on log2(1+gamma)
  double avg_rate = 0.0;
  double avg_rate_stderr = 0.0;
  double min_rate = 0.0;
  double power_min = 0.0, power_max = 0.0;  // per-trial (1/K) tr(G G^H) range
  int n_trials = 0;
};

// Estimates gamma_{j,m} = |E[h^H g]|^2 / (sigma2 + sum_{l,k} E|h_{l,j,m}^H g_{l,k}|^2
// - |E[h^H g]|^2) with all expectations taken jointly over the same trials
// (fresh channels and pilot noise per trial). Standard errors use a 10-batch
// jackknife on the rate.
EmpiricalSinr empirical_sinr(const ScenarioData& data, const PrecoderFactory& factory,
                             int n_trials, Rng& rng);

// Runs several precoders on the same trials (paired comparison); one result each.
std::vector<EmpiricalSinr> empirical_sinr_multi(const ScenarioData& data,
                                                const std::vector<PrecoderFactory>& factories,
                                                int n_trials, Rng& rng);

// (1/(K L)) sum_{j,m} log2(1 + gamma_{j,m}).
double average_rate(const std::vector<std::vector<double>>& gamma);

// One parameter sweep. parameter is one of "M", "phi", "rho_tr_db";
// rho_tr values are given in dB. phi_rule "scaled" sets phi_j = M sigma2 / K at
// every sweep point (otherwise the config/sweep value applies).
struct SweepSpec {
  std::string name;        // CSV sweep_name column
  std::string parameter;   // "M" | "phi" | "rho_tr_db" | "none"
  std::vector<double> values;
  std::vector<int> tpe_orders = {5};
  bool optimize = true;    // optimize TPE coefficients (else Taylor-initial)
  bool include_rzf = true;
  bool include_mrt = true;
  std::string phi_rule = "fixed";  // "fixed" | "scaled"
  bool monte_carlo = true;         // false -> deterministic columns only
};

struct CsvRow {
  std::string sweep_name;
  double sweep_value = 0.0;
  std::string scheme;  // "RZF" | "MRT" | "TPE"
  int J = 0;
  int drop_count = 0;
  int trial_count = 0;
  double avg_rate_emp = 0.0;
  double avg_rate_det = 0.0;
  double stderr_ = 0.0;
  double min_rate_emp = 0.0;
  double xi_star = 0.0;
};

inline constexpr const char* kCsvHeader =
    "sweep_name,sweep_value,scheme,J,drop_count,trial_count,"
    "avg_rate_emp,avg_rate_det,stderr,min_rate_emp,xi_star";

std::string format_csv(const std::vector<CsvRow>& rows);

// For each sweep value: builds n_drops scenarios, computes the RZF deterministic
// equivalent and the mimic weights, optimizes TPE coefficients per drop (when
// requested), runs Monte-Carlo for all schemes on shared trials, and averages
// over drops. Fixed seed -> byte-identical CSV.
std::vector<CsvRow> run_experiment(const ScenarioConfig& config, const SweepSpec& sweep);

// Fig.-5-style run: per M (with phi = M sigma2/K), (emp, det) pairs for RZF and
// TPE J = 5 with Taylor-initial coefficients.
std::vector<CsvRow> theory_vs_empirical(const ScenarioConfig& config,
                                        const std::vector<double>& M_list);

}  // namespace tpemimo
