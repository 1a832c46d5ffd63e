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
//
// tpesim: experiment driver. Subcommands run one parameter sweep each and
// emit the CSV schema of simkit; identical config + seed gives byte-identical
// output. Exit code 0 on success, 1 with a stage-tagged message otherwise.

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tpemimo/scenario.hpp"
#include "tpemimo/simkit.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> drops;
  std::string profile;

  std::vector<int> orders = {5};
  bool taylor = false;  // skip coefficient optimization
  bool no_rzf = false;
  bool no_mrt = false;

  std::vector<double> m_list = {80, 160, 240, 320, 400};
  std::vector<double> phi_list = {0.001, 0.004, 0.016, 0.064, 0.256};
  std::vector<double> rho_list = {0, 4, 8, 12};
  bool phi_scaled = false;  // phi = M sigma^2 / K at every sweep point
};

void add_common_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "scenario config (JSON)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_path, "output CSV path (default: stdout)");
  cmd->add_option("--seed", o.seed, "RNG seed (overrides config)");
  cmd->add_option("--trials", o.trials, "Monte-Carlo trials per drop (overrides profile)");
  cmd->add_option("--drops", o.drops, "independent user-position drops (overrides profile)");
  cmd->add_option("--profile", o.profile, "smoke: 10 trials, 1 drop; paper: 500 trials, 10 drops")
      ->check(CLI::IsMember({"smoke", "paper"}));
  cmd->add_option("--orders", o.orders, "TPE orders J (default 5)");
  cmd->add_flag("--taylor", o.taylor, "use Taylor-initial TPE coefficients (no optimization)");
  cmd->add_flag("--no-rzf", o.no_rzf, "drop the RZF scheme from the sweep");
  cmd->add_flag("--no-mrt", o.no_mrt, "drop the MRT scheme from the sweep");
}

tpemimo::ScenarioConfig make_config(const Options& o) {
  tpemimo::ScenarioConfig cfg;
  if (!o.config_path.empty()) cfg = tpemimo::ScenarioConfig::from_json_file(o.config_path);
  if (o.profile == "smoke") {
    cfg.n_trials = 10;
    cfg.n_drops = 1;
  } else if (o.profile == "paper") {
    cfg.n_trials = 500;
    cfg.n_drops = 10;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.n_trials = *o.trials;
  if (o.drops) cfg.n_drops = *o.drops;
  cfg.finalize();
  return cfg;
}

tpemimo::SweepSpec make_sweep(const Options& o, const std::string& name,
                              const std::string& parameter, std::vector<double> values) {
  tpemimo::SweepSpec sw;
  sw.name = name;
  sw.parameter = parameter;
  sw.values = std::move(values);
  sw.tpe_orders = o.orders;
  sw.optimize = !o.taylor;
  sw.include_rzf = !o.no_rzf;
  sw.include_mrt = !o.no_mrt;
  sw.phi_rule = o.phi_scaled ? "scaled" : "fixed";
  return sw;
}

void emit(const std::string& csv, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  f << csv;
  if (!f) throw std::runtime_error("short write: " + out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tpemimo experiment driver: multi-cell downlink precoding sweeps"};
  app.require_subcommand(1);
  Options o;

  CLI::App* sweep_m = app.add_subcommand("sweep-m", "average rate vs BS antenna count M");
  sweep_m->add_option("--m-list", o.m_list, "antenna counts (default 80..400)");
  sweep_m->add_flag("--phi-scaled", o.phi_scaled, "set phi = M sigma^2 / K per point");
  add_common_flags(sweep_m, o);

  CLI::App* sweep_phi =
      app.add_subcommand("sweep-phi", "average rate vs RZF regularization phi");
  sweep_phi->add_option("--phi-list", o.phi_list, "phi grid");
  add_common_flags(sweep_phi, o);

  CLI::App* sweep_rho =
      app.add_subcommand("sweep-rho", "average rate vs training SNR rho_tr [dB]");
  sweep_rho->add_option("--rho-list", o.rho_list, "rho_tr grid in dB");
  add_common_flags(sweep_rho, o);

  CLI::App* tve = app.add_subcommand(
      "theory-vs-emp", "deterministic vs Monte-Carlo rates over M with phi = M sigma^2 / K");
  tve->add_option("--m-list", o.m_list, "antenna counts");
  add_common_flags(tve, o);

  CLI::App* opt = app.add_subcommand(
      "optimize-only", "deterministic rates and optimized TPE coefficients, no Monte-Carlo");
  add_common_flags(opt, o);

  CLI11_PARSE(app, argc, argv);

  std::string stage = "config";
  try {
    tpemimo::ScenarioConfig cfg = make_config(o);

    stage = "sweep";
    std::vector<tpemimo::CsvRow> rows;
    if (sweep_m->parsed()) {
      rows = tpemimo::run_experiment(cfg, make_sweep(o, "sweep_m", "M", o.m_list));
    } else if (sweep_phi->parsed()) {
      rows = tpemimo::run_experiment(cfg, make_sweep(o, "sweep_phi", "phi", o.phi_list));
    } else if (sweep_rho->parsed()) {
      rows = tpemimo::run_experiment(cfg, make_sweep(o, "sweep_rho", "rho_tr_db", o.rho_list));
    } else if (tve->parsed()) {
      rows = tpemimo::theory_vs_empirical(cfg, o.m_list);
    } else if (opt->parsed()) {
      tpemimo::SweepSpec sw = make_sweep(o, "optimize_only", "none", {});
      sw.monte_carlo = false;
      sw.include_mrt = false;
      rows = tpemimo::run_experiment(cfg, sw);
    }

    stage = "output";
    emit(tpemimo::format_csv(rows), o.out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "tpesim: %s: %s\n", stage.c_str(), e.what());
    return 1;
  }
  return 0;
}
