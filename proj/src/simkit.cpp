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

#include "tpemimo/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tpemimo {

ScenarioData ScenarioData::build(const ScenarioConfig& config, int drop_index) {
  ScenarioData d;
  d.config = config;
  d.config.finalize();
  Rng drop_rng = Rng(d.config.seed).derive(0, static_cast<std::uint64_t>(drop_index));
  d.geometry = build_geometry(d.config, drop_rng);
  d.covs = build_covariances(d.config, d.geometry);
  d.model = compute_estimation_model(d.covs, d.config.rho_tr);
  return d;
}

double average_rate(const std::vector<std::vector<double>>& gamma) {
  double sum = 0.0;
  int n = 0;
  for (const auto& cell : gamma)
    for (double g : cell) {
      sum += std::log2(1.0 + g);
      ++n;
    }
  return n > 0 ? sum / n : 0.0;
}

std::vector<EmpiricalSinr> empirical_sinr_multi(const ScenarioData& data,
                                                const std::vector<PrecoderFactory>& factories,
                                                int n_trials, Rng& rng) {
  if (n_trials < 1) throw std::invalid_argument("empirical_sinr: n_trials must be positive");
  const int L = data.config.L;
  const int K = data.config.K;
  const int F = static_cast<int>(factories.size());
  const int B = std::min(10, n_trials);
  const double sigma2 = data.config.sigma2();
  ChannelSampler sampler(data.covs);

  std::vector<MatC> sig_tot(static_cast<std::size_t>(F), MatC::Zero(L, K));
  std::vector<MatR> pow_tot(static_cast<std::size_t>(F), MatR::Zero(L, K));
  std::vector<std::vector<MatC>> sig_b(
      static_cast<std::size_t>(F), std::vector<MatC>(static_cast<std::size_t>(B), MatC::Zero(L, K)));
  std::vector<std::vector<MatR>> pow_b(
      static_cast<std::size_t>(F), std::vector<MatR>(static_cast<std::size_t>(B), MatR::Zero(L, K)));
  std::vector<int> batch_n(static_cast<std::size_t>(B), 0);
  std::vector<EmpiricalSinr> out(static_cast<std::size_t>(F));
  for (EmpiricalSinr& e : out) {
    e.power_min = std::numeric_limits<double>::infinity();
    e.power_max = -std::numeric_limits<double>::infinity();
    e.n_trials = n_trials;
  }

  for (int t = 0; t < n_trials; ++t) {
    ChannelDraw draw = sampler.sample(rng, t);
    EstimateSet est = mmse_estimate(draw, data.model, data.config.rho_tr, rng);
    const int b = static_cast<int>(static_cast<long>(t) * B / n_trials);
    ++batch_n[static_cast<std::size_t>(b)];
    for (int f = 0; f < F; ++f) {
      std::vector<PrecodingMatrix> G = factories[static_cast<std::size_t>(f)](est);
      for (int l = 0; l < L; ++l) {
        const double p = G[static_cast<std::size_t>(l)].G.squaredNorm() / K;
        out[static_cast<std::size_t>(f)].power_min = std::min(out[static_cast<std::size_t>(f)].power_min, p);
        out[static_cast<std::size_t>(f)].power_max = std::max(out[static_cast<std::size_t>(f)].power_max, p);
      }
      for (int j = 0; j < L; ++j)
        for (int m = 0; m < K; ++m) {
          const VecC& h_own = draw.h[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)][static_cast<std::size_t>(m)];
          const cxd s = h_own.dot(G[static_cast<std::size_t>(j)].G.col(m));
          double tot = 0.0;
          for (int l = 0; l < L; ++l)
            tot += (G[static_cast<std::size_t>(l)].G.adjoint() *
                    draw.h[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)][static_cast<std::size_t>(m)])
                       .squaredNorm();
          sig_tot[static_cast<std::size_t>(f)](j, m) += s;
          pow_tot[static_cast<std::size_t>(f)](j, m) += tot;
          sig_b[static_cast<std::size_t>(f)][static_cast<std::size_t>(b)](j, m) += s;
          pow_b[static_cast<std::size_t>(f)][static_cast<std::size_t>(b)](j, m) += tot;
        }
    }
  }

  auto gamma_of = [sigma2](cxd s_mean, double pow_mean) {
    const double sp = std::norm(s_mean);
    const double den = std::max(sigma2 + pow_mean - sp, 1e-300);
    return sp / den;
  };

  for (int f = 0; f < F; ++f) {
    EmpiricalSinr& e = out[static_cast<std::size_t>(f)];
    e.gamma.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(K), 0.0));
    e.rate_stderr.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(K), 0.0));
    e.min_rate = std::numeric_limits<double>::infinity();
    for (int j = 0; j < L; ++j)
      for (int m = 0; m < K; ++m) {
        const double g = gamma_of(sig_tot[static_cast<std::size_t>(f)](j, m) / double(n_trials),
                                  pow_tot[static_cast<std::size_t>(f)](j, m) / double(n_trials));
        e.gamma[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] = g;
        e.min_rate = std::min(e.min_rate, std::log2(1.0 + g));
      }
    e.avg_rate = average_rate(e.gamma);

    // leave-one-batch-out jackknife on the rates
    MatR user_mean = MatR::Zero(L, K);
    std::vector<MatR> user_rep(static_cast<std::size_t>(B), MatR::Zero(L, K));
    VecR avg_rep(B);
    for (int b = 0; b < B; ++b) {
      const int nb = n_trials - batch_n[static_cast<std::size_t>(b)];
      double acc = 0.0;
      for (int j = 0; j < L; ++j)
        for (int m = 0; m < K; ++m) {
          const cxd s = (sig_tot[static_cast<std::size_t>(f)](j, m) -
                         sig_b[static_cast<std::size_t>(f)][static_cast<std::size_t>(b)](j, m)) /
                        double(nb);
          const double p = (pow_tot[static_cast<std::size_t>(f)](j, m) -
                            pow_b[static_cast<std::size_t>(f)][static_cast<std::size_t>(b)](j, m)) /
                           double(nb);
          const double r = std::log2(1.0 + gamma_of(s, p));
          user_rep[static_cast<std::size_t>(b)](j, m) = r;
          user_mean(j, m) += r / B;
          acc += r;
        }
      avg_rep(b) = acc / (L * K);
    }
    const double scale = double(B - 1) / double(B);
    for (int j = 0; j < L; ++j)
      for (int m = 0; m < K; ++m) {
        double ss = 0.0;
        for (int b = 0; b < B; ++b) {
          const double d = user_rep[static_cast<std::size_t>(b)](j, m) - user_mean(j, m);
          ss += d * d;
        }
        e.rate_stderr[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] = std::sqrt(scale * ss);
      }
    double ss = 0.0;
    const double am = avg_rep.mean();
    for (int b = 0; b < B; ++b) ss += (avg_rep(b) - am) * (avg_rep(b) - am);
    e.avg_rate_stderr = std::sqrt(scale * ss);
  }
  return out;
}

EmpiricalSinr empirical_sinr(const ScenarioData& data, const PrecoderFactory& factory,
                             int n_trials, Rng& rng) {
  return empirical_sinr_multi(data, {factory}, n_trials, rng)[0];
}

std::string format_csv(const std::vector<CsvRow>& rows) {
  std::string text = kCsvHeader;
  text += '\n';
  char buf[512];
  for (const CsvRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%s,%d,%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.sweep_name.c_str(), r.sweep_value, r.scheme.c_str(), r.J, r.drop_count,
                  r.trial_count, r.avg_rate_emp, r.avg_rate_det, r.stderr_, r.min_rate_emp,
                  r.xi_star);
    text += buf;
  }
  return text;
}

namespace {

struct SchemeAcc {
  std::string scheme;
  int J = 0;
  double emp = 0.0, det = 0.0, se2 = 0.0, min_emp = 0.0, xi = 0.0;
  int trials = 0;
};

// Deterministic Taylor-initial coefficients for one cell: the Neumann expansion
// point comes from a spectral-edge proxy (1 + sqrt(M/K))^2 lambda_max(Psi_j) of
// the mean estimate gram Psi_j = (1/K) sum_k Phi_{j,j,k}, then the scale is set
// so that the expected transmit power is exactly P_j.
TpeCoefficients taylor_for_cell(const ScenarioData& data, const SinrModelTPE& model_J, int j,
                                int J) {
  const ScenarioConfig& cfg = data.config;
  MatC Psi = MatC::Zero(cfg.M, cfg.M);
  for (int g = 0; g < cfg.G; ++g)
    Psi += double(data.covs.users_in_group(j, g)) * data.model.Phi_group(j, j, g);
  Psi /= double(cfg.K);
  Eigen::SelfAdjointEigenSolver<MatC> es(Psi);
  const double lam = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  const double edge = 1.0 + std::sqrt(double(cfg.M) / cfg.K);
  const double kappa = 1.0 / (cfg.phi[static_cast<std::size_t>(j)] + edge * edge * lam);
  TpeCoefficients w = taylor_initial_coeffs(J, 1.0, cfg.phi[static_cast<std::size_t>(j)], kappa);
  return normalize_tpe_power(w, model_J.C_bar[static_cast<std::size_t>(j)],
                             cfg.P[static_cast<std::size_t>(j)]);
}

PrecoderFactory make_tpe_factory(const ScenarioData& data, std::vector<TpeCoefficients> ws) {
  return [&data, ws = std::move(ws)](const EstimateSet& est) {
    std::vector<PrecodingMatrix> out;
    for (int j = 0; j < data.config.L; ++j) {
      PrecodingMatrix pm = tpe_precoder(est.H_hat[static_cast<std::size_t>(j)],
                                        ws[static_cast<std::size_t>(j)]);
      const double target = data.config.P[static_cast<std::size_t>(j)];
      if (pm.P_target > 0.0) pm.G *= std::sqrt(target / pm.P_target);
      pm.P_target = target;
      out.push_back(std::move(pm));
    }
    return out;
  };
}

// One sweep point: all drops, all schemes, appends one CsvRow per scheme.
void run_sweep_point(const ScenarioConfig& config, const SweepSpec& sweep, double v,
                     std::vector<CsvRow>& rows) {
  ScenarioConfig cfg = config;
  if (sweep.parameter == "M")
    cfg.M = static_cast<int>(std::lround(v));
  else if (sweep.parameter == "phi")
    cfg.phi.assign(static_cast<std::size_t>(cfg.L), v);
  else if (sweep.parameter == "rho_tr_db")
    cfg.rho_tr = std::pow(10.0, v / 10.0);
  if (sweep.phi_rule == "scaled")
    cfg.phi.assign(static_cast<std::size_t>(cfg.L), cfg.M * cfg.sigma2() / cfg.K);
  cfg.finalize();

  std::vector<SchemeAcc> acc;
  if (sweep.include_rzf) acc.push_back({"RZF", 0});
  if (sweep.include_mrt) acc.push_back({"MRT", 1});
  for (int J : sweep.tpe_orders) acc.push_back({"TPE", J});

  int Jmax = 1;
  for (int J : sweep.tpe_orders) Jmax = std::max(Jmax, J);

  for (int drop = 0; drop < cfg.n_drops; ++drop) {
    ScenarioData data = ScenarioData::build(cfg, drop);
    const double sigma2 = cfg.sigma2();
    RzfDetEq rzf = rzf_sinr_detequiv(data.covs, data.model, cfg.phi, sigma2, cfg.P);
    SinrModelTPE model_full = assemble_sinr_model(
        data.covs, data.model, sigma2, std::vector<int>(static_cast<std::size_t>(cfg.L), Jmax));

    std::vector<PrecoderFactory> factories;
    std::size_t slot = 0;
    if (sweep.include_rzf) {
      acc[slot].det += average_rate(rzf.gamma_bar);
      factories.push_back([&data](const EstimateSet& est) {
        std::vector<PrecodingMatrix> out;
        for (int j = 0; j < data.config.L; ++j)
          out.push_back(rzf_precoder(est.H_hat[static_cast<std::size_t>(j)],
                                     data.config.phi[static_cast<std::size_t>(j)],
                                     data.config.P[static_cast<std::size_t>(j)]));
        return out;
      });
      ++slot;
    }
    if (sweep.include_mrt) {
      SinrModelTPE model_1 =
          slice_model(model_full, std::vector<int>(static_cast<std::size_t>(cfg.L), 1));
      std::vector<VecR> wv(static_cast<std::size_t>(cfg.L));
      for (int j = 0; j < cfg.L; ++j) {
        TpeCoefficients one;
        one.w = VecR::Ones(1);
        wv[static_cast<std::size_t>(j)] =
            normalize_tpe_power(one, model_1.C_bar[static_cast<std::size_t>(j)],
                                cfg.P[static_cast<std::size_t>(j)])
                .w;
      }
      acc[slot].det += average_rate(tpe_sinr_detequiv(model_1, wv));
      factories.push_back([&data](const EstimateSet& est) {
        std::vector<PrecodingMatrix> out;
        for (int j = 0; j < data.config.L; ++j)
          out.push_back(mrt_precoder(est.H_hat[static_cast<std::size_t>(j)],
                                     data.config.P[static_cast<std::size_t>(j)]));
        return out;
      });
      ++slot;
    }
    for (int J : sweep.tpe_orders) {
      SinrModelTPE model_J =
          (J == Jmax) ? model_full
                      : slice_model(model_full, std::vector<int>(static_cast<std::size_t>(cfg.L), J));
      std::vector<TpeCoefficients> ws(static_cast<std::size_t>(cfg.L));
      if (sweep.optimize) {
        std::vector<std::vector<double>> nu = rzf_mimic_weights(rzf);
        MaxMinProblem prob = MaxMinProblem::from_model(model_J, nu, cfg.P);
        OptimizationResult res = bisection_solve(prob);
        ws = res.w;
        acc[slot].xi += res.xi_star;
      } else {
        for (int j = 0; j < cfg.L; ++j)
          ws[static_cast<std::size_t>(j)] = taylor_for_cell(data, model_J, j, J);
      }
      std::vector<VecR> wv(static_cast<std::size_t>(cfg.L));
      for (int j = 0; j < cfg.L; ++j) wv[static_cast<std::size_t>(j)] = ws[static_cast<std::size_t>(j)].w;
      acc[slot].det += average_rate(tpe_sinr_detequiv(model_J, wv));
      factories.push_back(make_tpe_factory(data, std::move(ws)));
      ++slot;
    }

    if (sweep.monte_carlo) {
      Rng trng = Rng(cfg.seed).derive(1, static_cast<std::uint64_t>(drop));
      std::vector<EmpiricalSinr> emps = empirical_sinr_multi(data, factories, cfg.n_trials, trng);
      for (std::size_t s = 0; s < acc.size(); ++s) {
        acc[s].emp += emps[s].avg_rate;
        acc[s].se2 += emps[s].avg_rate_stderr * emps[s].avg_rate_stderr;
        acc[s].min_emp += emps[s].min_rate;
        acc[s].trials = cfg.n_trials;
      }
    }
  }

  const double D = double(cfg.n_drops);
  for (const SchemeAcc& a : acc) {
    CsvRow r;
    r.sweep_name = sweep.name;
    r.sweep_value = v;
    r.scheme = a.scheme;
    r.J = a.J;
    r.drop_count = cfg.n_drops;
    r.trial_count = a.trials;
    r.avg_rate_emp = a.emp / D;
    r.avg_rate_det = a.det / D;
    r.stderr_ = std::sqrt(a.se2) / D;
    r.min_rate_emp = a.min_emp / D;
    r.xi_star = a.xi / D;
    rows.push_back(std::move(r));
  }
}

}  // namespace

std::vector<CsvRow> run_experiment(const ScenarioConfig& config, const SweepSpec& sweep) {
  if (sweep.parameter != "none" && sweep.parameter != "M" && sweep.parameter != "phi" &&
      sweep.parameter != "rho_tr_db")
    throw std::invalid_argument("run_experiment: unknown sweep parameter: " + sweep.parameter);
  if (sweep.phi_rule != "fixed" && sweep.phi_rule != "scaled")
    throw std::invalid_argument("run_experiment: unknown phi rule: " + sweep.phi_rule);
  std::vector<double> values = sweep.values;
  if (sweep.parameter == "none")
    values = {0.0};
  else if (values.empty())
    throw std::invalid_argument("run_experiment: sweep values must not be empty");

  std::vector<CsvRow> rows;
  for (double v : values) {
    try {
      run_sweep_point(config, sweep, v, rows);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "run_experiment: sweep " << sweep.name << " (" << sweep.parameter << " = " << v
         << "): " << e.what();
      throw std::runtime_error(os.str());
    }
  }
  return rows;
}

std::vector<CsvRow> theory_vs_empirical(const ScenarioConfig& config,
                                        const std::vector<double>& M_list) {
  SweepSpec sweep;
  sweep.name = "theory_vs_emp";
  sweep.parameter = "M";
  sweep.values = M_list;
  sweep.tpe_orders = {5};
  sweep.optimize = false;
  sweep.include_rzf = true;
  sweep.include_mrt = false;
  sweep.phi_rule = "scaled";
  sweep.monte_carlo = true;
  return run_experiment(config, sweep);
}

}  // namespace tpemimo
