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

#include "tpemimo/detequiv.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tpemimo {

namespace {

// Weighted covariance list of the estimate covariances of cell l's own users.
WeightedMats own_cell_list(const CovarianceSet& covs, const EstimationModel& model, int l) {
  WeightedMats wm;
  for (int g = 0; g < covs.G; ++g) {
    wm.mats.push_back(model.Phi_group(l, l, g));
    wm.count.push_back(covs.users_in_group(l, g));
  }
  return wm;
}

void require_aligned_groups(const CovarianceSet& covs) {
  for (int j = 1; j < covs.L; ++j)
    if (covs.user_group[j] != covs.user_group[0])
      throw std::invalid_argument("pilot groups must be aligned across cells");
}

double sign_factor(int s) { return (s % 2 == 0) ? inv_factorial(s) : -inv_factorial(s); }

}  // namespace

int WeightedMats::K() const {
  int k = 0;
  for (int c : count) k += c;
  return k;
}

WeightedMats WeightedMats::from_list(const std::vector<MatC>& list) {
  WeightedMats wm;
  for (const MatC& R : list) {
    bool found = false;
    for (std::size_t g = 0; g < wm.mats.size(); ++g)
      if (wm.mats[g].rows() == R.rows() && wm.mats[g] == R) {
        ++wm.count[g];
        found = true;
        break;
      }
    if (!found) {
      wm.mats.push_back(R);
      wm.count.push_back(1);
    }
  }
  return wm;
}

FixedPointState solve_fixed_point(double t, const WeightedMats& R, double tol, int max_iter) {
  const int G = int(R.mats.size());
  const int K = R.K();
  const int M = int(R.mats[0].rows());
  const MatC eye = MatC::Identity(M, M);

  FixedPointState fp;
  fp.t = t;
  fp.delta = VecR(G);
  for (int g = 0; g < G; ++g) fp.delta(g) = R.mats[std::size_t(g)].trace().real() / K;

  auto form_T = [&](const VecR& delta) {
    MatC A = eye;
    for (int g = 0; g < G; ++g)
      A += (t * double(R.count[std::size_t(g)]) / (double(K) * (1.0 + t * delta(g)))) *
           R.mats[std::size_t(g)];
    return MatC(A.llt().solve(eye));
  };

  for (int it = 1; it <= max_iter; ++it) {
    fp.T = form_T(fp.delta);
    VecR next(G);
    for (int g = 0; g < G; ++g)
      next(g) = trace_product(R.mats[std::size_t(g)], fp.T).real() / K;
    fp.residual = (next - fp.delta).cwiseAbs().maxCoeff();
    fp.iterations = it;
    fp.delta = 0.5 * fp.delta + 0.5 * next;
    if (fp.residual < tol) {
      fp.T = form_T(fp.delta);
      return fp;
    }
  }
  throw std::runtime_error("solve_fixed_point: no convergence, residual " +
                           std::to_string(fp.residual));
}

void solve_fixed_point_complex(cxd t, const WeightedMats& R, MatC* T_out, VecC* delta_out,
                            double tol, int max_iter) {
  const int G = int(R.mats.size());
  const int K = R.K();
  const int M = int(R.mats[0].rows());
  const MatC eye = MatC::Identity(M, M);

  VecC delta(G);
  for (int g = 0; g < G; ++g) delta(g) = R.mats[std::size_t(g)].trace().real() / K;

  auto form_T = [&](const VecC& d) {
    MatC A = eye;
    for (int g = 0; g < G; ++g)
      A += (t * double(R.count[std::size_t(g)]) / (double(K) * (1.0 + t * d(g)))) *
           R.mats[std::size_t(g)];
    return MatC(A.partialPivLu().solve(eye));
  };

  MatC T;
  for (int it = 1; it <= max_iter; ++it) {
    T = form_T(delta);
    VecC next(G);
    for (int g = 0; g < G; ++g)
      next(g) = trace_product(R.mats[std::size_t(g)], T) / double(K);
    const double res = (next - delta).cwiseAbs().maxCoeff();
    delta = 0.5 * delta + 0.5 * next;
    if (res < tol) {
      *T_out = form_T(delta);
      *delta_out = delta;
      return;
    }
  }
  throw std::runtime_error("solve_fixed_point_complex: no convergence");
}

SecondOrderState solve_second_order(double t, const WeightedMats& R, const MatC& Theta,
                                const FixedPointState& fp) {
  const int G = int(R.mats.size());
  const int K = R.K();
  const MatC TTT = fp.T * Theta * fp.T;

  SecondOrderState so;
  so.v = VecR(G);
  so.Jmat = MatR(G, G);
  std::vector<MatC> U(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    so.v(g) = trace_product(R.mats[std::size_t(g)], TTT).real() / K;
    U[std::size_t(g)] = R.mats[std::size_t(g)] * fp.T;
  }
  for (int g = 0; g < G; ++g)
    for (int h = 0; h < G; ++h) {
      const double q = 1.0 + t * fp.delta(h);
      so.Jmat(g, h) = double(R.count[std::size_t(h)]) *
                      trace_product(U[std::size_t(g)], U[std::size_t(h)]).real() /
                      (double(K) * double(K) * q * q);
    }
  so.delta_bar =
      (MatR::Identity(G, G) - t * t * so.Jmat).partialPivLu().solve(so.v);

  MatC mid = MatC::Zero(fp.T.rows(), fp.T.cols());
  for (int g = 0; g < G; ++g) {
    const double q = 1.0 + t * fp.delta(g);
    mid += (double(R.count[std::size_t(g)]) * so.delta_bar(g) / (double(K) * q * q)) *
           R.mats[std::size_t(g)];
  }
  so.T_bar = TTT + t * t * fp.T * mid * fp.T;
  return so;
}

DerivativeTable derivative_tables(const WeightedMats& Phi, int D) {
  const int G = int(Phi.mats.size());
  const int K = Phi.K();
  const int M = int(Phi.mats[0].rows());

  DerivativeTable table;
  table.D = D;
  table.K = K;
  table.T_n.assign(std::size_t(D) + 1, MatC());
  table.delta_n.assign(std::size_t(D) + 1, VecR(G));

  table.T_n[0] = MatC::Identity(M, M);
  for (int g = 0; g < G; ++g)
    table.delta_n[0](g) = Phi.mats[std::size_t(g)].trace().real() / K;

  // q_g = 1/(1 + t delta_g); derivatives at t = 0 via Leibniz on q (1 + t delta) = 1.
  std::vector<std::vector<double>> q(std::size_t(G), std::vector<double>(std::size_t(D) + 1, 0.0));
  for (int g = 0; g < G; ++g) q[std::size_t(g)][0] = 1.0;

  std::vector<MatC> F(std::size_t(D) + 1);
  auto delta_of = [&](int order, int g) { return table.delta_n[std::size_t(order)](g); };

  for (int i = 1; i <= D; ++i) {
    const int n = i - 1;
    if (n >= 1)
      for (int g = 0; g < G; ++g) {
        double acc = 0.0;
        for (int j = 1; j <= n; ++j)
          acc -= binomial(n, j) * double(j) * delta_of(j - 1, g) * q[std::size_t(g)][std::size_t(n - j)];
        q[std::size_t(g)][std::size_t(n)] = acc;
      }
    F[std::size_t(i)] = MatC::Zero(M, M);
    for (int g = 0; g < G; ++g)
      F[std::size_t(i)] += (double(i) * double(Phi.count[std::size_t(g)]) *
                            q[std::size_t(g)][std::size_t(i - 1)] / double(K)) *
                           Phi.mats[std::size_t(g)];
    MatC Ti = MatC::Zero(M, M);
    for (int k = 1; k <= i; ++k)
      Ti -= binomial(i, k) * (table.T_n[std::size_t(i - k)] * F[std::size_t(k)]);
    table.T_n[std::size_t(i)] = Ti;
    for (int g = 0; g < G; ++g)
      table.delta_n[std::size_t(i)](g) =
          trace_product(Phi.mats[std::size_t(g)], Ti).real() / K;
  }
  return table;
}

std::vector<double> DerivativeTable::delta_seq(int g) const {
  std::vector<double> seq(std::size_t(D) + 1);
  for (int i = 0; i <= D; ++i) seq[std::size_t(i)] = delta_n[std::size_t(i)](g);
  return seq;
}

std::vector<double> xbar_derivatives(const std::vector<double>& delta_n, int D) {
  if (int(delta_n.size()) < D + 1)
    throw std::invalid_argument("xbar_derivatives: delta sequence too short");
  std::vector<double> x(std::size_t(D) + 1);
  x[0] = delta_n[0];
  for (int n = 1; n <= D; ++n) {
    double acc = delta_n[std::size_t(n)];
    for (int k = 1; k <= n; ++k)
      acc -= binomial(n, k) * double(k) * delta_n[std::size_t(k - 1)] * x[std::size_t(n - k)];
    x[std::size_t(n)] = acc;
  }
  return x;
}

std::vector<double> zbar_derivatives(const DerivativeTable& table,
                                     const std::vector<double>& delta_n, const MatC& R,
                                     const MatC& Phi, int D) {
  if (table.D < D || int(delta_n.size()) < D + 1)
    throw std::invalid_argument("zbar_derivatives: tables too short");
  const int K = table.K;
  std::vector<double> u(std::size_t(D) + 1);
  std::vector<cxd> v(std::size_t(D) + 1);
  for (int n = 0; n <= D; ++n) {
    u[std::size_t(n)] = trace_product(R, table.T_n[std::size_t(n)]).real() / K;
    v[std::size_t(n)] = trace_product(Phi, table.T_n[std::size_t(n)]) / double(K);
  }
  // Y = t |v|^2 / (1 + t delta); Leibniz on Y (1 + t delta) = t v conj(v).
  std::vector<double> Y(std::size_t(D) + 1, 0.0);
  for (int n = 1; n <= D; ++n) {
    double s = 0.0;  // (v conj(v))^{(n-1)}
    for (int qd = 0; qd <= n - 1; ++qd)
      s += binomial(n - 1, qd) *
           (v[std::size_t(qd)] * std::conj(v[std::size_t(n - 1 - qd)])).real();
    double acc = double(n) * s;
    for (int k = 1; k <= n; ++k)
      acc -= binomial(n, k) * double(k) * delta_n[std::size_t(k - 1)] * Y[std::size_t(n - k)];
    Y[std::size_t(n)] = acc;
  }
  std::vector<double> z(std::size_t(D) + 1);
  for (int n = 0; n <= D; ++n) z[std::size_t(n)] = u[std::size_t(n)] - Y[std::size_t(n)];
  return z;
}

SinrModelTPE assemble_sinr_model(const CovarianceSet& covs, const EstimationModel& model,
                                 double sigma2, const std::vector<int>& J) {
  const int L = covs.L, K = covs.K, G = covs.G;
  if (int(J.size()) != L) throw std::invalid_argument("assemble_sinr_model: J size");
  require_aligned_groups(covs);

  SinrModelTPE out;
  out.L = L;
  out.K = K;
  out.G = G;
  out.J = J;
  out.sigma2 = sigma2;
  out.user_group = covs.user_group;
  out.a_bar_g.assign(std::size_t(L), std::vector<VecR>(std::size_t(G)));
  out.B_bar_g.assign(std::size_t(L),
                     std::vector<std::vector<MatR>>(std::size_t(L),
                                                    std::vector<MatR>(std::size_t(G))));
  out.C_bar.assign(std::size_t(L), MatR());

  for (int l = 0; l < L; ++l) {
    const int Jl = J[std::size_t(l)];
    const int D = 2 * Jl - 1;
    WeightedMats wl = own_cell_list(covs, model, l);
    DerivativeTable table = derivative_tables(wl, D);

    out.C_bar[std::size_t(l)] = MatR(Jl, Jl);
    for (int n = 0; n < Jl; ++n)
      for (int p = 0; p < Jl; ++p) {
        const int s = n + p + 1;
        out.C_bar[std::size_t(l)](n, p) =
            sign_factor(s) * table.T_n[std::size_t(s)].trace().real() / K;
      }

    for (int g = 0; g < G; ++g) {
      const std::vector<double> dseq = table.delta_seq(g);
      // a tables only involve the own-cell expansion.
      std::vector<double> xb = xbar_derivatives(dseq, Jl - 1);
      VecR a(Jl);
      for (int n = 0; n < Jl; ++n)
        a(n) = ((n % 2 == 0) ? inv_factorial(n) : -inv_factorial(n)) * xb[std::size_t(n)];
      out.a_bar_g[std::size_t(l)][std::size_t(g)] = a;

      for (int j = 0; j < L; ++j) {
        std::vector<double> zb = zbar_derivatives(table, dseq, covs.R_group(l, j, g),
                                                  model.Phi_group(l, j, g), D);
        MatR B(Jl, Jl);
        for (int n = 0; n < Jl; ++n)
          for (int p = 0; p < Jl; ++p) {
            const int s = n + p + 1;
            B(n, p) = sign_factor(s) * zb[std::size_t(s)];
          }
        out.B_bar_g[std::size_t(l)][std::size_t(j)][std::size_t(g)] = B;
      }
    }
  }
  return out;
}

SinrModelTPE slice_model(const SinrModelTPE& model, const std::vector<int>& J) {
  if (int(J.size()) != model.L) throw std::invalid_argument("slice_model: J size");
  for (int l = 0; l < model.L; ++l)
    if (J[std::size_t(l)] < 1 || J[std::size_t(l)] > model.J[std::size_t(l)])
      throw std::invalid_argument("slice_model: orders must be within the source model");
  SinrModelTPE out = model;
  out.J = J;
  for (int l = 0; l < model.L; ++l) {
    const int Jl = J[std::size_t(l)];
    out.C_bar[std::size_t(l)] = model.C_bar[std::size_t(l)].topLeftCorner(Jl, Jl);
    for (int g = 0; g < model.G; ++g) {
      const int Jj = J[std::size_t(l)];
      out.a_bar_g[std::size_t(l)][std::size_t(g)] =
          model.a_bar_g[std::size_t(l)][std::size_t(g)].head(Jj);
      for (int j = 0; j < model.L; ++j)
        out.B_bar_g[std::size_t(l)][std::size_t(j)][std::size_t(g)] =
            model.B_bar_g[std::size_t(l)][std::size_t(j)][std::size_t(g)].topLeftCorner(Jl, Jl);
    }
  }
  return out;
}

std::vector<std::vector<double>> tpe_sinr_detequiv(const SinrModelTPE& model,
                                                   const std::vector<VecR>& w) {
  const int L = model.L, K = model.K;
  if (int(w.size()) != L) throw std::invalid_argument("tpe_sinr_detequiv: w size");
  for (int l = 0; l < L; ++l)
    if (int(w[std::size_t(l)].size()) != model.J[std::size_t(l)])
      throw std::invalid_argument("tpe_sinr_detequiv: coefficient length");

  std::vector<std::vector<double>> gamma(static_cast<std::size_t>(L),
                                         std::vector<double>(static_cast<std::size_t>(K)));
  for (int j = 0; j < L; ++j)
    for (int m = 0; m < K; ++m) {
      const double sig = w[std::size_t(j)].dot(model.a_bar(j, m));
      double den = model.sigma2 / K - sig * sig;
      for (int l = 0; l < L; ++l)
        den += w[std::size_t(l)].dot(model.B_bar(l, j, m) * w[std::size_t(l)]);
      if (!(den > 0.0))
        throw std::runtime_error("tpe_sinr_detequiv: nonpositive interference power");
      gamma[std::size_t(j)][std::size_t(m)] = sig * sig / den;
    }
  return gamma;
}

RzfDetEq rzf_sinr_detequiv(const CovarianceSet& covs, const EstimationModel& model,
                           const std::vector<double>& phi, double sigma2,
                           const std::vector<double>& P) {
  const int L = covs.L, K = covs.K, G = covs.G;
  if (int(phi.size()) != L || int(P.size()) != L)
    throw std::invalid_argument("rzf_sinr_detequiv: parameter sizes");
  require_aligned_groups(covs);

  RzfDetEq out;
  out.L = L;
  out.K = K;
  out.G = G;
  out.user_group = covs.user_group;
  out.beta_bar.assign(std::size_t(L), 0.0);
  out.delta.assign(std::size_t(L), VecR(G));
  out.delta_bar.assign(std::size_t(L), VecR(G));
  out.zeta.assign(std::size_t(L), VecR(G));
  out.theta.assign(std::size_t(L), std::vector<VecR>(std::size_t(L), VecR(G)));
  out.theta_bar.assign(std::size_t(L), std::vector<VecR>(std::size_t(L), VecR(G)));
  out.kappa.assign(std::size_t(L), std::vector<VecC>(std::size_t(L), VecC(G)));
  out.kappa_bar.assign(std::size_t(L), std::vector<VecC>(std::size_t(L), VecC(G)));

  const int M = covs.M;
  for (int l = 0; l < L; ++l) {
    const double t = 1.0 / phi[std::size_t(l)];
    WeightedMats wl = own_cell_list(covs, model, l);
    FixedPointState fp = solve_fixed_point(t, wl);
    SecondOrderState so = solve_second_order(t, wl, MatC::Identity(M, M), fp);
    const double tr_T = fp.T.trace().real();
    const double tr_Tb = so.T_bar.trace().real();
    if (!(tr_T > tr_Tb))
      throw std::runtime_error("rzf_sinr_detequiv: nonpositive power normalizer");
    out.beta_bar[std::size_t(l)] = double(K) * phi[std::size_t(l)] / (tr_T - tr_Tb);
    out.delta[std::size_t(l)] = fp.delta;
    out.delta_bar[std::size_t(l)] = so.delta_bar;
    for (int g = 0; g < G; ++g)
      out.zeta[std::size_t(l)](g) = 1.0 / (phi[std::size_t(l)] + fp.delta(g));
    for (int j = 0; j < L; ++j)
      for (int g = 0; g < G; ++g) {
        out.theta[std::size_t(l)][std::size_t(j)](g) =
            trace_product(covs.R_group(l, j, g), fp.T).real() / K;
        out.theta_bar[std::size_t(l)][std::size_t(j)](g) =
            trace_product(covs.R_group(l, j, g), so.T_bar).real() / K;
        out.kappa[std::size_t(l)][std::size_t(j)](g) =
            trace_product(model.Phi_group(l, j, g), fp.T) / double(K);
        out.kappa_bar[std::size_t(l)][std::size_t(j)](g) =
            trace_product(model.Phi_group(l, j, g), so.T_bar) / double(K);
      }
  }

  out.gamma_bar.assign(std::size_t(L), std::vector<double>(std::size_t(K)));
  for (int j = 0; j < L; ++j)
    for (int m = 0; m < K; ++m) {
      const int g = covs.user_group[std::size_t(j)][std::size_t(m)];
      const double dz = out.delta[std::size_t(j)](g) * out.zeta[std::size_t(j)](g);
      const double num = P[std::size_t(j)] * out.beta_bar[std::size_t(j)] * dz * dz;
      double den = sigma2 / K - num;
      for (int l = 0; l < L; ++l) {
        const double z = out.zeta[std::size_t(l)](g);
        const cxd kap = out.kappa[std::size_t(l)][std::size_t(j)](g);
        const cxd kapb = out.kappa_bar[std::size_t(l)][std::size_t(j)](g);
        const double bracket = out.theta[std::size_t(l)][std::size_t(j)](g) -
                               z * std::norm(kap) -
                               out.theta_bar[std::size_t(l)][std::size_t(j)](g) +
                               2.0 * z * (std::conj(kap) * kapb).real() -
                               z * z * std::norm(kap) * out.delta_bar[std::size_t(l)](g);
        den += P[std::size_t(l)] * (out.beta_bar[std::size_t(l)] / phi[std::size_t(l)]) * bracket;
      }
      if (!(den > 0.0))
        throw std::runtime_error("rzf_sinr_detequiv: nonpositive interference power");
      out.gamma_bar[std::size_t(j)][std::size_t(m)] = num / den;
    }
  return out;
}

}  // namespace tpemimo
