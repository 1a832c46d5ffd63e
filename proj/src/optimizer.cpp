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

#include "tpemimo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace tpemimo {

namespace {

// Symmetric matrices are parameterized by their upper triangle (row-major,
// n <= p). tr(B W) over that parameterization uses doubled off-diagonals.
VecR svec_coeff(const MatR& B) {
  const int J = static_cast<int>(B.rows());
  VecR v(J * (J + 1) / 2);
  int k = 0;
  for (int n = 0; n < J; ++n)
    for (int p = n; p < J; ++p)
      v(k++) = (n == p) ? B(n, n) : B(n, p) + B(p, n);
  return v;
}

MatR unpack(const VecR& x, int off, int J) {
  MatR W(J, J);
  int k = off;
  for (int n = 0; n < J; ++n)
    for (int p = n; p < J; ++p) {
      W(n, p) = x(k);
      W(p, n) = x(k);
      ++k;
    }
  return W;
}

std::vector<MatR> tri_basis(int J) {
  std::vector<MatR> E;
  E.reserve(std::size_t(J * (J + 1) / 2));
  for (int n = 0; n < J; ++n)
    for (int p = n; p < J; ++p) {
      MatR M = MatR::Zero(J, J);
      if (n == p) {
        M(n, n) = 1.0;
      } else {
        M(n, p) = 1.0;
        M(p, n) = 1.0;
      }
      E.push_back(M);
    }
  return E;
}

struct LinIneq {
  VecR coeff;   // coeff . x + cst <= 0 (strict inside the barrier)
  double cst = 0.0;
};

struct BarrierWork {
  int N = 0;                             // packed triangles + slack (last)
  std::vector<int> offset;               // per-cell block start
  std::vector<std::vector<MatR>> basis;  // per-cell triangle basis
  std::vector<LinIneq> ineq;
  MatR A;  // equality tr(C_l W_l) = P_l
  VecR b;
  const MaxMinProblem* prob = nullptr;
};

double alpha_of(double nu, double xi) { return -std::expm1(-nu * xi * std::log(2.0)); }

// Barrier objective; returns false when x leaves the domain.
bool eval_phi(const BarrierWork& wk, const VecR& x, double t_out, double* phi) {
  double f = -t_out * x(wk.N - 1);
  for (const LinIneq& c : wk.ineq) {
    const double u = c.coeff.dot(x) + c.cst;
    if (!(u < 0.0)) return false;
    f -= std::log(-u);
  }
  const auto& J = wk.prob->J;
  for (std::size_t l = 0; l < J.size(); ++l) {
    MatR W = unpack(x, wk.offset[l], J[l]);
    Eigen::LLT<MatR> llt(W);
    if (llt.info() != Eigen::Success) return false;
    f -= 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  if (!std::isfinite(f)) return false;
  *phi = f;
  return true;
}

void eval_grad_hess(const BarrierWork& wk, const VecR& x, double t_out, VecR* g, MatR* H) {
  g->setZero(wk.N);
  H->setZero(wk.N, wk.N);
  (*g)(wk.N - 1) -= t_out;
  for (const LinIneq& c : wk.ineq) {
    const double u = c.coeff.dot(x) + c.cst;
    *g += c.coeff * (-1.0 / u);
    *H += (c.coeff * c.coeff.transpose()) / (u * u);
  }
  const auto& J = wk.prob->J;
  for (std::size_t l = 0; l < J.size(); ++l) {
    const int off = wk.offset[l];
    const int dim = J[l] * (J[l] + 1) / 2;
    MatR W = unpack(x, off, J[l]);
    MatR Minv = W.llt().solve(MatR::Identity(J[l], J[l]));
    const auto& E = wk.basis[l];
    std::vector<MatR> S(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      S[std::size_t(i)] = Minv * E[std::size_t(i)];
      (*g)(off + i) -= S[std::size_t(i)].trace();
    }
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) {
        const double hij = (S[std::size_t(i)] * S[std::size_t(j)]).trace();
        (*H)(off + i, off + j) += hij;
        if (i != j) (*H)(off + j, off + i) += hij;
      }
  }
}

// Newton for min phi_t over the affine set A x = b, with the equalities
// eliminated through x = x + Z dy (Z an orthonormal null-space basis of A).
// Steps can then never leave the power-constraint manifold, no matter how
// ill-conditioned the barrier Hessian becomes near the central-path limit.
void newton_minimize(const BarrierWork& wk, const MatR& Z, double t_out, VecR* x) {
  VecR g;
  MatR H;
  for (int it = 0; it < 60; ++it) {
    eval_grad_hess(wk, *x, t_out, &g, &H);
    VecR gy = Z.transpose() * g;
    MatR Hy = Z.transpose() * H * Z;
    VecR dy = Hy.ldlt().solve(-gy);
    const double dec2 = dy.dot(Hy * dy);
    if (!std::isfinite(dec2) || dec2 / 2.0 < 1e-11) return;

    double phi0 = 0.0;
    if (!eval_phi(wk, *x, t_out, &phi0)) return;  // should not happen
    VecR dx = Z * dy;
    const double slope = g.dot(dx);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      VecR xn = *x + step * dx;
      double phin = 0.0;
      if (eval_phi(wk, xn, t_out, &phin) && phin <= phi0 + 0.25 * step * slope) {
        *x = xn;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) return;
  }
}

}  // namespace

void MaxMinProblem::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("MaxMinProblem: " + msg); };
  if (L < 1 || K < 1) fail("L and K must be positive");
  if (static_cast<int>(J.size()) != L) fail("J must have one entry per cell");
  for (int j : J)
    if (j < 1) fail("polynomial orders must be >= 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail("sigma2 must be positive");
  if (static_cast<int>(P.size()) != L) fail("P must have one entry per cell");
  for (double p : P)
    if (!(p > 0.0) || !std::isfinite(p)) fail("powers must be positive");
  if (static_cast<int>(a.size()) != L || static_cast<int>(nu.size()) != L) fail("a/nu shape");
  if (static_cast<int>(B.size()) != L || static_cast<int>(C.size()) != L) fail("B/C shape");
  for (int j = 0; j < L; ++j) {
    if (static_cast<int>(a[std::size_t(j)].size()) != K) fail("a must cover every user");
    if (static_cast<int>(nu[std::size_t(j)].size()) != K) fail("nu must cover every user");
    for (int m = 0; m < K; ++m) {
      if (a[std::size_t(j)][std::size_t(m)].size() != J[std::size_t(j)]) fail("a entry length");
      if (!(nu[std::size_t(j)][std::size_t(m)] > 0.0)) fail("nu must be positive");
    }
  }
  for (int l = 0; l < L; ++l) {
    if (C[std::size_t(l)].rows() != J[std::size_t(l)] || C[std::size_t(l)].cols() != J[std::size_t(l)]) fail("C dims");
    if (!(C[std::size_t(l)].trace() > 0.0)) fail("C must have positive trace");
    if (static_cast<int>(B[std::size_t(l)].size()) != L) fail("B cell shape");
    for (int j = 0; j < L; ++j) {
      if (static_cast<int>(B[std::size_t(l)][std::size_t(j)].size()) != K) fail("B user shape");
      for (int m = 0; m < K; ++m) {
        const MatR& Bm = B[std::size_t(l)][std::size_t(j)][std::size_t(m)];
        if (Bm.rows() != J[std::size_t(l)] || Bm.cols() != J[std::size_t(l)]) fail("B entry dims");
      }
    }
  }
}

MaxMinProblem MaxMinProblem::from_model(const SinrModelTPE& model,
                                        const std::vector<std::vector<double>>& nu,
                                        const std::vector<double>& P) {
  MaxMinProblem p;
  p.L = model.L;
  p.K = model.K;
  p.J = model.J;
  p.sigma2 = model.sigma2;
  p.P = P;
  p.C = model.C_bar;
  p.nu = nu;
  p.a.resize(std::size_t(model.L));
  for (int j = 0; j < model.L; ++j) {
    p.a[std::size_t(j)].resize(std::size_t(model.K));
    for (int m = 0; m < model.K; ++m) p.a[std::size_t(j)][std::size_t(m)] = model.a_bar(j, m);
  }
  p.B.resize(std::size_t(model.L));
  for (int l = 0; l < model.L; ++l) {
    p.B[std::size_t(l)].resize(std::size_t(model.L));
    for (int j = 0; j < model.L; ++j) {
      p.B[std::size_t(l)][std::size_t(j)].resize(std::size_t(model.K));
      for (int m = 0; m < model.K; ++m)
        p.B[std::size_t(l)][std::size_t(j)][std::size_t(m)] = model.B_bar(l, j, m);
    }
  }
  p.validate();
  return p;
}

namespace {

nlohmann::json mat_json(const MatR& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

MatR mat_from(const nlohmann::json& j) {
  const int r = static_cast<int>(j.size());
  const int c = r > 0 ? static_cast<int>(j.at(0).size()) : 0;
  MatR m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = j.at(std::size_t(i)).at(std::size_t(k)).get<double>();
  return m;
}

nlohmann::json vec_json(const VecR& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

VecR vec_from(const nlohmann::json& j) {
  VecR v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j.at(std::size_t(i)).get<double>();
  return v;
}

}  // namespace

std::string MaxMinProblem::dump_json() const {
  nlohmann::json j;
  j["L"] = L;
  j["K"] = K;
  j["J"] = J;
  j["sigma2"] = sigma2;
  j["P"] = P;
  j["nu"] = nu;
  nlohmann::json ja = nlohmann::json::array();
  for (const auto& cell : a) {
    nlohmann::json users = nlohmann::json::array();
    for (const auto& v : cell) users.push_back(vec_json(v));
    ja.push_back(users);
  }
  j["a"] = ja;
  nlohmann::json jb = nlohmann::json::array();
  for (const auto& per_l : B) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& per_j : per_l) {
      nlohmann::json users = nlohmann::json::array();
      for (const auto& m : per_j) users.push_back(mat_json(m));
      cells.push_back(users);
    }
    jb.push_back(cells);
  }
  j["B"] = jb;
  nlohmann::json jc = nlohmann::json::array();
  for (const auto& m : C) jc.push_back(mat_json(m));
  j["C"] = jc;
  return j.dump(2);
}

MaxMinProblem MaxMinProblem::load_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  MaxMinProblem p;
  p.L = j.at("L").get<int>();
  p.K = j.at("K").get<int>();
  p.J = j.at("J").get<std::vector<int>>();
  p.sigma2 = j.at("sigma2").get<double>();
  p.P = j.at("P").get<std::vector<double>>();
  p.nu = j.at("nu").get<std::vector<std::vector<double>>>();
  for (const auto& cell : j.at("a")) {
    std::vector<VecR> users;
    for (const auto& v : cell) users.push_back(vec_from(v));
    p.a.push_back(std::move(users));
  }
  for (const auto& per_l : j.at("B")) {
    std::vector<std::vector<MatR>> cells;
    for (const auto& per_j : per_l) {
      std::vector<MatR> users;
      for (const auto& m : per_j) users.push_back(mat_from(m));
      cells.push_back(std::move(users));
    }
    p.B.push_back(std::move(cells));
  }
  for (const auto& m : j.at("C")) p.C.push_back(mat_from(m));
  p.validate();
  return p;
}

double upper_bound_xi(const MaxMinProblem& problem) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < problem.L; ++j)
    for (int m = 0; m < problem.K; ++m) {
      const VecR& a = problem.a[std::size_t(j)][std::size_t(m)];
      const MatR& B = problem.B[std::size_t(j)][std::size_t(j)][std::size_t(m)];
      MatR Bd = B - a * a.transpose();
      Bd += 1e-12 * MatR::Identity(Bd.rows(), Bd.cols());
      const double q = std::max(0.0, a.dot(Bd.ldlt().solve(a)));
      best = std::min(best, std::log2(1.0 + q) / problem.nu[std::size_t(j)][std::size_t(m)]);
    }
  return std::isfinite(best) ? best : 0.0;
}

FeasibilityResult BarrierSdpBackend::check(double xi, const MaxMinProblem& problem, double tol) {
  const int L = problem.L;
  BarrierWork wk;
  wk.prob = &problem;
  wk.offset.resize(std::size_t(L));
  wk.basis.resize(std::size_t(L));
  int N = 0;
  for (int l = 0; l < L; ++l) {
    wk.offset[std::size_t(l)] = N;
    wk.basis[std::size_t(l)] = tri_basis(problem.J[std::size_t(l)]);
    N += problem.J[std::size_t(l)] * (problem.J[std::size_t(l)] + 1) / 2;
  }
  const int slack = N;
  N += 1;
  wk.N = N;

  // equality rows: tr(C_l W_l) = P_l
  wk.A = MatR::Zero(L, N);
  wk.b = VecR(L);
  for (int l = 0; l < L; ++l) {
    VecR c = svec_coeff(problem.C[std::size_t(l)]);
    wk.A.block(l, wk.offset[std::size_t(l)], 1, c.size()) = c.transpose();
    wk.b(l) = problem.P[std::size_t(l)];
  }

  // SINR constraints c_{j,m}(W) + s <= 0
  for (int j = 0; j < L; ++j)
    for (int m = 0; m < problem.K; ++m) {
      const double alpha = alpha_of(problem.nu[std::size_t(j)][std::size_t(m)], xi);
      LinIneq c;
      c.coeff = VecR::Zero(N);
      for (int l = 0; l < L; ++l) {
        VecR v = alpha * svec_coeff(problem.B[std::size_t(l)][std::size_t(j)][std::size_t(m)]);
        c.coeff.segment(wk.offset[std::size_t(l)], v.size()) += v;
      }
      const VecR& a = problem.a[std::size_t(j)][std::size_t(m)];
      VecR va = svec_coeff(a * a.transpose());
      c.coeff.segment(wk.offset[std::size_t(j)], va.size()) -= va;
      c.coeff(slack) += 1.0;
      c.cst = alpha * problem.sigma2 / problem.K;
      wk.ineq.push_back(std::move(c));
    }

  // caps keeping the max-slack problem bounded
  const double s_cap = 1.0;
  {
    LinIneq c;
    c.coeff = VecR::Zero(N);
    c.coeff(slack) = 1.0;
    c.cst = -s_cap;
    wk.ineq.push_back(std::move(c));
  }
  for (int l = 0; l < L; ++l) {
    Eigen::SelfAdjointEigenSolver<MatR> es(problem.C[std::size_t(l)]);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
    const int Jl = problem.J[std::size_t(l)];
    LinIneq c;
    c.coeff = VecR::Zero(N);
    VecR v = svec_coeff(MatR::Identity(Jl, Jl));
    c.coeff.segment(wk.offset[std::size_t(l)], v.size()) = v;
    c.cst = -1e6 * problem.P[std::size_t(l)] / lmax;
    wk.ineq.push_back(std::move(c));
  }

  // strictly feasible start: W_l = (P_l / tr C_l) I, slack below every margin
  VecR x = VecR::Zero(N);
  for (int l = 0; l < L; ++l) {
    const int Jl = problem.J[std::size_t(l)];
    const double scale = problem.P[std::size_t(l)] / problem.C[std::size_t(l)].trace();
    int k = wk.offset[std::size_t(l)];
    for (int n = 0; n < Jl; ++n)
      for (int p = n; p < Jl; ++p) x(k++) = (n == p) ? scale : 0.0;
  }
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < L * problem.K; ++i) {
    // -c_i at the start point (x still has s = 0)
    const double u = wk.ineq[std::size_t(i)].coeff.dot(x) + wk.ineq[std::size_t(i)].cst;
    worst = std::min(worst, -u);
  }
  x(slack) = std::min(worst, s_cap) - 1.0;

  const int m_barrier = static_cast<int>(wk.ineq.size());
  int m_total = m_barrier;
  for (int l = 0; l < L; ++l) m_total += problem.J[std::size_t(l)];
  // orthonormal basis of null(A); A has full row rank (one positive-trace
  // functional per disjoint cell block)
  Eigen::HouseholderQR<MatR> qr(wk.A.transpose());
  MatR Q = qr.householderQ();
  MatR Z = Q.rightCols(N - L);

  double t_out = 1.0;
  for (int outer = 0; outer < 40; ++outer) {
    newton_minimize(wk, Z, t_out, &x);
    if (m_total / t_out < 1e-9) break;
    t_out *= 10.0;
  }

  FeasibilityResult out;
  const double s_final = x(slack);
  out.W.resize(std::size_t(L));
  for (int l = 0; l < L; ++l)
    out.W[std::size_t(l)] = unpack(x, wk.offset[std::size_t(l)], problem.J[std::size_t(l)]);
  // margin from the SINR constraints alone
  double cmax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < L; ++j)
    for (int m = 0; m < problem.K; ++m) {
      const double alpha = alpha_of(problem.nu[std::size_t(j)][std::size_t(m)], xi);
      double interf = problem.sigma2 / problem.K;
      for (int l = 0; l < L; ++l)
        interf += (problem.B[std::size_t(l)][std::size_t(j)][std::size_t(m)] * out.W[std::size_t(l)]).trace();
      const VecR& a = problem.a[std::size_t(j)][std::size_t(m)];
      const double sig = a.dot(out.W[std::size_t(j)] * a);
      cmax = std::max(cmax, alpha * interf - sig);
    }
  out.margin = -cmax;
  if (!std::isfinite(s_final) || !std::isfinite(cmax)) {
    std::fprintf(stderr, "BarrierSdpBackend: non-finite iterate at xi=%g, declaring infeasible\n", xi);
    out.status = Feasibility::kInfeasible;
    return out;
  }
  out.status = (s_final >= -tol) ? Feasibility::kFeasible : Feasibility::kInfeasible;
  return out;
}

FeasibilityResult feasibility_check(double xi, const MaxMinProblem& problem, double tol,
                                    SdpFeasibilityBackend* backend) {
  static BarrierSdpBackend default_backend;
  SdpFeasibilityBackend* be = backend ? backend : &default_backend;
  return be->check(xi, problem, tol);
}

std::vector<TpeCoefficients> extract_rank_one(const std::vector<MatR>& W,
                                              const std::vector<MatR>& C,
                                              const std::vector<double>& P,
                                              const std::vector<VecR>* a_first) {
  std::vector<TpeCoefficients> out(W.size());
  for (std::size_t l = 0; l < W.size(); ++l) {
    Eigen::SelfAdjointEigenSolver<MatR> es(W[l]);
    const int J = static_cast<int>(W[l].rows());
    VecR v = es.eigenvectors().col(J - 1);
    const double q = v.dot(C[l] * v);
    if (!(q > 0.0)) throw std::runtime_error("extract_rank_one: direction carries no power");
    VecR w = v * std::sqrt(P[l] / q);
    if (a_first && w.dot((*a_first)[l]) < 0.0) w = -w;
    out[l].w = w;
  }
  return out;
}

OptimizationResult bisection_solve(const MaxMinProblem& problem, double epsilon,
                                   SdpFeasibilityBackend* backend) {
  problem.validate();
  const int L = problem.L;
  OptimizationResult res;
  res.W.resize(std::size_t(L));
  res.rank_gap.assign(std::size_t(L), 0.0);

  const double xi_max = upper_bound_xi(problem);
  if (xi_max <= 1e-12) {
    // no usable signal anywhere: hand back the first-coefficient direction
    res.xi_star = 0.0;
    res.w.resize(std::size_t(L));
    for (int l = 0; l < L; ++l) {
      const int J = problem.J[std::size_t(l)];
      VecR w = VecR::Zero(J);
      w(0) = std::sqrt(problem.P[std::size_t(l)] / problem.C[std::size_t(l)](0, 0));
      res.w[std::size_t(l)].w = w;
      res.W[std::size_t(l)] = w * w.transpose();
    }
    return res;
  }

  double lo = 0.0, hi = xi_max;
  FeasibilityResult best = feasibility_check(lo, problem, 1e-7, backend);
  int iters = 0;
  while (hi - lo > epsilon) {
    const double mid = 0.5 * (lo + hi);
    FeasibilityResult r = feasibility_check(mid, problem, 1e-7, backend);
    ++iters;
    if (r.status == Feasibility::kFeasible) {
      lo = mid;
      best = std::move(r);
    } else {
      hi = mid;
    }
  }
  res.xi_star = lo;
  res.W = best.W;
  res.feasibility_margin = best.margin;
  res.iterations = iters;

  std::vector<VecR> afirst(static_cast<std::size_t>(L));
  for (int j = 0; j < L; ++j) afirst[std::size_t(j)] = problem.a[std::size_t(j)][0];
  res.w = extract_rank_one(res.W, problem.C, problem.P, &afirst);
  for (int l = 0; l < L; ++l) {
    const int J = problem.J[std::size_t(l)];
    if (J < 2) continue;
    Eigen::SelfAdjointEigenSolver<MatR> es(res.W[std::size_t(l)]);
    const double l1 = es.eigenvalues()(J - 1);
    const double l2 = std::max(0.0, es.eigenvalues()(J - 2));
    res.rank_gap[std::size_t(l)] = (l1 > 0.0) ? l2 / l1 : 0.0;
  }
  return res;
}

std::vector<std::vector<double>> rzf_mimic_weights(const RzfDetEq& rzf) {
  std::vector<std::vector<double>> nu(std::size_t(rzf.L));
  for (int j = 0; j < rzf.L; ++j) {
    nu[std::size_t(j)].resize(std::size_t(rzf.K));
    for (int m = 0; m < rzf.K; ++m)
      nu[std::size_t(j)][std::size_t(m)] =
          std::max(std::log2(1.0 + rzf.gamma_bar[std::size_t(j)][std::size_t(m)]), 1e-6);
  }
  return nu;
}

}  // namespace tpemimo
