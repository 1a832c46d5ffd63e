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

#include "tpemimo/precoders.hpp"

#include <cmath>
#include <stdexcept>

namespace tpemimo {

PrecodingMatrix rzf_precoder(const MatC& H_hat, double phi, double P) {
  const int M = int(H_hat.rows());
  const int K = int(H_hat.cols());
  if (!(phi > 0.0)) throw std::invalid_argument("rzf_precoder: phi must be > 0");
  MatC A = H_hat * H_hat.adjoint() + double(K) * phi * MatC::Identity(M, M);
  MatC raw = A.llt().solve(H_hat) * std::sqrt(double(K));
  const double pw = raw.squaredNorm() / double(K);
  if (!(pw > 0.0)) throw std::invalid_argument("rzf_precoder: zero channel estimate");
  PrecodingMatrix pm;
  pm.G = std::sqrt(P / pw) * raw;
  pm.P_target = P;
  return pm;
}

PrecodingMatrix mrt_precoder(const MatC& H_hat, double P) {
  const int K = int(H_hat.cols());
  const double t = H_hat.squaredNorm();
  if (!(t > 0.0)) throw std::invalid_argument("mrt_precoder: zero channel estimate");
  PrecodingMatrix pm;
  pm.G = std::sqrt(P * double(K) / t) * H_hat;
  pm.P_target = P;
  return pm;
}

PrecodingMatrix tpe_precoder(const MatC& H_hat, const TpeCoefficients& w,
                             TpeOpCount* ops) {
  const int J = w.J();
  if (J < 1) throw std::invalid_argument("tpe_precoder: need at least one coefficient");
  const int K = int(H_hat.cols());
  const MatC S = H_hat / std::sqrt(double(K));
  // Horner evaluation: X <- (H H^H / K) X + w_n S, applied as two M x K passes.
  MatC X = w.w(J - 1) * S;
  for (int n = J - 2; n >= 0; --n) {
    X = H_hat * (H_hat.adjoint() * X) / double(K) + w.w(n) * S;
    if (ops) ops->mk_passes += 2;
  }
  PrecodingMatrix pm;
  pm.G = std::move(X);
  pm.P_target = pm.G.squaredNorm() / double(K);
  return pm;
}

TpeCoefficients taylor_initial_coeffs(int J, double beta, double phi, double kappa) {
  if (J < 1) throw std::invalid_argument("taylor_initial_coeffs: J must be >= 1");
  TpeCoefficients out;
  out.w = VecR(J);
  const double r = 1.0 - kappa * phi;
  for (int n = 0; n < J; ++n) {
    double s = 0.0;
    for (int m = n; m < J; ++m) s += binomial(m, n) * std::pow(r, m - n);
    out.w(n) = beta * kappa * std::pow(-kappa, n) * s;
  }
  return out;
}

double estimate_lambda_max(const MatC& H_hat, int iters) {
  const int M = int(H_hat.rows());
  const int K = int(H_hat.cols());
  if (H_hat.squaredNorm() == 0.0) return 0.0;
  VecC v = VecC::Ones(M) / std::sqrt(double(M));
  for (int it = 0; it < iters; ++it) {
    VecC u = H_hat * (H_hat.adjoint() * v) / double(K);
    const double n = u.norm();
    if (n == 0.0) return 0.0;
    v = u / n;
  }
  return (v.adjoint() * (H_hat * (H_hat.adjoint() * v))).value().real() / double(K);
}

TpeCoefficients normalize_tpe_power(const TpeCoefficients& w, const MatR& C_bar,
                                    double P) {
  const double q = w.w.dot(C_bar * w.w);
  if (!(q > 0.0) || !std::isfinite(q))
    throw std::invalid_argument("normalize_tpe_power: nonpositive coefficient power");
  TpeCoefficients out;
  out.w = std::sqrt(P / q) * w.w;
  return out;
}

}  // namespace tpemimo
