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
// Independent numerical oracles used by the test suites. Everything here is
// deliberately written from first principles (dense formulas, quadrature-free
// stencils) so it cannot share bugs with the library implementations.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "tpemimo/common.hpp"

namespace oracles {

using tpemimo::cxd;
using tpemimo::MatC;
using tpemimo::MatR;
using tpemimo::Rng;
using tpemimo::VecC;
using tpemimo::VecR;

inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// n-th derivative at 0 by the central difference
//   D_h = h^{-n} sum_k (-1)^k C(n,k) f((n/2 - k) h)
// with one Richardson level: (4 D_{h/2} - D_h) / 3. Works for any T supporting
// scalar multiply and +=. Odd n evaluates at half-integer offsets (including
// negative ones; callers must keep |t| inside the analyticity region).
template <typename T>
T fd_derivative(const std::function<T(double)>& f, int n, double h) {
  auto stencil = [&](double step) {
    T acc = f((n / 2.0) * step) * std::pow(step, -n);
    for (int k = 1; k <= n; ++k) {
      double c = binom(n, k) * std::pow(step, -n);
      if (k % 2 == 1) c = -c;
      acc += f((n / 2.0 - k) * step) * c;
    }
    return acc;
  };
  T d1 = stencil(h);
  T d2 = stencil(h / 2.0);
  return (d2 * 4.0 - d1) * (1.0 / 3.0);
}

// Spectrally accurate alternative: trapezoid rule on the Cauchy integral over a
// circle of radius r (requires f analytic on |z| <= r and real on the real axis).
inline double contour_derivative(const std::function<cxd(cxd)>& f, int n, double r,
                                 int nodes = 64) {
  cxd acc(0.0, 0.0);
  for (int q = 0; q < nodes; ++q) {
    double phi = 2.0 * tpemimo::kPi * q / nodes;
    cxd z = std::polar(r, phi);
    acc += f(z) * std::polar(1.0, -n * phi);
  }
  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  return (fact / (nodes * std::pow(r, n))) * acc.real();
}

// Dense (power-forming) evaluation of sum_n w_n A^n X; the implementation under
// test must never form A^n, this oracle always does.
inline MatC dense_matrix_polynomial(const std::vector<double>& w, const MatC& A,
                                    const MatC& X) {
  MatC P = MatC::Identity(A.rows(), A.cols());
  MatC out = MatC::Zero(X.rows(), X.cols());
  for (size_t n = 0; n < w.size(); ++n) {
    if (n > 0) P = (P * A).eval();
    out += w[n] * (P * X);
  }
  return out;
}

// Random Hermitian PSD matrix X X^H / cols, scaled so the mean eigenvalue is `scale`.
inline MatC random_psd(int M, double scale, Rng& rng) {
  MatC X(M, 2 * M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < 2 * M; ++j) X(i, j) = rng.cgaussian();
  MatC R = (X * X.adjoint()) / (2.0 * M);
  return R * scale;
}

// Resolvent (t H H^H / K + I)^{-1} formed densely.
inline MatC dense_resolvent(double t, const MatC& H, int K) {
  int M = static_cast<int>(H.rows());
  MatC A = (t / K) * (H * H.adjoint()) + MatC::Identity(M, M);
  return A.inverse();
}

// Exhaustive direction grid for the L = 1, J = 2 max-min problem: w = s(cos a, sin a)
// scaled to w^T C w = P; returns the best achievable min_m log2(1+gamma)/nu.
inline double grid_maxmin_j2(const std::vector<VecR>& a, const std::vector<MatR>& B,
                             const MatR& C, const std::vector<double>& nu, double P,
                             double sigma2, int K, int n_angles = 10000) {
  double best = 0.0;
  for (int i = 0; i < n_angles; ++i) {
    double ang = tpemimo::kPi * i / n_angles;
    VecR dir(2);
    dir << std::cos(ang), std::sin(ang);
    double q = dir.dot(C * dir);
    if (q <= 1e-14) continue;
    VecR w = dir * std::sqrt(P / q);
    double worst = std::numeric_limits<double>::infinity();
    for (size_t m = 0; m < a.size(); ++m) {
      double sig = w.dot(a[m]);
      double den = sigma2 / K + w.dot(B[m] * w) - sig * sig;
      if (den <= 0) { worst = -1.0; break; }
      double rate = std::log2(1.0 + sig * sig / den) / nu[m];
      worst = std::min(worst, rate);
    }
    if (worst > best) best = worst;
  }
  return best;
}

}  // namespace oracles
