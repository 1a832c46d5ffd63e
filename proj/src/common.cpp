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

#include "tpemimo/common.hpp"

#include <cmath>
#include <stdexcept>

namespace tpemimo {

namespace {

// splitmix64 output function; bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return std::round(r);
}

double inv_factorial(int n) {
  if (n < 0) throw std::invalid_argument("inv_factorial: negative order");
  if (n <= 20) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= double(i);
    return 1.0 / f;
  }
  return std::exp(-std::lgamma(double(n) + 1.0));
}

cxd trace_product(const MatC& A, const MatC& B) {
  return (A.transpose().cwiseProduct(B)).sum();
}

Rng::Rng(std::uint64_t seed) : seed_(seed), eng_(mix64(seed + kGamma)) {}

Rng Rng::derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  std::uint64_t key = seed_;
  key = mix64(key + kGamma + a);
  key = mix64(key + 2 * kGamma + b);
  key = mix64(key + 3 * kGamma + c);
  return Rng(key);
}

double Rng::uniform() {
  // 53 high bits -> [0, 1); independent of library distribution internals.
  return double(eng_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() { return normal_(eng_); }

cxd Rng::cgaussian() {
  double re = gaussian();
  double im = gaussian();
  return cxd(re, im) * 0.7071067811865475244;
}

MatC hermitian_sqrt(const MatC& R, double clip_tol) {
  Eigen::SelfAdjointEigenSolver<MatC> es(R);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hermitian_sqrt: eigendecomposition failed");
  VecR lam = es.eigenvalues();
  const double lmax = lam.cwiseAbs().maxCoeff();
  const double floor = -clip_tol * (lmax > 0.0 ? lmax : 1.0);
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i) < floor)
      throw std::invalid_argument("hermitian_sqrt: matrix is not PSD");
    if (lam(i) < 0.0) lam(i) = 0.0;
  }
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace tpemimo
