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

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace tpemimo {

using cxd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Binomial coefficient C(n, k) as a double (exact for the small orders used here).
double binomial(int n, int k);

// 1/n!, evaluated in the log domain beyond n = 20 to avoid overflow.
double inv_factorial(int n);

// tr(A * B) without forming the product.
cxd trace_product(const MatC& A, const MatC& B);

// Deterministic RNG with cheap derivation of statistically independent substreams.
// Substreams are keyed by up to three integers so that (seed, drop, trial) layouts
// reproduce bit-identically regardless of evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // New generator for the substream keyed by (a, b, c).
  Rng derive(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

  double uniform();    // U[0, 1)
  double gaussian();   // N(0, 1)
  cxd cgaussian();     // CN(0, 1)

  std::mt19937_64& engine() { return eng_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Hermitian square root of a PSD matrix via eigendecomposition. Eigenvalues in
// [-clip_tol*|lambda|_max, 0) are clamped to zero (quadrature noise); anything
// lower throws std::invalid_argument since it signals a covariance bug.
MatC hermitian_sqrt(const MatC& R, double clip_tol = 1e-10);

}  // namespace tpemimo
