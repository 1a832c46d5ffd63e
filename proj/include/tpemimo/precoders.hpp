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

#include "tpemimo/common.hpp"

namespace tpemimo {

struct PrecodingMatrix {
  MatC G;  // M x K
  double P_target = 0.0;
};

// Real polynomial coefficients w_0..w_{J-1} of one cell's TPE precoder.
struct TpeCoefficients {
  VecR w;
  int J() const { return static_cast<int>(w.size()); }
};

// Operation counters for the TPE evaluation (test instrumentation).
struct TpeOpCount {
  int mk_passes = 0;   // M x K matrix products applied
  int mm_products = 0; // explicit M x M products formed (must stay 0)
};

// G = beta * sqrt(K) * (H_hat H_hat^H + K phi I)^{-1} H_hat with beta chosen so
// that (1/K) tr(G G^H) = P exactly.
PrecodingMatrix rzf_precoder(const MatC& H_hat, double phi, double P);

// G proportional to H_hat, power-normalized. Throws on an all-zero H_hat.
PrecodingMatrix mrt_precoder(const MatC& H_hat, double P);

// G = sum_n w_n (H_hat H_hat^H / K)^n H_hat / sqrt(K), evaluated by iterated
// M x K products (no matrix powers are formed). w carries the scale; no
// renormalization happens here.
PrecodingMatrix tpe_precoder(const MatC& H_hat, const TpeCoefficients& w,
                             TpeOpCount* ops = nullptr);

// Taylor-expansion initial coefficients:
// w_n = beta * kappa * (-kappa)^n * sum_{m=n}^{J-1} C(m,n) (1 - kappa phi)^{m-n}.
TpeCoefficients taylor_initial_coeffs(int J, double beta, double phi, double kappa);

// Largest eigenvalue of H_hat H_hat^H / K estimated by power iteration.
double estimate_lambda_max(const MatC& H_hat, int iters = 20);

// Rescales w so that w^T C_bar w = P. Throws if w^T C_bar w <= 0.
TpeCoefficients normalize_tpe_power(const TpeCoefficients& w, const MatR& C_bar, double P);

}  // namespace tpemimo
