// SPDX-License-Identifier: Apache-2.0
//
// csitwin - digital-twin aided CSI compression and feedback testbed
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
#include <vector>

namespace csitwin {

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Unnormalized DFT, X[k] = sum_n x[n] exp(sign * j 2 pi k n / N) with
/// sign = -1 for the forward transform. Radix-2 in place when N is a power
/// of two, direct summation otherwise.
void dft_inplace(std::vector<std::complex<double>>& x, int sign);

} // namespace csitwin
