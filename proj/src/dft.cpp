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

#include "csitwin/dft.hpp"

#include <cmath>
#include <numbers>

namespace csitwin {

using cd = std::complex<double>;

static void fft_pow2(std::vector<cd>& a, int sign)
{
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        cd wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cd w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cd u = a[i + k];
                cd v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

void dft_inplace(std::vector<cd>& x, int sign)
{
    const size_t n = x.size();
    if (n <= 1) return;
    if (is_pow2(n)) {
        fft_pow2(x, sign);
        return;
    }
    std::vector<cd> out(n);
    for (size_t k = 0; k < n; ++k) {
        cd acc(0.0, 0.0);
        for (size_t m = 0; m < n; ++m) {
            double ang = sign * 2.0 * std::numbers::pi *
                         static_cast<double>(k) * static_cast<double>(m) /
                         static_cast<double>(n);
            acc += x[m] * cd(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    x = std::move(out);
}

} // namespace csitwin
