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
//
// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86; callers must check avx2_supported() before use.

#include "csitwin/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#define CSITWIN_X86 1
#include <immintrin.h>
#else
#define CSITWIN_X86 0
#endif

namespace csitwin::kern {

#if CSITWIN_X86

namespace {

inline float hsum256(__m256 v)
{
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_movehdup_ps(lo));
    return _mm_cvtss_f32(lo);
}

float dot_avx2(const float* a, const float* b, size_t n)
{
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    float acc = hsum256(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_avx2(float alpha, const float* x, float* y, size_t n)
{
    const __m256 va = _mm256_set1_ps(alpha);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void conv3x3_avx2(const float* in_pad, int cin, int h, int w,
                  const float* weights, const float* bias, float* out, int cout)
{
    const int wp = w + 2;
    for (int oc = 0; oc < cout; ++oc) {
        float* oplane = out + static_cast<size_t>(oc) * h * w;
        const float b = bias ? bias[oc] : 0.0f;
        const float* wbase = weights + static_cast<size_t>(oc) * cin * 9;
        for (int y = 0; y < h; ++y) {
            float* orow = oplane + static_cast<size_t>(y) * w;
            int x = 0;
            for (; x + 8 <= w; x += 8) {
                __m256 acc = _mm256_set1_ps(b);
                for (int ic = 0; ic < cin; ++ic) {
                    const float* iplane =
                        in_pad + static_cast<size_t>(ic) * (h + 2) * wp;
                    const float* wk = wbase + static_cast<size_t>(ic) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const float* irow =
                            iplane + static_cast<size_t>(y + ky) * wp + x;
                        acc = _mm256_fmadd_ps(_mm256_set1_ps(wk[ky * 3 + 0]),
                                              _mm256_loadu_ps(irow + 0), acc);
                        acc = _mm256_fmadd_ps(_mm256_set1_ps(wk[ky * 3 + 1]),
                                              _mm256_loadu_ps(irow + 1), acc);
                        acc = _mm256_fmadd_ps(_mm256_set1_ps(wk[ky * 3 + 2]),
                                              _mm256_loadu_ps(irow + 2), acc);
                    }
                }
                _mm256_storeu_ps(orow + x, acc);
            }
            for (; x < w; ++x) {
                float acc = b;
                for (int ic = 0; ic < cin; ++ic) {
                    const float* iplane =
                        in_pad + static_cast<size_t>(ic) * (h + 2) * wp;
                    const float* wk = wbase + static_cast<size_t>(ic) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const float* irow =
                            iplane + static_cast<size_t>(y + ky) * wp + x;
                        acc += wk[ky * 3 + 0] * irow[0];
                        acc += wk[ky * 3 + 1] * irow[1];
                        acc += wk[ky * 3 + 2] * irow[2];
                    }
                }
                orow[x] = acc;
            }
        }
    }
}

void conv3x3_wgrad_avx2(const float* in_pad, int cin, int h, int w,
                        const float* gout, float* wgrad, float* bgrad, int cout)
{
    const int wp = w + 2;
    for (int oc = 0; oc < cout; ++oc) {
        const float* gplane = gout + static_cast<size_t>(oc) * h * w;
        if (bgrad) {
            __m256 bacc = _mm256_setzero_ps();
            int i = 0;
            const int hw = h * w;
            for (; i + 8 <= hw; i += 8)
                bacc = _mm256_add_ps(bacc, _mm256_loadu_ps(gplane + i));
            float acc = hsum256(bacc);
            for (; i < hw; ++i) acc += gplane[i];
            bgrad[oc] += acc;
        }
        for (int ic = 0; ic < cin; ++ic) {
            const float* iplane = in_pad + static_cast<size_t>(ic) * (h + 2) * wp;
            // nine tap accumulators filled in a single pass over the plane
            __m256 vacc[9];
            for (auto& v : vacc) v = _mm256_setzero_ps();
            float sacc[9] = {0};
            for (int y = 0; y < h; ++y) {
                const float* grow = gplane + static_cast<size_t>(y) * w;
                const float* irow0 = iplane + static_cast<size_t>(y) * wp;
                const float* irow1 = irow0 + wp;
                const float* irow2 = irow1 + wp;
                int x = 0;
                for (; x + 8 <= w; x += 8) {
                    const __m256 g = _mm256_loadu_ps(grow + x);
                    vacc[0] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow0 + x + 0), vacc[0]);
                    vacc[1] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow0 + x + 1), vacc[1]);
                    vacc[2] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow0 + x + 2), vacc[2]);
                    vacc[3] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow1 + x + 0), vacc[3]);
                    vacc[4] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow1 + x + 1), vacc[4]);
                    vacc[5] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow1 + x + 2), vacc[5]);
                    vacc[6] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow2 + x + 0), vacc[6]);
                    vacc[7] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow2 + x + 1), vacc[7]);
                    vacc[8] = _mm256_fmadd_ps(g, _mm256_loadu_ps(irow2 + x + 2), vacc[8]);
                }
                for (; x < w; ++x) {
                    const float g = grow[x];
                    sacc[0] += g * irow0[x + 0];
                    sacc[1] += g * irow0[x + 1];
                    sacc[2] += g * irow0[x + 2];
                    sacc[3] += g * irow1[x + 0];
                    sacc[4] += g * irow1[x + 1];
                    sacc[5] += g * irow1[x + 2];
                    sacc[6] += g * irow2[x + 0];
                    sacc[7] += g * irow2[x + 1];
                    sacc[8] += g * irow2[x + 2];
                }
            }
            float* wk = wgrad + (static_cast<size_t>(oc) * cin + ic) * 9;
            for (int t = 0; t < 9; ++t) wk[t] += hsum256(vacc[t]) + sacc[t];
        }
    }
}

} // namespace

const Backend& avx2_backend()
{
    static const Backend b{"avx2", dot_avx2, axpy_avx2, conv3x3_avx2,
                           conv3x3_wgrad_avx2};
    return b;
}

#else // !CSITWIN_X86

const Backend& avx2_backend() { return scalar_backend(); }

#endif

} // namespace csitwin::kern
