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
// Scalar reference kernels. These define the semantics the SIMD variants
// are tested against.

#include "csitwin/kernels.hpp"

namespace csitwin::kern {

namespace {

float dot_scalar(const float* a, const float* b, size_t n)
{
    float acc = 0.0f;
    for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(float alpha, const float* x, float* y, size_t n)
{
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void conv3x3_scalar(const float* in_pad, int cin, int h, int w,
                    const float* weights, const float* bias, float* out, int cout)
{
    const int wp = w + 2;
    for (int oc = 0; oc < cout; ++oc) {
        float* oplane = out + static_cast<size_t>(oc) * h * w;
        const float b = bias ? bias[oc] : 0.0f;
        for (int y = 0; y < h; ++y) {
            float* orow = oplane + static_cast<size_t>(y) * w;
            for (int x = 0; x < w; ++x) orow[x] = b;
            for (int ic = 0; ic < cin; ++ic) {
                const float* iplane = in_pad + static_cast<size_t>(ic) * (h + 2) * wp;
                const float* wk = weights + (static_cast<size_t>(oc) * cin + ic) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const float* irow = iplane + static_cast<size_t>(y + ky) * wp;
                    for (int kx = 0; kx < 3; ++kx) {
                        const float wv = wk[ky * 3 + kx];
                        for (int x = 0; x < w; ++x)
                            orow[x] += wv * irow[x + kx];
                    }
                }
            }
        }
    }
}

void conv3x3_wgrad_scalar(const float* in_pad, int cin, int h, int w,
                          const float* gout, float* wgrad, float* bgrad, int cout)
{
    const int wp = w + 2;
    for (int oc = 0; oc < cout; ++oc) {
        const float* gplane = gout + static_cast<size_t>(oc) * h * w;
        if (bgrad) {
            float acc = 0.0f;
            for (int i = 0; i < h * w; ++i) acc += gplane[i];
            bgrad[oc] += acc;
        }
        for (int ic = 0; ic < cin; ++ic) {
            const float* iplane = in_pad + static_cast<size_t>(ic) * (h + 2) * wp;
            float* wk = wgrad + (static_cast<size_t>(oc) * cin + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    float acc = 0.0f;
                    for (int y = 0; y < h; ++y) {
                        const float* grow = gplane + static_cast<size_t>(y) * w;
                        const float* irow =
                            iplane + static_cast<size_t>(y + ky) * wp + kx;
                        for (int x = 0; x < w; ++x) acc += grow[x] * irow[x];
                    }
                    wk[ky * 3 + kx] += acc;
                }
            }
        }
    }
}

} // namespace

const Backend& scalar_backend()
{
    static const Backend b{"scalar", dot_scalar, axpy_scalar, conv3x3_scalar,
                           conv3x3_wgrad_scalar};
    return b;
}

} // namespace csitwin::kern
