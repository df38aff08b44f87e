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

#include <cstddef>

// float32 compute kernels behind the codec's hot loops. Every kernel has a
// scalar reference implementation and an AVX2 variant; the active backend is
// picked once at runtime (CSITWIN_SIMD=scalar|avx2 overrides the detection).
// SIMD variants are equivalence-tested against the scalar reference; they
// may differ from it only by floating-point reassociation.

namespace csitwin::kern {

using DotFn = float (*)(const float* a, const float* b, size_t n);
using AxpyFn = void (*)(float alpha, const float* x, float* y, size_t n);

// 3x3 same-padding convolution over zero-padded planes.
// in_pad:  [cin][h+2][w+2], out: [cout][h][w] (overwritten),
// weights: [cout][cin][3][3], bias: [cout] or nullptr.
using Conv3x3Fn = void (*)(const float* in_pad, int cin, int h, int w,
                           const float* weights, const float* bias,
                           float* out, int cout);

// Accumulates weight/bias gradients: wgrad[oc][ic][ky][kx] +=
// sum_{y,x} gout[oc][y][x] * in_pad[ic][y+ky][x+kx], bgrad[oc] += sum gout.
using Conv3x3WgradFn = void (*)(const float* in_pad, int cin, int h, int w,
                                const float* gout, float* wgrad, float* bgrad,
                                int cout);

struct Backend {
    const char* name;
    DotFn dot;
    AxpyFn axpy;
    Conv3x3Fn conv3x3;
    Conv3x3WgradFn conv3x3_wgrad;
};

const Backend& scalar_backend();

/// True when the CPU supports the AVX2 backend (x86 with AVX2 + FMA).
bool avx2_supported();

/// AVX2 backend; falls back to the scalar table on unsupported hosts.
const Backend& avx2_backend();

/// Backend selected at first use and fixed for the process lifetime.
const Backend& active();

} // namespace csitwin::kern
