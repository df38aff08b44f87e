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

#include "csitwin/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace csitwin::kern {

bool avx2_supported()
{
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

static const Backend& select_backend()
{
    if (const char* env = std::getenv("CSITWIN_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return scalar_backend();
        if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return avx2_backend();
    }
    return avx2_supported() ? avx2_backend() : scalar_backend();
}

const Backend& active()
{
    static const Backend& b = select_backend();
    return b;
}

} // namespace csitwin::kern
