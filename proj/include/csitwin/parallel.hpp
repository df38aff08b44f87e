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

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace csitwin {

/// Worker budget: CSITWIN_THREADS caps it, default is hardware concurrency.
inline int thread_budget()
{
    if (const char* env = std::getenv("CSITWIN_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(begin, end) over fixed size-`chunk` ranges of [0, n). Chunk
// boundaries depend only on n and chunk, never on the thread count, so any
// chunk-indexed accumulation downstream stays reproducible.
template <typename Fn>
void parallel_chunks(size_t n, size_t chunk, Fn&& fn)
{
    if (n == 0) return;
    size_t n_chunks = (n + chunk - 1) / chunk;
    int workers = std::min<size_t>(thread_budget(), n_chunks);
    if (workers <= 1) {
        for (size_t c = 0; c < n_chunks; ++c)
            fn(c, c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t]() {
            for (size_t c = static_cast<size_t>(t); c < n_chunks; c += workers)
                fn(c, c * chunk, std::min(n, (c + 1) * chunk));
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace csitwin
