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
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csitwin/channel.hpp"
#include "csitwin/scene.hpp"

namespace csitwin {

inline constexpr int kTruncatedRows = 32;
inline constexpr uint32_t kDatasetFormatVersion = 1;

enum class Scenario : uint32_t { Target = 0, Twin = 1, Baseline = 2 };

const char* scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

/// Truncated, unit-Frobenius-norm delay-angular CSI sample (32 x N_t).
/// Stored as float32, matching the dataset wire format; unit norm holds to
/// float precision (the double-precision normalize step is exact to 1e-15
/// before the narrowing cast).
struct AngularDelayCSI {
    int cols = 0; // N_t
    std::vector<std::complex<float>> g; // row-major, kTruncatedRows x cols
    uint32_t grid_index = 0;
};

struct CsiDataset {
    std::vector<AngularDelayCSI> samples;
    Scenario scenario = Scenario::Target;
    uint64_t generator_seed = 0;
    uint64_t split_seed = 0;
    SystemConfig sys;
    std::string scene_name;

    size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

/// Delay-angular transform G = F_d H F_a^H with unitary DFT matrices.
CxMatrix to_delay_angular(const CxMatrix& h);

/// Inverse transform H = F_d^H G F_a.
CxMatrix from_delay_angular(const CxMatrix& g);

/// First `rows` delay rows, verbatim. Throws when the input is shorter.
CxMatrix truncate_delay(const CxMatrix& g, int rows = kTruncatedRows);

/// Unit-Frobenius-norm sample; throws on an all-zero input (deep-blockage
/// channels are excluded upstream).
AngularDelayCSI normalize_sample(const CxMatrix& g_trunc, uint32_t grid_index = 0);

/// Full preprocessing of one frequency-domain CSI matrix.
AngularDelayCSI preprocess_channel(const ChannelMatrix& h);

/// Zero-pads a truncated sample back to K delay rows and applies the inverse
/// delay-angular transform. Used for sum-rate evaluation.
CxMatrix reconstruct_frequency_csi(const AngularDelayCSI& s, int num_subcarriers);

/// Deterministically subsamples `count` valid (non-blocked) UE positions
/// from the scene grid, traces and preprocesses each. Samples are ordered by
/// grid index. Throws when the scene cannot supply `count` valid samples.
CsiDataset generate_dataset(const Scene& scene, const SystemConfig& cfg,
                            uint64_t ue_subsample_seed, size_t count,
                            Scenario scenario);

/// Disjoint, exhaustive, seed-deterministic split; train gets
/// floor(train_fraction * size) samples. Both halves keep shuffled order, so
/// a size-S prefix of the train half is a random subset.
std::pair<CsiDataset, CsiDataset> split_dataset(const CsiDataset& ds,
                                                double train_fraction,
                                                uint64_t seed);

// Binary dataset format. Little-endian, magic "CSID", format_version u32,
// scenario u32, count u32, rows u32, cols u32, then count blocks of
// rows*cols interleaved (re, im) float32 row-major, then count u32 grid
// indices. A JSON sidecar <path>.meta.json records provenance.
void save_dataset(const CsiDataset& ds, const std::string& path);
CsiDataset load_dataset(const std::string& path);

} // namespace csitwin
