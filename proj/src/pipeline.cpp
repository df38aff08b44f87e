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

#include "csitwin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "csitwin/dft.hpp"
#include "csitwin/parallel.hpp"
#include "csitwin/rng.hpp"

namespace csitwin {

using cd = std::complex<double>;
using nlohmann::json;

const char* scenario_name(Scenario s)
{
    switch (s) {
    case Scenario::Target: return "target";
    case Scenario::Twin: return "twin";
    case Scenario::Baseline: return "baseline";
    }
    return "unknown";
}

Scenario scenario_from_name(const std::string& name)
{
    if (name == "target") return Scenario::Target;
    if (name == "twin") return Scenario::Twin;
    if (name == "baseline") return Scenario::Baseline;
    throw std::invalid_argument("unknown scenario name: " + name);
}

// Unitary DFT along the delay axis (columns), then unitary IDFT-style
// multiply by F_a^H along the antenna axis (rows).
CxMatrix to_delay_angular(const CxMatrix& h)
{
    const int K = h.rows, n_t = h.cols;
    CxMatrix g(K, n_t);

    std::vector<cd> col(K);
    const double kd = 1.0 / std::sqrt(static_cast<double>(K));
    for (int c = 0; c < n_t; ++c) {
        for (int r = 0; r < K; ++r) col[r] = h.at(r, c);
        dft_inplace(col, -1);
        for (int r = 0; r < K; ++r) g.at(r, c) = col[r] * kd;
    }

    // right-multiply by F_a^H: out[r][n] = (1/sqrt(N)) sum_c g[r][c] e^{+j2pi nc/N}
    CxMatrix out(K, n_t);
    const double ka = 1.0 / std::sqrt(static_cast<double>(n_t));
    std::vector<cd> row(n_t);
    for (int r = 0; r < K; ++r) {
        for (int c = 0; c < n_t; ++c) row[c] = g.at(r, c);
        dft_inplace(row, +1);
        for (int n = 0; n < n_t; ++n) out.at(r, n) = row[n] * ka;
    }
    return out;
}

CxMatrix from_delay_angular(const CxMatrix& g)
{
    const int K = g.rows, n_t = g.cols;
    CxMatrix h1(K, n_t);

    std::vector<cd> col(K);
    const double kd = 1.0 / std::sqrt(static_cast<double>(K));
    for (int c = 0; c < n_t; ++c) {
        for (int r = 0; r < K; ++r) col[r] = g.at(r, c);
        dft_inplace(col, +1);
        for (int r = 0; r < K; ++r) h1.at(r, c) = col[r] * kd;
    }

    CxMatrix out(K, n_t);
    const double ka = 1.0 / std::sqrt(static_cast<double>(n_t));
    std::vector<cd> row(n_t);
    for (int r = 0; r < K; ++r) {
        for (int c = 0; c < n_t; ++c) row[c] = h1.at(r, c);
        dft_inplace(row, -1);
        for (int n = 0; n < n_t; ++n) out.at(r, n) = row[n] * ka;
    }
    return out;
}

CxMatrix truncate_delay(const CxMatrix& g, int rows)
{
    if (g.rows < rows)
        throw std::invalid_argument("truncate_delay: input has fewer than " +
                                    std::to_string(rows) + " rows");
    CxMatrix out(rows, g.cols);
    std::copy(g.m.begin(), g.m.begin() + static_cast<size_t>(rows) * g.cols,
              out.m.begin());
    return out;
}

AngularDelayCSI normalize_sample(const CxMatrix& g_trunc, uint32_t grid_index)
{
    double norm = g_trunc.frobenius_norm();
    if (!(norm > 0.0))
        throw std::domain_error("normalize_sample: zero-norm CSI (blocked UE)");
    AngularDelayCSI s;
    s.cols = g_trunc.cols;
    s.grid_index = grid_index;
    s.g.resize(g_trunc.m.size());
    double inv = 1.0 / norm;
    for (size_t i = 0; i < g_trunc.m.size(); ++i) {
        cd v = g_trunc.m[i] * inv;
        s.g[i] = std::complex<float>(static_cast<float>(v.real()),
                                     static_cast<float>(v.imag()));
    }
    return s;
}

AngularDelayCSI preprocess_channel(const ChannelMatrix& h)
{
    CxMatrix g = to_delay_angular(h.h);
    CxMatrix gt = truncate_delay(g, kTruncatedRows);
    return normalize_sample(gt, h.grid_index);
}

CxMatrix reconstruct_frequency_csi(const AngularDelayCSI& s, int num_subcarriers)
{
    CxMatrix g(num_subcarriers, s.cols);
    for (int r = 0; r < kTruncatedRows; ++r)
        for (int c = 0; c < s.cols; ++c) {
            std::complex<float> v = s.g[static_cast<size_t>(r) * s.cols + c];
            g.at(r, c) = cd(v.real(), v.imag());
        }
    return from_delay_angular(g);
}

CsiDataset generate_dataset(const Scene& scene, const SystemConfig& cfg,
                            uint64_t ue_subsample_seed, size_t count,
                            Scenario scenario)
{
    cfg.validate();
    require_valid_scene(scene);
    const uint32_t grid_n = scene.service_grid.point_count();
    if (count > grid_n)
        throw std::invalid_argument("generate_dataset: count exceeds grid size");

    std::vector<uint32_t> perm(grid_n);
    for (uint32_t i = 0; i < grid_n; ++i) perm[i] = i;
    Rng rng(mix_seed(ue_subsample_seed, 0x5CEEDULL));
    rng.shuffle(perm);

    // Scan the permutation in batches, keeping the first `count` valid
    // (non-blocked) positions in permutation order.
    CsiDataset ds;
    ds.scenario = scenario;
    ds.generator_seed = ue_subsample_seed;
    ds.sys = cfg;
    ds.scene_name = scene.name;

    size_t cursor = 0;
    while (ds.samples.size() < count && cursor < perm.size()) {
        size_t need = count - ds.samples.size();
        size_t batch = std::min(perm.size() - cursor, need + need / 4 + 8);

        std::vector<AngularDelayCSI> results(batch);
        std::vector<char> ok(batch, 0);
        parallel_chunks(batch, 16, [&](size_t, size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                uint32_t gi = perm[cursor + i];
                Vec3 pos = scene.service_grid.position(gi);
                auto paths = trace_paths(scene, pos, cfg.carrier_freq_hz);
                if (paths.empty()) continue;
                ChannelMatrix h = frequency_channel(delay_domain_channel(paths, cfg), cfg);
                h.grid_index = gi;
                h.scenario = scenario_name(scenario);
                if (h.h.frobenius_norm() == 0.0) continue;
                results[i] = preprocess_channel(h);
                ok[i] = 1;
            }
        });
        for (size_t i = 0; i < batch && ds.samples.size() < count; ++i)
            if (ok[i]) ds.samples.push_back(std::move(results[i]));
        cursor += batch;
    }

    if (ds.samples.size() < count) {
        std::ostringstream oss;
        oss << "generate_dataset: scene '" << scene.name << "' yielded only "
            << ds.samples.size() << " valid samples of " << count
            << " requested (shortfall " << (count - ds.samples.size()) << ")";
        throw std::runtime_error(oss.str());
    }

    std::sort(ds.samples.begin(), ds.samples.end(),
              [](const AngularDelayCSI& a, const AngularDelayCSI& b) {
                  return a.grid_index < b.grid_index;
              });
    return ds;
}

std::pair<CsiDataset, CsiDataset> split_dataset(const CsiDataset& ds,
                                                double train_fraction,
                                                uint64_t seed)
{
    if (ds.empty()) throw std::invalid_argument("split_dataset: empty dataset");
    const size_t n = ds.size();
    const size_t n_train = static_cast<size_t>(
        std::floor(train_fraction * static_cast<double>(n)));

    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(mix_seed(seed, 0x511754ULL));
    rng.shuffle(perm);

    CsiDataset train = ds, test = ds;
    train.samples.clear();
    test.samples.clear();
    train.split_seed = seed;
    test.split_seed = seed;
    for (size_t i = 0; i < n; ++i) {
        if (i < n_train)
            train.samples.push_back(ds.samples[perm[i]]);
        else
            test.samples.push_back(ds.samples[perm[i]]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Binary persistence
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::ostream& out, uint32_t v)
{
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in)
{
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("dataset file truncated");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v)
{
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(std::istream& in)
{
    uint32_t bits = get_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

uint64_t fnv1a64(const std::string& s)
{
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json sys_to_json(const SystemConfig& c)
{
    return {{"num_subcarriers", c.num_subcarriers},
            {"num_antennas", c.num_antennas},
            {"carrier_freq_hz", c.carrier_freq_hz},
            {"bandwidth_hz", c.bandwidth_hz},
            {"max_delay_taps", c.max_delay_taps},
            {"transmit_power_w", c.transmit_power_w},
            {"noise_variance_w", c.noise_variance_w},
            {"pulse", c.pulse == PulseShape::Sinc ? "sinc" : "raised-cosine"},
            {"rc_rolloff", c.rc_rolloff}};
}

SystemConfig sys_from_json(const json& j)
{
    SystemConfig c;
    c.num_subcarriers = j.at("num_subcarriers").get<int>();
    c.num_antennas = j.at("num_antennas").get<int>();
    c.carrier_freq_hz = j.at("carrier_freq_hz").get<double>();
    c.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    c.max_delay_taps = j.at("max_delay_taps").get<int>();
    c.transmit_power_w = j.at("transmit_power_w").get<double>();
    c.noise_variance_w = j.at("noise_variance_w").get<double>();
    c.pulse = j.at("pulse").get<std::string>() == "sinc" ? PulseShape::Sinc
                                                         : PulseShape::RaisedCosine;
    c.rc_rolloff = j.at("rc_rolloff").get<double>();
    return c;
}

} // namespace

void save_dataset(const CsiDataset& ds, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);

    const uint32_t rows = kTruncatedRows;
    const uint32_t cols = ds.empty() ? static_cast<uint32_t>(ds.sys.num_antennas)
                                     : static_cast<uint32_t>(ds.samples[0].cols);
    out.write("CSID", 4);
    put_u32(out, kDatasetFormatVersion);
    put_u32(out, static_cast<uint32_t>(ds.scenario));
    put_u32(out, static_cast<uint32_t>(ds.size()));
    put_u32(out, rows);
    put_u32(out, cols);
    for (const auto& s : ds.samples) {
        if (s.g.size() != static_cast<size_t>(rows) * cols)
            throw std::runtime_error("save_dataset: inconsistent sample dimensions");
        for (const auto& v : s.g) {
            put_f32(out, v.real());
            put_f32(out, v.imag());
        }
    }
    for (const auto& s : ds.samples) put_u32(out, s.grid_index);
    if (!out) throw std::runtime_error("write failed: " + path);
    out.close();

    json meta;
    meta["scene_name"] = ds.scene_name;
    meta["scenario"] = scenario_name(ds.scenario);
    meta["generator_seed"] = ds.generator_seed;
    meta["split_seed"] = ds.split_seed;
    meta["count"] = ds.size();
    meta["sys"] = sys_to_json(ds.sys);
    meta["cfg_hash"] = fnv1a64(sys_to_json(ds.sys).dump());
    std::ofstream mout(path + ".meta.json", std::ios::binary);
    if (!mout) throw std::runtime_error("cannot write sidecar for: " + path);
    mout << meta.dump(2) << "\n";
}

CsiDataset load_dataset(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "CSID")
        throw std::runtime_error("not a CSID dataset file: " + path);
    uint32_t version = get_u32(in);
    if (version != kDatasetFormatVersion)
        throw std::runtime_error("unsupported dataset format version");
    uint32_t scenario = get_u32(in);
    uint32_t count = get_u32(in);
    uint32_t rows = get_u32(in);
    uint32_t cols = get_u32(in);
    if (rows != kTruncatedRows)
        throw std::runtime_error("unexpected row count in dataset file");

    CsiDataset ds;
    ds.scenario = static_cast<Scenario>(scenario);
    ds.samples.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        AngularDelayCSI& s = ds.samples[i];
        s.cols = static_cast<int>(cols);
        s.g.resize(static_cast<size_t>(rows) * cols);
        for (auto& v : s.g) {
            float re = get_f32(in);
            float im = get_f32(in);
            v = std::complex<float>(re, im);
        }
    }
    for (uint32_t i = 0; i < count; ++i) ds.samples[i].grid_index = get_u32(in);

    std::ifstream min(path + ".meta.json", std::ios::binary);
    if (min) {
        json meta = json::parse(min, nullptr, false);
        if (!meta.is_discarded()) {
            ds.scene_name = meta.value("scene_name", "");
            ds.generator_seed = meta.value("generator_seed", uint64_t{0});
            ds.split_seed = meta.value("split_seed", uint64_t{0});
            if (meta.contains("sys")) ds.sys = sys_from_json(meta["sys"]);
        }
    }
    return ds;
}

} // namespace csitwin
