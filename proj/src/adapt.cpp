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

#include "csitwin/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "csitwin/parallel.hpp"
#include "csitwin/rng.hpp"

namespace csitwin {

std::pair<CodecParams, TrainHistory> pretrain_on_twin(const CsiDataset& twin_train,
                                                      const CodecShape& shape,
                                                      const TrainConfig& cfg)
{
    if (twin_train.empty())
        throw std::invalid_argument("pretrain_on_twin: empty twin dataset");
    if (twin_train.scenario != Scenario::Twin)
        throw std::invalid_argument(
            "pretrain_on_twin: dataset provenance is not 'twin' (got '" +
            std::string(scenario_name(twin_train.scenario)) + "')");

    CodecParams params = init_codec(shape, cfg.seed);
    TrainHistory hist = train(params, twin_train, cfg);
    return {std::move(params), std::move(hist)};
}

std::vector<std::pair<size_t, double>> score_reconstruction(const CodecParams& params,
                                                            const CsiDataset& dataset)
{
    std::vector<double> v = per_sample_nmse(params, dataset);
    std::vector<std::pair<size_t, double>> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = {i, v[i]};
    return out;
}

namespace {

double correlation(const AngularDelayCSI& a, const AngularDelayCSI& b)
{
    std::complex<double> acc(0.0, 0.0);
    double na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.g.size(); ++i) {
        std::complex<double> va(a.g[i].real(), a.g[i].imag());
        std::complex<double> vb(b.g[i].real(), b.g[i].imag());
        acc += std::conj(va) * vb;
        na += std::norm(va);
        nb += std::norm(vb);
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = std::abs(acc) / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, 0.0, 1.0);
}

} // namespace

double max_normalized_correlation(const AngularDelayCSI& sample, const CsiDataset& pool)
{
    double best = 0.0;
    for (const auto& p : pool.samples) {
        if (p.g.size() != sample.g.size())
            throw std::invalid_argument("correlation: sample dimension mismatch");
        best = std::max(best, correlation(sample, p));
    }
    return best;
}

SelectionReport select_refinement_data(const CodecParams& params,
                                       const CsiDataset& target_pool,
                                       const CsiDataset& twin_train,
                                       const RefinementPolicy& policy)
{
    if (target_pool.empty())
        throw std::invalid_argument("select_refinement_data: empty target pool");

    std::vector<double> scores = per_sample_nmse(params, target_pool);

    SelectionReport rep;
    switch (policy.selection) {
    case RefinementPolicy::Selection::NmseThreshold: {
        for (size_t i = 0; i < scores.size(); ++i)
            if (scores[i] > policy.eta) rep.indices.push_back(i);
        break;
    }
    case RefinementPolicy::Selection::TopK: {
        if (policy.k < 1)
            throw std::invalid_argument("top_k selection requires k >= 1");
        std::vector<size_t> order(scores.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        size_t k = std::min<size_t>(policy.k, order.size());
        rep.indices.assign(order.begin(), order.begin() + k);
        break;
    }
    case RefinementPolicy::Selection::Random: {
        if (policy.k < 1)
            throw std::invalid_argument("random selection requires k >= 1");
        Rng rng(mix_seed(policy.seed, 0x5E1EC7ULL));
        rep.indices = rng.sample_without_replacement(
            scores.size(), static_cast<size_t>(policy.k));
        break;
    }
    }

    rep.nmse.resize(rep.indices.size());
    rep.max_corr.resize(rep.indices.size(), 0.0);
    for (size_t i = 0; i < rep.indices.size(); ++i) rep.nmse[i] = scores[rep.indices[i]];

    parallel_chunks(rep.indices.size(), 4, [&](size_t, size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i)
            rep.max_corr[i] = max_normalized_correlation(
                target_pool.samples[rep.indices[i]], twin_train);
    });
    return rep;
}

CsiDataset subset_dataset(const CsiDataset& pool, const std::vector<size_t>& indices)
{
    CsiDataset out = pool;
    out.samples.clear();
    for (size_t i : indices) out.samples.push_back(pool.samples.at(i));
    return out;
}

CodecParams refine_naive(const CodecParams& params, const CsiDataset& refine_set,
                         const RefinementPolicy& policy)
{
    if (refine_set.empty())
        throw std::invalid_argument("refine_naive: empty refinement set");
    CodecParams refined = params;
    TrainConfig cfg;
    cfg.learning_rate = policy.refine_lr;
    cfg.epochs = policy.refine_epochs;
    cfg.seed = mix_seed(policy.seed, 0xF17EULL);
    train(refined, refine_set, cfg);
    return refined;
}

CodecParams refine_rehearsal(const CodecParams& params, const CsiDataset& refine_set,
                             const CsiDataset& twin_train,
                             const RefinementPolicy& policy)
{
    if (twin_train.empty())
        throw std::invalid_argument("refine_rehearsal: empty twin dataset");
    // union D_twin + D_r; an empty refinement set degenerates to continued
    // twin training
    std::vector<const AngularDelayCSI*> unioned = dataset_view(twin_train);
    for (const auto& s : refine_set.samples) unioned.push_back(&s);

    CodecParams refined = params;
    TrainConfig cfg;
    cfg.learning_rate = policy.refine_lr;
    cfg.epochs = policy.refine_epochs;
    cfg.seed = mix_seed(policy.seed, 0x12E4EA25ULL);
    train(refined, unioned, cfg);
    return refined;
}

double nmse_percentile(const std::vector<double>& scores, double percentile)
{
    if (scores.empty()) throw std::invalid_argument("nmse_percentile: empty scores");
    std::vector<double> s = scores;
    std::sort(s.begin(), s.end());
    double pos = std::clamp(percentile, 0.0, 100.0) / 100.0 *
                 static_cast<double>(s.size() - 1);
    size_t i = static_cast<size_t>(pos);
    double frac = pos - static_cast<double>(i);
    if (i + 1 >= s.size()) return s.back();
    return s[i] * (1.0 - frac) + s[i + 1] * frac;
}

void save_selection_report(const SelectionReport& report, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "index,nmse,nmse_db,max_corr\n";
    char line[128];
    for (size_t i = 0; i < report.indices.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%.9g,%.6f,%.8f\n", report.indices[i],
                      report.nmse[i], nmse_db(report.nmse[i]), report.max_corr[i]);
        out << line;
    }
}

} // namespace csitwin
