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

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "csitwin/adapt.hpp"

namespace csitwin {

// Experiment harness reproducing the evaluation protocol at desk scale:
// direct-generalization curves over training-set size, the refinement
// comparison, and the correlation CDFs, all emitted as deterministic CSVs.

struct ExperimentSpec {
    ExperimentSpec() { sys.pulse = PulseShape::RaisedCosine; }

    std::string target_scene = "builtin:target";
    std::string twin_scene = "builtin:twin";
    std::string baseline_scene = "builtin:baseline";

    SystemConfig sys;
    int latent_dim = 32;

    size_t pool_count = 3400; // generated UE positions per scenario
    double train_fraction = 0.8;

    uint64_t data_seed = 7001;
    uint64_t split_seed = 7002;
    uint64_t init_seed = 7003;
    uint64_t select_seed = 7004;

    std::vector<int> train_sizes = {160, 640, 1280, 2560};
    std::vector<int> refine_sizes = {10, 20, 40, 80};
    int replicates = 1;

    // training budget: epochs(size) = clamp(round(budget / size), 1, cap)
    double learning_rate = 2e-3;
    int batch_size = 32;
    long samples_seen_budget = 90000;
    int epochs_cap = 800;

    int naive_epochs = 300;
    double naive_lr = 1e-4;
    int rehearsal_epochs = 25;
    double rehearsal_lr = 1e-4;

    int corr_top_n = 100;
    int corr_rand_n = 100;
    int sum_rate_eval_samples = 256;

    std::string output_dir = "results";

    int epochs_for_size(long size) const;
};

std::string experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const std::string& text);
ExperimentSpec load_experiment_spec(const std::string& path);
void save_experiment_spec(const ExperimentSpec& spec, const std::string& path);

/// replicate == -1 marks the across-replicates mean row.
struct ResultsRow {
    std::string source; // target | twin | baseline
    int size = 0;       // training-set size, or refinement-set size
    std::string policy; // direct | pretrained | naive_random | naive_topk | rehearsal_topk
    int replicate = 0;
    double nmse_db = 0.0;
    double sumrate_ratio = 0.0;
};

struct ResultsTable {
    std::vector<ResultsRow> rows;
    const ResultsRow* find(const std::string& source, int size,
                           const std::string& policy, int replicate) const;
};

struct CdfTable {
    std::vector<double> quantile;    // 101 points, 0.00 .. 1.00
    std::vector<double> corr_top;    // top-N reconstruction-NMSE samples
    std::vector<double> corr_rand;   // random-N samples
    double mean_top = 0.0;
    double mean_rand = 0.0;
};

// Caches scenes, generated pools, splits and trained cells so the three
// runners can share work within one process.
class ExperimentContext {
public:
    explicit ExperimentContext(const ExperimentSpec& spec);
    ~ExperimentContext();

    const ExperimentSpec& spec() const;
    const CsiDataset& pool(Scenario s);
    const CsiDataset& train_split(Scenario s, int replicate);
    const CsiDataset& test_split(Scenario s, int replicate);
    /// Trained model of one (source, size, replicate) cell; memoized.
    const CodecParams& cell_model(Scenario source, int size, int replicate);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ResultsTable run_direct_generalization(ExperimentContext& ctx);
ResultsTable run_refinement_comparison(ExperimentContext& ctx);
CdfTable run_correlation_cdf(ExperimentContext& ctx);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// The qualitative-trend acceptance checks (direct-generalization ordering,
/// refinement behavior, CDF dominance), with thresholds pinned in code.
std::vector<CheckResult> evaluate_trend_checks(const ResultsTable& direct,
                                               const ResultsTable& refine,
                                               const CdfTable& cdf,
                                               const ExperimentSpec& spec);

void write_direct_csv(const ResultsTable& t, const std::string& path);
void write_refinement_csv(const ResultsTable& t, const std::string& path);
void write_cdf_csv(const CdfTable& t, const std::string& path);

/// Runs everything, writes CSVs plus summary.txt under spec.output_dir, and
/// returns true when every trend check passes. Every trained
/// direct-generalization cell is checkpointed under <output_dir>/models/ so
/// reported numbers stay auditable.
bool run_all_experiments(const ExperimentSpec& spec);

/// Audit: regenerates the datasets from the spec seeds, reloads the
/// persisted cell checkpoints and re-derives every per-replicate NMSE-dB in
/// direct_generalization.csv. Fails when any value deviates by more than
/// 1e-6 dB or a checkpoint is missing.
struct AuditResult {
    bool pass = false;
    int rows_checked = 0;
    std::string detail;
};
AuditResult audit_experiment_results(const ExperimentSpec& spec);

} // namespace csitwin
