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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csitwin/codec.hpp"

namespace csitwin {

// Digital-twin training workflow: pretrain on twin data, score and select
// real-scene refinement data, refine by naive fine-tuning or rehearsal.

struct RefinementPolicy {
    enum class Strategy { None, NaiveFinetune, Rehearsal };
    enum class Selection { Random, NmseThreshold, TopK };

    Strategy strategy = Strategy::Rehearsal;
    Selection selection = Selection::TopK;
    double eta = 0.0; // NMSE threshold (linear) for Selection::NmseThreshold
    int k = 1;        // selection size for Random / TopK
    int refine_epochs = 100;
    double refine_lr = 1e-4;
    uint64_t seed = 1;
};

struct SelectionReport {
    std::vector<size_t> indices;  // into the target pool, unique
    std::vector<double> nmse;     // reconstruction NMSE of each selected sample
    std::vector<double> max_corr; // max normalized correlation to the twin set
};

/// Trains a fresh codec on twin data only (provenance-checked).
std::pair<CodecParams, TrainHistory> pretrain_on_twin(const CsiDataset& twin_train,
                                                      const CodecShape& shape,
                                                      const TrainConfig& cfg);

/// Per-sample reconstruction NMSE, order preserving.
std::vector<std::pair<size_t, double>> score_reconstruction(const CodecParams& params,
                                                            const CsiDataset& dataset);

/// Max over the pool of |u(a)^H u(b)| / (||u(a)|| ||u(b)||) with u(.) the
/// flattened complex sample. Clamped to [0, 1].
double max_normalized_correlation(const AngularDelayCSI& sample,
                                  const CsiDataset& pool);

/// Selects refinement data from the target pool per the policy and reports
/// each selected sample's NMSE and max correlation against the twin set.
/// A threshold that selects nothing yields an empty report.
SelectionReport select_refinement_data(const CodecParams& params,
                                       const CsiDataset& target_pool,
                                       const CsiDataset& twin_train,
                                       const RefinementPolicy& policy);

/// Continues Adam training on the refinement set only (fresh optimizer state).
CodecParams refine_naive(const CodecParams& params, const CsiDataset& refine_set,
                         const RefinementPolicy& policy);

/// Continues training on the union twin_train + refine_set, batches drawn
/// from the seeded-shuffled union.
CodecParams refine_rehearsal(const CodecParams& params, const CsiDataset& refine_set,
                             const CsiDataset& twin_train,
                             const RefinementPolicy& policy);

/// Subset dataset built from a selection report (order of the report).
CsiDataset subset_dataset(const CsiDataset& pool, const std::vector<size_t>& indices);

/// Linear NMSE at the given percentile of the per-sample scores; the default
/// eta anchor is the 90th percentile of the twin-test NMSE.
double nmse_percentile(const std::vector<double>& scores, double percentile);

/// CSV with columns index,nmse,nmse_db,max_corr.
void save_selection_report(const SelectionReport& report, const std::string& path);

} // namespace csitwin
