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
#include <vector>

#include "csitwin/pipeline.hpp"

namespace csitwin {

// CSI autoencoder.
//
// Encoder: the 32 x N_t complex sample viewed as a real 2 x 32 x N_t tensor
// (real/imag planes), flattened and affine-mapped to M reals. Decoder: dense
// M -> 2*32*N_t, tanh (initial estimate), then two residual refinement
// blocks (conv3x3 2->8->16->2 with leaky-ReLU 0.3 after the first two
// convolutions, identity skip, tanh after the skip), and a final layer that
// divides by the Frobenius norm. All parameters are float32 in one flat
// vector with a fixed canonical order (see ParamLayout).

struct CodecShape {
    int n_t = 32;        // antenna columns of the CSI sample
    int latent_dim = 32; // M

    static constexpr int kRows = 32;
    static constexpr int kC1 = 8;
    static constexpr int kC2 = 16;
    static constexpr int kBlocks = 2;

    int hw() const { return kRows * n_t; }
    int input_dim() const { return 2 * hw(); }
    int compression_ratio() const { return input_dim() / latent_dim; }
};

struct BlockOffsets {
    size_t w_a, b_a, w_b, b_b, w_c, b_c;
};

/// Canonical parameter order: enc_w [M][in], enc_b [M], dec_w [in][M],
/// dec_b [in], then per block conv weights/biases A (2->8), B (8->16),
/// C (16->2), each [cout][cin][3][3] row-major.
struct ParamLayout {
    size_t enc_w = 0, enc_b = 0, dec_w = 0, dec_b = 0;
    BlockOffsets blk[CodecShape::kBlocks] = {};
    size_t total = 0;
};

ParamLayout make_param_layout(const CodecShape& shape);

struct CodecParams {
    CodecShape shape;
    ParamLayout layout;
    std::vector<float> values;
};

/// Uniform fan-in initialization (bound 1/sqrt(fan_in)), biases zero.
CodecParams init_codec(const CodecShape& shape, uint64_t seed);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 64;
    int epochs = 500;
    uint64_t seed = 1;
    int patience = 0; // early stop after this many non-improving epochs; 0 = off
};

struct TrainHistory {
    std::vector<double> epoch_loss; // mean train NMSE per epoch
};

// --- core operations -------------------------------------------------------

std::vector<float> encode(const CodecParams& params, const AngularDelayCSI& x);

/// Throws "degenerate decoder output" when the pre-normalization activation
/// is exactly zero. Output has unit Frobenius norm.
AngularDelayCSI decode(const CodecParams& params, const std::vector<float>& code);

/// ||h - h_hat||_F^2 / ||h||_F^2; throws on zero h.
double nmse(const AngularDelayCSI& h, const AngularDelayCSI& h_hat);
double nmse_db(double nmse_linear);

/// Mean NMSE over the batch through decode(encode(.)).
double loss(const CodecParams& params, const std::vector<const AngularDelayCSI*>& batch);

/// Reverse-mode gradient of loss(); same flat layout as params.values.
/// Deterministic independent of worker count (fixed-chunk accumulation).
std::vector<float> gradients(const CodecParams& params,
                             const std::vector<const AngularDelayCSI*>& batch,
                             double* loss_out = nullptr);

/// Adam over seeded shuffled mini-batches. Throws on divergence
/// (non-finite loss). Deterministic given cfg.seed.
TrainHistory train(CodecParams& params, const std::vector<const AngularDelayCSI*>& data,
                   const TrainConfig& cfg);
TrainHistory train(CodecParams& params, const CsiDataset& data, const TrainConfig& cfg);

// --- evaluation helpers ----------------------------------------------------

std::vector<double> per_sample_nmse(const CodecParams& params, const CsiDataset& data);
double eval_mean_nmse(const CodecParams& params, const CsiDataset& data);

std::vector<const AngularDelayCSI*> dataset_view(const CsiDataset& data);

// --- checkpoint I/O --------------------------------------------------------
// Binary, magic "CSIM", little-endian; architecture descriptor then float32
// parameters in canonical order. A JSON sidecar carries provenance.

void save_checkpoint(const CodecParams& params, const std::string& path,
                     const std::string& provenance_json = "{}");
CodecParams load_checkpoint(const std::string& path);

} // namespace csitwin
