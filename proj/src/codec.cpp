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

#include "csitwin/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "csitwin/kernels.hpp"
#include "csitwin/parallel.hpp"
#include "csitwin/rng.hpp"

namespace csitwin {

namespace {

constexpr float kLeakySlope = 0.3f;
constexpr size_t kGradChunk = 8; // samples per gradient-accumulation chunk

size_t conv_w_count(int cout, int cin) { return static_cast<size_t>(cout) * cin * 9; }

} // namespace

ParamLayout make_param_layout(const CodecShape& s)
{
    ParamLayout l;
    const size_t in = s.input_dim(), m = s.latent_dim;
    size_t off = 0;
    l.enc_w = off; off += m * in;
    l.enc_b = off; off += m;
    l.dec_w = off; off += in * m;
    l.dec_b = off; off += in;
    for (int b = 0; b < CodecShape::kBlocks; ++b) {
        l.blk[b].w_a = off; off += conv_w_count(CodecShape::kC1, 2);
        l.blk[b].b_a = off; off += CodecShape::kC1;
        l.blk[b].w_b = off; off += conv_w_count(CodecShape::kC2, CodecShape::kC1);
        l.blk[b].b_b = off; off += CodecShape::kC2;
        l.blk[b].w_c = off; off += conv_w_count(2, CodecShape::kC2);
        l.blk[b].b_c = off; off += 2;
    }
    l.total = off;
    return l;
}

CodecParams init_codec(const CodecShape& shape, uint64_t seed)
{
    if (shape.n_t < 1 || shape.latent_dim < 1)
        throw std::invalid_argument("init_codec: bad shape");
    CodecParams p;
    p.shape = shape;
    p.layout = make_param_layout(shape);
    p.values.assign(p.layout.total, 0.0f);

    Rng rng(mix_seed(seed, 0xC0DECULL));
    auto fill_uniform = [&](size_t off, size_t count, int fan_in) {
        float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
        for (size_t i = 0; i < count; ++i)
            p.values[off + i] = rng.uniform_f(-bound, bound);
    };

    const size_t in = shape.input_dim(), m = shape.latent_dim;
    fill_uniform(p.layout.enc_w, m * in, static_cast<int>(in));
    fill_uniform(p.layout.dec_w, in * m, static_cast<int>(m));
    for (int b = 0; b < CodecShape::kBlocks; ++b) {
        fill_uniform(p.layout.blk[b].w_a, conv_w_count(CodecShape::kC1, 2), 2 * 9);
        fill_uniform(p.layout.blk[b].w_b,
                     conv_w_count(CodecShape::kC2, CodecShape::kC1),
                     CodecShape::kC1 * 9);
        fill_uniform(p.layout.blk[b].w_c, conv_w_count(2, CodecShape::kC2),
                     CodecShape::kC2 * 9);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace {

void pad_planes(const float* src, int c, int h, int w, float* dst)
{
    const int wp = w + 2;
    std::memset(dst, 0, sizeof(float) * static_cast<size_t>(c) * (h + 2) * wp);
    for (int ic = 0; ic < c; ++ic) {
        const float* sp = src + static_cast<size_t>(ic) * h * w;
        float* dp = dst + static_cast<size_t>(ic) * (h + 2) * wp + wp + 1;
        for (int y = 0; y < h; ++y)
            std::memcpy(dp + static_cast<size_t>(y) * wp,
                        sp + static_cast<size_t>(y) * w, sizeof(float) * w);
    }
}

void flip_transpose_weights(const float* w, int cout, int cin, float* out)
{
    for (int oc = 0; oc < cout; ++oc)
        for (int ic = 0; ic < cin; ++ic)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx)
                    out[((static_cast<size_t>(ic) * cout + oc) * 3 + (2 - ky)) * 3 +
                        (2 - kx)] =
                        w[((static_cast<size_t>(oc) * cin + ic) * 3 + ky) * 3 + kx];
}

struct BlockCache {
    std::vector<float> pad_in; // padded block input, 2 planes
    std::vector<float> a_pre, pad_a;
    std::vector<float> b_pre, pad_b;
    std::vector<float> c_out;
    std::vector<float> y; // block output (post skip + tanh)
};

// Per-worker forward/backward scratch.
struct Workspace {
    CodecShape shape;
    std::vector<float> code, dec_pre, x0;
    BlockCache blk[CodecShape::kBlocks];
    std::vector<float> pre_norm; // alias target of blk[last].y after blocks
    std::vector<float> out;
    double norm = 0.0;

    // backward scratch
    std::vector<float> g_y, g_u, g_planes_big, g_planes_small, pad_g;
    std::vector<float> g_code, g_dec_pre;
    std::vector<float> wflip;

    explicit Workspace(const CodecShape& s) : shape(s)
    {
        const int h = CodecShape::kRows, w = s.n_t;
        const int hw = h * w;
        const int pad2 = 2 * (h + 2) * (w + 2);
        const int pad_c1 = CodecShape::kC1 * (h + 2) * (w + 2);
        const int pad_c2 = CodecShape::kC2 * (h + 2) * (w + 2);
        code.resize(s.latent_dim);
        dec_pre.resize(s.input_dim());
        x0.resize(s.input_dim());
        for (auto& b : blk) {
            b.pad_in.resize(pad2);
            b.a_pre.resize(static_cast<size_t>(CodecShape::kC1) * hw);
            b.pad_a.resize(pad_c1);
            b.b_pre.resize(static_cast<size_t>(CodecShape::kC2) * hw);
            b.pad_b.resize(pad_c2);
            b.c_out.resize(static_cast<size_t>(2) * hw);
            b.y.resize(static_cast<size_t>(2) * hw);
        }
        out.resize(s.input_dim());
        g_y.resize(s.input_dim());
        g_u.resize(s.input_dim());
        g_planes_big.resize(static_cast<size_t>(CodecShape::kC2) * hw);
        g_planes_small.resize(static_cast<size_t>(CodecShape::kC1) * hw);
        pad_g.resize(pad_c2);
        g_code.resize(s.latent_dim);
        g_dec_pre.resize(s.input_dim());
        wflip.resize(conv_w_count(CodecShape::kC2, CodecShape::kC1));
    }
};

inline float leaky(float v) { return v > 0.0f ? v : kLeakySlope * v; }
inline float leaky_grad(float pre) { return pre > 0.0f ? 1.0f : kLeakySlope; }

// Forward pass over one sample (as 2 x 32 x n_t planes). Returns the unit
// norm reconstruction in ws.out and keeps every intermediate needed by the
// backward pass.
void forward_sample(const CodecParams& p, const float* in, Workspace& ws)
{
    const auto& k = kern::active();
    const CodecShape& s = p.shape;
    const ParamLayout& L = p.layout;
    const int h = CodecShape::kRows, w = s.n_t, hw = h * w;
    const int in_dim = s.input_dim(), m = s.latent_dim;
    const float* pv = p.values.data();

    for (int j = 0; j < m; ++j)
        ws.code[j] = k.dot(pv + L.enc_w + static_cast<size_t>(j) * in_dim, in, in_dim) +
                     pv[L.enc_b + j];

    for (int i = 0; i < in_dim; ++i)
        ws.dec_pre[i] = k.dot(pv + L.dec_w + static_cast<size_t>(i) * m,
                              ws.code.data(), m) +
                        pv[L.dec_b + i];
    for (int i = 0; i < in_dim; ++i) ws.x0[i] = std::tanh(ws.dec_pre[i]);

    const float* x = ws.x0.data();
    for (int b = 0; b < CodecShape::kBlocks; ++b) {
        BlockCache& bc = ws.blk[b];
        const BlockOffsets& bo = L.blk[b];
        pad_planes(x, 2, h, w, bc.pad_in.data());
        k.conv3x3(bc.pad_in.data(), 2, h, w, pv + bo.w_a, pv + bo.b_a,
                  bc.a_pre.data(), CodecShape::kC1);
        // activation written straight into the padded buffer for the next conv
        {
            std::vector<float>& pa = bc.pad_a;
            std::memset(pa.data(), 0, sizeof(float) * pa.size());
            const int wp = w + 2;
            for (int c = 0; c < CodecShape::kC1; ++c) {
                const float* sp = bc.a_pre.data() + static_cast<size_t>(c) * hw;
                float* dp = pa.data() + static_cast<size_t>(c) * (h + 2) * wp + wp + 1;
                for (int y = 0; y < h; ++y)
                    for (int xx = 0; xx < w; ++xx)
                        dp[static_cast<size_t>(y) * wp + xx] =
                            leaky(sp[static_cast<size_t>(y) * w + xx]);
            }
        }
        k.conv3x3(bc.pad_a.data(), CodecShape::kC1, h, w, pv + bo.w_b, pv + bo.b_b,
                  bc.b_pre.data(), CodecShape::kC2);
        {
            std::vector<float>& pb = bc.pad_b;
            std::memset(pb.data(), 0, sizeof(float) * pb.size());
            const int wp = w + 2;
            for (int c = 0; c < CodecShape::kC2; ++c) {
                const float* sp = bc.b_pre.data() + static_cast<size_t>(c) * hw;
                float* dp = pb.data() + static_cast<size_t>(c) * (h + 2) * wp + wp + 1;
                for (int y = 0; y < h; ++y)
                    for (int xx = 0; xx < w; ++xx)
                        dp[static_cast<size_t>(y) * wp + xx] =
                            leaky(sp[static_cast<size_t>(y) * w + xx]);
            }
        }
        k.conv3x3(bc.pad_b.data(), CodecShape::kC2, h, w, pv + bo.w_c, pv + bo.b_c,
                  bc.c_out.data(), 2);
        for (int i = 0; i < 2 * hw; ++i) bc.y[i] = std::tanh(x[i] + bc.c_out[i]);
        x = bc.y.data();
    }

    double nn = 0.0;
    for (int i = 0; i < in_dim; ++i) nn += static_cast<double>(x[i]) * x[i];
    ws.norm = std::sqrt(nn);
    if (!(ws.norm > 0.0))
        throw std::runtime_error("degenerate decoder output (zero norm)");
    const float inv = static_cast<float>(1.0 / ws.norm);
    for (int i = 0; i < in_dim; ++i) ws.out[i] = x[i] * inv;
}

// Backward pass for one sample; accumulates parameter gradients of the
// *unscaled* sample NMSE into grad (mean scaling happens at the batch level).
void backward_sample(const CodecParams& p, const float* in, const float* target,
                     double target_norm2, Workspace& ws, float* grad)
{
    const auto& k = kern::active();
    const CodecShape& s = p.shape;
    const ParamLayout& L = p.layout;
    const int h = CodecShape::kRows, w = s.n_t, hw = h * w;
    const int in_dim = s.input_dim(), m = s.latent_dim;
    const float* pv = p.values.data();

    // g_out = 2 (out - target) / ||target||^2, then through out = y/norm:
    // g_y = (g_out - out * <g_out, out>) / norm
    double dot_go = 0.0;
    const double inv_t2 = 2.0 / target_norm2;
    for (int i = 0; i < in_dim; ++i) {
        double go = (static_cast<double>(ws.out[i]) - target[i]) * inv_t2;
        ws.g_u[i] = static_cast<float>(go); // reuse g_u as g_out staging
        dot_go += go * ws.out[i];
    }
    const double inv_norm = 1.0 / ws.norm;
    for (int i = 0; i < in_dim; ++i)
        ws.g_y[i] = static_cast<float>(
            (ws.g_u[i] - dot_go * ws.out[i]) * inv_norm);

    for (int b = CodecShape::kBlocks - 1; b >= 0; --b) {
        BlockCache& bc = ws.blk[b];
        const BlockOffsets& bo = L.blk[b];
        const float* x_in = b == 0 ? ws.x0.data() : ws.blk[b - 1].y.data();
        (void)x_in;

        // y = tanh(x_in + c_out)
        for (int i = 0; i < 2 * hw; ++i)
            ws.g_u[i] = ws.g_y[i] * (1.0f - bc.y[i] * bc.y[i]);

        // conv C (16 -> 2)
        k.conv3x3_wgrad(bc.pad_b.data(), CodecShape::kC2, h, w, ws.g_u.data(),
                        grad + bo.w_c, grad + bo.b_c, 2);
        pad_planes(ws.g_u.data(), 2, h, w, ws.pad_g.data());
        flip_transpose_weights(pv + bo.w_c, 2, CodecShape::kC2, ws.wflip.data());
        k.conv3x3(ws.pad_g.data(), 2, h, w, ws.wflip.data(), nullptr,
                  ws.g_planes_big.data(), CodecShape::kC2);
        // through leaky on b_pre
        for (int i = 0; i < CodecShape::kC2 * hw; ++i)
            ws.g_planes_big[i] *= leaky_grad(bc.b_pre[i]);

        // conv B (8 -> 16)
        k.conv3x3_wgrad(bc.pad_a.data(), CodecShape::kC1, h, w,
                        ws.g_planes_big.data(), grad + bo.w_b, grad + bo.b_b,
                        CodecShape::kC2);
        pad_planes(ws.g_planes_big.data(), CodecShape::kC2, h, w, ws.pad_g.data());
        flip_transpose_weights(pv + bo.w_b, CodecShape::kC2, CodecShape::kC1,
                               ws.wflip.data());
        k.conv3x3(ws.pad_g.data(), CodecShape::kC2, h, w, ws.wflip.data(), nullptr,
                  ws.g_planes_small.data(), CodecShape::kC1);
        for (int i = 0; i < CodecShape::kC1 * hw; ++i)
            ws.g_planes_small[i] *= leaky_grad(bc.a_pre[i]);

        // conv A (2 -> 8)
        k.conv3x3_wgrad(bc.pad_in.data(), 2, h, w, ws.g_planes_small.data(),
                        grad + bo.w_a, grad + bo.b_a, CodecShape::kC1);
        pad_planes(ws.g_planes_small.data(), CodecShape::kC1, h, w, ws.pad_g.data());
        flip_transpose_weights(pv + bo.w_a, CodecShape::kC1, 2, ws.wflip.data());
        // gradient into the block input: residual branch + identity skip
        std::vector<float>& g_res = ws.g_planes_big; // reuse, only 2 planes used
        k.conv3x3(ws.pad_g.data(), CodecShape::kC1, h, w, ws.wflip.data(), nullptr,
                  g_res.data(), 2);
        for (int i = 0; i < 2 * hw; ++i) ws.g_y[i] = ws.g_u[i] + g_res[i];
    }

    // x0 = tanh(dec_pre)
    for (int i = 0; i < in_dim; ++i)
        ws.g_dec_pre[i] = ws.g_y[i] * (1.0f - ws.x0[i] * ws.x0[i]);

    // decoder dense
    std::fill(ws.g_code.begin(), ws.g_code.end(), 0.0f);
    for (int i = 0; i < in_dim; ++i) {
        const float gi = ws.g_dec_pre[i];
        if (gi == 0.0f) continue;
        k.axpy(gi, ws.code.data(), grad + L.dec_w + static_cast<size_t>(i) * m, m);
        k.axpy(gi, pv + L.dec_w + static_cast<size_t>(i) * m, ws.g_code.data(), m);
        grad[L.dec_b + i] += gi;
    }

    // encoder dense
    for (int j = 0; j < m; ++j) {
        const float gj = ws.g_code[j];
        if (gj == 0.0f) continue;
        k.axpy(gj, in, grad + L.enc_w + static_cast<size_t>(j) * in_dim, in_dim);
        grad[L.enc_b + j] += gj;
    }
}

// Flattens complex samples to real planes.
struct FloatSamples {
    int dim = 0;
    size_t count = 0;
    std::vector<float> data;
    const float* row(size_t i) const { return data.data() + i * dim; }
};

void sample_to_planes(const AngularDelayCSI& s, float* dst)
{
    const int hw = CodecShape::kRows * s.cols;
    for (int i = 0; i < hw; ++i) {
        dst[i] = s.g[i].real();
        dst[hw + i] = s.g[i].imag();
    }
}

FloatSamples build_float_samples(const std::vector<const AngularDelayCSI*>& batch)
{
    FloatSamples fs;
    if (batch.empty()) return fs;
    fs.count = batch.size();
    fs.dim = 2 * CodecShape::kRows * batch[0]->cols;
    fs.data.resize(fs.count * fs.dim);
    for (size_t i = 0; i < fs.count; ++i) {
        if (batch[i]->cols != batch[0]->cols)
            throw std::invalid_argument("batch has mixed sample dimensions");
        sample_to_planes(*batch[i], fs.data.data() + i * fs.dim);
    }
    return fs;
}

double sample_nmse_planes(const float* target, const float* out, int dim,
                          double* den_out = nullptr)
{
    double num = 0.0, den = 0.0;
    for (int i = 0; i < dim; ++i) {
        double d = static_cast<double>(out[i]) - target[i];
        num += d * d;
        den += static_cast<double>(target[i]) * target[i];
    }
    if (den_out) *den_out = den;
    return num / den;
}

// Shared driver: forward (and optionally backward) over a flattened batch
// with fixed-chunk parallel accumulation.
double run_batch(const CodecParams& params, const FloatSamples& fs,
                 std::vector<float>* grad_out)
{
    const size_t n = fs.count;
    if (n == 0) throw std::invalid_argument("empty batch");
    if (fs.dim != params.shape.input_dim())
        throw std::invalid_argument("sample dimension does not match codec shape");

    const size_t n_chunks = (n + kGradChunk - 1) / kGradChunk;
    const size_t workers =
        std::min<size_t>(static_cast<size_t>(thread_budget()), n_chunks);

    std::vector<Workspace> ws;
    ws.reserve(workers);
    for (size_t i = 0; i < workers; ++i) ws.emplace_back(params.shape);

    std::vector<std::vector<float>> chunk_grads;
    if (grad_out)
        chunk_grads.assign(n_chunks, std::vector<float>(params.layout.total, 0.0f));
    std::vector<double> chunk_loss(n_chunks, 0.0);
    std::vector<std::string> errors(n_chunks);

    parallel_chunks(n, kGradChunk, [&](size_t c, size_t begin, size_t end) {
        Workspace& w = ws[c % workers];
        try {
            double acc = 0.0;
            for (size_t i = begin; i < end; ++i) {
                const float* x = fs.row(i);
                forward_sample(params, x, w);
                double den = 0.0;
                acc += sample_nmse_planes(x, w.out.data(), fs.dim, &den);
                if (grad_out)
                    backward_sample(params, x, x, den, w, chunk_grads[c].data());
            }
            chunk_loss[c] = acc;
        } catch (const std::exception& e) {
            errors[c] = e.what();
        }
    });

    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);

    double total = 0.0;
    for (double v : chunk_loss) total += v;

    if (grad_out) {
        grad_out->assign(params.layout.total, 0.0f);
        const float scale = 1.0f / static_cast<float>(n);
        for (size_t c = 0; c < n_chunks; ++c) {
            const std::vector<float>& g = chunk_grads[c];
            float* dst = grad_out->data();
            for (size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        }
        for (float& v : *grad_out) v *= scale;
    }
    return total / static_cast<double>(n);
}

} // namespace

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

std::vector<float> encode(const CodecParams& params, const AngularDelayCSI& x)
{
    if (2 * CodecShape::kRows * x.cols != params.shape.input_dim())
        throw std::invalid_argument("encode: sample shape mismatch");
    std::vector<float> planes(params.shape.input_dim());
    sample_to_planes(x, planes.data());

    const auto& k = kern::active();
    const ParamLayout& L = params.layout;
    const int in_dim = params.shape.input_dim(), m = params.shape.latent_dim;
    std::vector<float> code(m);
    for (int j = 0; j < m; ++j)
        code[j] = k.dot(params.values.data() + L.enc_w + static_cast<size_t>(j) * in_dim,
                        planes.data(), in_dim) +
                  params.values[L.enc_b + j];
    return code;
}

AngularDelayCSI decode(const CodecParams& params, const std::vector<float>& code)
{
    if (static_cast<int>(code.size()) != params.shape.latent_dim)
        throw std::invalid_argument("decode: code length mismatch");

    // run the decoder half of forward_sample: encode() output is bypassed by
    // seeding the workspace code directly
    Workspace ws(params.shape);
    const auto& k = kern::active();
    const ParamLayout& L = params.layout;
    const int in_dim = params.shape.input_dim(), m = params.shape.latent_dim;
    const float* pv = params.values.data();

    std::copy(code.begin(), code.end(), ws.code.begin());
    for (int i = 0; i < in_dim; ++i)
        ws.dec_pre[i] =
            k.dot(pv + L.dec_w + static_cast<size_t>(i) * m, ws.code.data(), m) +
            pv[L.dec_b + i];
    for (int i = 0; i < in_dim; ++i) ws.x0[i] = std::tanh(ws.dec_pre[i]);

    const int h = CodecShape::kRows, w = params.shape.n_t, hw = h * w;
    const float* x = ws.x0.data();
    for (int b = 0; b < CodecShape::kBlocks; ++b) {
        BlockCache& bc = ws.blk[b];
        const BlockOffsets& bo = L.blk[b];
        pad_planes(x, 2, h, w, bc.pad_in.data());
        k.conv3x3(bc.pad_in.data(), 2, h, w, pv + bo.w_a, pv + bo.b_a,
                  bc.a_pre.data(), CodecShape::kC1);
        for (int i = 0; i < CodecShape::kC1 * hw; ++i) bc.a_pre[i] = leaky(bc.a_pre[i]);
        pad_planes(bc.a_pre.data(), CodecShape::kC1, h, w, bc.pad_a.data());
        k.conv3x3(bc.pad_a.data(), CodecShape::kC1, h, w, pv + bo.w_b, pv + bo.b_b,
                  bc.b_pre.data(), CodecShape::kC2);
        for (int i = 0; i < CodecShape::kC2 * hw; ++i) bc.b_pre[i] = leaky(bc.b_pre[i]);
        pad_planes(bc.b_pre.data(), CodecShape::kC2, h, w, bc.pad_b.data());
        k.conv3x3(bc.pad_b.data(), CodecShape::kC2, h, w, pv + bo.w_c, pv + bo.b_c,
                  bc.c_out.data(), 2);
        for (int i = 0; i < 2 * hw; ++i) bc.y[i] = std::tanh(x[i] + bc.c_out[i]);
        x = bc.y.data();
    }

    double nn = 0.0;
    for (int i = 0; i < in_dim; ++i) nn += static_cast<double>(x[i]) * x[i];
    if (!(nn > 0.0)) throw std::runtime_error("degenerate decoder output (zero norm)");
    const float inv = static_cast<float>(1.0 / std::sqrt(nn));

    AngularDelayCSI out;
    out.cols = params.shape.n_t;
    out.g.resize(hw);
    for (int i = 0; i < hw; ++i)
        out.g[i] = std::complex<float>(x[i] * inv, x[hw + i] * inv);
    return out;
}

double nmse(const AngularDelayCSI& h, const AngularDelayCSI& h_hat)
{
    if (h.g.size() != h_hat.g.size())
        throw std::invalid_argument("nmse: shape mismatch");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < h.g.size(); ++i) {
        const std::complex<float> d = h.g[i] - h_hat.g[i];
        num += static_cast<double>(d.real()) * d.real() +
               static_cast<double>(d.imag()) * d.imag();
        den += static_cast<double>(h.g[i].real()) * h.g[i].real() +
               static_cast<double>(h.g[i].imag()) * h.g[i].imag();
    }
    if (!(den > 0.0)) throw std::domain_error("nmse: zero reference");
    return num / den;
}

double nmse_db(double nmse_linear) { return 10.0 * std::log10(nmse_linear); }

double loss(const CodecParams& params, const std::vector<const AngularDelayCSI*>& batch)
{
    FloatSamples fs = build_float_samples(batch);
    return run_batch(params, fs, nullptr);
}

std::vector<float> gradients(const CodecParams& params,
                             const std::vector<const AngularDelayCSI*>& batch,
                             double* loss_out)
{
    FloatSamples fs = build_float_samples(batch);
    std::vector<float> grad;
    double l = run_batch(params, fs, &grad);
    if (loss_out) *loss_out = l;
    return grad;
}

std::vector<const AngularDelayCSI*> dataset_view(const CsiDataset& data)
{
    std::vector<const AngularDelayCSI*> v;
    v.reserve(data.size());
    for (const auto& s : data.samples) v.push_back(&s);
    return v;
}

TrainHistory train(CodecParams& params, const std::vector<const AngularDelayCSI*>& data,
                   const TrainConfig& cfg)
{
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.learning_rate < 0.0)
        throw std::invalid_argument("train: learning_rate must be >= 0");

    FloatSamples fs = build_float_samples(data);
    const size_t n = fs.count;
    const size_t total = params.layout.total;

    std::vector<float> m_t(total, 0.0f), v_t(total, 0.0f), grad(total);
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(mix_seed(cfg.seed, 0xBA7C4ULL));

    // batch views point into fs
    FloatSamples batch_fs;
    batch_fs.dim = fs.dim;

    TrainHistory hist;
    double best = std::numeric_limits<double>::infinity();
    int stall = 0;
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_sum = 0.0;
        size_t seen = 0;
        for (size_t start = 0; start < n; start += cfg.batch_size) {
            const size_t bsz = std::min<size_t>(cfg.batch_size, n - start);
            batch_fs.count = bsz;
            batch_fs.data.resize(bsz * fs.dim);
            for (size_t i = 0; i < bsz; ++i)
                std::memcpy(batch_fs.data.data() + i * fs.dim,
                            fs.row(order[start + i]), sizeof(float) * fs.dim);

            double batch_loss_v = run_batch(params, batch_fs, &grad);
            if (!std::isfinite(batch_loss_v))
                throw std::runtime_error(
                    "train: diverged (non-finite loss) at epoch " +
                    std::to_string(epoch) + ", step " + std::to_string(step));
            epoch_sum += batch_loss_v * static_cast<double>(bsz);
            seen += bsz;

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            const float b1 = static_cast<float>(cfg.beta1);
            const float b2 = static_cast<float>(cfg.beta2);
            const float lr = static_cast<float>(cfg.learning_rate);
            const float eps = static_cast<float>(cfg.epsilon);
            const float ib1 = 1.0f - b1, ib2 = 1.0f - b2;
            const float c1 = static_cast<float>(1.0 / bc1);
            const float c2 = static_cast<float>(1.0 / bc2);
            float* pp = params.values.data();
            const float* gg = grad.data();
            for (size_t i = 0; i < total; ++i) {
                const float g = gg[i];
                m_t[i] = b1 * m_t[i] + ib1 * g;
                v_t[i] = b2 * v_t[i] + ib2 * g * g;
                const float mhat = m_t[i] * c1;
                const float vhat = v_t[i] * c2;
                pp[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
        const double epoch_loss = epoch_sum / static_cast<double>(seen);
        hist.epoch_loss.push_back(epoch_loss);

        if (cfg.patience > 0) {
            if (epoch_loss < best - 1e-12) {
                best = epoch_loss;
                stall = 0;
            } else if (++stall >= cfg.patience) {
                break;
            }
        }
    }
    return hist;
}

TrainHistory train(CodecParams& params, const CsiDataset& data, const TrainConfig& cfg)
{
    return train(params, dataset_view(data), cfg);
}

std::vector<double> per_sample_nmse(const CodecParams& params, const CsiDataset& data)
{
    auto view = dataset_view(data);
    FloatSamples fs = build_float_samples(view);
    const size_t n = fs.count;
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;

    const size_t n_chunks = (n + kGradChunk - 1) / kGradChunk;
    const size_t workers =
        std::min<size_t>(static_cast<size_t>(thread_budget()), n_chunks);
    std::vector<Workspace> ws;
    ws.reserve(workers);
    for (size_t i = 0; i < workers; ++i) ws.emplace_back(params.shape);
    std::vector<std::string> errors(n_chunks);

    parallel_chunks(n, kGradChunk, [&](size_t c, size_t begin, size_t end) {
        Workspace& w = ws[c % workers];
        try {
            for (size_t i = begin; i < end; ++i) {
                forward_sample(params, fs.row(i), w);
                out[i] = sample_nmse_planes(fs.row(i), w.out.data(), fs.dim);
            }
        } catch (const std::exception& e) {
            errors[c] = e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);
    return out;
}

double eval_mean_nmse(const CodecParams& params, const CsiDataset& data)
{
    auto v = per_sample_nmse(params, data);
    if (v.empty()) throw std::invalid_argument("eval_mean_nmse: empty dataset");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Checkpoints
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
    if (!in) throw std::runtime_error("checkpoint file truncated");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

} // namespace

void save_checkpoint(const CodecParams& params, const std::string& path,
                     const std::string& provenance_json)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write("CSIM", 4);
    put_u32(out, 1); // format version
    put_u32(out, static_cast<uint32_t>(params.shape.n_t));
    put_u32(out, static_cast<uint32_t>(params.shape.latent_dim));
    put_u32(out, CodecShape::kRows);
    put_u32(out, CodecShape::kBlocks);
    put_u32(out, CodecShape::kC1);
    put_u32(out, CodecShape::kC2);
    put_u32(out, 3); // conv kernel size
    put_u32(out, static_cast<uint32_t>(params.values.size()));
    for (float v : params.values) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(out, bits);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
    out.close();

    std::ofstream mout(path + ".meta.json", std::ios::binary);
    if (mout) mout << provenance_json << "\n";
}

CodecParams load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "CSIM")
        throw std::runtime_error("not a CSIM checkpoint: " + path);
    if (get_u32(in) != 1) throw std::runtime_error("unsupported checkpoint version");

    CodecShape shape;
    shape.n_t = static_cast<int>(get_u32(in));
    shape.latent_dim = static_cast<int>(get_u32(in));
    if (get_u32(in) != CodecShape::kRows ||
        get_u32(in) != CodecShape::kBlocks ||
        get_u32(in) != CodecShape::kC1 ||
        get_u32(in) != CodecShape::kC2 || get_u32(in) != 3)
        throw std::runtime_error("checkpoint architecture mismatch");

    CodecParams p;
    p.shape = shape;
    p.layout = make_param_layout(shape);
    const uint32_t count = get_u32(in);
    if (count != p.layout.total)
        throw std::runtime_error("checkpoint parameter count mismatch");
    p.values.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t bits = get_u32(in);
        std::memcpy(&p.values[i], &bits, 4);
    }
    return p;
}

} // namespace csitwin
