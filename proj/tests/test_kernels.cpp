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
//
// Scalar/SIMD equivalence. The scalar table is the reference; the AVX2
// variants may only differ by float reassociation, so everything is also
// checked against a double-precision recomputation.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "csitwin/kernels.hpp"
#include "csitwin/rng.hpp"

using namespace csitwin;

namespace {

std::vector<float> random_vec(size_t n, Rng& rng)
{
    std::vector<float> v(n);
    for (auto& x : v) x = rng.uniform_f(-1.0f, 1.0f);
    return v;
}

double rel_diff(const std::vector<float>& a, const std::vector<float>& b)
{
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - b[i];
        num += d * d;
        den += static_cast<double>(a[i]) * a[i];
    }
    return std::sqrt(num) / (std::sqrt(den) + 1e-30);
}

} // namespace

TEST_CASE("dot: scalar vs avx2 vs double reference")
{
    Rng rng(31);
    const auto& sc = kern::scalar_backend();
    const auto& vx = kern::avx2_backend();
    for (size_t n : {size_t{1}, size_t{7}, size_t{8}, size_t{9}, size_t{64},
                     size_t{1000}, size_t{2048}, size_t{2051}}) {
        auto a = random_vec(n, rng);
        auto b = random_vec(n, rng);
        double ref = 0.0;
        for (size_t i = 0; i < n; ++i) ref += static_cast<double>(a[i]) * b[i];

        float s = sc.dot(a.data(), b.data(), n);
        CHECK(std::abs(s - ref) < 1e-4 * (std::abs(ref) + 1.0));
        if (kern::avx2_supported()) {
            float v = vx.dot(a.data(), b.data(), n);
            CHECK(std::abs(v - ref) < 1e-4 * (std::abs(ref) + 1.0));
            CHECK(std::abs(v - s) < 2e-4 * (std::abs(ref) + 1.0));
        }
    }
}

TEST_CASE("axpy: scalar vs avx2")
{
    Rng rng(32);
    const auto& sc = kern::scalar_backend();
    const auto& vx = kern::avx2_backend();
    for (size_t n : {size_t{1}, size_t{5}, size_t{8}, size_t{25}, size_t{2048}}) {
        auto x = random_vec(n, rng);
        auto y0 = random_vec(n, rng);
        float alpha = rng.uniform_f(-2.0f, 2.0f);

        auto ys = y0;
        sc.axpy(alpha, x.data(), ys.data(), n);
        for (size_t i = 0; i < n; ++i)
            CHECK(ys[i] == doctest::Approx(y0[i] + alpha * x[i]).epsilon(1e-5));

        if (kern::avx2_supported()) {
            auto yv = y0;
            vx.axpy(alpha, x.data(), yv.data(), n);
            CHECK(rel_diff(ys, yv) < 1e-6);
        }
    }
}

namespace {

struct ConvCase {
    int cin, cout, h, w;
};

void run_conv_case(const ConvCase& c, Rng& rng)
{
    const auto& sc = kern::scalar_backend();
    const auto& vx = kern::avx2_backend();
    const int wp = c.w + 2;
    auto in_pad = random_vec(static_cast<size_t>(c.cin) * (c.h + 2) * wp, rng);
    // zero borders, as produced by the codec's padding step
    for (int ic = 0; ic < c.cin; ++ic) {
        float* pl = in_pad.data() + static_cast<size_t>(ic) * (c.h + 2) * wp;
        for (int x = 0; x < wp; ++x) {
            pl[x] = 0.0f;
            pl[static_cast<size_t>(c.h + 1) * wp + x] = 0.0f;
        }
        for (int y = 0; y < c.h + 2; ++y) {
            pl[static_cast<size_t>(y) * wp] = 0.0f;
            pl[static_cast<size_t>(y) * wp + c.w + 1] = 0.0f;
        }
    }
    auto wgt = random_vec(static_cast<size_t>(c.cout) * c.cin * 9, rng);
    auto bias = random_vec(c.cout, rng);

    std::vector<float> out_s(static_cast<size_t>(c.cout) * c.h * c.w);
    sc.conv3x3(in_pad.data(), c.cin, c.h, c.w, wgt.data(), bias.data(), out_s.data(),
               c.cout);

    // double-precision recomputation
    std::vector<double> out_d(out_s.size(), 0.0);
    for (int oc = 0; oc < c.cout; ++oc)
        for (int y = 0; y < c.h; ++y)
            for (int x = 0; x < c.w; ++x) {
                double acc = bias[oc];
                for (int ic = 0; ic < c.cin; ++ic)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx)
                            acc += static_cast<double>(
                                       wgt[((static_cast<size_t>(oc) * c.cin + ic) * 3 +
                                            ky) *
                                               3 +
                                           kx]) *
                                   in_pad[(static_cast<size_t>(ic) * (c.h + 2) + y + ky) *
                                              wp +
                                          x + kx];
                out_d[(static_cast<size_t>(oc) * c.h + y) * c.w + x] = acc;
            }
    double err = 0.0;
    for (size_t i = 0; i < out_s.size(); ++i)
        err = std::max(err, std::abs(out_s[i] - out_d[i]));
    CHECK(err < 1e-4);

    if (kern::avx2_supported()) {
        std::vector<float> out_v(out_s.size());
        vx.conv3x3(in_pad.data(), c.cin, c.h, c.w, wgt.data(), bias.data(),
                   out_v.data(), c.cout);
        CHECK(rel_diff(out_s, out_v) < 1e-5);
    }

    // weight gradient kernels
    auto gout = random_vec(static_cast<size_t>(c.cout) * c.h * c.w, rng);
    std::vector<float> wg_s(wgt.size(), 0.0f), bg_s(c.cout, 0.0f);
    sc.conv3x3_wgrad(in_pad.data(), c.cin, c.h, c.w, gout.data(), wg_s.data(),
                     bg_s.data(), c.cout);
    if (kern::avx2_supported()) {
        std::vector<float> wg_v(wgt.size(), 0.0f), bg_v(c.cout, 0.0f);
        vx.conv3x3_wgrad(in_pad.data(), c.cin, c.h, c.w, gout.data(), wg_v.data(),
                         bg_v.data(), c.cout);
        CHECK(rel_diff(wg_s, wg_v) < 1e-5);
        CHECK(rel_diff(bg_s, bg_v) < 1e-5);
    }

    // wgrad accumulates
    std::vector<float> wg2 = wg_s;
    std::vector<float> bg2 = bg_s;
    sc.conv3x3_wgrad(in_pad.data(), c.cin, c.h, c.w, gout.data(), wg2.data(),
                     bg2.data(), c.cout);
    for (size_t i = 0; i < wg_s.size(); ++i)
        CHECK(wg2[i] == doctest::Approx(2.0f * wg_s[i]).epsilon(1e-4));
}

} // namespace

TEST_CASE("conv3x3 and conv3x3_wgrad across widths including SIMD tails")
{
    Rng rng(33);
    for (const ConvCase& c :
         {ConvCase{2, 8, 32, 32}, ConvCase{8, 16, 32, 32}, ConvCase{16, 2, 32, 32},
          ConvCase{2, 8, 32, 4}, ConvCase{3, 5, 7, 9}, ConvCase{1, 1, 4, 2},
          ConvCase{8, 16, 32, 33}, ConvCase{2, 2, 5, 15}}) {
        CAPTURE(c.cin);
        CAPTURE(c.cout);
        CAPTURE(c.w);
        run_conv_case(c, rng);
    }
}

TEST_CASE("active backend selection is sane")
{
    const auto& b = kern::active();
    if (kern::avx2_supported())
        CHECK((std::string(b.name) == "avx2" || std::string(b.name) == "scalar"));
    else
        CHECK(std::string(b.name) == "scalar");
}
