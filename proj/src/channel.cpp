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

#include "csitwin/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "csitwin/dft.hpp"

namespace csitwin {

using cd = std::complex<double>;
using std::numbers::pi;

void SystemConfig::validate() const
{
    if (max_delay_taps < 1) throw std::invalid_argument("max_delay_taps must be >= 1");
    if (num_subcarriers < max_delay_taps)
        throw std::invalid_argument("num_subcarriers must be >= max_delay_taps");
    if (num_antennas < 1) throw std::invalid_argument("num_antennas must be >= 1");
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth_hz must be > 0");
    if (!(carrier_freq_hz > 0.0)) throw std::invalid_argument("carrier_freq_hz must be > 0");
    if (!(transmit_power_w > 0.0)) throw std::invalid_argument("transmit_power_w must be > 0");
    if (!(noise_variance_w > 0.0)) throw std::invalid_argument("noise_variance_w must be > 0");
}

double CxMatrix::frobenius_norm() const
{
    double s = 0.0;
    for (const cd& v : m) s += std::norm(v);
    return std::sqrt(s);
}

std::vector<cd> array_response(double azimuth_rad, double elevation_rad,
                               int num_antennas)
{
    if (num_antennas < 1) throw std::invalid_argument("num_antennas must be >= 1");
    double kx = std::cos(elevation_rad) * std::cos(azimuth_rad);
    std::vector<cd> a(num_antennas);
    for (int n = 0; n < num_antennas; ++n)
        a[n] = std::polar(1.0, pi * static_cast<double>(n) * kx);
    return a;
}

static double sinc(double x)
{
    if (x == 0.0) return 1.0;
    double px = pi * x;
    return std::sin(px) / px;
}

double pulse_value(PulseShape shape, double rolloff, double t_s, double sample_period_s)
{
    double x = t_s / sample_period_s;
    if (shape == PulseShape::Sinc) return sinc(x);

    // time-domain raised cosine with singularity at |2 beta x| = 1
    double bx = 2.0 * rolloff * x;
    if (std::abs(std::abs(bx) - 1.0) < 1e-12)
        return (pi / 4.0) * sinc(1.0 / (2.0 * rolloff));
    return sinc(x) * std::cos(pi * rolloff * x) / (1.0 - bx * bx);
}

CxMatrix delay_domain_channel(const std::vector<PathParams>& paths,
                              const SystemConfig& cfg)
{
    cfg.validate();
    const int d_taps = cfg.max_delay_taps;
    const int n_t = cfg.num_antennas;
    const double ts = cfg.sample_period_s();

    CxMatrix h(d_taps, n_t);
    for (const PathParams& p : paths) {
        std::vector<cd> a = array_response(p.azimuth_rad, p.elevation_rad, n_t);
        for (int d = 0; d < d_taps; ++d) {
            double pw = pulse_value(cfg.pulse, cfg.rc_rolloff,
                                    d * ts - p.delay_s, ts);
            if (pw == 0.0) continue;
            cd w = p.gain * pw;
            cd* row = &h.at(d, 0);
            for (int n = 0; n < n_t; ++n) row[n] += w * a[n];
        }
    }
    return h;
}

ChannelMatrix frequency_channel(const CxMatrix& h_delay, const SystemConfig& cfg)
{
    cfg.validate();
    const int k_sub = cfg.num_subcarriers;
    const int n_t = h_delay.cols;
    if (h_delay.rows > k_sub)
        throw std::invalid_argument("delay taps exceed subcarrier count");

    ChannelMatrix out;
    out.h = CxMatrix(k_sub, n_t);

    // per-antenna forward DFT of the zero-padded tap sequence
    std::vector<cd> col(k_sub);
    for (int n = 0; n < n_t; ++n) {
        for (int k = 0; k < k_sub; ++k)
            col[k] = k < h_delay.rows ? h_delay.at(k, n) : cd(0.0, 0.0);
        dft_inplace(col, -1);
        // stack h_k^H: conjugate when writing the row-major CSI matrix
        for (int k = 0; k < k_sub; ++k) out.h.at(k, n) = std::conj(col[k]);
    }
    return out;
}

double sum_rate(const ChannelMatrix& h_true, const ChannelMatrix& h_hat,
                const SystemConfig& cfg)
{
    cfg.validate();
    const CxMatrix& ht = h_true.h;
    const CxMatrix& hh = h_hat.h;
    if (ht.rows != hh.rows || ht.cols != hh.cols)
        throw std::invalid_argument("sum_rate: dimension mismatch");

    const double scale = cfg.transmit_power_w /
                         (static_cast<double>(ht.rows) * ht.cols * cfg.noise_variance_w);
    double rate = 0.0;
    for (int k = 0; k < ht.rows; ++k) {
        // rows hold h^H; the matched filter is f = h_hat / ||h_hat||
        double nrm2 = 0.0;
        for (int n = 0; n < ht.cols; ++n) nrm2 += std::norm(hh.at(k, n));
        if (nrm2 == 0.0) continue; // zero precoder, log2(1) = 0
        double inv = 1.0 / std::sqrt(nrm2);
        cd acc(0.0, 0.0);
        for (int n = 0; n < ht.cols; ++n)
            acc += ht.at(k, n) * (std::conj(hh.at(k, n)) * inv);
        rate += std::log2(1.0 + scale * std::norm(acc));
    }
    return rate;
}

} // namespace csitwin
