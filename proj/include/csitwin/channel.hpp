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
#include <vector>

#include "csitwin/tracer.hpp"

namespace csitwin {

enum class PulseShape { Sinc, RaisedCosine };

struct SystemConfig {
    int num_subcarriers = 256;   // K
    int num_antennas = 32;       // N_t
    double carrier_freq_hz = kDefaultCarrierHz;
    double bandwidth_hz = 7.68e6;
    int max_delay_taps = 64;     // D
    double transmit_power_w = 1.0;
    double noise_variance_w = 1e-6;
    PulseShape pulse = PulseShape::Sinc;
    double rc_rolloff = 0.35;

    double sample_period_s() const { return 1.0 / bandwidth_hz; }
    void validate() const; // throws on violated invariants
};

/// Row-major complex matrix, small convenience wrapper.
struct CxMatrix {
    int rows = 0, cols = 0;
    std::vector<std::complex<double>> m;

    CxMatrix() = default;
    CxMatrix(int r, int c) : rows(r), cols(c), m(static_cast<size_t>(r) * c) {}
    std::complex<double>& at(int r, int c) { return m[static_cast<size_t>(r) * cols + c]; }
    const std::complex<double>& at(int r, int c) const
    {
        return m[static_cast<size_t>(r) * cols + c];
    }
    double frobenius_norm() const;
};

/// Frequency-domain CSI, K x N_t, row k holding the conjugated channel
/// vector of subcarrier k (the stacked h_k^H convention).
struct ChannelMatrix {
    CxMatrix h;
    std::string scenario;
    uint32_t grid_index = 0;
};

/// ULA response with half-wavelength spacing along the BS-frame x axis:
/// element n = exp(j pi n cos(theta) cos(phi)), unit magnitude each.
std::vector<std::complex<double>> array_response(double azimuth_rad,
                                                 double elevation_rad,
                                                 int num_antennas);

/// Pulse-shaping function sampled at t seconds for a T_S-spaced signaling.
double pulse_value(PulseShape shape, double rolloff, double t_s, double sample_period_s);

/// Delay-domain channel, D x N_t; row d = sum_l gain_l p(d T_S - tau_l) a_l^T.
CxMatrix delay_domain_channel(const std::vector<PathParams>& paths,
                              const SystemConfig& cfg);

/// Frequency-domain CSI from delay taps:
/// h_k = sum_d h_d exp(-j 2 pi k d / K), rows store h_k^H.
ChannelMatrix frequency_channel(const CxMatrix& h_delay, const SystemConfig& cfg);

/// Downlink sum rate with matched-filter precoding built from the
/// reconstructed CSI: f_k = h_hat_k / ||h_hat_k||, and
/// R = sum_k log2(1 + P_t/(K N_t sigma_n^2) |h_k^H f_k|^2) in bits/s/Hz.
/// An all-zero reconstructed row contributes log2(1) = 0.
double sum_rate(const ChannelMatrix& h_true, const ChannelMatrix& h_hat,
                const SystemConfig& cfg);

} // namespace csitwin
