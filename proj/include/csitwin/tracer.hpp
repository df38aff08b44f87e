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
#include <vector>

#include "csitwin/scene.hpp"

namespace csitwin {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kDefaultCarrierHz = 3.5e9;
inline constexpr int kMaxPathsPerLink = 25;

/// Parameters of one propagation path at the BS side.
struct PathParams {
    std::complex<double> gain;  // linear amplitude with phase
    double delay_s = 0.0;       // total path length / c
    double azimuth_rad = 0.0;   // departure azimuth in the BS frame
    double elevation_rad = 0.0; // departure elevation in the BS frame
    int order = 0;              // bounce count, 0 = LOS
};

// Image-method tracer over the box world. Emits the LOS path (when not
// blocked by a building) and specular reflections off vertical building
// facades up to scene.max_reflection_order. Per path:
//   amplitude = lambda/(4 pi d) * prod 10^(-reflection_loss_db/20)
//               * 10^(-A_fol/20),  A_fol = sum db_per_m * length in foliage
//   phase = -2 pi d / lambda, delay = d / c
// with d the total path length. Departure angles are measured in the BS
// frame (x' = array_axis, y' = boresight, z' = x' x y'). At most
// kMaxPathsPerLink paths are returned, strongest first; an empty list means
// deep blockage and the caller must handle the zero channel.
std::vector<PathParams> trace_paths(const Scene& scene, const Vec3& ue_position,
                                    double carrier_freq_hz = kDefaultCarrierHz);

} // namespace csitwin
