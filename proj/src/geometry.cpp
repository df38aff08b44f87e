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

#include "csitwin/geometry.hpp"

#include <algorithm>

namespace csitwin {

std::optional<std::pair<double, double>>
segment_box_overlap(const Vec3& a, const Vec3& b, const Aabb& box, double inflate)
{
    double t0 = 0.0, t1 = 1.0;
    for (int ax = 0; ax < 3; ++ax) {
        double lo = box.lo[ax] - inflate;
        double hi = box.hi[ax] + inflate;
        double d = b[ax] - a[ax];
        if (d == 0.0) {
            if (a[ax] <= lo || a[ax] >= hi) return std::nullopt;
            continue;
        }
        double ta = (lo - a[ax]) / d;
        double tb = (hi - a[ax]) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 >= t1) return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

bool segment_blocked_by(const Vec3& a, const Vec3& b, const Aabb& box, double min_len)
{
    // Shrink the box slightly so rays grazing a face or starting/ending on
    // one (reflection points) are not reported as blocked.
    auto ov = segment_box_overlap(a, b, box, -1e-9);
    if (!ov) return false;
    double seg_len = (b - a).norm();
    return (ov->second - ov->first) * seg_len > min_len;
}

double segment_length_inside(const Vec3& a, const Vec3& b, const Aabb& box)
{
    auto ov = segment_box_overlap(a, b, box);
    if (!ov) return 0.0;
    return (ov->second - ov->first) * (b - a).norm();
}

} // namespace csitwin
