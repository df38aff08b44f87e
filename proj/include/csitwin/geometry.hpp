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

#include <cmath>
#include <optional>
#include <utility>

namespace csitwin {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const
    {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const
    {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Axis-aligned box with strictly ordered corners.
struct Aabb {
    Vec3 lo, hi;

    bool valid() const { return lo.x < hi.x && lo.y < hi.y && lo.z < hi.z; }

    bool contains(const Vec3& p, double margin = 0.0) const
    {
        return p.x > lo.x + margin && p.x < hi.x - margin &&
               p.y > lo.y + margin && p.y < hi.y - margin &&
               p.z > lo.z + margin && p.z < hi.z - margin;
    }

    bool overlaps(const Aabb& o) const
    {
        return lo.x < o.hi.x && o.lo.x < hi.x &&
               lo.y < o.hi.y && o.lo.y < hi.y &&
               lo.z < o.hi.z && o.lo.z < hi.z;
    }
};

/// Parametric overlap [t0, t1] of segment a + t(b - a), t in [0, 1], with a
/// box inflated by `inflate` on every side (negative values shrink). Empty
/// optional when there is no overlap. Slab method, symmetric in (a, b).
std::optional<std::pair<double, double>>
segment_box_overlap(const Vec3& a, const Vec3& b, const Aabb& box, double inflate = 0.0);

/// True when the open segment passes through the box interior for more than
/// `min_len` meters. Endpoints touching a face do not count as blockage.
bool segment_blocked_by(const Vec3& a, const Vec3& b, const Aabb& box,
                        double min_len = 1e-9);

/// Length in meters of the part of segment [a, b] inside the box.
double segment_length_inside(const Vec3& a, const Vec3& b, const Aabb& box);

/// Mirror of p across the axis-aligned plane {axis coordinate == coord}.
inline Vec3 mirror_point(const Vec3& p, int axis, double coord)
{
    Vec3 r = p;
    r[axis] = 2.0 * coord - p[axis];
    return r;
}

} // namespace csitwin
