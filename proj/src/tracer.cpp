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

#include "csitwin/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace csitwin {

namespace {

// One vertical facade of a building. `axis` is the plane normal axis (0 = x,
// 1 = y), `coord` the plane coordinate, `out_sign` the outward normal sign.
// `u` spans the other horizontal axis, z the vertical extent.
struct Facade {
    int axis;
    double coord;
    double out_sign;
    int u_axis;
    double u_min, u_max;
    double z_min, z_max;
    int box_id;
};

std::vector<Facade> collect_facades(const Scene& scene)
{
    std::vector<Facade> fs;
    fs.reserve(scene.buildings.size() * 4);
    for (size_t i = 0; i < scene.buildings.size(); ++i) {
        const Box& b = scene.buildings[i];
        int id = static_cast<int>(i);
        fs.push_back({0, b.lo.x, -1.0, 1, b.lo.y, b.hi.y, b.lo.z, b.hi.z, id});
        fs.push_back({0, b.hi.x, +1.0, 1, b.lo.y, b.hi.y, b.lo.z, b.hi.z, id});
        fs.push_back({1, b.lo.y, -1.0, 0, b.lo.x, b.hi.x, b.lo.z, b.hi.z, id});
        fs.push_back({1, b.hi.y, +1.0, 0, b.lo.x, b.hi.x, b.lo.z, b.hi.z, id});
    }
    return fs;
}

bool on_outward_side(const Vec3& p, const Facade& f)
{
    return (p[f.axis] - f.coord) * f.out_sign > 1e-9;
}

// Intersection of segment a->b with the facade plane, accepted only when the
// crossing parameter is interior and the hit point lies on the facade
// rectangle.
bool facade_hit(const Vec3& a, const Vec3& b, const Facade& f, Vec3& hit)
{
    double da = a[f.axis] - f.coord;
    double db = b[f.axis] - f.coord;
    double denom = db - da;
    if (denom == 0.0) return false;
    double t = -da / denom;
    if (t <= 1e-9 || t >= 1.0 - 1e-9) return false;
    hit = a + t * (b - a);
    if (hit[f.u_axis] < f.u_min || hit[f.u_axis] > f.u_max) return false;
    if (hit.z < f.z_min || hit.z > f.z_max) return false;
    return true;
}

bool segment_clear(const Vec3& a, const Vec3& b, const Scene& scene)
{
    for (const Box& box : scene.buildings)
        if (segment_blocked_by(a, b, box.aabb())) return false;
    return true;
}

double foliage_loss_db(const std::vector<Vec3>& pts, const Scene& scene)
{
    double loss = 0.0;
    for (const FoliageBox& f : scene.foliage) {
        for (size_t i = 0; i + 1 < pts.size(); ++i)
            loss += f.attenuation_db_per_m *
                    segment_length_inside(pts[i], pts[i + 1], f.aabb());
    }
    return loss;
}

} // namespace

std::vector<PathParams> trace_paths(const Scene& scene, const Vec3& ue,
                                    double carrier_freq_hz)
{
    using std::numbers::pi;

    if (!scene.service_grid.contains(ue))
        throw std::invalid_argument("trace_paths: UE outside the service grid");

    const Vec3 bs = scene.bs.position;
    const double lambda = kSpeedOfLight / carrier_freq_hz;

    // BS frame for departure angles.
    const Vec3 fx = scene.bs.array_axis;
    const Vec3 fy = scene.bs.boresight;
    const Vec3 fz = fx.cross(fy);

    std::vector<PathParams> paths;

    // Emits one candidate path given its polyline and bounce losses.
    auto emit = [&](const std::vector<Vec3>& pts, double reflection_db, int order) {
        double d = 0.0;
        for (size_t i = 0; i + 1 < pts.size(); ++i) d += (pts[i + 1] - pts[i]).norm();
        if (d <= 0.0) return;
        double total_db = reflection_db + foliage_loss_db(pts, scene);
        double amp = lambda / (4.0 * pi * d) * std::pow(10.0, -total_db / 20.0);
        double phase = -2.0 * pi * d / lambda;

        Vec3 dep = (pts[1] - pts[0]).normalized();
        double cx = dep.dot(fx), cy = dep.dot(fy), cz = dep.dot(fz);
        PathParams p;
        p.gain = std::polar(amp, phase);
        p.delay_s = d / kSpeedOfLight;
        p.azimuth_rad = std::atan2(cy, cx);
        p.elevation_rad = std::asin(std::clamp(cz, -1.0, 1.0));
        p.order = order;
        paths.push_back(p);
    };

    // LOS
    if (segment_clear(bs, ue, scene)) emit({bs, ue}, 0.0, 0);

    if (scene.max_reflection_order >= 1 && !scene.buildings.empty()) {
        const std::vector<Facade> facades = collect_facades(scene);

        for (const Facade& f1 : facades) {
            if (!on_outward_side(bs, f1)) continue;
            Vec3 image1 = mirror_point(bs, f1.axis, f1.coord);

            // first-order reflection
            if (on_outward_side(ue, f1)) {
                Vec3 p1;
                if (facade_hit(image1, ue, f1, p1) &&
                    segment_clear(bs, p1, scene) && segment_clear(p1, ue, scene)) {
                    emit({bs, p1, ue},
                         scene.buildings[f1.box_id].reflection_loss_db, 1);
                }
            }

            if (scene.max_reflection_order < 2) continue;

            // second-order reflections: mirror the first image across f2,
            // then walk the chain backwards from the UE.
            for (const Facade& f2 : facades) {
                if (&f2 == &f1) continue;
                if (!on_outward_side(ue, f2)) continue;
                Vec3 image2 = mirror_point(image1, f2.axis, f2.coord);

                Vec3 p2;
                if (!facade_hit(image2, ue, f2, p2)) continue;
                Vec3 p1;
                if (!facade_hit(image1, p2, f1, p1)) continue;
                // the middle leg must leave f1 outward and reach f2 from outside
                if (!on_outward_side(p2, f1) || !on_outward_side(p1, f2)) continue;
                if (!segment_clear(bs, p1, scene) || !segment_clear(p1, p2, scene) ||
                    !segment_clear(p2, ue, scene))
                    continue;
                emit({bs, p1, p2, ue},
                     scene.buildings[f1.box_id].reflection_loss_db +
                         scene.buildings[f2.box_id].reflection_loss_db,
                     2);
            }
        }
    }

    std::stable_sort(paths.begin(), paths.end(),
                     [](const PathParams& a, const PathParams& b) {
                         double ma = std::abs(a.gain), mb = std::abs(b.gain);
                         if (ma != mb) return ma > mb;
                         return a.delay_s < b.delay_s;
                     });
    if (paths.size() > static_cast<size_t>(kMaxPathsPerLink))
        paths.resize(kMaxPathsPerLink);
    return paths;
}

} // namespace csitwin
