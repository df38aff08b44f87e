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
#include <tuple>
#include <vector>

#include "csitwin/geometry.hpp"

namespace csitwin {

inline constexpr int kSceneFormatVersion = 1;

struct BsConfig {
    Vec3 position;               // meters; z is the antenna height
    int num_antennas = 32;       // ULA elements, half-wavelength spacing
    Vec3 array_axis{1, 0, 0};    // unit vector along the ULA
    Vec3 boresight{0, 1, 0};     // unit vector, orthogonal to array_axis
};

/// Rectangular UE grid at fixed height. Point i = (ix, iy) with
/// i = iy * nx + ix, position = origin + (ix, iy) * spacing, z = ue_height.
struct ServiceGrid {
    Vec3 origin;
    double extent_x = 0.0;
    double extent_y = 0.0;
    double spacing = 0.37;
    double ue_height = 2.0;

    int nx() const { return static_cast<int>(extent_x / spacing) + 1; }
    int ny() const { return static_cast<int>(extent_y / spacing) + 1; }
    uint32_t point_count() const
    {
        return static_cast<uint32_t>(nx()) * static_cast<uint32_t>(ny());
    }
    Vec3 position(uint32_t index) const
    {
        uint32_t ix = index % static_cast<uint32_t>(nx());
        uint32_t iy = index / static_cast<uint32_t>(nx());
        return {origin.x + ix * spacing, origin.y + iy * spacing, ue_height};
    }
    bool contains(const Vec3& p, double margin = 1e-9) const
    {
        return p.x >= origin.x - margin && p.x <= origin.x + extent_x + margin &&
               p.y >= origin.y - margin && p.y <= origin.y + extent_y + margin;
    }
};

/// Opaque building; specular reflector on its four vertical facades.
struct Box {
    Vec3 lo, hi;
    double reflection_loss_db = 6.0; // per bounce

    Aabb aabb() const { return {lo, hi}; }
};

/// Vegetation volume; attenuates but never blocks.
struct FoliageBox {
    Vec3 lo, hi;
    double attenuation_db_per_m = 0.5;

    Aabb aabb() const { return {lo, hi}; }
};

struct Scene {
    std::string name;
    BsConfig bs;
    ServiceGrid service_grid;
    std::vector<Box> buildings;
    std::vector<FoliageBox> foliage;
    int max_reflection_order = 2;
};

/// All invariant violations found, empty when the scene is valid.
std::vector<std::string> validate_scene(const Scene& scene);

/// Throws std::runtime_error listing the violations.
void require_valid_scene(const Scene& scene);

/// Same geometry with the foliage removed; name gets a "-twin" suffix.
Scene derive_twin_scene(const Scene& target);

/// The three built-in evaluation scenes: target (urban plaza with foliage),
/// its digital twin, and an unrelated cross-street baseline layout.
std::tuple<Scene, Scene, Scene> builtin_scenes();

// Scene file I/O. JSON key/value document, "scene_format_version": 1.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

/// Resolves "builtin:target", "builtin:twin", "builtin:baseline" or a path.
Scene resolve_scene(const std::string& ref);

} // namespace csitwin
