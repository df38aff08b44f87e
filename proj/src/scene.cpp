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

#include "csitwin/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace csitwin {

using nlohmann::json;

std::vector<std::string> validate_scene(const Scene& scene)
{
    std::vector<std::string> problems;
    auto fail = [&](const std::string& msg) { problems.push_back(msg); };

    if (scene.name.empty()) fail("scene name must be non-empty");

    const BsConfig& bs = scene.bs;
    if (bs.num_antennas < 1) fail("bs.num_antennas must be >= 1");
    if (std::abs(bs.array_axis.norm() - 1.0) > 1e-9)
        fail("bs.array_axis must be a unit vector");
    if (std::abs(bs.boresight.norm() - 1.0) > 1e-9)
        fail("bs.boresight must be a unit vector");
    if (std::abs(bs.array_axis.dot(bs.boresight)) > 1e-9)
        fail("bs.array_axis must be orthogonal to bs.boresight");

    const ServiceGrid& g = scene.service_grid;
    if (!(g.spacing > 0.0)) fail("service_grid.spacing must be > 0");
    if (!(g.extent_x > 0.0) || !(g.extent_y > 0.0))
        fail("service_grid extents must be > 0");

    if (scene.max_reflection_order < 0 || scene.max_reflection_order > 2)
        fail("max_reflection_order must be in {0, 1, 2}");

    for (size_t i = 0; i < scene.buildings.size(); ++i) {
        const Box& b = scene.buildings[i];
        if (!b.aabb().valid())
            fail("building " + std::to_string(i) + ": min corner must be < max corner");
        if (b.reflection_loss_db < 0.0)
            fail("building " + std::to_string(i) + ": reflection_loss_db must be >= 0");
    }
    for (size_t i = 0; i < scene.foliage.size(); ++i) {
        const FoliageBox& f = scene.foliage[i];
        if (!f.aabb().valid())
            fail("foliage " + std::to_string(i) + ": min corner must be < max corner");
        if (f.attenuation_db_per_m < 0.0)
            fail("foliage " + std::to_string(i) + ": attenuation_db_per_m must be >= 0");
    }

    // Grid plane vs building interiors. The grid is the full rectangle at
    // z = ue_height; edge contact is tolerated, interior overlap is not.
    if (g.spacing > 0.0) {
        Aabb grid_slab{{g.origin.x, g.origin.y, g.ue_height - 1e-9},
                       {g.origin.x + g.extent_x, g.origin.y + g.extent_y,
                        g.ue_height + 1e-9}};
        for (size_t i = 0; i < scene.buildings.size(); ++i) {
            if (scene.buildings[i].aabb().valid() &&
                scene.buildings[i].aabb().overlaps(grid_slab))
                fail("service grid intersects building " + std::to_string(i));
        }
    }
    for (size_t i = 0; i < scene.buildings.size(); ++i) {
        if (scene.buildings[i].aabb().valid() &&
            scene.buildings[i].aabb().contains(bs.position))
            fail("bs position is inside building " + std::to_string(i));
    }
    return problems;
}

void require_valid_scene(const Scene& scene)
{
    auto problems = validate_scene(scene);
    if (problems.empty()) return;
    std::ostringstream oss;
    oss << "invalid scene '" << scene.name << "':";
    for (const auto& p : problems) oss << "\n  - " << p;
    throw std::runtime_error(oss.str());
}

Scene derive_twin_scene(const Scene& target)
{
    Scene twin = target;
    twin.foliage.clear();
    twin.name = target.name + "-twin";
    return twin;
}

// ---------------------------------------------------------------------------
// Built-in scenes.
//
// Target: rectangular plaza flanked by building walls west/east/north plus
// two towers south of the BS; four tree rows inside the plaza create the
// foliage mismatch the twin lacks. Baseline: a cross-oriented street canyon
// east of the BS with a different building count and sizes.
// ---------------------------------------------------------------------------

static Scene make_target_scene()
{
    Scene s;
    s.name = "plaza-north";
    s.bs.position = {0.0, 0.0, 15.0};
    s.bs.num_antennas = 32;
    s.bs.array_axis = {1, 0, 0};
    s.bs.boresight = {0, 1, 0};
    s.service_grid.origin = {-100.0, 100.0, 0.0};
    s.service_grid.extent_x = 200.0;
    s.service_grid.extent_y = 230.0;
    s.service_grid.spacing = 0.37;
    s.service_grid.ue_height = 2.0;
    s.max_reflection_order = 2;

    s.buildings = {
        // west wall, two blocks with a gap
        {{-130.0, 90.0, 0.0}, {-104.0, 220.0, 30.0}, 6.0},
        {{-132.0, 230.0, 0.0}, {-104.0, 340.0, 24.0}, 6.0},
        // east wall
        {{104.0, 95.0, 0.0}, {128.0, 215.0, 27.0}, 6.0},
        {{104.0, 225.0, 0.0}, {130.0, 345.0, 21.0}, 6.0},
        // north wall
        {{-95.0, 340.0, 0.0}, {-10.0, 366.0, 25.0}, 6.0},
        {{14.0, 338.0, 0.0}, {96.0, 364.0, 18.0}, 6.0},
    };

    s.foliage = {
        {{-70.0, 165.0, 0.0}, {-30.0, 185.0, 12.0}, 0.45},
        {{22.0, 220.0, 0.0}, {62.0, 242.0, 13.0}, 0.50},
        {{-18.0, 270.0, 0.0}, {22.0, 292.0, 12.0}, 0.40},
        {{-98.0, 248.0, 0.0}, {-58.0, 270.0, 11.0}, 0.50},
    };
    return s;
}

static Scene make_baseline_scene()
{
    Scene s;
    s.name = "east-corridor";
    s.bs.position = {0.0, 0.0, 15.0};
    s.bs.num_antennas = 32;
    s.bs.array_axis = {1, 0, 0};
    s.bs.boresight = {0, 1, 0};
    // corridor sits south of y = 92 so no building AABB can collide with the
    // target layout (whose walls all start at y >= 90, x <= -104 or x >= 104)
    s.service_grid.origin = {80.0, -84.0, 0.0};
    s.service_grid.extent_x = 230.0;
    s.service_grid.extent_y = 140.0;
    s.service_grid.spacing = 0.37;
    s.service_grid.ue_height = 2.0;
    s.max_reflection_order = 2;

    s.buildings = {
        // north row
        {{70.0, 64.0, 0.0}, {190.0, 90.0, 26.0}, 6.0},
        {{198.0, 66.0, 0.0}, {320.0, 92.0, 30.0}, 6.0},
        // south row
        {{66.0, -120.0, 0.0}, {180.0, -94.0, 24.0}, 6.0},
        {{188.0, -118.0, 0.0}, {316.0, -92.0, 28.0}, 6.0},
        // far-east tower closing the corridor
        {{318.0, -64.0, 0.0}, {344.0, 38.0, 33.0}, 6.0},
        // block behind the BS, reflecting eastwards
        {{-42.0, -48.0, 0.0}, {-16.0, 22.0, 25.0}, 6.0},
        // detached second-row blocks
        {{95.0, -158.0, 0.0}, {140.0, -130.0, 15.0}, 6.0},
        {{150.0, -162.0, 0.0}, {182.0, -136.0, 19.0}, 6.0},
        {{210.0, -150.0, 0.0}, {250.0, -120.0, 22.0}, 6.0},
    };
    return s;
}

std::tuple<Scene, Scene, Scene> builtin_scenes()
{
    Scene target = make_target_scene();
    Scene twin = derive_twin_scene(target);
    Scene baseline = make_baseline_scene();
    return {target, twin, baseline};
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

static json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

static Vec3 vec3_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw std::runtime_error("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string scene_to_json(const Scene& s)
{
    json j;
    j["scene_format_version"] = kSceneFormatVersion;
    j["name"] = s.name;
    j["bs"] = {{"position", vec3_to_json(s.bs.position)},
               {"num_antennas", s.bs.num_antennas},
               {"array_axis", vec3_to_json(s.bs.array_axis)},
               {"boresight", vec3_to_json(s.bs.boresight)}};
    j["service_grid"] = {{"origin", vec3_to_json(s.service_grid.origin)},
                         {"extent_x", s.service_grid.extent_x},
                         {"extent_y", s.service_grid.extent_y},
                         {"spacing", s.service_grid.spacing},
                         {"ue_height", s.service_grid.ue_height}};
    j["buildings"] = json::array();
    for (const auto& b : s.buildings)
        j["buildings"].push_back({{"min", vec3_to_json(b.lo)},
                                  {"max", vec3_to_json(b.hi)},
                                  {"reflection_loss_db", b.reflection_loss_db}});
    j["foliage"] = json::array();
    for (const auto& f : s.foliage)
        j["foliage"].push_back({{"min", vec3_to_json(f.lo)},
                                {"max", vec3_to_json(f.hi)},
                                {"attenuation_db_per_m", f.attenuation_db_per_m}});
    j["max_reflection_order"] = s.max_reflection_order;
    return j.dump(2) + "\n";
}

Scene scene_from_json(const std::string& text)
{
    json j = json::parse(text);
    if (!j.contains("scene_format_version") ||
        j["scene_format_version"].get<int>() != kSceneFormatVersion)
        throw std::runtime_error("unsupported or missing scene_format_version");

    Scene s;
    s.name = j.at("name").get<std::string>();
    const json& bs = j.at("bs");
    s.bs.position = vec3_from_json(bs.at("position"));
    s.bs.num_antennas = bs.at("num_antennas").get<int>();
    s.bs.array_axis = vec3_from_json(bs.at("array_axis"));
    s.bs.boresight = vec3_from_json(bs.at("boresight"));
    const json& g = j.at("service_grid");
    s.service_grid.origin = vec3_from_json(g.at("origin"));
    s.service_grid.extent_x = g.at("extent_x").get<double>();
    s.service_grid.extent_y = g.at("extent_y").get<double>();
    s.service_grid.spacing = g.at("spacing").get<double>();
    s.service_grid.ue_height = g.at("ue_height").get<double>();
    for (const auto& b : j.at("buildings")) {
        Box box;
        box.lo = vec3_from_json(b.at("min"));
        box.hi = vec3_from_json(b.at("max"));
        box.reflection_loss_db = b.at("reflection_loss_db").get<double>();
        s.buildings.push_back(box);
    }
    for (const auto& f : j.at("foliage")) {
        FoliageBox fb;
        fb.lo = vec3_from_json(f.at("min"));
        fb.hi = vec3_from_json(f.at("max"));
        fb.attenuation_db_per_m = f.at("attenuation_db_per_m").get<double>();
        s.foliage.push_back(fb);
    }
    s.max_reflection_order = j.at("max_reflection_order").get<int>();
    return s;
}

void save_scene(const Scene& scene, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << scene_to_json(scene);
}

Scene load_scene(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return scene_from_json(oss.str());
}

Scene resolve_scene(const std::string& ref)
{
    if (ref == "builtin:target") return std::get<0>(builtin_scenes());
    if (ref == "builtin:twin") return std::get<1>(builtin_scenes());
    if (ref == "builtin:baseline") return std::get<2>(builtin_scenes());
    return load_scene(ref);
}

} // namespace csitwin
