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

#include <doctest.h>

#include "csitwin/geometry.hpp"
#include "csitwin/rng.hpp"

using namespace csitwin;

TEST_CASE("segment-box overlap basics")
{
    Aabb box{{0, 0, 0}, {10, 10, 10}};

    auto ov = segment_box_overlap({-5, 5, 5}, {15, 5, 5}, box);
    REQUIRE(ov.has_value());
    CHECK(ov->first == doctest::Approx(0.25));
    CHECK(ov->second == doctest::Approx(0.75));

    CHECK_FALSE(segment_box_overlap({-5, 20, 5}, {15, 20, 5}, box).has_value());

    // fully inside
    ov = segment_box_overlap({2, 2, 2}, {8, 8, 8}, box);
    REQUIRE(ov.has_value());
    CHECK(ov->first == 0.0);
    CHECK(ov->second == 1.0);
}

TEST_CASE("blockage is symmetric in endpoint order")
{
    Rng rng(42);
    Aabb box{{-3, -4, 0}, {5, 2, 9}};
    for (int i = 0; i < 500; ++i) {
        Vec3 a{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(0, 12)};
        Vec3 b{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(0, 12)};
        CHECK(segment_blocked_by(a, b, box) == segment_blocked_by(b, a, box));
        CHECK(segment_length_inside(a, b, box) ==
              doctest::Approx(segment_length_inside(b, a, box)).epsilon(1e-12));
    }
}

TEST_CASE("grazing a face does not block")
{
    Aabb box{{0, 0, 0}, {10, 10, 10}};
    // runs exactly along the x = 0 face
    CHECK_FALSE(segment_blocked_by({0, -5, 5}, {0, 15, 5}, box));
    // ends exactly on a face (reflection-point case)
    CHECK_FALSE(segment_blocked_by({-5, 5, 5}, {0, 5, 5}, box));
    // properly through
    CHECK(segment_blocked_by({-5, 5, 5}, {15, 5, 5}, box));
}

TEST_CASE("segment length inside box")
{
    Aabb box{{0, 0, 0}, {10, 10, 10}};
    CHECK(segment_length_inside({-5, 5, 5}, {15, 5, 5}, box) == doctest::Approx(10.0));
    CHECK(segment_length_inside({2, 5, 5}, {6, 5, 5}, box) == doctest::Approx(4.0));
    CHECK(segment_length_inside({20, 5, 5}, {30, 5, 5}, box) == 0.0);
}

TEST_CASE("mirror point across axis plane")
{
    Vec3 p{3, 4, 5};
    Vec3 m = mirror_point(p, 0, 10.0);
    CHECK(m.x == doctest::Approx(17.0));
    CHECK(m.y == 4.0);
    CHECK(m.z == 5.0);
    Vec3 back = mirror_point(m, 0, 10.0);
    CHECK(back.x == doctest::Approx(p.x));
}
