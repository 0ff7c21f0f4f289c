// Copyright 2026 The roofstock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "roofstock/synthetic.hpp"

#include <algorithm>

#include "roofstock/dataset.hpp"
#include "roofstock/errors.hpp"
#include "roofstock/random.hpp"

namespace roofstock {

const Palette& palette_a() {
    static const Palette p = {{"Healthy metal", {200, 200, 210}},
                              {"Irregular metal", {190, 120, 150}},
                              {"Concrete/cement", {170, 170, 120}},
                              {"Blue tarpaulin", {60, 140, 255}},
                              {"Incomplete", {235, 175, 80}}};
    return p;
}

const Palette& palette_b() {
    static const Palette p = {{"Healthy metal", {150, 230, 250}},
                              {"Irregular metal", {240, 200, 120}},
                              {"Concrete/cement", {245, 140, 170}},
                              {"Incomplete", {150, 180, 200}}};
    return p;
}

const Palette& palette_by_name(const std::string& name) {
    if (name == "a") return palette_a();
    if (name == "b") return palette_b();
    throw ValidationError("unknown palette '" + name + "' (expected a or b)");
}

SyntheticScene make_synthetic_scene(const SyntheticOptions& o) {
    if (o.size < 1 || o.grid < 1) throw ValidationError("synthetic scene needs size and grid >= 1");
    if (o.palette.empty()) throw ValidationError("synthetic palette is empty");
    const int cell = o.size / o.grid;
    if (o.min_side < 2 || o.max_side < o.min_side || cell < o.max_side + 2 * o.margin)
        throw ValidationError("synthetic roof sizes do not fit the grid cells");
    for (const auto& [name, rgb] : o.palette) {
        if (!is_valid_label(Task::RoofMaterial, name)) throw ValidationError("palette class '" + name + "' is unknown");
        if (rgb[0] + rgb[1] + rgb[2] - 3 * o.noise < 3 * 128)
            throw ValidationError("palette colour for '" + name + "' is too dark to segment");
    }

    SyntheticScene scene;
    GeoRaster& r = scene.raster;
    r.id = o.id;
    r.image = Image(o.size, o.size, 3);
    r.transform.origin_x = o.origin_lon;
    r.transform.origin_y = o.origin_lat;
    r.transform.pixel_width = o.pixel_deg;
    r.transform.pixel_height = -o.pixel_deg;
    r.provenance = {o.source, o.year, "synthetic", o.pixel_deg * 111320.0 * 100.0};
    scene.truth.crs = r.crs;

    Rng rng(o.seed);
    const auto jitter = [&](int base) {
        const int v = base + static_cast<int>(rng.uniform_index(2 * o.noise + 1)) - o.noise;
        return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    };
    constexpr Rgb ground = {40, 90, 40};
    for (int row = 0; row < o.size; ++row)
        for (int col = 0; col < o.size; ++col)
            for (int b = 0; b < 3; ++b) r.image.at(row, col, b) = jitter(ground[b]);

    int n = 0;
    for (int gy = 0; gy < o.grid; ++gy) {
        for (int gx = 0; gx < o.grid; ++gx) {
            const auto& [label, rgb] = o.palette[rng.uniform_index(o.palette.size())];
            const int w = o.min_side + static_cast<int>(rng.uniform_index(o.max_side - o.min_side + 1));
            const int h = o.min_side + static_cast<int>(rng.uniform_index(o.max_side - o.min_side + 1));
            const int col0 = gx * cell + o.margin + static_cast<int>(rng.uniform_index(cell - 2 * o.margin - w + 1));
            const int row0 = gy * cell + o.margin + static_cast<int>(rng.uniform_index(cell - 2 * o.margin - h + 1));
            for (int row = row0; row < row0 + h; ++row)
                for (int col = col0; col < col0 + w; ++col)
                    for (int b = 0; b < 3; ++b) r.image.at(row, col, b) = jitter(rgb[b]);

            FootprintFeature f;
            f.id = o.id + "_truth_" + std::to_string(n++);
            f.properties.source = "synthetic";
            f.properties.roof_material = label;
            const auto corner = [&](int row, int col) { return pixel_to_world(r.transform, row, col); };
            f.polygon.exterior = {corner(row0, col0), corner(row0 + h, col0), corner(row0 + h, col0 + w),
                                  corner(row0, col0 + w), corner(row0, col0)};
            orient_polygon(f.polygon);
            scene.truth.features.push_back(std::move(f));
        }
    }
    r.validate();
    return scene;
}

}  // namespace roofstock
