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

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "roofstock/geocore.hpp"

namespace roofstock {

using Rgb = std::array<std::uint8_t, 3>;
/// Roof-material class name -> roof colour. Classes not listed never occur.
using Palette = std::vector<std::pair<std::string, Rgb>>;

/// Five material colours.
const Palette& palette_a();
/// A shifted palette without Blue tarpaulin.
const Palette& palette_b();
const Palette& palette_by_name(const std::string& name);

/// Generated orthophoto of bright rectangular roofs on dark ground.
///
/// Roofs sit one per grid cell with a margin so they never touch; every band
/// mean of a roof pixel is >= 128 and of a ground pixel < 128, which is what
/// the threshold segmenter keys on.
struct SyntheticOptions {
    std::string id = "synthetic";
    int size = 2000;
    int grid = 17;
    int min_side = 40;
    int max_side = 80;
    int margin = 10;
    int noise = 12;  ///< uniform per-pixel jitter, +/- this many levels
    double origin_lon = -61.4;
    double origin_lat = 15.3;
    double pixel_deg = 9e-7;
    Palette palette = palette_a();
    ImagerySource source = ImagerySource::Drone;
    int year = 2018;
    std::uint64_t seed = 42;
};

struct SyntheticScene {
    GeoRaster raster;
    /// Drawn rectangles with their roof_material label, ids `<id>_truth_<n>`.
    FootprintCollection truth;
};

SyntheticScene make_synthetic_scene(const SyntheticOptions& options);

}  // namespace roofstock
