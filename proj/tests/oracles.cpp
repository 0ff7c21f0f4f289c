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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace oracle {

double segment_distance(const Point& p, const Point& a, const Point& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 == 0.0 ? 0.0 : ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
    t = std::max(0.0, std::min(1.0, t));
    const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

namespace {

void dp(const std::vector<Point>& pts, std::size_t lo, std::size_t hi, double tol, std::vector<bool>& keep) {
    if (hi <= lo + 1) return;
    std::size_t best = lo;
    double best_d = -1;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const double d = segment_distance(pts[i], pts[lo], pts[hi]);
        if (d > best_d) best_d = d, best = i;
    }
    if (best_d <= tol) return;
    keep[best] = true;
    dp(pts, lo, best, tol, keep);
    dp(pts, best, hi, tol, keep);
}

}  // namespace

std::vector<std::size_t> douglas_peucker(const std::vector<Point>& pts, double tol) {
    std::vector<bool> keep(pts.size(), pts.size() <= 2);
    if (!pts.empty()) keep.front() = keep.back() = true;
    dp(pts, 0, pts.empty() ? 0 : pts.size() - 1, tol, keep);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (keep[i]) out.push_back(i);
    return out;
}

std::vector<std::uint8_t> rasterize(const std::vector<Polygon>& polys, int width, int height) {
    std::vector<std::uint8_t> out(std::size_t(width) * height, 0);
    std::vector<const std::vector<Point>*> rings;
    for (const auto& p : polys) {
        rings.push_back(&p.exterior);
        for (const auto& h : p.holes) rings.push_back(&h);
    }
    for (int r = 0; r < height; ++r) {
        const double y = r + 0.5;
        std::vector<double> xs;
        for (const auto* ring : rings)
            for (std::size_t i = 0; i + 1 < ring->size(); ++i) {
                const Point a = (*ring)[i], b = (*ring)[i + 1];
                if ((a.y <= y) != (b.y <= y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2)
            for (int c = 0; c < width; ++c)
                if (c + 0.5 > xs[k] && c + 0.5 < xs[k + 1]) out[std::size_t(r) * width + c] ^= 1;
    }
    return out;
}

std::vector<std::uint8_t> boundary_band(const std::vector<std::uint8_t>& m, int w, int h) {
    std::vector<std::uint8_t> band(m.size(), 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const auto v = m[std::size_t(r) * w + c];
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    const bool outside = rr < 0 || cc < 0 || rr >= h || cc >= w;
                    if ((outside ? 0 : m[std::size_t(rr) * w + cc]) != v) band[std::size_t(r) * w + c] = 1;
                }
        }
    return band;
}

Scores macro_from_labels(const std::vector<std::string>& truth, const std::vector<std::string>& pred) {
    std::set<std::string> present(truth.begin(), truth.end());
    double p_sum = 0, r_sum = 0, f_sum = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
    for (const auto& c : present) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] == c && pred[i] == c) tp += 1;
            if (truth[i] != c && pred[i] == c) fp += 1;
            if (truth[i] == c && pred[i] != c) fn += 1;
        }
        const double p = tp + fp == 0 ? 0 : tp / (tp + fp);
        const double r = tp + fn == 0 ? 0 : tp / (tp + fn);
        p_sum += p;
        r_sum += r;
        f_sum += p + r == 0 ? 0 : 2 * p * r / (p + r);
    }
    const double n = double(present.size());
    return {100 * p_sum / n, 100 * r_sum / n, 100 * f_sum / n, 100.0 * double(correct) / double(truth.size())};
}

long double smoothed_ce(const std::vector<double>& logits, std::size_t target, double eps) {
    long double mx = *std::max_element(logits.begin(), logits.end());
    long double z = 0;
    for (double l : logits) z += std::exp((long double)l - mx);
    const long double lse = mx + std::log(z);
    const std::size_t k = logits.size();
    long double loss = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const long double q = (i == target ? 1.0L - eps : 0.0L) + (long double)eps / k;
        loss -= q * ((long double)logits[i] - lse);
    }
    return loss;
}

const std::vector<CountryTable>& table1() {
    using roofstock::Task;
    static const std::vector<CountryTable> t = {
        {"Dominica",
         Task::RoofType,
         {{"Gable", 2669, 653}, {"Hip", 1579, 393}, {"Flat", 1894, 475}, {"No Roof", 1190, 297}},
         3214,
         9150},
        {"Dominica",
         Task::RoofMaterial,
         {{"Healthy metal", 1934, 482},
          {"Irregular metal", 1733, 432},
          {"Concrete/cement", 1240, 312},
          {"Blue tarpaulin", 1094, 260},
          {"Incomplete", 1331, 332}},
         3214,
         9150},
        {"Saint Lucia",
         Task::RoofType,
         {{"Gable", 2347, 585}, {"Hip", 1089, 271}, {"Flat", 456, 106}, {"No Roof", 269, 52}},
         2690,
         5175},
        {"Saint Lucia",
         Task::RoofMaterial,
         {{"Healthy metal", 2396, 598},
          {"Irregular metal", 1113, 276},
          {"Concrete/cement", 328, 75},
          {"Blue tarpaulin", 0, 0},
          {"Incomplete", 324, 65}},
         2690,
         5175},
    };
    return t;
}

roofstock::DatasetManifest manifest_from_table(const CountryTable& t) {
    // Largest-remainder apportionment of the drone rows over classes.
    std::vector<std::size_t> drone(t.classes.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t i = 0; i < t.classes.size(); ++i) {
        const double share = double(t.drone_total) * double(t.classes[i].total()) / double(t.country_total);
        drone[i] = std::size_t(share);
        used += drone[i];
        rem.emplace_back(share - double(drone[i]), i);
    }
    std::sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t k = 0; used < t.drone_total && k < rem.size(); ++k, ++used) ++drone[rem[k].second];

    roofstock::DatasetManifest m;
    for (std::size_t i = 0; i < t.classes.size(); ++i)
        for (std::size_t n = 0; n < t.classes[i].total(); ++n) {
            roofstock::ManifestRow row;
            char id[64];
            std::snprintf(id, sizeof id, "%s_%zu_%05zu", t.country.c_str(), i, n);
            row.tile_id = id;
            row.tile_path = row.tile_id + ".png";
            row.country = t.country;
            row.source = n < drone[i] ? roofstock::ImagerySource::Drone : roofstock::ImagerySource::Aircraft;
            row.label(t.task) = t.classes[i].name;
            m.rows.push_back(std::move(row));
        }
    m.sort_rows();
    return m;
}

}  // namespace oracle
