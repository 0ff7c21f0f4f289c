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

#include "roofstock/loss.hpp"

#include <algorithm>
#include <cmath>

#include "roofstock/errors.hpp"

namespace roofstock {

namespace {

void check_inputs(std::span<const double> logits, std::size_t true_class, double epsilon) {
    if (logits.size() < 2) throw ValidationError("cross-entropy needs at least 2 classes");
    if (true_class >= logits.size()) throw ValidationError("true class index out of range");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ValidationError("label smoothing must be in [0, 1)");
    for (double v : logits)
        if (!std::isfinite(v)) throw ValidationError("non-finite logit");
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    if (p.empty()) return p;
    const double m = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (double& v : p) sum += (v = std::exp(v - m));
    for (double& v : p) v /= sum;
    return p;
}

std::vector<double> smoothed_targets(std::size_t num_classes, std::size_t true_class, double epsilon) {
    std::vector<double> q(num_classes, epsilon / double(num_classes));
    q.at(true_class) += 1.0 - epsilon;
    return q;
}

double smoothed_cross_entropy(std::span<const double> logits, std::size_t true_class, double epsilon) {
    check_inputs(logits, true_class, epsilon);
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double log_z = m + std::log(sum);
    const auto q = smoothed_targets(logits.size(), true_class, epsilon);
    double loss = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) loss -= q[k] * (logits[k] - log_z);
    return loss;
}

std::vector<double> smoothed_cross_entropy_grad(std::span<const double> logits, std::size_t true_class,
                                                double epsilon) {
    check_inputs(logits, true_class, epsilon);
    auto g = softmax(logits);
    const auto q = smoothed_targets(logits.size(), true_class, epsilon);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] -= q[k];
    return g;
}

PlateauScheduler::PlateauScheduler(double initial_lr, int patience, double factor)
    : lr_(initial_lr), patience_(patience), factor_(factor) {
    if (patience < 1) throw ConfigError("plateau patience must be >= 1");
    if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("plateau factor must be in (0, 1)");
}

double PlateauScheduler::step(double monitored) {
    if (monitored < best_) {
        best_ = monitored;
        bad_epochs_ = 0;
    } else if (++bad_epochs_ >= patience_) {
        lr_ *= factor_;
        bad_epochs_ = 0;
    }
    return lr_;
}

double plateau_schedule(std::span<const double> history, int patience, double factor, double lr) {
    PlateauScheduler s(lr, patience, factor);
    for (double v : history) s.step(v);
    return s.lr();
}

}  // namespace roofstock
