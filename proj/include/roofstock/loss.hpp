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

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace roofstock {

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Smoothed one-hot target: (1 - eps) on the true class plus eps / K everywhere.
std::vector<double> smoothed_targets(std::size_t num_classes, std::size_t true_class, double epsilon);

/// Cross-entropy of softmax(logits) against the smoothed target.
/// Throws ValidationError on non-finite logits, K < 2, eps outside [0, 1).
double smoothed_cross_entropy(std::span<const double> logits, std::size_t true_class, double epsilon = 0.1);

/// d(loss)/d(logits) = softmax(logits) - q.
std::vector<double> smoothed_cross_entropy_grad(std::span<const double> logits, std::size_t true_class,
                                                double epsilon = 0.1);

/// Reduce-on-plateau learning-rate rule: after `patience` consecutive values
/// without a strict decrease of the best seen so far, lr *= factor and the
/// counter restarts.
class PlateauScheduler {
public:
    PlateauScheduler(double initial_lr, int patience = 7, double factor = 0.1);

    /// Feeds one monitored value and returns the learning rate for the next epoch.
    double step(double monitored);
    double lr() const { return lr_; }
    int bad_epochs() const { return bad_epochs_; }

private:
    double lr_;
    int patience_;
    double factor_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
};

/// Replays `history` through a PlateauScheduler starting at `lr`.
double plateau_schedule(std::span<const double> history, int patience = 7, double factor = 0.1, double lr = 1e-5);

}  // namespace roofstock
