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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "roofstock/geocore.hpp"

namespace roofstock {

/// Per-channel input normalisation applied to [0, 1] pixel values.
struct Normalization {
    std::array<float, 3> mean{0.5f, 0.5f, 0.5f};
    std::array<float, 3> stddev{0.25f, 0.25f, 0.25f};
};

/// Converts an 8-bit tile (1 or 3 bands) to a normalised 3 x H x W tensor.
std::vector<float> to_tensor(const Image& img, const Normalization& norm);

/// Trainable image classifier with a flat parameter vector.
///
/// forward() caches activations in a caller-owned workspace; backward()
/// consumes the workspace of the most recent forward() on it and adds the
/// parameter gradient into `grad`.
class Network {
public:
    struct Workspace {
        virtual ~Workspace() = default;
    };

    virtual ~Network() = default;
    virtual int input_size() const = 0;
    virtual int num_classes() const = 0;
    virtual std::span<float> parameters() = 0;
    virtual std::span<const float> parameters() const = 0;
    virtual std::unique_ptr<Workspace> make_workspace() const = 0;
    virtual void forward(std::span<const float> input, Workspace& ws, std::span<float> logits) const = 0;
    virtual void backward(Workspace& ws, std::span<const float> dlogits, std::span<float> grad) const = 0;
};

/// Small scratch CNN: 4x4 average-pool stem, three conv3x3-ReLU-maxpool
/// blocks, global average pooling and a linear head.
class TinyConvNet final : public Network {
public:
    TinyConvNet(int input_size, int num_classes, std::uint64_t seed, std::array<int, 3> channels = {8, 16, 32});

    int input_size() const override { return input_size_; }
    int num_classes() const override { return num_classes_; }
    std::span<float> parameters() override { return params_; }
    std::span<const float> parameters() const override { return params_; }
    std::unique_ptr<Workspace> make_workspace() const override;
    void forward(std::span<const float> input, Workspace& ws, std::span<float> logits) const override;
    void backward(Workspace& ws, std::span<const float> dlogits, std::span<float> grad) const override;

private:
    struct Layer {
        int in_channels, out_channels, size;  // conv runs at size x size
        std::size_t weight_offset, bias_offset;
    };

    int input_size_;
    int num_classes_;
    int stem_size_;
    std::vector<Layer> layers_;
    std::size_t fc_weight_offset_ = 0;
    std::size_t fc_bias_offset_ = 0;
    std::vector<float> params_;
};

struct AdamSettings {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
};

class Adam {
public:
    Adam(std::size_t parameter_count, AdamSettings settings = {});
    void step(std::span<float> params, std::span<const float> grad, double lr);

private:
    AdamSettings settings_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

/// Source of (pretrained) feature extractors keyed by backbone id.
class BackboneProvider {
public:
    virtual ~BackboneProvider() = default;
    virtual bool available(const std::string& backbone_id) const = 0;
    virtual Normalization normalization(const std::string& backbone_id) const = 0;
    virtual std::unique_ptr<Network> create(const std::string& backbone_id, int input_size, int num_classes,
                                            std::uint64_t seed) const = 0;
};

/// Ships only the "tiny_test" scratch network; the ImageNet backbones need
/// an external provider with weights.
class BuiltinBackboneProvider : public BackboneProvider {
public:
    bool available(const std::string& backbone_id) const override;
    Normalization normalization(const std::string& backbone_id) const override;
    std::unique_ptr<Network> create(const std::string& backbone_id, int input_size, int num_classes,
                                    std::uint64_t seed) const override;
};

/// Known backbone ids.
const std::vector<std::string>& known_backbones();
/// 299 for inceptionv3, 224 otherwise.
int default_input_size(const std::string& backbone_id);

}  // namespace roofstock
