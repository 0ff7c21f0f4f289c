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

#include "roofstock/network.hpp"

#include <algorithm>
#include <cmath>

#include "roofstock/errors.hpp"
#include "roofstock/random.hpp"

namespace roofstock {

std::vector<float> to_tensor(const Image& img, const Normalization& norm) {
    if (img.bands != 1 && img.bands != 3) throw ValidationError("tiles must have 1 or 3 bands");
    const std::size_t plane = std::size_t(img.width) * img.height;
    std::vector<float> t(3 * plane);
    for (int c = 0; c < 3; ++c) {
        const int band = img.bands == 3 ? c : 0;
        const float scale = 1.0f / (255.0f * norm.stddev[c]);
        const float shift = norm.mean[c] / norm.stddev[c];
        float* dst = &t[c * plane];
        for (std::size_t i = 0; i < plane; ++i) dst[i] = img.data[i * img.bands + band] * scale - shift;
    }
    return t;
}

// ---------------------------------------------------------------------------
// TinyConvNet

namespace {

struct TinyWorkspace : Network::Workspace {
    std::vector<float> stem;
    std::vector<std::vector<float>> act;     // post-ReLU conv output per block
    std::vector<std::vector<float>> pooled;  // max-pool output per block
    std::vector<std::vector<std::uint32_t>> argmax;
    std::vector<float> gap;
    // backward scratch
    std::vector<float> d_act;
    std::vector<std::vector<float>> d_pooled;
};

void conv3x3_forward(const float* in, int cin, int s, const float* w, const float* b, int cout, float* out) {
    const std::size_t plane = std::size_t(s) * s;
    for (int oc = 0; oc < cout; ++oc) {
        float* o = out + oc * plane;
        std::fill(o, o + plane, b[oc]);
        for (int ic = 0; ic < cin; ++ic) {
            const float* src = in + ic * plane;
            const float* k = w + (std::size_t(oc) * cin + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                const float k0 = k[ky * 3], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
                for (int y = 0; y < s; ++y) {
                    const int yi = y + ky - 1;
                    if (yi < 0 || yi >= s) continue;
                    const float* sr = src + std::size_t(yi) * s;
                    float* orow = o + std::size_t(y) * s;
                    orow[0] += k1 * sr[0] + (s > 1 ? k2 * sr[1] : 0.0f);
                    for (int x = 1; x < s - 1; ++x) orow[x] += k0 * sr[x - 1] + k1 * sr[x] + k2 * sr[x + 1];
                    if (s > 1) orow[s - 1] += k0 * sr[s - 2] + k1 * sr[s - 1];
                }
            }
        }
    }
}

// dW/db accumulate into grad; din (may be null) is overwritten.
void conv3x3_backward(const float* in, int cin, int s, const float* w, int cout, const float* dout, float* dw,
                      float* db, float* din) {
    const std::size_t plane = std::size_t(s) * s;
    if (din) std::fill(din, din + cin * plane, 0.0f);
    for (int oc = 0; oc < cout; ++oc) {
        const float* d = dout + oc * plane;
        float bsum = 0.0f;
        for (std::size_t i = 0; i < plane; ++i) bsum += d[i];
        db[oc] += bsum;
        for (int ic = 0; ic < cin; ++ic) {
            const float* src = in + ic * plane;
            const float* k = w + (std::size_t(oc) * cin + ic) * 9;
            float* gk = dw + (std::size_t(oc) * cin + ic) * 9;
            float* di = din ? din + ic * plane : nullptr;
            for (int ky = 0; ky < 3; ++ky) {
                float g0 = 0.0f, g1 = 0.0f, g2 = 0.0f;
                const float k0 = k[ky * 3], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
                for (int y = 0; y < s; ++y) {
                    const int yi = y + ky - 1;
                    if (yi < 0 || yi >= s) continue;
                    const float* sr = src + std::size_t(yi) * s;
                    const float* dr = d + std::size_t(y) * s;
                    for (int x = 1; x < s; ++x) g0 += dr[x] * sr[x - 1];
                    for (int x = 0; x < s; ++x) g1 += dr[x] * sr[x];
                    for (int x = 0; x < s - 1; ++x) g2 += dr[x] * sr[x + 1];
                    if (di) {
                        float* dir = di + std::size_t(yi) * s;
                        for (int x = 1; x < s; ++x) dir[x - 1] += k0 * dr[x];
                        for (int x = 0; x < s; ++x) dir[x] += k1 * dr[x];
                        for (int x = 0; x < s - 1; ++x) dir[x + 1] += k2 * dr[x];
                    }
                }
                gk[ky * 3] += g0;
                gk[ky * 3 + 1] += g1;
                gk[ky * 3 + 2] += g2;
            }
        }
    }
}

}  // namespace

TinyConvNet::TinyConvNet(int input_size, int num_classes, std::uint64_t seed, std::array<int, 3> channels)
    : input_size_(input_size), num_classes_(num_classes), stem_size_(input_size / 4) {
    if (num_classes < 1) throw ConfigError("network needs at least one class");
    if (stem_size_ < 8) throw ConfigError("tiny_test input size must be >= 32");
    Rng rng(derive_seed(seed, 0x7e57));
    std::size_t offset = 0;
    int in_ch = 3, size = stem_size_;
    for (int out_ch : channels) {
        Layer l{in_ch, out_ch, size, offset, offset + std::size_t(out_ch) * in_ch * 9};
        offset = l.bias_offset + out_ch;
        layers_.push_back(l);
        in_ch = out_ch;
        size /= 2;
    }
    fc_weight_offset_ = offset;
    fc_bias_offset_ = offset + std::size_t(num_classes) * in_ch;
    params_.assign(fc_bias_offset_ + num_classes, 0.0f);
    for (const Layer& l : layers_) {
        const double std_dev = std::sqrt(2.0 / (l.in_channels * 9.0));
        for (std::size_t i = l.weight_offset; i < l.bias_offset; ++i)
            params_[i] = static_cast<float>(rng.normal() * std_dev);
    }
    const double fc_std = std::sqrt(1.0 / in_ch);
    for (std::size_t i = fc_weight_offset_; i < fc_bias_offset_; ++i) params_[i] = static_cast<float>(rng.normal() * fc_std);
}

std::unique_ptr<Network::Workspace> TinyConvNet::make_workspace() const {
    auto ws = std::make_unique<TinyWorkspace>();
    ws->stem.resize(3 * std::size_t(stem_size_) * stem_size_);
    for (const Layer& l : layers_) {
        const std::size_t p = std::size_t(l.size / 2) * (l.size / 2) * l.out_channels;
        ws->act.emplace_back(std::size_t(l.out_channels) * l.size * l.size);
        ws->pooled.emplace_back(p);
        ws->argmax.emplace_back(p);
        ws->d_pooled.emplace_back(p);
    }
    ws->d_act.resize(ws->act.front().size());
    ws->gap.resize(layers_.back().out_channels);
    return ws;
}

void TinyConvNet::forward(std::span<const float> input, Workspace& base, std::span<float> logits) const {
    auto& ws = static_cast<TinyWorkspace&>(base);
    const int s_in = input_size_;
    if (input.size() != 3 * std::size_t(s_in) * s_in) throw ValidationError("input tensor has the wrong size");
    if (logits.size() != std::size_t(num_classes_)) throw ValidationError("logit buffer has the wrong size");

    // Stem: 4x4 average pool.
    const int s0 = stem_size_;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < s0; ++y)
            for (int x = 0; x < s0; ++x) {
                float sum = 0.0f;
                for (int dy = 0; dy < 4; ++dy) {
                    const float* row = &input[(std::size_t(c) * s_in + 4 * y + dy) * s_in + 4 * x];
                    sum += row[0] + row[1] + row[2] + row[3];
                }
                ws.stem[(std::size_t(c) * s0 + y) * s0 + x] = sum * (1.0f / 16.0f);
            }

    const float* in = ws.stem.data();
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const Layer& l = layers_[li];
        float* a = ws.act[li].data();
        conv3x3_forward(in, l.in_channels, l.size, &params_[l.weight_offset], &params_[l.bias_offset], l.out_channels, a);
        for (float& v : ws.act[li]) v = std::max(v, 0.0f);
        const int ps = l.size / 2;
        float* p = ws.pooled[li].data();
        std::uint32_t* am = ws.argmax[li].data();
        for (int c = 0; c < l.out_channels; ++c)
            for (int y = 0; y < ps; ++y)
                for (int x = 0; x < ps; ++x) {
                    std::uint32_t best = static_cast<std::uint32_t>((std::size_t(c) * l.size + 2 * y) * l.size + 2 * x);
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const auto idx =
                                static_cast<std::uint32_t>((std::size_t(c) * l.size + 2 * y + dy) * l.size + 2 * x + dx);
                            if (a[idx] > a[best]) best = idx;
                        }
                    const std::size_t o = (std::size_t(c) * ps + y) * ps + x;
                    p[o] = a[best];
                    am[o] = best;
                }
        in = p;
    }

    const Layer& last = layers_.back();
    const int ps = last.size / 2;
    const std::size_t plane = std::size_t(ps) * ps;
    for (int c = 0; c < last.out_channels; ++c) {
        float sum = 0.0f;
        for (std::size_t i = 0; i < plane; ++i) sum += in[c * plane + i];
        ws.gap[c] = sum / static_cast<float>(plane);
    }
    const int cfeat = last.out_channels;
    for (int k = 0; k < num_classes_; ++k) {
        float z = params_[fc_bias_offset_ + k];
        const float* wk = &params_[fc_weight_offset_ + std::size_t(k) * cfeat];
        for (int c = 0; c < cfeat; ++c) z += wk[c] * ws.gap[c];
        logits[k] = z;
    }
}

void TinyConvNet::backward(Workspace& base, std::span<const float> dlogits, std::span<float> grad) const {
    auto& ws = static_cast<TinyWorkspace&>(base);
    if (grad.size() != params_.size()) throw ValidationError("gradient buffer has the wrong size");
    const Layer& last = layers_.back();
    const int cfeat = last.out_channels;

    std::vector<float> dgap(cfeat, 0.0f);
    for (int k = 0; k < num_classes_; ++k) {
        const float d = dlogits[k];
        grad[fc_bias_offset_ + k] += d;
        float* gw = &grad[fc_weight_offset_ + std::size_t(k) * cfeat];
        const float* wk = &params_[fc_weight_offset_ + std::size_t(k) * cfeat];
        for (int c = 0; c < cfeat; ++c) {
            gw[c] += d * ws.gap[c];
            dgap[c] += d * wk[c];
        }
    }
    {
        const int ps = last.size / 2;
        const std::size_t plane = std::size_t(ps) * ps;
        auto& dp = ws.d_pooled.back();
        for (int c = 0; c < cfeat; ++c)
            std::fill(dp.begin() + c * plane, dp.begin() + (c + 1) * plane, dgap[c] / static_cast<float>(plane));
    }

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Layer& l = layers_[li];
        const std::size_t n_act = std::size_t(l.out_channels) * l.size * l.size;
        float* da = ws.d_act.data();
        std::fill(da, da + n_act, 0.0f);
        const auto& dp = ws.d_pooled[li];
        const auto& am = ws.argmax[li];
        for (std::size_t i = 0; i < dp.size(); ++i) da[am[i]] += dp[i];
        const float* a = ws.act[li].data();
        for (std::size_t i = 0; i < n_act; ++i)
            if (a[i] <= 0.0f) da[i] = 0.0f;
        const float* in = li == 0 ? ws.stem.data() : ws.pooled[li - 1].data();
        float* din = li == 0 ? nullptr : ws.d_pooled[li - 1].data();
        conv3x3_backward(in, l.in_channels, l.size, &params_[l.weight_offset], l.out_channels, da,
                         &grad[l.weight_offset], &grad[l.bias_offset], din);
    }
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::size_t parameter_count, AdamSettings settings)
    : settings_(settings), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void Adam::step(std::span<float> params, std::span<const float> grad, double lr) {
    ++t_;
    const double b1 = settings_.beta1, b2 = settings_.beta2;
    const double c1 = 1.0 - std::pow(b1, double(t_));
    const double c2 = 1.0 - std::pow(b2, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] + settings_.weight_decay * params[i];
        m_[i] = b1 * m_[i] + (1 - b1) * g;
        v_[i] = b2 * v_[i] + (1 - b2) * g * g;
        const double mh = m_[i] / c1, vh = v_[i] / c2;
        params[i] -= static_cast<float>(lr * mh / (std::sqrt(vh) + settings_.epsilon));
    }
}

// ---------------------------------------------------------------------------
// Backbones

const std::vector<std::string>& known_backbones() {
    static const std::vector<std::string> ids = {"resnet50", "vgg16", "inceptionv3", "efficientnet_b0", "tiny_test"};
    return ids;
}

int default_input_size(const std::string& backbone_id) {
    return backbone_id == "inceptionv3" ? 299 : 224;
}

bool BuiltinBackboneProvider::available(const std::string& backbone_id) const {
    return backbone_id == "tiny_test";
}

Normalization BuiltinBackboneProvider::normalization(const std::string& backbone_id) const {
    if (backbone_id != "tiny_test") {
        // ImageNet statistics for the pretrained backbones.
        return {{0.485f, 0.456f, 0.406f}, {0.229f, 0.224f, 0.225f}};
    }
    return {};
}

std::unique_ptr<Network> BuiltinBackboneProvider::create(const std::string& backbone_id, int input_size,
                                                         int num_classes, std::uint64_t seed) const {
    if (!available(backbone_id))
        throw BackendError("backbone '" + backbone_id +
                           "' is not available from the built-in provider (pretrained weights required)");
    return std::make_unique<TinyConvNet>(input_size, num_classes, seed);
}

}  // namespace roofstock
