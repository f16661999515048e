#pragma once

#include "urbanmap/layers.hpp"
#include "urbanmap/raster.hpp"
#include "urbanmap/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace urbanmap {

enum class Upsample : std::uint32_t { NearestThenConv = 1 };

// Encoder-decoder with skip connections. Level l of the encoder has
// base_channels * 2^l feature maps; the bottleneck has base_channels * 2^depth.
struct NetConfig {
    int in_channels = 3;
    int base_channels = 16;
    int depth = 4;
    Upsample upsample = Upsample::NearestThenConv;

    void validate() const;
    int divisor() const { return 1 << depth; }
    bool operator==(const NetConfig&) const = default;
};

struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    std::size_t offset = 0;  // first weight in the flat parameter vector

    std::size_t weight_count() const {
        return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
    }
    std::size_t size() const { return weight_count() + static_cast<std::size_t>(out_channels); }
};

// Conv layers in enumeration order: per encoder level two 3x3 convs, the two
// bottleneck convs, per decoder level (deepest first) the up-conv and two 3x3
// convs, then the 1x1 head.
std::vector<ConvSpec> conv_layout(const NetConfig& cfg);

// All learnable values in one flat vector, each conv contributing its weights
// followed by its biases. Gradients use the same type and layout.
struct NetParams {
    std::vector<ConvSpec> layout;
    std::vector<double> values;

    static NetParams zeros(const NetConfig& cfg);

    std::span<const double> weights(std::size_t layer) const;
    std::span<const double> bias(std::size_t layer) const;
    std::span<double> weights(std::size_t layer);
    std::span<double> bias(std::size_t layer);

    bool operator==(const NetParams& o) const { return values == o.values; }
};

// Weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)); biases zero.
NetParams init_params(const NetConfig& cfg, std::uint64_t seed);

struct ForwardCache {
    NetConfig cfg;
    std::uint64_t params_digest = 0;
    Tensor input;
    std::vector<Tensor> enc_a, enc_b;                 // per encoder level, post-ReLU
    std::vector<std::vector<std::uint32_t>> pool_idx; // per encoder level
    std::vector<Tensor> pooled;                       // per encoder level
    Tensor bott_a, bott_b;
    // Decoder entries indexed by level (0 = full resolution).
    std::vector<Tensor> dec_upsampled, dec_up, dec_cat, dec_a, dec_b;
    Tensor output;  // sigmoid probabilities
};

struct ForwardResult {
    Tensor output;
    ForwardCache cache;
};

// Probabilities in (0, 1), one channel, same spatial size as x.
ForwardResult forward(const NetParams& params, const NetConfig& cfg, const Tensor& x);
// Same output as forward() without retaining intermediates.
Tensor infer(const NetParams& params, const NetConfig& cfg, const Tensor& x);

NetParams backward(const NetParams& params, const NetConfig& cfg, const ForwardCache& cache, const Tensor& dloss_dy);
// Same, starting from the gradient with respect to the pre-sigmoid logits.
NetParams backward_logits(const NetParams& params, const NetConfig& cfg, const ForwardCache& cache,
                          const Tensor& dloss_dz);

// 1 where the probability is strictly greater than threshold.
BinaryMask predict_mask(const NetParams& params, const NetConfig& cfg, const Tensor& x, double threshold = 0.5);
BinaryMask threshold_probabilities(const Tensor& probs, double threshold = 0.5);

std::uint64_t digest(std::span<const double> values);

// Binary checkpoint: "URBNETCK", u32 version, u32 in/base/depth/upsample,
// u64 count, then count little-endian float64 values.
void save_checkpoint(const std::filesystem::path& path, const NetConfig& cfg, const NetParams& params);
std::pair<NetConfig, NetParams> load_checkpoint(const std::filesystem::path& path);

}  // namespace urbanmap
