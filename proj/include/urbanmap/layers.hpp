#pragma once

#include "urbanmap/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

// Building blocks of the segmentation network. Each backward takes the
// upstream gradient and returns the gradient w.r.t. the layer input;
// parameter gradients are accumulated into caller-provided spans.
namespace urbanmap::layers {

// Square kernel, stride 1, zero padding kernel/2. Weights are laid out as
// [out][in][ky][kx].
Tensor conv_forward(const Tensor& x, std::span<const double> weights, std::span<const double> bias, int out_channels,
                    int kernel);
Tensor conv_backward(const Tensor& x, std::span<const double> weights, const Tensor& dy, int kernel,
                     std::span<double> dweights, std::span<double> dbias);

void relu_inplace(Tensor& t);
// Gradient gate from the ReLU output.
void relu_backward_inplace(const Tensor& relu_out, Tensor& dy);

struct PoolResult {
    Tensor output;
    std::vector<std::uint32_t> argmax;  // flat source index per output value
};
PoolResult maxpool2_forward(const Tensor& x);
// (channels, height, width) are the forward input dimensions.
Tensor maxpool2_backward(int channels, int height, int width, const std::vector<std::uint32_t>& argmax,
                         const Tensor& dy);

Tensor upsample2_forward(const Tensor& x);
Tensor upsample2_backward(const Tensor& dy);

Tensor concat(const Tensor& a, const Tensor& b);
// Splits a gradient on concat(a, b) back into the two parts.
std::pair<Tensor, Tensor> concat_backward(const Tensor& dy, int channels_a);

Tensor sigmoid_forward(const Tensor& z);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

}  // namespace urbanmap::layers
