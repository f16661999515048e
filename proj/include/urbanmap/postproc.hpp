#pragma once

#include "urbanmap/raster.hpp"

namespace urbanmap {

struct ResampleSpec {
    int factor = 20;  // 5 m -> 100 m
};

// Block-wise strict majority: an output pixel is 1 iff more than half of its
// block (partial border blocks use their own pixel count) is 1. The
// geotransform is scaled by the factor with the origin moved to the center of
// the first block.
BinaryMask majority_resample(const BinaryMask& mask, const ResampleSpec& spec = {});

}  // namespace urbanmap
