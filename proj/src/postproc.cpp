#include "urbanmap/postproc.hpp"

#include "urbanmap/error.hpp"

#include <algorithm>

namespace urbanmap {

BinaryMask majority_resample(const BinaryMask& mask, const ResampleSpec& spec) {
    if (spec.factor < 2) fail(ErrorCode::Argument, "resample factor must be >= 2");
    validate(mask);
    const int f = spec.factor;
    const int out_w = (mask.width + f - 1) / f;
    const int out_h = (mask.height + f - 1) / f;
    BinaryMask out(out_w, out_h);
    std::vector<int> ones(static_cast<std::size_t>(out_w));
    for (int by = 0; by < out_h; ++by) {
        std::fill(ones.begin(), ones.end(), 0);
        const int y0 = by * f;
        const int y1 = std::min(mask.height, y0 + f);
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < mask.width; ++x) ones[static_cast<std::size_t>(x / f)] += mask.at(x, y);
        for (int bx = 0; bx < out_w; ++bx) {
            const int block = (std::min(mask.width, (bx + 1) * f) - bx * f) * (y1 - y0);
            out.at(bx, by) = 2 * ones[static_cast<std::size_t>(bx)] > block ? 1 : 0;
        }
    }
    if (mask.geo) {
        Geotransform g = *mask.geo;
        const double center = (f - 1) / 2.0;
        std::tie(g.origin_x, g.origin_y) = pixel_to_world(*mask.geo, center, center);
        g.pixel_w *= f;
        g.pixel_h *= f;
        g.rot_xy *= f;
        g.rot_yx *= f;
        out.geo = g;
    }
    out.crs = mask.crs;
    return out;
}

}  // namespace urbanmap
