#include "urbanmap/geotile.hpp"

#include "urbanmap/error.hpp"

#include <algorithm>
#include <cmath>

namespace urbanmap {

int reflect_index(int i, int n) {
    if (n <= 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

PatchGrid make_grid(int source_w, int source_h, int patch, PadMode pad_mode) {
    if (source_w <= 0 || source_h <= 0) fail(ErrorCode::Argument, "cannot split an empty raster");
    if (patch < 16) fail(ErrorCode::Argument, "patch size must be at least 16, got " + std::to_string(patch));
    if (static_cast<long>(patch) > 4L * std::max(source_w, source_h))
        fail(ErrorCode::Argument, "patch size " + std::to_string(patch) + " exceeds 4x the source dimensions");
    PatchGrid g;
    g.source_w = source_w;
    g.source_h = source_h;
    g.patch = patch;
    g.cols = (source_w + patch - 1) / patch;
    g.rows = (source_h + patch - 1) / patch;
    g.pad_right = g.cols * patch - source_w;
    g.pad_bottom = g.rows * patch - source_h;
    g.pad_mode = pad_mode;
    return g;
}

namespace {

template <class Image>
Image blank_like(int w, int h, int channels) {
    if constexpr (std::is_same_v<Image, Raster>) {
        return Raster(w, h, channels);
    } else {
        (void)channels;
        return BinaryMask(w, h);
    }
}

// Copies a window whose top-left sits at (x0, y0) in source coordinates;
// out-of-range samples are mirrored or zeroed.
template <class Image>
Image extract_window(const Image& src, int x0, int y0, int size, PadMode mode) {
    const int ch = src.channels;
    Image out = blank_like<Image>(size, size, ch);
    for (int y = 0; y < size; ++y) {
        int sy = y0 + y;
        const bool row_inside = sy >= 0 && sy < src.height;
        if (!row_inside) {
            if (mode == PadMode::Zero) continue;
            sy = reflect_index(sy, src.height);
        }
        for (int x = 0; x < size; ++x) {
            int sx = x0 + x;
            if (sx < 0 || sx >= src.width) {
                if (mode == PadMode::Zero) continue;
                sx = reflect_index(sx, src.width);
            }
            const std::size_t s = (static_cast<std::size_t>(sy) * src.width + sx) * ch;
            const std::size_t d = (static_cast<std::size_t>(y) * size + x) * ch;
            std::copy_n(src.data.begin() + static_cast<std::ptrdiff_t>(s), ch,
                        out.data.begin() + static_cast<std::ptrdiff_t>(d));
        }
    }
    return out;
}

template <class Image>
std::pair<PatchGrid, std::vector<Patch<Image>>> split_impl(const Image& src, int patch, PadMode mode) {
    validate(src);
    PatchGrid grid = make_grid(src.width, src.height, patch, mode);
    std::vector<Patch<Image>> out;
    out.reserve(static_cast<std::size_t>(grid.count()));
    for (int r = 0; r < grid.rows; ++r)
        for (int c = 0; c < grid.cols; ++c)
            out.push_back({c, r, extract_window(src, c * patch, r * patch, patch, mode)});
    return {grid, std::move(out)};
}

// Writes the [off, off + core) square of every window onto the output canvas.
template <class Image>
Image assemble(const PatchGrid& grid, std::span<const Patch<Image>> patches, int window, int offset,
               const std::optional<Geotransform>& geo, const std::optional<std::string>& crs) {
    if (patches.empty()) fail(ErrorCode::Assembly, "no patches to merge");
    const int ch = patches.front().pixels.channels;
    std::vector<char> seen(static_cast<std::size_t>(grid.count()), 0);
    Image out = blank_like<Image>(grid.source_w, grid.source_h, ch);
    for (const auto& p : patches) {
        if (p.grid_col < 0 || p.grid_col >= grid.cols || p.grid_row < 0 || p.grid_row >= grid.rows)
            fail(ErrorCode::Assembly, "patch at (" + std::to_string(p.grid_col) + "," + std::to_string(p.grid_row) +
                                          ") is outside the grid");
        auto& flag = seen[static_cast<std::size_t>(p.grid_row) * grid.cols + p.grid_col];
        if (flag) fail(ErrorCode::Assembly, "duplicate patch at (" + std::to_string(p.grid_col) + "," +
                                                std::to_string(p.grid_row) + ")");
        flag = 1;
        if (p.pixels.width != window || p.pixels.height != window || p.pixels.channels != ch)
            fail(ErrorCode::Assembly, "patch has wrong dimensions");
        const int x0 = p.grid_col * grid.patch;
        const int y0 = p.grid_row * grid.patch;
        const int w = std::min(grid.patch, grid.source_w - x0);
        const int h = std::min(grid.patch, grid.source_h - y0);
        for (int y = 0; y < h; ++y) {
            const std::size_t s = (static_cast<std::size_t>(y + offset) * window + offset) * ch;
            const std::size_t d = (static_cast<std::size_t>(y0 + y) * grid.source_w + x0) * ch;
            std::copy_n(p.pixels.data.begin() + static_cast<std::ptrdiff_t>(s), static_cast<std::size_t>(w) * ch,
                        out.data.begin() + static_cast<std::ptrdiff_t>(d));
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        fail(ErrorCode::Assembly, "missing patches: got " + std::to_string(patches.size()) + " of " +
                                      std::to_string(grid.count()));
    out.geo = geo;
    out.crs = crs;
    return out;
}

template <class Image>
std::pair<OverlapGrid, std::vector<Patch<Image>>> split_overlapping_impl(const Image& src, int patch, int margin,
                                                                         PadMode mode) {
    validate(src);
    if (margin < 0 || 2 * margin >= patch) fail(ErrorCode::Argument, "overlap margin must be in [0, patch/2)");
    OverlapGrid g;
    g.window = patch;
    g.margin = margin;
    const int stride = patch - 2 * margin;
    g.core.source_w = src.width;
    g.core.source_h = src.height;
    g.core.patch = stride;
    g.core.cols = (src.width + stride - 1) / stride;
    g.core.rows = (src.height + stride - 1) / stride;
    g.core.pad_right = g.core.cols * stride - src.width;
    g.core.pad_bottom = g.core.rows * stride - src.height;
    g.core.pad_mode = mode;
    // Same validity rules as the non-overlapping grid.
    (void)make_grid(src.width, src.height, patch, mode);
    std::vector<Patch<Image>> out;
    out.reserve(static_cast<std::size_t>(g.core.count()));
    for (int r = 0; r < g.core.rows; ++r)
        for (int c = 0; c < g.core.cols; ++c)
            out.push_back({c, r, extract_window(src, c * stride - margin, r * stride - margin, patch, mode)});
    return {g, std::move(out)};
}

}  // namespace

std::pair<PatchGrid, std::vector<RasterPatch>> split(const Raster& r, int patch, PadMode pad_mode) {
    return split_impl(r, patch, pad_mode);
}

std::pair<PatchGrid, std::vector<MaskPatch>> split(const BinaryMask& m, int patch, PadMode pad_mode) {
    return split_impl(m, patch, pad_mode);
}

Raster merge_patches(const PatchGrid& grid, std::span<const RasterPatch> patches,
                     const std::optional<Geotransform>& geo, const std::optional<std::string>& crs) {
    return assemble<Raster>(grid, patches, grid.patch, 0, geo, crs);
}

BinaryMask merge_patches(const PatchGrid& grid, std::span<const MaskPatch> patches,
                         const std::optional<Geotransform>& geo, const std::optional<std::string>& crs) {
    return assemble<BinaryMask>(grid, patches, grid.patch, 0, geo, crs);
}

std::pair<OverlapGrid, std::vector<RasterPatch>> split_overlapping(const Raster& r, int patch, int margin,
                                                                   PadMode pad_mode) {
    return split_overlapping_impl(r, patch, margin, pad_mode);
}

std::pair<OverlapGrid, std::vector<MaskPatch>> split_overlapping(const BinaryMask& m, int patch, int margin,
                                                                 PadMode pad_mode) {
    return split_overlapping_impl(m, patch, margin, pad_mode);
}

BinaryMask merge_center_crop(const OverlapGrid& grid, std::span<const MaskPatch> patches,
                             const std::optional<Geotransform>& geo, const std::optional<std::string>& crs) {
    return assemble<BinaryMask>(grid.core, patches, grid.window, grid.margin, geo, crs);
}

BinaryMask mosaic_tiles(std::span<const BinaryMask> tiles) {
    if (tiles.empty()) fail(ErrorCode::Argument, "mosaic needs at least one tile");
    for (const auto& t : tiles) {
        validate(t);
        if (!t.geo) fail(ErrorCode::Alignment, "mosaic tile has no geotransform");
    }
    const Geotransform& ref = *tiles.front().geo;
    if (ref.rot_xy != 0.0 || ref.rot_yx != 0.0) fail(ErrorCode::Alignment, "rotated tiles cannot be mosaicked");
    for (const auto& t : tiles) {
        const Geotransform& g = *t.geo;
        if (g.pixel_w != ref.pixel_w || g.pixel_h != ref.pixel_h || g.rot_xy != 0.0 || g.rot_yx != 0.0)
            fail(ErrorCode::Alignment, "tiles have mixed resolutions or rotations");
        if (t.crs != tiles.front().crs) fail(ErrorCode::Crs, "tiles have mixed CRS");
    }

    // The output origin is an extreme input origin, so it is independent of
    // tile order bit for bit.
    Geotransform out_geo = ref;
    for (const auto& t : tiles) {
        const Geotransform& g = *t.geo;
        out_geo.origin_x = ref.pixel_w > 0 ? std::min(out_geo.origin_x, g.origin_x) : std::max(out_geo.origin_x, g.origin_x);
        out_geo.origin_y = ref.pixel_h > 0 ? std::min(out_geo.origin_y, g.origin_y) : std::max(out_geo.origin_y, g.origin_y);
    }

    auto offset = [](double delta, double step) {
        const double units = delta / step;
        const double rounded = std::round(units);
        if (std::abs(units - rounded) > 1e-6)
            fail(ErrorCode::Alignment, "tile origins are not an integer number of pixels apart");
        return static_cast<long>(rounded);
    };

    std::vector<std::pair<long, long>> offsets;
    long out_w = 0, out_h = 0;
    for (const auto& t : tiles) {
        const long col = offset(t.geo->origin_x - out_geo.origin_x, ref.pixel_w);
        const long row = offset(t.geo->origin_y - out_geo.origin_y, ref.pixel_h);
        offsets.emplace_back(col, row);
        out_w = std::max(out_w, col + t.width);
        out_h = std::max(out_h, row + t.height);
    }
    if (out_w > (1L << 20) || out_h > (1L << 20)) fail(ErrorCode::Alignment, "mosaic extent is implausibly large");

    BinaryMask out(static_cast<int>(out_w), static_cast<int>(out_h));
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const auto& t = tiles[i];
        const auto [col, row] = offsets[i];
        for (int y = 0; y < t.height; ++y) {
            std::uint8_t* dst = out.data.data() + static_cast<std::size_t>(row + y) * out.width + col;
            const std::uint8_t* src = t.data.data() + static_cast<std::size_t>(y) * t.width;
            for (int x = 0; x < t.width; ++x) dst[x] |= src[x];
        }
    }
    out.geo = out_geo;
    out.crs = tiles.front().crs;
    return out;
}

}  // namespace urbanmap
