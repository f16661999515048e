#pragma once

#include "urbanmap/raster.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urbanmap {

enum class PadMode { Reflect, Zero };

struct PatchGrid {
    int source_w = 0;
    int source_h = 0;
    int patch = 256;
    int cols = 0;
    int rows = 0;
    int pad_right = 0;
    int pad_bottom = 0;
    PadMode pad_mode = PadMode::Reflect;

    int count() const { return cols * rows; }
    bool operator==(const PatchGrid&) const = default;
};

PatchGrid make_grid(int source_w, int source_h, int patch, PadMode pad_mode);

template <class Image>
struct Patch {
    int grid_col = 0;
    int grid_row = 0;
    Image pixels;
};

using RasterPatch = Patch<Raster>;
using MaskPatch = Patch<BinaryMask>;

// Row-major grid of patch x patch windows; border windows padded per mode.
// Patch pixels carry no georeferencing.
std::pair<PatchGrid, std::vector<RasterPatch>> split(const Raster& r, int patch, PadMode pad_mode = PadMode::Reflect);
std::pair<PatchGrid, std::vector<MaskPatch>> split(const BinaryMask& m, int patch, PadMode pad_mode = PadMode::Reflect);

// Reassembles a grid keyed by (grid_col, grid_row) and crops the padding.
Raster merge_patches(const PatchGrid& grid, std::span<const RasterPatch> patches,
                     const std::optional<Geotransform>& geo = std::nullopt,
                     const std::optional<std::string>& crs = std::nullopt);
BinaryMask merge_patches(const PatchGrid& grid, std::span<const MaskPatch> patches,
                         const std::optional<Geotransform>& geo = std::nullopt,
                         const std::optional<std::string>& crs = std::nullopt);

// Overlapping variant: windows of `patch` pixels advance by patch - 2*margin,
// and only the central core of each window is kept on merge.
struct OverlapGrid {
    PatchGrid core;  // core.patch is the stride
    int window = 0;
    int margin = 0;
};

std::pair<OverlapGrid, std::vector<RasterPatch>> split_overlapping(const Raster& r, int patch, int margin,
                                                                   PadMode pad_mode = PadMode::Reflect);
std::pair<OverlapGrid, std::vector<MaskPatch>> split_overlapping(const BinaryMask& m, int patch, int margin,
                                                                 PadMode pad_mode = PadMode::Reflect);
BinaryMask merge_center_crop(const OverlapGrid& grid, std::span<const MaskPatch> patches,
                             const std::optional<Geotransform>& geo = std::nullopt,
                             const std::optional<std::string>& crs = std::nullopt);

// Mirror index into [0, n) without repeating the edge sample.
int reflect_index(int i, int n);

// Places georeferenced tiles on their common grid; overlaps combine by OR.
BinaryMask mosaic_tiles(std::span<const BinaryMask> tiles);

}  // namespace urbanmap
