#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace urbanmap {

// Affine pixel -> world mapping. The origin is the world coordinate of the
// center of pixel (0,0), matching the world-file convention.
struct Geotransform {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_w = 1.0;
    double pixel_h = -1.0;
    double rot_xy = 0.0;
    double rot_yx = 0.0;

    bool operator==(const Geotransform&) const = default;
};

// Throws ErrorCode::Argument on a degenerate (zero-size or singular) transform.
void validate(const Geotransform& geo);

std::pair<double, double> pixel_to_world(const Geotransform& geo, double col, double row);
std::pair<double, double> world_to_pixel(const Geotransform& geo, double x, double y);

struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 or 3
    std::vector<std::uint8_t> data;  // row-major, interleaved channels
    std::optional<Geotransform> geo;
    std::optional<std::string> crs;

    Raster() = default;
    Raster(int w, int h, int ch);

    std::uint8_t& at(int col, int row, int ch = 0) {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    std::uint8_t at(int col, int row, int ch = 0) const {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }

    bool operator==(const Raster&) const = default;
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // values exactly 0 or 1
    std::optional<Geotransform> geo;
    std::optional<std::string> crs;

    static constexpr int channels = 1;

    BinaryMask() = default;
    BinaryMask(int w, int h);

    std::uint8_t& at(int col, int row) { return data[static_cast<std::size_t>(row) * width + col]; }
    std::uint8_t at(int col, int row) const { return data[static_cast<std::size_t>(row) * width + col]; }

    std::size_t count_ones() const;

    bool operator==(const BinaryMask&) const = default;
};

void validate(const Raster& r);
void validate(const BinaryMask& m);

// PGM bytes 0 -> 0, anything else -> 1. Intended for files this library wrote.
BinaryMask mask_from_raster(const Raster& r);
// Values {0,1} -> bytes {0,255}.
Raster mask_to_raster(const BinaryMask& m);

// Binary PPM (P6) / PGM (P5), maxval 255, plus ".wld" and ".crs" sidecars
// next to the image when present.
Raster read_image(const std::filesystem::path& path);
void write_image(const Raster& r, const std::filesystem::path& path);
void write_image(const BinaryMask& m, const std::filesystem::path& path);

// Six lines: pixel_w, rot_yx, rot_xy, pixel_h, origin_x, origin_y.
Geotransform read_world_file(const std::filesystem::path& path);
void write_world_file(const Geotransform& geo, const std::filesystem::path& path);

std::filesystem::path world_file_path(const std::filesystem::path& image);
std::filesystem::path crs_file_path(const std::filesystem::path& image);

}  // namespace urbanmap
