#pragma once

#include "urbanmap/raster.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace urbanmap {

struct KMeansConfig {
    int k = 5;
    int max_iters = 100;
    double tol = 1e-4;  // max centroid movement, RGB scaled to [0, 1]
    std::uint64_t seed = 0;

    void validate() const;
};

struct KMeansResult {
    std::vector<std::array<double, 3>> centroids;
    std::vector<std::uint8_t> labels;  // per pixel
    std::vector<double> objective;     // sum of squared distances after each assignment
    int iterations = 0;
    int urban_cluster = 0;             // darkest centroid
};

// k-means++ seeding then Lloyd iterations on normalized RGB.
KMeansResult kmeans_cluster(const Raster& img, const KMeansConfig& cfg);
BinaryMask kmeans_segment(const Raster& img, const KMeansConfig& cfg = {});

enum class ThresholdMode { Fixed, Otsu };

struct ThresholdConfig {
    ThresholdMode mode = ThresholdMode::Otsu;
    int luminance_cut = 128;  // used in fixed mode
};

// Rounded 0.299 R + 0.587 G + 0.114 B.
std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);
std::array<std::uint64_t, 256> luminance_histogram(const Raster& img);

// Cut c such that luminance < c marks the dark class; maximizes the
// between-class variance (middle of the plateau when several cuts tie).
int otsu_cut(const std::array<std::uint64_t, 256>& histogram);

// 1 where luminance < cut.
BinaryMask threshold_segment(const Raster& img, const ThresholdConfig& cfg = {});

}  // namespace urbanmap
