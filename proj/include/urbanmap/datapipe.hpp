#pragma once

#include "urbanmap/raster.hpp"
#include "urbanmap/rng.hpp"
#include "urbanmap/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace urbanmap {

struct SamplePair {
    std::filesystem::path image_path;
    std::filesystem::path mask_path;

    bool operator==(const SamplePair&) const = default;
};

// Sorted listings of both directories zipped index-wise. Georeferencing
// sidecars (.wld, .crs) and dot-files are not samples.
std::vector<SamplePair> discover_pairs(const std::filesystem::path& image_dir, const std::filesystem::path& mask_dir);

struct Sample {
    Tensor image;     // channels x target x target, values in [0, 1]
    BinaryMask mask;  // target x target
};

// Bilinear (half-pixel centers) for images, nearest for masks, then
// image / 255 and mask > 128.
Sample load_sample(const SamplePair& pair, int target = 256);

Tensor raster_to_tensor(const Raster& r);  // bytes / 255
Tensor resize_bilinear(const Tensor& t, int width, int height);
Raster resize_nearest(const Raster& r, int width, int height);
Raster to_grayscale(const Raster& r);
BinaryMask binarize(const Raster& gray, int cut = 128);  // value > cut
Tensor mask_to_tensor(const BinaryMask& m);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

// Seeded shuffle of [0, n); first floor(fraction * n) go to training.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, const SplitSpec& spec);

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_dataset(const std::vector<T>& items, const SplitSpec& spec) {
    auto [tr, va] = split_indices(items.size(), spec);
    std::pair<std::vector<T>, std::vector<T>> out;
    for (auto i : tr) out.first.push_back(items[i]);
    for (auto i : va) out.second.push_back(items[i]);
    return out;
}

// Index batches for one epoch; order keyed by (seed, epoch), last batch may be short.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed, int epoch);

}  // namespace urbanmap
