#include "urbanmap/datapipe.hpp"

#include "urbanmap/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fs = std::filesystem;

namespace urbanmap {

namespace {

std::vector<fs::path> list_samples(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorCode::Io, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        const std::string name = p.filename().string();
        const std::string ext = p.extension().string();
        if (name.empty() || name.front() == '.' || ext == ".wld" || ext == ".crs") continue;
        files.push_back(p);
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

}  // namespace

std::vector<SamplePair> discover_pairs(const fs::path& image_dir, const fs::path& mask_dir) {
    const auto images = list_samples(image_dir);
    const auto masks = list_samples(mask_dir);
    if (images.empty() && masks.empty())
        fail(ErrorCode::EmptyDataset, "no samples in " + image_dir.string() + " and " + mask_dir.string());
    if (images.size() != masks.size()) {
        std::string msg = "image/mask count mismatch: " + std::to_string(images.size()) + " images in " +
                          image_dir.string() + ", " + std::to_string(masks.size()) + " masks in " + mask_dir.string();
        const auto& longer = images.size() > masks.size() ? images : masks;
        msg += "; first unpaired file: " + longer[std::min(images.size(), masks.size())].string();
        fail(ErrorCode::Pairing, msg);
    }
    std::vector<SamplePair> pairs;
    pairs.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) pairs.push_back({images[i], masks[i]});
    return pairs;
}

Tensor raster_to_tensor(const Raster& r) {
    Tensor t(r.channels, r.height, r.width);
    for (int c = 0; c < r.channels; ++c)
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x < r.width; ++x) t.at(c, y, x) = r.at(x, y, c) / 255.0;
    return t;
}

Tensor resize_bilinear(const Tensor& t, int width, int height) {
    if (width <= 0 || height <= 0) fail(ErrorCode::Argument, "resize target must be positive");
    if (t.width == width && t.height == height) return t;
    Tensor out(t.channels, height, width);
    const double sx = static_cast<double>(t.width) / width;
    const double sy = static_cast<double>(t.height) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(t.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, t.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(t.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, t.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < t.channels; ++c) {
                const double top = t.at(c, y0, x0) * (1.0 - wx) + t.at(c, y0, x1) * wx;
                const double bottom = t.at(c, y1, x0) * (1.0 - wx) + t.at(c, y1, x1) * wx;
                out.at(c, y, x) = top * (1.0 - wy) + bottom * wy;
            }
        }
    }
    return out;
}

Raster resize_nearest(const Raster& r, int width, int height) {
    if (width <= 0 || height <= 0) fail(ErrorCode::Argument, "resize target must be positive");
    if (r.width == width && r.height == height) return r;
    Raster out(width, height, r.channels);
    for (int y = 0; y < height; ++y) {
        const int syy = std::min(static_cast<int>(std::floor(y * static_cast<double>(r.height) / height)), r.height - 1);
        for (int x = 0; x < width; ++x) {
            const int sxx = std::min(static_cast<int>(std::floor(x * static_cast<double>(r.width) / width)), r.width - 1);
            for (int c = 0; c < r.channels; ++c) out.at(x, y, c) = r.at(sxx, syy, c);
        }
    }
    return out;
}

Raster to_grayscale(const Raster& r) {
    if (r.channels == 1) return r;
    Raster g(r.width, r.height, 1);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double lum = 0.299 * r.data[3 * i] + 0.587 * r.data[3 * i + 1] + 0.114 * r.data[3 * i + 2];
        g.data[i] = static_cast<std::uint8_t>(std::lround(lum));
    }
    g.geo = r.geo;
    g.crs = r.crs;
    return g;
}

BinaryMask binarize(const Raster& gray, int cut) {
    if (gray.channels != 1) fail(ErrorCode::Argument, "binarize expects a single-channel raster");
    BinaryMask m(gray.width, gray.height);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = gray.data[i] > cut ? 1 : 0;
    m.geo = gray.geo;
    m.crs = gray.crs;
    return m;
}

Tensor mask_to_tensor(const BinaryMask& m) {
    Tensor t(1, m.height, m.width);
    for (std::size_t i = 0; i < m.data.size(); ++i) t.values[i] = m.data[i];
    return t;
}

Sample load_sample(const SamplePair& pair, int target) {
    if (target <= 0) fail(ErrorCode::Argument, "target size must be positive");
    const Raster image = read_image(pair.image_path);
    const Raster mask = to_grayscale(read_image(pair.mask_path));
    Sample s;
    s.image = resize_bilinear(raster_to_tensor(image), target, target);
    s.mask = binarize(resize_nearest(mask, target, target));
    s.mask.geo.reset();
    s.mask.crs.reset();
    return s;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        fail(ErrorCode::Argument, "train fraction must be in (0, 1)");
    if (n < 2) fail(ErrorCode::Argument, "splitting needs at least two samples");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));
    return {std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train)),
            std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end())};
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed, int epoch) {
    if (batch_size < 1) fail(ErrorCode::Argument, "batch size must be >= 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < n; i += batch_size)
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
    return batches;
}

}  // namespace urbanmap
