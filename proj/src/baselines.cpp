#include "urbanmap/baselines.hpp"

#include "urbanmap/error.hpp"
#include "urbanmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace urbanmap {

namespace {

using Color = std::array<double, 3>;

double dist2(const Color& a, const Color& b) {
    const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
    return d0 * d0 + d1 * d1 + d2 * d2;
}

double luma(const Color& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

void require_rgb(const Raster& img) {
    validate(img);
    if (img.channels != 3) fail(ErrorCode::Argument, "baseline segmentation expects an RGB raster");
    if (img.data.empty()) fail(ErrorCode::Argument, "empty raster");
}

}  // namespace

void KMeansConfig::validate() const {
    if (k < 2 || k > 255) fail(ErrorCode::Argument, "k must be in [2, 255]");
    if (max_iters < 1) fail(ErrorCode::Argument, "max_iters must be >= 1");
    if (!(tol >= 0.0)) fail(ErrorCode::Argument, "tolerance must be non-negative");
}

KMeansResult kmeans_cluster(const Raster& img, const KMeansConfig& cfg) {
    cfg.validate();
    require_rgb(img);
    const std::size_t n = img.data.size() / 3;
    std::vector<Color> px(n);
    for (std::size_t i = 0; i < n; ++i)
        px[i] = {img.data[3 * i] / 255.0, img.data[3 * i + 1] / 255.0, img.data[3 * i + 2] / 255.0};

    // k-means++ seeding; stops early when every pixel coincides with a center.
    Rng rng(cfg.seed);
    KMeansResult r;
    r.centroids.push_back(px[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1))]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(px[i], r.centroids[0]);
    while (static_cast<int>(r.centroids.size()) < cfg.k) {
        double total = 0.0;
        for (double v : d2) total += v;
        if (total <= 0.0) break;
        double pick = rng.uniform() * total;
        std::size_t chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            pick -= d2[i];
            if (pick < 0.0 && d2[i] > 0.0) {
                chosen = i;
                break;
            }
        }
        if (d2[chosen] <= 0.0) {  // rounding ran off the end
            chosen = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
        }
        r.centroids.push_back(px[chosen]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(px[i], r.centroids.back()));
    }

    const std::size_t k = r.centroids.size();
    r.labels.assign(n, 0);
    std::vector<double> nearest(n);
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double bd = dist2(px[i], r.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = dist2(px[i], r.centroids[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            r.labels[i] = static_cast<std::uint8_t>(best);
            nearest[i] = bd;
            objective += bd;
        }
        r.objective.push_back(objective);
        r.iterations = iter + 1;

        std::vector<Color> sums(k, Color{0, 0, 0});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = sums[r.labels[i]];
            for (int c = 0; c < 3; ++c) s[c] += px[i][c];
            counts[r.labels[i]] += 1;
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            Color next = r.centroids[c];
            if (counts[c] > 0) {
                for (int j = 0; j < 3; ++j) next[j] = sums[c][j] / static_cast<double>(counts[c]);
            } else {
                // Empty cluster: move it onto the worst-served pixel, if any is off-center.
                const auto far = static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
                if (nearest[far] > 0.0) {
                    next = px[far];
                    nearest[far] = 0.0;
                }
            }
            movement = std::max(movement, std::sqrt(dist2(next, r.centroids[c])));
            r.centroids[c] = next;
        }
        if (movement < cfg.tol) break;
    }

    // Final assignment against the converged centroids.
    std::vector<std::size_t> final_counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double bd = dist2(px[i], r.centroids[0]);
        for (std::size_t c = 1; c < k; ++c) {
            const double d = dist2(px[i], r.centroids[c]);
            if (d < bd) {
                bd = d;
                best = c;
            }
        }
        r.labels[i] = static_cast<std::uint8_t>(best);
        final_counts[best] += 1;
    }
    double darkest = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        if (final_counts[c] == 0) continue;
        if (luma(r.centroids[c]) < darkest) {
            darkest = luma(r.centroids[c]);
            r.urban_cluster = static_cast<int>(c);
        }
    }
    return r;
}

BinaryMask kmeans_segment(const Raster& img, const KMeansConfig& cfg) {
    const KMeansResult r = kmeans_cluster(img, cfg);
    BinaryMask m(img.width, img.height);
    // A single effective cluster carries no contrast to call urban.
    if (r.centroids.size() > 1)
        for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = r.labels[i] == r.urban_cluster ? 1 : 0;
    m.geo = img.geo;
    m.crs = img.crs;
    return m;
}

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
}

std::array<std::uint64_t, 256> luminance_histogram(const Raster& img) {
    require_rgb(img);
    std::array<std::uint64_t, 256> h{};
    for (std::size_t i = 0; i < img.data.size(); i += 3) h[luminance(img.data[i], img.data[i + 1], img.data[i + 2])] += 1;
    return h;
}

int otsu_cut(const std::array<std::uint64_t, 256>& histogram) {
    double total = 0.0, total_sum = 0.0;
    for (int v = 0; v < 256; ++v) {
        total += static_cast<double>(histogram[v]);
        total_sum += v * static_cast<double>(histogram[v]);
    }
    if (total == 0.0) return 0;
    double w0 = 0.0, sum0 = 0.0;
    double best = -1.0;
    int first = -1, last = -1;
    for (int t = 0; t < 255; ++t) {
        w0 += static_cast<double>(histogram[t]);
        sum0 += t * static_cast<double>(histogram[t]);
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (total_sum - sum0) / w1;
        const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best * (1.0 + 1e-12)) {
            best = between;
            first = last = t;
        } else if (between >= best * (1.0 - 1e-12)) {
            last = t;
        }
    }
    if (first < 0) return 0;  // single grey level: nothing is darker than anything
    return (first + last) / 2 + 1;
}

BinaryMask threshold_segment(const Raster& img, const ThresholdConfig& cfg) {
    require_rgb(img);
    int cut = cfg.luminance_cut;
    if (cfg.mode == ThresholdMode::Otsu) {
        cut = otsu_cut(luminance_histogram(img));
    } else if (cut < 0 || cut > 255) {
        fail(ErrorCode::Argument, "fixed luminance cut must be in [0, 255]");
    }
    BinaryMask m(img.width, img.height);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = luminance(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]) < cut ? 1 : 0;
    m.geo = img.geo;
    m.crs = img.crs;
    return m;
}

}  // namespace urbanmap
