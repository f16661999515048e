#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "urbanmap/baselines.hpp"
#include "urbanmap/error.hpp"

using namespace urbanmap;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an urbanmap::Error");
    return ErrorCode::Io;
}

// Exhaustive scan over every cut in 1..255 (dark class = values below the cut),
// returning the middle of the maximal plateau.
int otsu_oracle(const std::array<std::uint64_t, 256>& h) {
    long double best = -1;
    int first = -1, last = -1;
    for (int cut = 1; cut < 256; ++cut) {
        long double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (int v = 0; v < 256; ++v) {
            (v < cut ? n0 : n1) += h[v];
            (v < cut ? s0 : s1) += static_cast<long double>(v) * h[v];
        }
        if (n0 == 0 || n1 == 0) continue;
        const long double d = s0 / n0 - s1 / n1;
        const long double var = n0 * n1 * d * d;
        if (var > best * (1 + 1e-12L)) {
            best = var;
            first = last = cut;
        } else if (var >= best * (1 - 1e-12L)) {
            last = cut;
        }
    }
    return first < 0 ? 0 : (first + last) / 2;
}

Raster blobs(Rng& rng, int w, int h, BinaryMask& truth) {
    Raster r(w, h, 3);
    truth = BinaryMask(w, h);
    std::fill(r.data.begin(), r.data.end(), 255);
    for (int b = 0; b < 5; ++b) {
        const int x0 = static_cast<int>(rng.uniform_int(0, w - 6)), y0 = static_cast<int>(rng.uniform_int(0, h - 6));
        for (int y = y0; y < y0 + 6; ++y)
            for (int x = x0; x < x0 + 6; ++x) {
                for (int c = 0; c < 3; ++c) r.at(x, y, c) = 0;
                truth.at(x, y) = 1;
            }
    }
    return r;
}

}  // namespace

TEST_CASE("k-means with k=2 recovers black blobs on white") {
    Rng rng(1);
    for (int t = 0; t < 10; ++t) {
        BinaryMask truth;
        const Raster img = blobs(rng, 40, 30, truth);
        KMeansConfig cfg;
        cfg.k = 2;
        cfg.seed = static_cast<std::uint64_t>(t);
        CHECK(kmeans_segment(img, cfg) == truth);
    }
}

TEST_CASE("k-means is deterministic and its objective never increases") {
    Rng rng(2);
    const Raster img = testing::random_raster(rng, 30, 30, 3);
    KMeansConfig cfg;
    cfg.seed = 9;
    const KMeansResult a = kmeans_cluster(img, cfg), b = kmeans_cluster(img, cfg);
    CHECK(a.labels == b.labels);
    CHECK(a.centroids == b.centroids);
    REQUIRE(!a.objective.empty());
    for (std::size_t i = 1; i < a.objective.size(); ++i) CHECK(a.objective[i] <= a.objective[i - 1] * (1 + 1e-12));
    CHECK(a.iterations <= cfg.max_iters);
    CHECK(kmeans_segment(img, cfg) == kmeans_segment(img, cfg));
}

TEST_CASE("urban cluster is the darkest centroid") {
    Rng rng(3);
    const Raster img = testing::random_raster(rng, 20, 20, 3);
    const KMeansResult r = kmeans_cluster(img, {});
    auto lum = [](const std::array<double, 3>& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; };
    for (const auto& c : r.centroids) CHECK(lum(r.centroids[r.urban_cluster]) <= lum(c));
}

TEST_CASE("a flat image has no urban pixels") {
    Raster img(10, 10, 3);
    std::fill(img.data.begin(), img.data.end(), 40);
    CHECK(kmeans_segment(img).count_ones() == 0);
    CHECK(threshold_segment(img).count_ones() == 0);
}

TEST_CASE("k-means configuration is validated") {
    Raster img(4, 4, 3);
    KMeansConfig cfg;
    cfg.k = 1;
    CHECK(code_of([&] { kmeans_segment(img, cfg); }) == ErrorCode::Argument);
    cfg.k = 2;
    cfg.max_iters = 0;
    CHECK(code_of([&] { kmeans_segment(img, cfg); }) == ErrorCode::Argument);
    CHECK(code_of([&] { kmeans_segment(Raster(4, 4, 1)); }) == ErrorCode::Argument);
}

TEST_CASE("fixed thresholds on black and white") {
    Raster img(2, 1, 3);
    img.data = {0, 0, 0, 255, 255, 255};
    ThresholdConfig cfg{ThresholdMode::Fixed, 100};
    CHECK(threshold_segment(img, cfg).data == std::vector<std::uint8_t>{1, 0});
    for (int cut : {0, 1, 128, 255}) {
        cfg.luminance_cut = cut;
        CHECK(threshold_segment(img, cfg).data[1] == 0);
    }
    cfg.luminance_cut = 256;
    CHECK(code_of([&] { threshold_segment(img, cfg); }) == ErrorCode::Argument);
    cfg.luminance_cut = -1;
    CHECK(code_of([&] { threshold_segment(img, cfg); }) == ErrorCode::Argument);
}

TEST_CASE("luminance rounding") {
    CHECK(luminance(255, 255, 255) == 255);
    CHECK(luminance(0, 0, 0) == 0);
    CHECK(luminance(255, 0, 0) == 76);
    CHECK(luminance(0, 255, 0) == 150);
    CHECK(luminance(0, 0, 255) == 29);
}

TEST_CASE("bimodal histogram cut falls strictly between the modes") {
    std::array<std::uint64_t, 256> h{};
    h[20] = 300;
    h[220] = 700;
    const int cut = otsu_cut(h);
    CHECK(cut > 20);
    CHECK(cut < 220);
    CHECK(cut == otsu_oracle(h));
}

TEST_CASE("Otsu agrees with the exhaustive scan on random histograms") {
    Rng rng(4);
    for (int t = 0; t < 300; ++t) {
        std::array<std::uint64_t, 256> h{};
        const int modes = static_cast<int>(rng.uniform_int(1, 4));
        for (int m = 0; m < modes; ++m) {
            const int centre = static_cast<int>(rng.uniform_int(0, 255));
            const int spread = static_cast<int>(rng.uniform_int(0, 30));
            const int count = static_cast<int>(rng.uniform_int(1, 2000));
            for (int i = 0; i < count; ++i)
                h[static_cast<std::size_t>(std::clamp(centre + static_cast<int>(rng.uniform_int(-spread, spread)), 0, 255))]++;
        }
        CHECK(otsu_cut(h) == otsu_oracle(h));
    }
}

TEST_CASE("degenerate histograms") {
    std::array<std::uint64_t, 256> h{};
    CHECK(otsu_cut(h) == 0);
    h[77] = 10;
    CHECK(otsu_cut(h) == 0);
}

TEST_CASE("Otsu segmentation marks the darker mode") {
    Rng rng(5);
    BinaryMask truth;
    Raster img = blobs(rng, 32, 32, truth);
    CHECK(threshold_segment(img) == truth);
    const auto h = luminance_histogram(img);
    std::uint64_t total = 0;
    for (auto v : h) total += v;
    CHECK(total == 32u * 32u);
}
