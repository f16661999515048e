#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../resample_checks.hpp"
#include "support.hpp"
#include "urbanmap/error.hpp"

using namespace urbanmap;

TEST_CASE("strict majority with ties going to zero") {
    CHECK(resample_checks::block_with_ones(201) == 1);
    CHECK(resample_checks::block_with_ones(200) == 0);
    CHECK(resample_checks::block_with_ones(400) == 1);
    CHECK(resample_checks::block_with_ones(0) == 0);
}

TEST_CASE("an isolated pixel always vanishes") { CHECK(resample_checks::lone_pixels_vanish()); }

TEST_CASE("adding ones never removes an output one") { CHECK(resample_checks::monotone(77, 500) == 0); }

TEST_CASE("output dims are ceil(in / factor)") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const int w = static_cast<int>(rng.uniform_int(1, 200)), h = static_cast<int>(rng.uniform_int(1, 200));
        const int f = static_cast<int>(rng.uniform_int(2, 40));
        const BinaryMask out = majority_resample(BinaryMask(w, h), {f});
        CHECK(out.width == (w + f - 1) / f);
        CHECK(out.height == (h + f - 1) / f);
        CHECK(out.count_ones() == 0);
    }
}

TEST_CASE("constant masks stay constant") {
    BinaryMask ones(45, 23);
    std::fill(ones.data.begin(), ones.data.end(), 1);
    const BinaryMask out = majority_resample(ones, {20});
    CHECK(out.count_ones() == out.data.size());
}

TEST_CASE("partial border blocks use their own pixel count") {
    // 25 wide at factor 20: the right block is 5x20 = 100 pixels.
    BinaryMask m(25, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 20; x < 23; ++x) m.at(x, y) = 1;  // 60 of 100
    const BinaryMask out = majority_resample(m, {20});
    REQUIRE(out.width == 2);
    CHECK(out.at(0, 0) == 0);
    CHECK(out.at(1, 0) == 1);
}

TEST_CASE("matches a direct per-block count") {
    Rng rng(2);
    for (int t = 0; t < 40; ++t) {
        const int w = static_cast<int>(rng.uniform_int(2, 90)), h = static_cast<int>(rng.uniform_int(2, 90));
        const int f = static_cast<int>(rng.uniform_int(2, 12));
        const BinaryMask m = testing::random_mask(rng, w, h, rng.uniform());
        const BinaryMask out = majority_resample(m, {f});
        for (int by = 0; by < out.height; ++by)
            for (int bx = 0; bx < out.width; ++bx) {
                int ones = 0, n = 0;
                for (int y = by * f; y < std::min(h, by * f + f); ++y)
                    for (int x = bx * f; x < std::min(w, bx * f + f); ++x) {
                        ones += m.at(x, y);
                        ++n;
                    }
                CHECK(out.at(bx, by) == (2 * ones > n ? 1 : 0));
            }
    }
}

TEST_CASE("geotransform scales and moves to the first block centre") {
    BinaryMask m(100, 60);
    m.geo = Geotransform{600002.5, 6799997.5, 5, -5, 0, 0};
    m.crs = "EPSG:2154";
    const BinaryMask out = majority_resample(m, {20});
    REQUIRE(out.geo.has_value());
    CHECK(out.geo->pixel_w == 100.0);
    CHECK(out.geo->pixel_h == -100.0);
    // Pixel 0 centre sits half a 100 m cell inside the original top-left edge.
    CHECK(out.geo->origin_x == doctest::Approx(600000.0 + 50.0));
    CHECK(out.geo->origin_y == doctest::Approx(6800000.0 - 50.0));
    CHECK(out.crs == m.crs);
}

TEST_CASE("factor below 2 is rejected") {
    try {
        majority_resample(BinaryMask(4, 4), {1});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Argument);
    }
}
