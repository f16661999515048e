#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../gradcheck.hpp"

using namespace urbanmap;
using namespace urbanmap::layers;

TEST_CASE("every layer passes the finite-difference check") {
    for (const auto& r : gradcheck::check_all_layers(101, 20)) {
        INFO(r.layer);
        CHECK(r.worst < 1e-4);
    }
}

TEST_CASE("conv with a centered one-hot kernel is the identity plus bias") {
    Rng rng(1);
    const Tensor x = gradcheck::random_tensor(rng, 1, 5, 7);
    std::vector<double> w(9, 0.0);
    w[4] = 1.0;
    const std::vector<double> b{0.25};
    const Tensor y = conv_forward(x, w, b, 1, 3);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.values[i] == doctest::Approx(x.values[i] + 0.25));
}

TEST_CASE("conv matches a direct zero-padded sum") {
    Rng rng(2);
    const int cin = 3, cout = 4, k = 3;
    const Tensor x = gradcheck::random_tensor(rng, cin, 9, 6);
    std::vector<double> w(static_cast<std::size_t>(cout * cin * k * k)), b(cout);
    for (auto& v : w) v = rng.uniform(-1, 1);
    for (auto& v : b) v = rng.uniform(-1, 1);
    const Tensor y = conv_forward(x, w, b, cout, k);
    REQUIRE(y.channels == cout);
    for (int o = 0; o < cout; ++o)
        for (int yy = 0; yy < 9; ++yy)
            for (int xx = 0; xx < 6; ++xx) {
                double s = b[o];
                for (int c = 0; c < cin; ++c)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int sy = yy + ky - 1, sx = xx + kx - 1;
                            if (sy < 0 || sy >= 9 || sx < 0 || sx >= 6) continue;
                            s += w[((o * cin + c) * k + ky) * k + kx] * x.at(c, sy, sx);
                        }
                CHECK(y.at(o, yy, xx) == doctest::Approx(s).epsilon(1e-12));
            }
}

TEST_CASE("max pool keeps the first maximum on ties") {
    Tensor x(1, 2, 2, 1.0);
    const PoolResult r = maxpool2_forward(x);
    REQUIRE(r.argmax.size() == 1);
    CHECK(r.argmax[0] == 0);
    Tensor dy(1, 1, 1, 3.0);
    const Tensor dx = maxpool2_backward(1, 2, 2, r.argmax, dy);
    CHECK(dx.values == std::vector<double>{3.0, 0.0, 0.0, 0.0});
}

TEST_CASE("upsample repeats each value in a 2x2 block and backward sums it") {
    Tensor x(1, 1, 2);
    x.values = {1.0, 2.0};
    const Tensor u = upsample2_forward(x);
    CHECK(u.values == std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2});
    const Tensor back = upsample2_backward(Tensor(1, 2, 4, 1.0));
    CHECK(back.values == std::vector<double>{4.0, 4.0});
}

TEST_CASE("concat stacks channels and splits them back") {
    Tensor a(1, 2, 2, 1.0), b(2, 2, 2, 2.0);
    const Tensor c = concat(a, b);
    CHECK(c.channels == 3);
    auto [da, db] = concat_backward(c, 1);
    CHECK(da == a);
    CHECK(db == b);
}

TEST_CASE("sigmoid stays strictly inside the unit interval") {
    Tensor z(1, 1, 5);
    z.values = {-800.0, -40.0, 0.0, 40.0, 800.0};
    const Tensor y = sigmoid_forward(z);
    for (double v : y.values) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    CHECK(y.values[2] == 0.5);
}
