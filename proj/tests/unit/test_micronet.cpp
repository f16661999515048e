#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../gradcheck.hpp"
#include "support.hpp"
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

NetConfig small(int in = 3, int base = 2, int depth = 2) {
    NetConfig c;
    c.in_channels = in;
    c.base_channels = base;
    c.depth = depth;
    return c;
}

}  // namespace

TEST_CASE("default configuration") {
    const NetConfig c;
    CHECK(c.in_channels == 3);
    CHECK(c.base_channels == 16);
    CHECK(c.depth == 4);
    CHECK(c.divisor() == 16);
    CHECK_NOTHROW(c.validate());
    NetConfig bad = c;
    bad.depth = 0;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::Argument);
    bad = c;
    bad.base_channels = 0;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::Argument);
}

TEST_CASE("conv layout counts and offsets") {
    const NetConfig c;
    const auto layout = conv_layout(c);
    CHECK(layout.size() == static_cast<std::size_t>(5 * c.depth + 3));
    std::size_t offset = 0;
    for (const auto& s : layout) {
        CHECK(s.offset == offset);
        offset += s.size();
    }
    CHECK(layout.front().in_channels == 3);
    CHECK(layout.front().out_channels == 16);
    CHECK(layout.back().kernel == 1);
    CHECK(layout.back().out_channels == 1);
    CHECK(NetParams::zeros(c).values.size() == offset);
    // Bottleneck width is base * 2^depth.
    CHECK(layout[2 * c.depth + 1].out_channels == 16 << 4);
}

TEST_CASE("init is deterministic, seed dependent, biases zero, within bounds") {
    const NetConfig c = small(3, 4, 3);
    const NetParams a = init_params(c, 42), b = init_params(c, 42), d = init_params(c, 43);
    CHECK(a == b);
    CHECK_FALSE(a == d);
    for (std::size_t l = 0; l < a.layout.size(); ++l) {
        for (double v : a.bias(l)) CHECK(v == 0.0);
        const auto& s = a.layout[l];
        const double bound = std::sqrt(6.0 / (s.in_channels * s.kernel * s.kernel));
        for (double v : a.weights(l)) CHECK(std::abs(v) <= bound);
    }
}

TEST_CASE("output shape follows the input") {
    const NetConfig c;
    Rng rng(1);
    const NetParams p = init_params(c, 1);
    const Tensor y = infer(p, c, gradcheck::random_tensor(rng, 3, 64, 32, 0, 1));
    CHECK(y.channels == 1);
    CHECK(y.height == 64);
    CHECK(y.width == 32);
    NetConfig pass2 = c;
    pass2.in_channels = 1;
    const Tensor y2 = infer(init_params(pass2, 2), pass2, gradcheck::random_tensor(rng, 1, 64, 64, 0, 1));
    CHECK(y2.channels == 1);
    CHECK(y2.height == 64);
}

TEST_CASE("a 3x256x256 input gives a 1x256x256 output") {
    const NetConfig c = small(3, 2, 4);
    const Tensor y = infer(init_params(c, 3), c, Tensor(3, 256, 256, 0.5));
    CHECK(y.channels == 1);
    CHECK(y.height == 256);
    CHECK(y.width == 256);
}

TEST_CASE("bad input shapes are rejected") {
    const NetConfig c = small();
    const NetParams p = init_params(c, 1);
    CHECK(code_of([&] { infer(p, c, Tensor(3, 10, 8)); }) == ErrorCode::Shape);
    CHECK(code_of([&] { infer(p, c, Tensor(1, 8, 8)); }) == ErrorCode::Shape);
    CHECK(code_of([&] { infer(init_params(small(3, 4, 2), 1), c, Tensor(3, 8, 8)); }) == ErrorCode::Shape);
}

TEST_CASE("zero parameters give 0.5 everywhere and an empty mask") {
    const NetConfig c = small();
    const NetParams z = NetParams::zeros(c);
    Rng rng(4);
    const Tensor x = gradcheck::random_tensor(rng, 3, 16, 16, 0, 1);
    for (double v : infer(z, c, x).values) CHECK(v == 0.5);
    CHECK(predict_mask(z, c, x).count_ones() == 0);
    CHECK(predict_mask(z, c, x, 0.0).count_ones() == 256);
}

TEST_CASE("a large head bias turns the mask on") {
    const NetConfig c = small();
    NetParams p = NetParams::zeros(c);
    p.bias(p.layout.size() - 1)[0] = 10.0;
    const BinaryMask m = predict_mask(p, c, Tensor(3, 8, 8, 0.3));
    CHECK(m.count_ones() == 64);
    CHECK(code_of([&] { predict_mask(p, c, Tensor(3, 8, 8), 1.5); }) == ErrorCode::Argument);
}

TEST_CASE("threshold tie goes to zero") {
    Tensor probs(1, 1, 3);
    probs.values = {0.5, 0.5000001, 0.4};
    CHECK(threshold_probabilities(probs).data == std::vector<std::uint8_t>{0, 1, 0});
}

TEST_CASE("forward is reproducible and agrees with infer") {
    const NetConfig c = small(3, 3, 2);
    const NetParams p = init_params(c, 9);
    Rng rng(9);
    const Tensor x = gradcheck::random_tensor(rng, 3, 16, 16, 0, 1);
    const auto a = forward(p, c, x);
    const auto b = forward(p, c, x);
    CHECK(a.output == b.output);
    CHECK(infer(p, c, x) == a.output);
}

TEST_CASE("full network gradient matches finite differences") {
    CHECK(gradcheck::check_network(small(3, 2, 2), 21) < 1e-4);
    CHECK(gradcheck::check_network(small(1, 2, 1), 22) < 1e-4);
    CHECK(gradcheck::check_network(small(2, 1, 3), 23) < 1e-4);
}

TEST_CASE("logit backward equals backward through the sigmoid") {
    const NetConfig c = small(3, 2, 2);
    const NetParams p = init_params(c, 5);
    Rng rng(5);
    const Tensor x = gradcheck::random_tensor(rng, 3, 8, 8, 0, 1);
    const auto fwd = forward(p, c, x);
    const Tensor dy = gradcheck::random_tensor(rng, 1, 8, 8);
    Tensor dz = dy;
    for (std::size_t i = 0; i < dz.size(); ++i) {
        const double y = fwd.output.values[i];
        dz.values[i] *= y * (1.0 - y);
    }
    const NetParams a = backward(p, c, fwd.cache, dy);
    const NetParams b = backward_logits(p, c, fwd.cache, dz);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12).scale(1e-12));
}

TEST_CASE("zero upstream gradient gives a zero gradient; repeat calls agree") {
    const NetConfig c = small();
    const NetParams p = init_params(c, 6);
    const auto fwd = forward(p, c, Tensor(3, 8, 8, 0.7));
    for (double v : backward(p, c, fwd.cache, Tensor(1, 8, 8)).values) CHECK(v == 0.0);
    Rng rng(6);
    const Tensor dy = gradcheck::random_tensor(rng, 1, 8, 8);
    CHECK(backward(p, c, fwd.cache, dy) == backward(p, c, fwd.cache, dy));
}

TEST_CASE("stale or mismatched caches are contract errors") {
    const NetConfig c = small();
    NetParams p = init_params(c, 7);
    const auto fwd = forward(p, c, Tensor(3, 8, 8, 0.2));
    CHECK(code_of([&] { backward(p, c, fwd.cache, Tensor(1, 4, 4)); }) == ErrorCode::Shape);
    CHECK(code_of([&] { backward(init_params(small(3, 3, 2), 7), small(3, 3, 2), fwd.cache, Tensor(1, 8, 8)); }) ==
          ErrorCode::Contract);
    p.values[0] += 1e-3;
    CHECK(code_of([&] { backward(p, c, fwd.cache, Tensor(1, 8, 8)); }) == ErrorCode::Contract);
}

TEST_CASE("checkpoints round trip and reject corruption") {
    testing::TempDir dir;
    const NetConfig c = small(1, 3, 2);
    const NetParams p = init_params(c, 8);
    save_checkpoint(dir / "a.ckpt", c, p);
    auto [c2, p2] = load_checkpoint(dir / "a.ckpt");
    CHECK(c2 == c);
    CHECK(p2 == p);
    CHECK(p2.layout.size() == p.layout.size());

    std::string bytes = testing::read_text(dir / "a.ckpt");
    testing::write_text(dir / "trail.ckpt", bytes + "x");
    CHECK(code_of([&] { load_checkpoint(dir / "trail.ckpt"); }) == ErrorCode::Format);
    testing::write_text(dir / "short.ckpt", bytes.substr(0, bytes.size() - 4));
    CHECK(code_of([&] { load_checkpoint(dir / "short.ckpt"); }) == ErrorCode::Io);
    std::string magic = bytes;
    magic[0] = 'X';
    testing::write_text(dir / "magic.ckpt", magic);
    CHECK(code_of([&] { load_checkpoint(dir / "magic.ckpt"); }) == ErrorCode::Format);
    std::string nan = bytes;
    for (int i = 0; i < 8; ++i) nan[nan.size() - 8 + i] = static_cast<char>(0xff);
    testing::write_text(dir / "nan.ckpt", nan);
    CHECK(code_of([&] { load_checkpoint(dir / "nan.ckpt"); }) == ErrorCode::Format);
    CHECK(code_of([&] { load_checkpoint(dir / "missing.ckpt"); }) == ErrorCode::Io);
}
