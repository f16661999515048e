#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../bce_oracle.hpp"
#include "support.hpp"
#include "urbanmap/error.hpp"

#include <numbers>

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

EpochCurve curve_of(std::vector<double> f1) {
    EpochCurve c;
    for (double v : f1) c.push_back({1.0, 1.0, v, 0.5});
    return c;
}

}  // namespace

TEST_CASE("p = 0.5 gives ln 2 for any targets") {
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> y(37), p(37, 0.5);
        for (auto& v : y) v = rng.chance(0.3) ? 1.0 : 0.0;
        CHECK(std::abs(bce_loss({.y = y, .p = p}).loss - std::numbers::ln2) < 1e-9);
    }
}

TEST_CASE("perfect predictions are clamped to about 1e-7") {
    const std::vector<double> y{1.0, 0.0}, p{1.0, 0.0};
    const double l = bce_loss({.y = y, .p = p}).loss;
    CHECK(l > 0.0);
    CHECK(l == doctest::Approx(1e-7).epsilon(1e-6));
}

TEST_CASE("loss matches the direct formula and is non-negative") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> y(50), p(50);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = rng.chance(0.5) ? 1.0 : 0.0;
            p[i] = rng.chance(0.05) ? (rng.chance(0.5) ? 0.0 : 1.0) : rng.uniform();
        }
        const double l = bce_loss({.y = y, .p = p}).loss;
        CHECK(l >= 0.0);
        CHECK(l == doctest::Approx(bce_oracle::loss(y, p)).epsilon(1e-12));
    }
}

TEST_CASE("loss is permutation invariant") {
    Rng rng(3);
    std::vector<double> y(64), p(64);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.chance(0.5) ? 1.0 : 0.0;
        p[i] = rng.uniform();
    }
    const double base = bce_loss({.y = y, .p = p}).loss;
    std::vector<std::size_t> order(y.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span(order));
    std::vector<double> y2, p2;
    for (auto i : order) {
        y2.push_back(y[i]);
        p2.push_back(p[i]);
    }
    CHECK(bce_loss({.y = y2, .p = p2}).loss == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("gradient matches central differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) CHECK(bce_oracle::gradient_error(seed) < 1e-6);
}

TEST_CASE("the normaliser is the batch pixel count") {
    const std::vector<double> y{1.0, 0.0}, p{0.25, 0.25};
    const BceResult a = bce_loss({.y = y, .p = p});
    const BceResult b = bce_loss({.y = y, .p = p, .count = 8});
    CHECK(b.loss == doctest::Approx(a.loss / 4.0));
    CHECK(b.dloss_dp[0] == doctest::Approx(a.dloss_dp[0] / 4.0));
}

TEST_CASE("logit gradient is (p - y) / M and equals the chain rule") {
    const std::vector<double> y{1.0, 0.0, 1.0}, p{0.2, 0.7, 0.999};
    const auto g = bce_logit_gradient({.y = y, .p = p, .count = 6});
    const auto d = bce_loss({.y = y, .p = p, .count = 6}).dloss_dp;
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(g[i] == doctest::Approx((p[i] - y[i]) / 6.0));
        CHECK(g[i] == doctest::Approx(d[i] * p[i] * (1.0 - p[i])));
    }
}

TEST_CASE("bad BCE inputs") {
    const std::vector<double> empty;
    CHECK(code_of([&] { bce_loss({.y = empty, .p = empty}); }) == ErrorCode::Argument);
    const std::vector<double> y{0.5}, p{0.5}, two{0.5, 0.5}, one{1.0}, big{1.5};
    CHECK(code_of([&] { bce_loss({.y = y, .p = p}); }) == ErrorCode::Argument);
    CHECK(code_of([&] { bce_loss({.y = one, .p = two}); }) == ErrorCode::Shape);
    CHECK(code_of([&] { bce_loss({.y = one, .p = big}); }) == ErrorCode::Argument);
    CHECK(code_of([&] { bce_loss({.y = two, .p = two, .count = 1}); }) == ErrorCode::Argument);
}

TEST_CASE("first Adam step follows the hand-evaluated recurrence") {
    std::vector<double> w{1.0};
    const std::vector<double> g{2.5};
    AdamState s = AdamState::fresh(1);
    adam_step(w, g, s);
    const double m = 0.1 * 2.5, v = 0.001 * 2.5 * 2.5;
    const double mhat = m / (1.0 - 0.9), vhat = v / (1.0 - 0.999);
    const double expected = 1.0 - 1e-3 * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(w[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(1.0 - w[0] == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(s.step == 1);
    CHECK(s.m[0] == doctest::Approx(m));
    CHECK(s.v[0] == doctest::Approx(v));
}

TEST_CASE("Adam trajectory over several steps matches the recurrence") {
    Rng rng(4);
    std::vector<double> w(5), ref;
    for (auto& v : w) v = rng.uniform(-1, 1);
    ref = w;
    std::vector<double> m(5, 0.0), v(5, 0.0);
    AdamState s = AdamState::fresh(5, 0.01);
    for (int t = 1; t <= 30; ++t) {
        std::vector<double> g(5);
        for (auto& x : g) x = rng.uniform(-3, 3);
        adam_step(w, g, s);
        for (int i = 0; i < 5; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            const double mh = m[i] / (1.0 - std::pow(0.9, t)), vh = v[i] / (1.0 - std::pow(0.999, t));
            ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
        }
    }
    for (int i = 0; i < 5; ++i) CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("zero gradients leave parameters unchanged and count the step") {
    std::vector<double> w{0.3, -0.2};
    const std::vector<double> g{0.0, 0.0};
    AdamState s = AdamState::fresh(2);
    adam_step(w, g, s);
    CHECK(w == std::vector<double>{0.3, -0.2});
    CHECK(s.step == 1);
}

TEST_CASE("non-finite gradients fail without touching state") {
    std::vector<double> w{0.3, -0.2};
    AdamState s = AdamState::fresh(2);
    adam_step(w, std::vector<double>{1.0, 1.0}, s);
    const auto w0 = w;
    const AdamState s0 = s;
    CHECK(code_of([&] { adam_step(w, std::vector<double>{1.0, std::nan("")}, s); }) == ErrorCode::Numeric);
    CHECK(w == w0);
    CHECK(s.step == s0.step);
    CHECK(s.m == s0.m);
    CHECK(s.v == s0.v);
    CHECK(code_of([&] { adam_step(w, std::vector<double>{1.0}, s); }) == ErrorCode::Shape);
}

TEST_CASE("Adam is deterministic") {
    auto run = [] {
        Rng rng(5);
        std::vector<double> w(8, 0.1);
        AdamState s = AdamState::fresh(8);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> g(8);
            for (auto& x : g) x = rng.uniform(-1, 1);
            adam_step(w, g, s);
        }
        return w;
    };
    CHECK(run() == run());
}

TEST_CASE("best epoch selection") {
    CHECK(select_best_epoch(curve_of({0.2, 0.5, 0.9, 0.88})) == 3);
    CHECK(select_best_epoch(curve_of({0.7, 0.7})) == 1);
    CHECK(select_best_epoch(curve_of({0.1})) == 1);
    CHECK(code_of([] { select_best_epoch({}); }) == ErrorCode::Argument);
    auto c = curve_of({0.2, 0.9, 0.4});
    for (double v : {0.85, 0.1, 0.89}) {
        c.push_back({1.0, 1.0, v, 0.5});
        CHECK(select_best_epoch(c) == 2);
    }
}

TEST_CASE("curve CSV format and round trip") {
    EpochCurve c{{0.5, 0.25, 0.75, 0.875}, {0.1, 0.2, 0.3, 0.9}};
    CHECK(curve_csv(c) == "epoch,train_loss,val_loss,val_f1,val_oa\n1,0.5,0.25,0.75,0.875\n2,0.1,0.2,0.3,0.9\n");
    testing::TempDir dir;
    Rng rng(6);
    EpochCurve r;
    for (int i = 0; i < 15; ++i) r.push_back({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    write_curve_csv(r, dir / "c.csv");
    CHECK(read_curve_csv(dir / "c.csv") == r);
    testing::write_text(dir / "bad.csv", "epoch,loss\n1,2\n");
    CHECK(code_of([&] { read_curve_csv(dir / "bad.csv"); }) == ErrorCode::Format);
    testing::write_text(dir / "gap.csv", "epoch,train_loss,val_loss,val_f1,val_oa\n2,1,1,1,1\n");
    CHECK(code_of([&] { read_curve_csv(dir / "gap.csv"); }) == ErrorCode::Format);
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-7) == "1e-07");
}
