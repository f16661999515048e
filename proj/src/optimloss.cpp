#include "urbanmap/optimloss.hpp"

#include "urbanmap/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace urbanmap {

BceResult bce_loss(const BceTerms& t) {
    if (t.y.empty()) fail(ErrorCode::Argument, "binary cross-entropy needs at least one element");
    if (t.y.size() != t.p.size()) fail(ErrorCode::Shape, "targets and predictions differ in length");
    const std::size_t m = t.count == 0 ? t.y.size() : t.count;
    if (m < t.y.size()) fail(ErrorCode::Argument, "normaliser M is smaller than the number of terms");
    if (!(t.clamp_eps > 0.0 && t.clamp_eps < 0.5)) fail(ErrorCode::Argument, "clamp epsilon must be in (0, 0.5)");

    const double inv_m = 1.0 / static_cast<double>(m);
    BceResult r;
    r.dloss_dp.resize(t.y.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        const double y = t.y[i];
        if (y != 0.0 && y != 1.0) fail(ErrorCode::Argument, "targets must be 0 or 1");
        if (!(t.p[i] >= 0.0 && t.p[i] <= 1.0)) fail(ErrorCode::Argument, "predictions must lie in [0, 1]");
        const double p = std::clamp(t.p[i], t.clamp_eps, 1.0 - t.clamp_eps);
        sum += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        r.dloss_dp[i] = -inv_m * (y / p - (1.0 - y) / (1.0 - p));
    }
    r.loss = -sum * inv_m;
    return r;
}

std::vector<double> bce_logit_gradient(const BceTerms& t) {
    if (t.y.empty()) fail(ErrorCode::Argument, "binary cross-entropy needs at least one element");
    if (t.y.size() != t.p.size()) fail(ErrorCode::Shape, "targets and predictions differ in length");
    const std::size_t m = t.count == 0 ? t.y.size() : t.count;
    if (m < t.y.size()) fail(ErrorCode::Argument, "normaliser M is smaller than the number of terms");
    const double inv_m = 1.0 / static_cast<double>(m);
    std::vector<double> g(t.y.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (t.p[i] - t.y[i]) * inv_m;
    return g;
}

AdamState AdamState::fresh(std::size_t parameter_count, double lr) {
    AdamState s;
    s.m.assign(parameter_count, 0.0);
    s.v.assign(parameter_count, 0.0);
    s.lr = lr;
    return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
        fail(ErrorCode::Shape, "Adam state, parameters and gradients differ in size");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            fail(ErrorCode::Numeric, "non-finite gradient at parameter " + std::to_string(i));

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(state.beta1, t);
    const double correct2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / correct1;
        const double v_hat = state.v[i] / correct2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

int select_best_epoch(const EpochCurve& curve) {
    if (curve.empty()) fail(ErrorCode::Argument, "epoch curve is empty");
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].val_f1 > curve[best].val_f1) best = i;
    return static_cast<int>(best) + 1;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string curve_csv(const EpochCurve& curve) {
    std::string out = "epoch,train_loss,val_loss,val_f1,val_oa\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto& r = curve[i];
        out += std::to_string(i + 1) + ',' + format_number(r.train_loss) + ',' + format_number(r.val_loss) + ',' +
               format_number(r.val_f1) + ',' + format_number(r.val_oa) + '\n';
    }
    return out;
}

void write_curve_csv(const EpochCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << curve_csv(curve);
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

EpochCurve read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "epoch,train_loss,val_loss,val_f1,val_oa") fail(ErrorCode::Format, "unexpected curve header in " + path.string());
    EpochCurve curve;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double v[5];
        std::size_t pos = 0;
        for (int i = 0; i < 5; ++i) {
            const std::size_t end = std::min(line.find(',', pos), line.size());
            auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, v[i]);
            if (ec != std::errc{} || ptr != line.data() + end) fail(ErrorCode::Format, "bad curve row in " + path.string());
            pos = end + 1;
        }
        if (static_cast<std::size_t>(v[0]) != curve.size() + 1) fail(ErrorCode::Format, "curve epochs out of order in " + path.string());
        curve.push_back({v[1], v[2], v[3], v[4]});
    }
    return curve;
}

}  // namespace urbanmap
