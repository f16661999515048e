#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace urbanmap {

// Pixel-wise binary cross-entropy terms. `count` is the normaliser M (pixels in
// the whole batch); 0 means "use y.size()". Passing a slice of a batch with
// the batch-wide M yields that slice's additive share of the batch loss.
struct BceTerms {
    std::span<const double> y;
    std::span<const double> p;
    std::size_t count = 0;
    double clamp_eps = 1e-7;
};

struct BceResult {
    double loss = 0.0;
    std::vector<double> dloss_dp;
};

// loss = -(1/M) * sum(y log p + (1 - y) log(1 - p)), p clamped to [eps, 1 - eps].
BceResult bce_loss(const BceTerms& t);

// Gradient of the unclamped loss with respect to the logits z (p = sigmoid(z)):
// (p - y) / M. Stays informative where the clamp would flatten dloss/dp.
std::vector<double> bce_logit_gradient(const BceTerms& t);

struct AdamState {
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState fresh(std::size_t parameter_count, double lr = 1e-3);
};

// Bias-corrected Adam update in place. Throws ErrorCode::Numeric, leaving both
// params and state untouched, if any gradient is non-finite.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct EpochRecord {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_f1 = 0.0;
    double val_oa = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

// Records for epochs 1..n, in order.
using EpochCurve = std::vector<EpochRecord>;

// 1-based epoch with the highest val_f1; the earliest wins ties.
int select_best_epoch(const EpochCurve& curve);

std::string curve_csv(const EpochCurve& curve);
void write_curve_csv(const EpochCurve& curve, const std::filesystem::path& path);
EpochCurve read_curve_csv(const std::filesystem::path& path);

// Shortest round-trip decimal form, independent of the C locale.
std::string format_number(double v);

}  // namespace urbanmap
