#pragma once

#include "urbanmap/datapipe.hpp"
#include "urbanmap/evalmetrics.hpp"
#include "urbanmap/geotile.hpp"
#include "urbanmap/micronet.hpp"
#include "urbanmap/optimloss.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace urbanmap {

inline constexpr int kPass1Epochs = 20;
inline constexpr int kPass2Epochs = 10;
inline constexpr int kDefaultBatch = 8;

struct TrainConfig {
    int epochs = kPass1Epochs;
    int batch_size = kDefaultBatch;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int threads = 1;
    // When set, epoch_NNN.ckpt, best.ckpt and curve.csv are written here.
    std::optional<std::filesystem::path> checkpoint_dir;
    std::function<void(int epoch, const EpochRecord&)> on_epoch;

    void validate() const;
};

struct PassArtifacts {
    NetParams params;  // best-epoch parameters
    NetConfig cfg;
    EpochCurve curve;
    int best_epoch = 0;
    std::filesystem::path checkpoint_path;  // empty when nothing was written
};

struct PipelineModel {
    PassArtifacts pass1;
    PassArtifacts pass2;
};

// Batched BCE/Adam training with per-epoch validation. Throws
// ErrorCode::Numeric naming the epoch and batch if the loss becomes non-finite.
PassArtifacts train_pass(const std::vector<Sample>& train, const std::vector<Sample>& val, const NetConfig& cfg,
                         const TrainConfig& tcfg);

ConfusionCounts pooled_confusion(const NetParams& params, const NetConfig& cfg, const std::vector<Sample>& samples,
                                 int threads = 1);

// Replaces each image with its pass-1 prediction as a {0,1} single-channel
// tensor; targets pass through unchanged.
std::vector<Sample> build_pass2_dataset(const PassArtifacts& pass1, const std::vector<Sample>& samples, int threads = 1);

struct InferOptions {
    int patch = 256;
    PadMode pad_mode = PadMode::Reflect;
    int overlap_margin = 0;  // > 0 enables overlapping windows with center crop
    double threshold = 0.5;
    int threads = 1;
};

// Predicts every patch of an RGB raster with one network; output keeps the
// raster's geo and crs.
BinaryMask predict_raster(const PassArtifacts& pass, const Raster& tile, const InferOptions& opts = {});
BinaryMask predict_raster(const PassArtifacts& pass, const BinaryMask& mask, const InferOptions& opts = {});

// Pass 1 on the RGB tile, then pass 2 on the merged pass-1 mask.
BinaryMask infer_tile(const PipelineModel& model, const Raster& tile, const InferOptions& opts = {});

struct CorpusResult {
    std::vector<std::filesystem::path> masks;  // one per successful tile
    std::vector<std::string> failures;         // "path: message"
    std::optional<std::filesystem::path> mosaic;
};

// Writes <stem>_mask.pgm per tile into out_dir, then mosaic.pgm over the
// successful tiles. Tile failures are collected, not thrown.
CorpusResult infer_corpus(const PipelineModel& model, const std::vector<std::filesystem::path>& tiles,
                          const std::filesystem::path& out_dir, const InferOptions& opts = {}, bool mosaic = true);

struct PipelineConfig {
    NetConfig net;  // in_channels is set per pass
    int target = 256;
    int epochs1 = kPass1Epochs;
    int epochs2 = kPass2Epochs;
    int batch_size = kDefaultBatch;
    double lr = 1e-3;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    int threads = 1;
    std::function<void(int pass, int epoch, const EpochRecord&)> on_epoch;
};

struct TrainedPipeline {
    PipelineModel model;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> val_indices;
};

// Both passes on one seeded split; out_dir receives pass1/ and pass2/.
TrainedPipeline train_pipeline(const std::vector<Sample>& samples, const PipelineConfig& cfg,
                               const std::optional<std::filesystem::path>& out_dir = std::nullopt);

PipelineModel load_pipeline(const std::filesystem::path& model_dir);

std::vector<Sample> load_samples(const std::vector<SamplePair>& pairs, int target, int threads = 1);

}  // namespace urbanmap
