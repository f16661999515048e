#include "urbanmap/trainer.hpp"

#include "urbanmap/error.hpp"
#include "urbanmap/parallel.hpp"
#include "urbanmap/rng.hpp"

#include <cmath>
#include <cstdio>

namespace fs = std::filesystem;

namespace urbanmap {

namespace {

struct SampleStep {
    double loss_share = 0.0;
    NetParams grad;
};

SampleStep sample_step(const NetParams& params, const NetConfig& cfg, const Sample& s, std::size_t batch_pixels) {
    ForwardResult fwd = forward(params, cfg, s.image);
    std::vector<double> target(s.mask.data.begin(), s.mask.data.end());
    const BceTerms terms{.y = target, .p = fwd.output.values, .count = batch_pixels};
    const double loss = bce_loss(terms).loss;
    Tensor dz(1, fwd.output.height, fwd.output.width);
    dz.values = bce_logit_gradient(terms);
    return {loss, backward_logits(params, cfg, fwd.cache, dz)};
}

void check_samples(const std::vector<Sample>& samples, const NetConfig& cfg, const char* which) {
    for (const auto& s : samples) {
        if (s.image.channels != cfg.in_channels)
            fail(ErrorCode::Shape, std::string(which) + " sample has " + std::to_string(s.image.channels) +
                                       " channels, network expects " + std::to_string(cfg.in_channels));
        if (s.mask.width != s.image.width || s.mask.height != s.image.height)
            fail(ErrorCode::Shape, std::string(which) + " sample mask and image sizes differ");
    }
}

std::string epoch_file(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
    return buf;
}

struct ValidationResult {
    double loss = 0.0;
    ConfusionCounts counts;
};

ValidationResult validate_pass(const NetParams& params, const NetConfig& cfg, const std::vector<Sample>& val, int threads) {
    std::vector<double> losses(val.size());
    std::vector<ConfusionCounts> counts(val.size());
    std::size_t pixels = 0;
    for (const auto& s : val) pixels += s.mask.data.size();
    parallel_for(val.size(), threads, [&](std::size_t i) {
        const Tensor probs = infer(params, cfg, val[i].image);
        std::vector<double> target(val[i].mask.data.begin(), val[i].mask.data.end());
        losses[i] = bce_loss({.y = target, .p = probs.values, .count = pixels}).loss;
        counts[i] = confuse(threshold_probabilities(probs), val[i].mask);
    });
    ValidationResult r;
    for (std::size_t i = 0; i < val.size(); ++i) {
        r.loss += losses[i];
        r.counts += counts[i];
    }
    return r;
}

template <class Image>
Tensor patch_tensor(const Image& img) {
    if constexpr (std::is_same_v<Image, Raster>) {
        return raster_to_tensor(img);
    } else {
        return mask_to_tensor(img);
    }
}

template <class Image>
BinaryMask predict_image(const PassArtifacts& pass, const Image& src, const InferOptions& opts) {
    if (src.channels != pass.cfg.in_channels)
        fail(ErrorCode::Shape, "raster has " + std::to_string(src.channels) + " channels, network expects " +
                                   std::to_string(pass.cfg.in_channels));
    if (opts.patch % pass.cfg.divisor() != 0)
        fail(ErrorCode::Argument, "patch size must be divisible by " + std::to_string(pass.cfg.divisor()));
    auto run = [&](const auto& patches) {
        std::vector<MaskPatch> out(patches.size());
        parallel_for(patches.size(), opts.threads, [&](std::size_t i) {
            out[i].grid_col = patches[i].grid_col;
            out[i].grid_row = patches[i].grid_row;
            out[i].pixels = predict_mask(pass.params, pass.cfg, patch_tensor(patches[i].pixels), opts.threshold);
        });
        return out;
    };
    if (opts.overlap_margin > 0) {
        auto [grid, patches] = split_overlapping(src, opts.patch, opts.overlap_margin, opts.pad_mode);
        return merge_center_crop(grid, run(patches), src.geo, src.crs);
    }
    auto [grid, patches] = split(src, opts.patch, opts.pad_mode);
    return merge_patches(grid, run(patches), src.geo, src.crs);
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) fail(ErrorCode::Argument, "epochs must be >= 1");
    if (batch_size < 1) fail(ErrorCode::Argument, "batch size must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::Argument, "learning rate must be positive");
}

PassArtifacts train_pass(const std::vector<Sample>& train, const std::vector<Sample>& val, const NetConfig& cfg,
                         const TrainConfig& tcfg) {
    cfg.validate();
    tcfg.validate();
    if (train.empty()) fail(ErrorCode::EmptyDataset, "no training samples");
    if (val.empty()) fail(ErrorCode::EmptyDataset, "no validation samples");
    check_samples(train, cfg, "training");
    check_samples(val, cfg, "validation");
    if (tcfg.checkpoint_dir) {
        std::error_code ec;
        fs::create_directories(*tcfg.checkpoint_dir, ec);
        if (ec) fail(ErrorCode::Io, "cannot create " + tcfg.checkpoint_dir->string());
    }

    PassArtifacts art;
    art.cfg = cfg;
    NetParams params = init_params(cfg, mix_seed(tcfg.seed, 0x1a17));
    AdamState adam = AdamState::fresh(params.values.size(), tcfg.lr);
    NetParams best_params = params;
    double best_f1 = -1.0;

    std::size_t train_pixels = 0;
    for (const auto& s : train) train_pixels += s.mask.data.size();

    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        const auto batches = make_batches(train.size(), static_cast<std::size_t>(tcfg.batch_size), tcfg.seed, epoch);
        double loss_sum = 0.0;  // sum of per-batch means weighted by batch pixels
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            std::size_t batch_pixels = 0;
            for (auto i : batch) batch_pixels += train[i].mask.data.size();
            std::vector<SampleStep> steps(batch.size());
            parallel_for(batch.size(), tcfg.threads,
                         [&](std::size_t j) { steps[j] = sample_step(params, cfg, train[batch[j]], batch_pixels); });
            // Fixed summation order keeps results independent of scheduling.
            NetParams grad = std::move(steps[0].grad);
            double batch_loss = steps[0].loss_share;
            for (std::size_t j = 1; j < steps.size(); ++j) {
                batch_loss += steps[j].loss_share;
                for (std::size_t k = 0; k < grad.values.size(); ++k) grad.values[k] += steps[j].grad.values[k];
            }
            if (!std::isfinite(batch_loss))
                fail(ErrorCode::Numeric, "non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                             std::to_string(b + 1));
            try {
                adam_step(params.values, grad.values, adam);
            } catch (const Error& e) {
                fail(ErrorCode::Numeric, std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                             std::to_string(b + 1));
            }
            loss_sum += batch_loss * static_cast<double>(batch_pixels);
        }

        const ValidationResult v = validate_pass(params, cfg, val, tcfg.threads);
        const MetricReport report = metrics(v.counts);
        const EpochRecord rec{loss_sum / static_cast<double>(train_pixels), v.loss, report.f1, report.overall_accuracy};
        art.curve.push_back(rec);
        if (rec.val_f1 > best_f1) {
            best_f1 = rec.val_f1;
            best_params = params;
        }
        if (tcfg.checkpoint_dir) save_checkpoint(*tcfg.checkpoint_dir / epoch_file(epoch), cfg, params);
        if (tcfg.on_epoch) tcfg.on_epoch(epoch, rec);
    }

    art.best_epoch = select_best_epoch(art.curve);
    art.params = std::move(best_params);
    if (tcfg.checkpoint_dir) {
        art.checkpoint_path = *tcfg.checkpoint_dir / "best.ckpt";
        std::error_code ec;
        fs::copy_file(*tcfg.checkpoint_dir / epoch_file(art.best_epoch), art.checkpoint_path,
                      fs::copy_options::overwrite_existing, ec);
        if (ec) fail(ErrorCode::Io, "cannot write " + art.checkpoint_path.string());
        write_curve_csv(art.curve, *tcfg.checkpoint_dir / "curve.csv");
    }
    return art;
}

ConfusionCounts pooled_confusion(const NetParams& params, const NetConfig& cfg, const std::vector<Sample>& samples,
                                 int threads) {
    if (samples.empty()) return {};
    return validate_pass(params, cfg, samples, threads).counts;
}

std::vector<Sample> build_pass2_dataset(const PassArtifacts& pass1, const std::vector<Sample>& samples, int threads) {
    std::vector<Sample> out(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        out[i].image = mask_to_tensor(predict_mask(pass1.params, pass1.cfg, samples[i].image));
        out[i].mask = samples[i].mask;
    });
    return out;
}

BinaryMask predict_raster(const PassArtifacts& pass, const Raster& tile, const InferOptions& opts) {
    return predict_image(pass, tile, opts);
}

BinaryMask predict_raster(const PassArtifacts& pass, const BinaryMask& mask, const InferOptions& opts) {
    return predict_image(pass, mask, opts);
}

BinaryMask infer_tile(const PipelineModel& model, const Raster& tile, const InferOptions& opts) {
    validate(tile);
    if (tile.channels != 3) fail(ErrorCode::Argument, "tiles must be RGB");
    const BinaryMask first = predict_raster(model.pass1, tile, opts);
    return predict_raster(model.pass2, first, opts);
}

CorpusResult infer_corpus(const PipelineModel& model, const std::vector<fs::path>& tiles, const fs::path& out_dir,
                          const InferOptions& opts, bool mosaic) {
    if (tiles.empty()) fail(ErrorCode::Argument, "no tiles to process");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string());
    CorpusResult result;
    std::vector<BinaryMask> masks;
    for (const auto& path : tiles) {
        try {
            BinaryMask m = infer_tile(model, read_image(path), opts);
            const fs::path out = out_dir / (path.stem().string() + "_mask.pgm");
            write_image(m, out);
            result.masks.push_back(out);
            masks.push_back(std::move(m));
        } catch (const Error& e) {
            result.failures.push_back(path.string() + ": " + e.what());
        }
    }
    if (mosaic && !masks.empty()) {
        try {
            const fs::path out = out_dir / "mosaic.pgm";
            write_image(mosaic_tiles(masks), out);
            result.mosaic = out;
        } catch (const Error& e) {
            result.failures.push_back(std::string("mosaic: ") + e.what());
        }
    }
    return result;
}

std::vector<Sample> load_samples(const std::vector<SamplePair>& pairs, int target, int threads) {
    std::vector<Sample> out(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) { out[i] = load_sample(pairs[i], target); });
    return out;
}

TrainedPipeline train_pipeline(const std::vector<Sample>& samples, const PipelineConfig& cfg,
                               const std::optional<fs::path>& out_dir) {
    if (samples.empty()) fail(ErrorCode::EmptyDataset, "no samples to train on");
    TrainedPipeline out;
    std::tie(out.train_indices, out.val_indices) =
        split_indices(samples.size(), {.train_fraction = cfg.train_fraction, .seed = cfg.seed});
    std::vector<Sample> train, val;
    for (auto i : out.train_indices) train.push_back(samples[i]);
    for (auto i : out.val_indices) val.push_back(samples[i]);

    auto pass_config = [&](int pass, int epochs) {
        TrainConfig t;
        t.epochs = epochs;
        t.batch_size = cfg.batch_size;
        t.lr = cfg.lr;
        t.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(pass));
        t.threads = cfg.threads;
        if (out_dir) t.checkpoint_dir = *out_dir / ("pass" + std::to_string(pass));
        if (cfg.on_epoch) t.on_epoch = [&cfg, pass](int e, const EpochRecord& r) { cfg.on_epoch(pass, e, r); };
        return t;
    };

    NetConfig net1 = cfg.net;
    net1.in_channels = 3;
    out.model.pass1 = train_pass(train, val, net1, pass_config(1, cfg.epochs1));

    NetConfig net2 = cfg.net;
    net2.in_channels = 1;
    const auto train2 = build_pass2_dataset(out.model.pass1, train, cfg.threads);
    const auto val2 = build_pass2_dataset(out.model.pass1, val, cfg.threads);
    out.model.pass2 = train_pass(train2, val2, net2, pass_config(2, cfg.epochs2));
    return out;
}

PipelineModel load_pipeline(const fs::path& model_dir) {
    PipelineModel m;
    int pass = 1;
    for (PassArtifacts* art : {&m.pass1, &m.pass2}) {
        const fs::path dir = model_dir / ("pass" + std::to_string(pass));
        art->checkpoint_path = dir / "best.ckpt";
        std::tie(art->cfg, art->params) = load_checkpoint(art->checkpoint_path);
        art->curve = read_curve_csv(dir / "curve.csv");
        art->best_epoch = select_best_epoch(art->curve);
        ++pass;
    }
    if (m.pass1.cfg.in_channels != 3) fail(ErrorCode::Format, "pass-1 checkpoint must take 3 input channels");
    if (m.pass2.cfg.in_channels != 1) fail(ErrorCode::Format, "pass-2 checkpoint must take 1 input channel");
    return m;
}

}  // namespace urbanmap
