#include "urbanmap/urbanmap.h"

#include "urbanmap/baselines.hpp"
#include "urbanmap/error.hpp"
#include "urbanmap/postproc.hpp"
#include "urbanmap/synthmap.hpp"
#include "urbanmap/trainer.hpp"

#include <cstring>
#include <new>
#include <string>

using namespace urbanmap;

struct um_raster {
    Raster r;
};

struct um_model {
    PipelineModel m;
};

namespace {

thread_local std::string last_error;

um_status set_error(um_status s, const char* msg) {
    last_error = msg;
    return s;
}

template <class F>
um_status guard(F&& f) {
    try {
        f();
        last_error.clear();
        return UM_OK;
    } catch (const Error& e) {
        return set_error(static_cast<um_status>(static_cast<int>(e.code())), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(UM_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(UM_ERR_INTERNAL, e.what());
    }
}

void need(const void* p, const char* what) {
    if (!p) throw Error(ErrorCode::Argument, std::string(what) + " is null");
}

BinaryMask as_mask(const um_raster* r) {
    if (r->r.channels != 1) fail(ErrorCode::Shape, "mask rasters must have one channel");
    return mask_from_raster(r->r);
}

um_raster* wrap(Raster r) { return new um_raster{std::move(r)}; }
um_raster* wrap(const BinaryMask& m) { return new um_raster{mask_to_raster(m)}; }

InferOptions to_infer(const um_infer_options* o) {
    um_infer_options d;
    um_infer_options_default(&d);
    if (!o) o = &d;
    InferOptions io;
    io.patch = o->patch;
    io.pad_mode = o->zero_pad ? PadMode::Zero : PadMode::Reflect;
    io.overlap_margin = o->overlap_margin;
    io.threshold = o->threshold;
    io.threads = o->threads < 1 ? 1 : o->threads;
    return io;
}

um_metrics to_c(const MetricReport& r) {
    return {r.precision, r.recall, r.f1, r.iou, r.overall_accuracy,
            {r.counts.tp, r.counts.fp, r.counts.fn, r.counts.tn}};
}

}  // namespace

extern "C" {

const char* um_last_error(void) { return last_error.c_str(); }

const char* um_status_name(um_status status) {
    switch (status) {
        case UM_OK: return "ok";
        case UM_ERR_NULL: return "null";
        case UM_ERR_INTERNAL: return "internal";
        default:
            if (status >= UM_ERR_IO && status <= UM_ERR_PLACEMENT) return to_string(static_cast<ErrorCode>(status));
            return "unknown";
    }
}

const char* um_version(void) { return "1.0.0"; }

um_status um_raster_create(int width, int height, int channels, um_raster** out) {
    if (!out) return set_error(UM_ERR_NULL, "out is null");
    return guard([&] {
        if (width < 1 || height < 1) fail(ErrorCode::Argument, "raster dimensions must be positive");
        if (channels != 1 && channels != 3) fail(ErrorCode::Argument, "channels must be 1 or 3");
        *out = wrap(Raster(width, height, channels));
    });
}

um_status um_raster_read(const char* path, um_raster** out) {
    if (!path || !out) return set_error(UM_ERR_NULL, "path or out is null");
    return guard([&] { *out = wrap(read_image(path)); });
}

um_status um_raster_write(const um_raster* r, const char* path) {
    if (!r || !path) return set_error(UM_ERR_NULL, "raster or path is null");
    return guard([&] { write_image(r->r, path); });
}

void um_raster_free(um_raster* r) { delete r; }

um_status um_raster_info_get(const um_raster* r, um_raster_info* out) {
    if (!r || !out) return set_error(UM_ERR_NULL, "raster or out is null");
    *out = {};
    out->width = r->r.width;
    out->height = r->r.height;
    out->channels = r->r.channels;
    if (r->r.geo) {
        const auto& g = *r->r.geo;
        out->has_geo = 1;
        out->geo = {g.origin_x, g.origin_y, g.pixel_w, g.pixel_h, g.rot_xy, g.rot_yx};
    }
    out->has_crs = r->r.crs ? 1 : 0;
    return UM_OK;
}

uint8_t* um_raster_data(um_raster* r) { return r ? r->r.data.data() : nullptr; }

um_status um_raster_set_geo(um_raster* r, const um_geo* geo) {
    if (!r) return set_error(UM_ERR_NULL, "raster is null");
    return guard([&] {
        if (!geo) {
            r->r.geo.reset();
            return;
        }
        Geotransform g{geo->origin_x, geo->origin_y, geo->pixel_w, geo->pixel_h, geo->rot_xy, geo->rot_yx};
        validate(g);
        r->r.geo = g;
    });
}

um_status um_raster_crs(const um_raster* r, char* buf, size_t cap, size_t* needed) {
    if (!r) return set_error(UM_ERR_NULL, "raster is null");
    const std::string s = r->r.crs.value_or("");
    if (needed) *needed = s.size() + 1;
    if (buf && cap > 0) {
        const size_t n = s.size() < cap - 1 ? s.size() : cap - 1;
        std::memcpy(buf, s.data(), n);
        buf[n] = '\0';
    }
    return UM_OK;
}

um_status um_raster_set_crs(um_raster* r, const char* crs) {
    if (!r) return set_error(UM_ERR_NULL, "raster is null");
    if (crs && *crs)
        r->r.crs = crs;
    else
        r->r.crs.reset();
    return UM_OK;
}

um_status um_pixel_to_world(const um_raster* r, double col, double row, double* x, double* y) {
    if (!r || !x || !y) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        if (!r->r.geo) fail(ErrorCode::Crs, "raster has no geotransform");
        std::tie(*x, *y) = pixel_to_world(*r->r.geo, col, row);
    });
}

void um_synth_options_default(um_synth_options* o) {
    if (!o) return;
    const CorpusSpec d;
    *o = {d.count, d.base.width, d.seed, d.hard ? 1 : 0, d.tiles, d.tile_size};
}

um_status um_synth_corpus(const um_synth_options* o, const char* out_dir) {
    if (!o || !out_dir) return set_error(UM_ERR_NULL, "options or out_dir is null");
    return guard([&] {
        if (o->count < 1) fail(ErrorCode::Argument, "count must be >= 1");
        if (o->size < 16) fail(ErrorCode::Argument, "size must be >= 16");
        if (o->tiles < 0 || o->tile_size < 0) fail(ErrorCode::Argument, "tile settings must be non-negative");
        CorpusSpec cs;
        cs.count = o->count;
        cs.base.width = cs.base.height = o->size;
        cs.seed = o->seed;
        cs.hard = o->hard != 0;
        cs.tiles = o->tiles;
        cs.tile_size = o->tile_size;
        generate_corpus(cs, out_dir);
    });
}

void um_train_options_default(um_train_options* o) {
    if (!o) return;
    const PipelineConfig d;
    *o = {};
    o->epochs1 = d.epochs1;
    o->epochs2 = d.epochs2;
    o->batch = d.batch_size;
    o->target = d.target;
    o->base_channels = d.net.base_channels;
    o->depth = d.net.depth;
    o->lr = d.lr;
    o->train_fraction = d.train_fraction;
    o->seed = d.seed;
    o->threads = d.threads;
}

um_status um_train(const char* image_dir, const char* mask_dir, const um_train_options* o, const char* out_dir,
                   um_model** out) {
    if (!image_dir || !mask_dir || !o) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        if (o->target < 16) fail(ErrorCode::Argument, "target size must be >= 16");
        PipelineConfig pc;
        pc.net.base_channels = o->base_channels;
        pc.net.depth = o->depth;
        pc.net.validate();
        if (o->target % pc.net.divisor() != 0)
            fail(ErrorCode::Argument, "target size must be divisible by " + std::to_string(pc.net.divisor()));
        pc.target = o->target;
        pc.epochs1 = o->epochs1;
        pc.epochs2 = o->epochs2;
        pc.batch_size = o->batch;
        pc.lr = o->lr;
        pc.train_fraction = o->train_fraction;
        pc.seed = o->seed;
        pc.threads = o->threads < 1 ? 1 : o->threads;
        if (o->on_epoch) {
            pc.on_epoch = [o](int pass, int epoch, const EpochRecord& r) {
                o->on_epoch(o->user, pass, epoch, r.train_loss, r.val_loss, r.val_f1, r.val_oa);
            };
        }
        const auto pairs = discover_pairs(image_dir, mask_dir);
        const auto samples = load_samples(pairs, pc.target, pc.threads);
        std::optional<std::filesystem::path> dir;
        if (out_dir) dir = out_dir;
        auto trained = train_pipeline(samples, pc, dir);
        if (out) *out = new um_model{std::move(trained.model)};
    });
}

um_status um_model_load(const char* model_dir, um_model** out) {
    if (!model_dir || !out) return set_error(UM_ERR_NULL, "model_dir or out is null");
    return guard([&] { *out = new um_model{load_pipeline(model_dir)}; });
}

void um_model_free(um_model* m) { delete m; }

um_status um_model_info_get(const um_model* m, um_model_info* out) {
    if (!m || !out) return set_error(UM_ERR_NULL, "model or out is null");
    *out = {};
    out->base_channels = m->m.pass1.cfg.base_channels;
    out->depth = m->m.pass1.cfg.depth;
    out->best_epoch1 = m->m.pass1.best_epoch;
    out->best_epoch2 = m->m.pass2.best_epoch;
    out->epochs1 = m->m.pass1.curve.size();
    out->epochs2 = m->m.pass2.curve.size();
    out->parameters = m->m.pass1.params.values.size();
    return UM_OK;
}

um_status um_model_curve(const um_model* m, int pass, um_epoch_record* buf, size_t cap, size_t* count) {
    if (!m) return set_error(UM_ERR_NULL, "model is null");
    if (pass != 1 && pass != 2) return set_error(UM_ERR_ARGUMENT, "pass must be 1 or 2");
    const auto& curve = pass == 1 ? m->m.pass1.curve : m->m.pass2.curve;
    if (count) *count = curve.size();
    for (size_t i = 0; buf && i < cap && i < curve.size(); ++i)
        buf[i] = {curve[i].train_loss, curve[i].val_loss, curve[i].val_f1, curve[i].val_oa};
    return UM_OK;
}

void um_infer_options_default(um_infer_options* o) {
    if (!o) return;
    const InferOptions d;
    *o = {d.patch, d.pad_mode == PadMode::Zero ? 1 : 0, d.overlap_margin, d.threshold, d.threads};
}

um_status um_infer_tile(const um_model* m, const um_raster* tile, const um_infer_options* o, um_raster** out_mask) {
    if (!m || !tile || !out_mask) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] { *out_mask = wrap(infer_tile(m->m, tile->r, to_infer(o))); });
}

um_status um_predict_pass(const um_model* m, int pass, const um_raster* input, const um_infer_options* o,
                          um_raster** out_mask) {
    if (!m || !input || !out_mask) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        if (pass == 1) {
            *out_mask = wrap(predict_raster(m->m.pass1, input->r, to_infer(o)));
        } else if (pass == 2) {
            *out_mask = wrap(predict_raster(m->m.pass2, as_mask(input), to_infer(o)));
        } else {
            fail(ErrorCode::Argument, "pass must be 1 or 2");
        }
    });
}

um_status um_predict_corpus(const um_model* m, const char* const* tiles, size_t n_tiles, const char* out_dir,
                            const um_infer_options* o, int mosaic, um_message_fn on_failure, void* user,
                            size_t* failed) {
    if (!m || (!tiles && n_tiles) || !out_dir) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        std::vector<std::filesystem::path> paths;
        for (size_t i = 0; i < n_tiles; ++i) {
            need(tiles[i], "tile path");
            paths.emplace_back(tiles[i]);
        }
        const auto res = infer_corpus(m->m, paths, out_dir, to_infer(o), mosaic != 0);
        if (failed) *failed = res.failures.size();
        if (on_failure)
            for (const auto& f : res.failures) on_failure(user, f.c_str());
    });
}

um_status um_mosaic(const um_raster* const* masks, size_t n, um_raster** out) {
    if (!masks || !out) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        std::vector<BinaryMask> ms;
        for (size_t i = 0; i < n; ++i) {
            need(masks[i], "mask");
            ms.push_back(as_mask(masks[i]));
        }
        *out = wrap(mosaic_tiles(ms));
    });
}

um_status um_confuse(const um_raster* pred, const um_raster* truth, um_confusion* out) {
    if (!pred || !truth || !out) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        const auto c = confuse(as_mask(pred), as_mask(truth));
        *out = {c.tp, c.fp, c.fn, c.tn};
    });
}

um_status um_metrics_from(const um_confusion* c, um_metrics* out) {
    if (!c || !out) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] { *out = to_c(metrics({c->tp, c->fp, c->fn, c->tn})); });
}

um_status um_aggregate(const um_metrics* scenes, size_t n, um_corpus_report* out) {
    if ((!scenes && n) || !out) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        std::vector<MetricReport> rs(n);
        for (size_t i = 0; i < n; ++i) {
            const auto& s = scenes[i];
            rs[i] = {s.precision, s.recall, s.f1, s.iou, s.overall_accuracy,
                     {s.counts.tp, s.counts.fp, s.counts.fn, s.counts.tn}};
        }
        const CorpusReport r = aggregate(rs);
        *out = {to_c(r.pooled), r.macro_precision, r.macro_recall, r.macro_f1, r.macro_iou, r.macro_oa, r.scenes};
    });
}

um_status um_kmeans_segment(const um_raster* img, int k, int max_iters, uint64_t seed, um_raster** out) {
    if (!img || !out) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        KMeansConfig cfg;
        cfg.k = k;
        cfg.max_iters = max_iters;
        cfg.seed = seed;
        *out = wrap(kmeans_segment(img->r, cfg));
    });
}

um_status um_threshold_segment(const um_raster* img, int cut, um_raster** out) {
    if (!img || !out) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] {
        ThresholdConfig cfg;
        if (cut >= 0) {
            cfg.mode = ThresholdMode::Fixed;
            cfg.luminance_cut = cut;
        }
        *out = wrap(threshold_segment(img->r, cfg));
    });
}

um_status um_otsu_cut(const um_raster* img, int* cut) {
    if (!img || !cut) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] { *cut = otsu_cut(luminance_histogram(img->r)); });
}

um_status um_majority_resample(const um_raster* mask, int factor, um_raster** out) {
    if (!mask || !out) return set_error(UM_ERR_NULL, "null argument");
    return guard([&] { *out = wrap(majority_resample(as_mask(mask), {factor})); });
}

}  // extern "C"
