// urbanmap: command-line driver over the liburbanmap C interface.
#include "urbanmap/urbanmap.h"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure {
    std::string message;
};

void check(um_status s, const std::string& context) {
    if (s != UM_OK) throw Failure{context + ": " + um_last_error()};
}

struct RasterFree {
    void operator()(um_raster* r) const { um_raster_free(r); }
};
struct ModelFree {
    void operator()(um_model* m) const { um_model_free(m); }
};
using RasterPtr = std::unique_ptr<um_raster, RasterFree>;
using ModelPtr = std::unique_ptr<um_model, ModelFree>;

RasterPtr read_raster(const fs::path& p) {
    um_raster* r = nullptr;
    check(um_raster_read(p.string().c_str(), &r), p.string());
    return RasterPtr(r);
}

void write_raster(const um_raster* r, const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    check(um_raster_write(r, p.string().c_str()), p.string());
}

ModelPtr load_model(const fs::path& dir) {
    um_model* m = nullptr;
    check(um_model_load(dir.string().c_str(), &m), dir.string());
    return ModelPtr(m);
}

std::string fmt(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

bool is_sidecar(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".wld" || ext == ".crs" || ext == ".txt" || ext == ".csv" || p.filename().string().front() == '.';
}

// Image files of a directory (sorted), or the single given file.
std::vector<fs::path> list_images(const fs::path& p) {
    std::vector<fs::path> out;
    if (fs::is_regular_file(p)) return {p};
    if (!fs::is_directory(p)) throw Failure{p.string() + ": no such file or directory"};
    for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && !is_sidecar(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw Failure{p.string() + ": no images found"};
    return out;
}

class Fnv {
public:
    void add(const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void add_file(const fs::path& p) {
        const std::string name = p.filename().string();
        add(name.data(), name.size() + 1);
        std::ifstream in(p, std::ios::binary);
        std::vector<char> buf(1 << 16);
        while (in) {
            in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
            add(buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
        return buf;
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string hash_files(const std::vector<fs::path>& files) {
    Fnv h;
    for (const auto& f : files) {
        h.add_file(f);
        for (const auto& side : {fs::path(f).replace_extension(".wld"), fs::path(f).replace_extension(".crs")})
            if (fs::exists(side)) h.add_file(side);
    }
    return h.hex();
}

std::vector<fs::path> list_all(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename().string().front() != '.') out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// key=value lines; written to a temporary file and renamed into place.
class Manifest {
public:
    explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) { set("command", command); }
    void set(const std::string& k, const std::string& v) {
        for (auto& kv : items_)
            if (kv.first == k) {
                kv.second = v;
                return;
            }
        items_.emplace_back(k, v);
    }
    void write(const fs::path& path) {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        set("library_version", um_version());
        set("wall_time_s", fmt(wall));
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        const fs::path tmp = fs::path(path).concat(".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            for (const auto& [k, v] : items_) out << k << '=' << v << '\n';
            if (!out) throw Failure{tmp.string() + ": write failed"};
        }
        fs::rename(tmp, path);
    }

private:
    std::chrono::steady_clock::time_point start_;
    std::vector<std::pair<std::string, std::string>> items_;
};

// Options shared by every subcommand.
struct Common {
    int threads = 0;
    std::uint64_t seed = 0;
    std::string manifest;

    int thread_count() const {
        if (threads > 0) return threads;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--threads", c.threads, "Worker threads (0: machine parallelism)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", c.seed, "Seed for all randomness");
    sub->add_option("--manifest", c.manifest, "Run manifest path");
    sub->add_option("--config", "key=value file; command-line flags take precedence");
}

void record_options(Manifest& m, const CLI::App* sub) {
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config" || name == "manifest") continue;
        if (opt->get_type_size_max() == 0) {
            m.set(name, opt->count() > 0 ? "true" : "false");
        } else {
            const auto results = opt->results();
            std::string v;
            for (std::size_t i = 0; i < results.size(); ++i) v += (i ? " " : "") + results[i];
            if (results.empty()) {
                v = opt->get_default_str();
            }
            m.set(name, v);
        }
    }
}

um_infer_options infer_options(int patch, int overlap, double threshold, bool zero_pad, int threads) {
    um_infer_options o;
    um_infer_options_default(&o);
    o.patch = patch;
    o.overlap_margin = overlap;
    o.threshold = threshold;
    o.zero_pad = zero_pad ? 1 : 0;
    o.threads = threads;
    return o;
}

std::string metrics_row(const std::string& name, const um_metrics& m) {
    std::ostringstream s;
    s << name << ',' << m.counts.tp << ',' << m.counts.fp << ',' << m.counts.fn << ',' << m.counts.tn << ','
      << fmt(m.precision) << ',' << fmt(m.recall) << ',' << fmt(m.f1) << ',' << fmt(m.iou) << ','
      << fmt(m.overall_accuracy);
    return s.str();
}

constexpr const char* kMetricsHeader = "scene,tp,fp,fn,tn,precision,recall,f1,iou,oa";

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Failure{path + ": write failed"};
}

um_metrics scene_metrics(const um_raster* pred, const um_raster* truth, const std::string& what) {
    um_confusion c;
    check(um_confuse(pred, truth, &c), what);
    um_metrics m;
    check(um_metrics_from(&c, &m), what);
    return m;
}

// Injects key=value pairs from a --config file as flags, unless the same flag
// was given explicitly. Returns false (after printing) on a usage problem.
bool apply_config(CLI::App& app, std::vector<std::string>& args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end()) return true;
    if (std::next(it) == args.end()) {
        std::cerr << "error: --config needs a file\n";
        return false;
    }
    const std::string file = *std::next(it);
    args.erase(it, std::next(it, 2));
    CLI::App* sub = nullptr;
    for (const auto& a : args)
        if (!a.empty() && a[0] != '-') {
            sub = app.get_subcommand_no_throw(a);
            if (sub) break;
        }
    if (!sub) {
        std::cerr << "error: --config requires a subcommand\n";
        return false;
    }
    std::ifstream in(file);
    if (!in) {
        std::cerr << "error: cannot read config file " << file << '\n';
        return false;
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: " << file << ':' << lineno << ": expected key=value\n";
            return false;
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (!opt || key == "config") {
            std::cerr << "error: " << file << ':' << lineno << ": unknown key '" << key << "' for "
                      << sub->get_name() << '\n';
            return false;
        }
        if (std::find(args.begin(), args.end(), "--" + key) != args.end()) continue;
        if (opt->get_type_size_max() == 0) {
            if (value == "true" || value == "1") args.push_back("--" + key);
        } else {
            args.push_back("--" + key);
            args.push_back(value);
        }
    }
    return true;
}

void on_epoch(void*, int pass, int epoch, double train_loss, double val_loss, double val_f1, double val_oa) {
    std::fprintf(stderr, "pass %d epoch %d: train_loss %.6f val_loss %.6f val_f1 %.4f val_oa %.4f\n", pass, epoch,
                 train_loss, val_loss, val_f1, val_oa);
}

void on_tile_failure(void*, const char* msg) { std::fprintf(stderr, "tile failed: %s\n", msg); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Urban footprint extraction from scanned map tiles", "urbanmap"};
    app.require_subcommand(1);

    // synth
    Common synth_c;
    int synth_n = 58, synth_size = 128, synth_tiles = 2;
    bool synth_hard = false;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic map corpus");
    synth->add_option("--n", synth_n, "Number of scenes")->check(CLI::PositiveNumber);
    synth->add_option("--size", synth_size, "Scene edge in pixels")->check(CLI::Range(16, 8192));
    synth->add_flag("--hard", synth_hard, "Distractor-dense scenes with hard negatives");
    synth->add_option("--tiles", synth_tiles, "Adjacent georeferenced tiles")->check(CLI::NonNegativeNumber);
    synth->add_option("--out", synth_out, "Output directory")->required();
    add_common(synth, synth_c);

    // train
    Common train_c;
    std::string train_data, train_out;
    int epochs1 = 20, epochs2 = 10, batch = 8, target = 256, base = 16, depth = 4;
    double lr = 1e-3, train_fraction = 0.8;
    auto* train = app.add_subcommand("train", "Train the pass-1 and pass-2 networks");
    train->add_option("--data", train_data, "Corpus with images/ and masks/")->required();
    train->add_option("--epochs1", epochs1, "Pass-1 epochs")->check(CLI::PositiveNumber);
    train->add_option("--epochs2", epochs2, "Pass-2 epochs")->check(CLI::PositiveNumber);
    train->add_option("--batch", batch, "Batch size")->check(CLI::PositiveNumber);
    train->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    train->add_option("--target", target, "Training resolution")->check(CLI::Range(16, 4096));
    train->add_option("--base", base, "Base channel width")->check(CLI::Range(1, 512));
    train->add_option("--depth", depth, "Encoder depth")->check(CLI::Range(1, 12));
    train->add_option("--train-fraction", train_fraction, "Training share of the split")->check(CLI::Range(0.0, 1.0));
    train->add_option("--out", train_out, "Model directory")->required();
    add_common(train, train_c);

    // predict
    Common pred_c;
    std::string pred_model, pred_tiles, pred_out;
    int patch = 256, overlap = 0;
    double threshold = 0.5;
    bool zero_pad = false, no_mosaic = false;
    auto* predict = app.add_subcommand("predict", "Dual-pass prediction of map tiles");
    predict->add_option("--model", pred_model, "Model directory")->required();
    predict->add_option("--tiles", pred_tiles, "Tile file or directory")->required();
    predict->add_option("--out", pred_out, "Output directory")->required();
    predict->add_option("--patch", patch, "Patch size")->check(CLI::Range(16, 8192));
    predict->add_option("--overlap", overlap, "Overlap margin (0: disjoint patches)")->check(CLI::NonNegativeNumber);
    predict->add_option("--threshold", threshold, "Probability threshold")->check(CLI::Range(0.0, 1.0));
    predict->add_flag("--zero-pad", zero_pad, "Zero padding instead of reflection");
    predict->add_flag("--no-mosaic", no_mosaic, "Skip mosaic.pgm");
    add_common(predict, pred_c);

    // mosaic
    Common mos_c;
    std::string mos_masks, mos_out;
    auto* mosaic = app.add_subcommand("mosaic", "Assemble georeferenced masks into one raster");
    mosaic->add_option("--masks", mos_masks, "Mask file or directory")->required();
    mosaic->add_option("--out", mos_out, "Output mask")->required();
    add_common(mosaic, mos_c);

    // evaluate
    Common eval_c;
    std::string eval_pred, eval_truth, eval_csv;
    auto* evaluate = app.add_subcommand("evaluate", "Pixel metrics of predictions against ground truth");
    evaluate->add_option("--pred", eval_pred, "Predicted mask file or directory")->required();
    evaluate->add_option("--truth", eval_truth, "Ground-truth mask file or directory")->required();
    evaluate->add_option("--csv", eval_csv, "Per-scene CSV (default: stdout)");
    add_common(evaluate, eval_c);

    // compare
    Common cmp_c;
    std::string cmp_image, cmp_truth, cmp_model, cmp_csv;
    int cmp_k = 5, cmp_cut = -1, cmp_patch = 256;
    auto* compare = app.add_subcommand("compare", "U-Net against k-means and threshold baselines");
    compare->add_option("--image", cmp_image, "RGB image")->required();
    compare->add_option("--truth", cmp_truth, "Ground-truth mask")->required();
    compare->add_option("--model", cmp_model, "Model directory")->required();
    compare->add_option("--k", cmp_k, "k-means clusters")->check(CLI::Range(2, 64));
    compare->add_option("--cut", cmp_cut, "Fixed luminance cut (-1: Otsu)")->check(CLI::Range(-1, 255));
    compare->add_option("--patch", cmp_patch, "Patch size")->check(CLI::Range(16, 8192));
    compare->add_option("--csv", cmp_csv, "CSV output (default: stdout)");
    add_common(compare, cmp_c);

    // resample
    Common res_c;
    std::string res_mask, res_out;
    int factor = 20;
    auto* resample = app.add_subcommand("resample", "Majority block resampling of a mask");
    resample->add_option("--mask", res_mask, "Input mask")->required();
    resample->add_option("--factor", factor, "Block size")->check(CLI::Range(2, 100000));
    resample->add_option("--out", res_out, "Output mask")->required();
    add_common(resample, res_c);

    // curves
    Common cur_c;
    std::string cur_model, cur_out;
    auto* curves = app.add_subcommand("curves", "Export the training curves of a model");
    curves->add_option("--model", cur_model, "Model directory")->required();
    curves->add_option("--out", cur_out, "CSV output (default: stdout)");
    add_common(curves, cur_c);

    std::vector<std::string> args(argv + 1, argv + argc);
    if (!apply_config(app, args)) return kExitUsage;
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            Manifest m("synth");
            um_synth_options o;
            um_synth_options_default(&o);
            o.count = synth_n;
            o.size = synth_size;
            o.seed = synth_c.seed;
            o.hard = synth_hard ? 1 : 0;
            o.tiles = synth_tiles;
            check(um_synth_corpus(&o, synth_out.c_str()), "synth");
            record_options(m, synth);
            m.set("outputs", synth_out);
            m.set("dataset_hash", hash_files(list_all(fs::path(synth_out) / "images")));
            m.write(synth_c.manifest.empty() ? fs::path(synth_out) / "run_manifest.txt" : fs::path(synth_c.manifest));
        } else if (train->parsed()) {
            Manifest m("train");
            const fs::path data(train_data);
            um_train_options o;
            um_train_options_default(&o);
            o.epochs1 = epochs1;
            o.epochs2 = epochs2;
            o.batch = batch;
            o.target = target;
            o.base_channels = base;
            o.depth = depth;
            o.lr = lr;
            o.train_fraction = train_fraction;
            o.seed = train_c.seed;
            o.threads = train_c.thread_count();
            o.on_epoch = on_epoch;
            check(um_train((data / "images").string().c_str(), (data / "masks").string().c_str(), &o,
                           train_out.c_str(), nullptr),
                  "train");
            record_options(m, train);
            m.set("threads", std::to_string(o.threads));
            auto files = list_all(data / "images");
            const auto masks = list_all(data / "masks");
            files.insert(files.end(), masks.begin(), masks.end());
            m.set("dataset_hash", hash_files(files));
            m.set("outputs", train_out);
            m.write(train_c.manifest.empty() ? fs::path(train_out) / "run_manifest.txt" : fs::path(train_c.manifest));
        } else if (predict->parsed()) {
            Manifest m("predict");
            const auto model = load_model(pred_model);
            const auto tiles = list_images(pred_tiles);
            std::vector<std::string> names;
            for (const auto& t : tiles) names.push_back(t.string());
            std::vector<const char*> ptrs;
            for (const auto& n : names) ptrs.push_back(n.c_str());
            const auto o = infer_options(patch, overlap, threshold, zero_pad, pred_c.thread_count());
            size_t failed = 0;
            check(um_predict_corpus(model.get(), ptrs.data(), ptrs.size(), pred_out.c_str(), &o, no_mosaic ? 0 : 1,
                                    on_tile_failure, nullptr, &failed),
                  "predict");
            record_options(m, predict);
            m.set("threads", std::to_string(o.threads));
            m.set("dataset_hash", hash_files(tiles));
            m.set("tiles", std::to_string(tiles.size()));
            m.set("failed", std::to_string(failed));
            m.set("outputs", pred_out);
            m.write(pred_c.manifest.empty() ? fs::path(pred_out) / "run_manifest.txt" : fs::path(pred_c.manifest));
            if (failed > 0) throw Failure{std::to_string(failed) + " of " + std::to_string(tiles.size()) +
                                          " tiles failed"};
        } else if (mosaic->parsed()) {
            Manifest m("mosaic");
            std::vector<fs::path> files;
            for (const auto& f : list_images(mos_masks))
                if (fs::absolute(f) != fs::absolute(mos_out)) files.push_back(f);
            std::vector<RasterPtr> masks;
            std::vector<const um_raster*> ptrs;
            for (const auto& f : files) {
                masks.push_back(read_raster(f));
                ptrs.push_back(masks.back().get());
            }
            um_raster* out = nullptr;
            check(um_mosaic(ptrs.data(), ptrs.size(), &out), "mosaic");
            RasterPtr result(out);
            write_raster(result.get(), mos_out);
            record_options(m, mosaic);
            m.set("dataset_hash", hash_files(files));
            m.set("outputs", mos_out);
            m.write(mos_c.manifest.empty() ? fs::path(mos_out).concat(".manifest.txt") : fs::path(mos_c.manifest));
        } else if (evaluate->parsed()) {
            Manifest m("evaluate");
            std::vector<std::pair<fs::path, fs::path>> pairs;
            if (fs::is_regular_file(eval_pred)) {
                pairs.emplace_back(eval_pred, eval_truth);
            } else {
                std::map<std::string, fs::path> preds;
                for (const auto& p : list_images(eval_pred)) {
                    std::string stem = p.stem().string();
                    if (stem.size() > 5 && stem.ends_with("_mask")) stem.resize(stem.size() - 5);
                    preds[stem] = p;
                }
                for (const auto& t : list_images(eval_truth)) {
                    const auto it = preds.find(t.stem().string());
                    if (it == preds.end()) throw Failure{"no prediction for " + t.string()};
                    pairs.emplace_back(it->second, t);
                    preds.erase(it);
                }
                if (!preds.empty()) throw Failure{"no ground truth for " + preds.begin()->second.string()};
            }
            std::string csv = std::string(kMetricsHeader) + "\n";
            std::vector<um_metrics> scenes;
            for (const auto& [p, t] : pairs) {
                const auto pr = read_raster(p);
                const auto tr = read_raster(t);
                scenes.push_back(scene_metrics(pr.get(), tr.get(), p.string()));
                csv += metrics_row(t.stem().string(), scenes.back()) + "\n";
            }
            um_corpus_report rep;
            check(um_aggregate(scenes.data(), scenes.size(), &rep), "evaluate");
            csv += metrics_row("pooled", rep.pooled) + "\n";
            um_metrics macro{rep.macro_precision, rep.macro_recall, rep.macro_f1, rep.macro_iou, rep.macro_oa, {}};
            std::string macro_row = metrics_row("macro", macro);
            csv += macro_row + "\n";
            emit(csv, eval_csv);
            std::fprintf(stderr, "scenes %zu pooled_oa %s macro_oa %s pooled_f1 %s\n", rep.scenes,
                         fmt(rep.pooled.overall_accuracy).c_str(), fmt(rep.macro_oa).c_str(),
                         fmt(rep.pooled.f1).c_str());
            record_options(m, evaluate);
            std::vector<fs::path> inputs;
            for (const auto& [p, t] : pairs) {
                inputs.push_back(p);
                inputs.push_back(t);
            }
            m.set("dataset_hash", hash_files(inputs));
            m.set("pooled_oa", fmt(rep.pooled.overall_accuracy));
            m.set("macro_oa", fmt(rep.macro_oa));
            if (!eval_c.manifest.empty()) {
                m.write(eval_c.manifest);
            } else if (!eval_csv.empty() && eval_csv != "-") {
                m.write(fs::path(eval_csv).concat(".manifest.txt"));
            }
        } else if (compare->parsed()) {
            Manifest m("compare");
            const auto model = load_model(cmp_model);
            const auto image = read_raster(cmp_image);
            const auto truth = read_raster(cmp_truth);
            const auto o = infer_options(cmp_patch, 0, 0.5, false, cmp_c.thread_count());
            um_raster *unet = nullptr, *km = nullptr, *th = nullptr;
            check(um_infer_tile(model.get(), image.get(), &o, &unet), "unet");
            RasterPtr unet_p(unet);
            check(um_kmeans_segment(image.get(), cmp_k, 100, cmp_c.seed, &km), "kmeans");
            RasterPtr km_p(km);
            check(um_threshold_segment(image.get(), cmp_cut, &th), "threshold");
            RasterPtr th_p(th);
            std::string csv = std::string("method") + std::string(kMetricsHeader).substr(5) + "\n";
            csv += metrics_row("unet", scene_metrics(unet, truth.get(), "unet")) + "\n";
            csv += metrics_row("kmeans", scene_metrics(km, truth.get(), "kmeans")) + "\n";
            csv += metrics_row("threshold", scene_metrics(th, truth.get(), "threshold")) + "\n";
            emit(csv, cmp_csv);
            record_options(m, compare);
            m.set("dataset_hash", hash_files({cmp_image, cmp_truth}));
            if (!cmp_c.manifest.empty()) {
                m.write(cmp_c.manifest);
            } else if (!cmp_csv.empty() && cmp_csv != "-") {
                m.write(fs::path(cmp_csv).concat(".manifest.txt"));
            }
        } else if (resample->parsed()) {
            Manifest m("resample");
            const auto mask = read_raster(res_mask);
            um_raster* out = nullptr;
            check(um_majority_resample(mask.get(), factor, &out), "resample");
            RasterPtr result(out);
            write_raster(result.get(), res_out);
            record_options(m, resample);
            m.set("dataset_hash", hash_files({res_mask}));
            m.write(res_c.manifest.empty() ? fs::path(res_out).concat(".manifest.txt") : fs::path(res_c.manifest));
        } else if (curves->parsed()) {
            const auto model = load_model(cur_model);
            um_model_info info;
            check(um_model_info_get(model.get(), &info), "curves");
            std::string csv = "pass,epoch,train_loss,val_loss,val_f1,val_oa,best\n";
            for (int pass : {1, 2}) {
                size_t n = 0;
                check(um_model_curve(model.get(), pass, nullptr, 0, &n), "curves");
                std::vector<um_epoch_record> recs(n);
                check(um_model_curve(model.get(), pass, recs.data(), n, &n), "curves");
                const int best = pass == 1 ? info.best_epoch1 : info.best_epoch2;
                for (size_t i = 0; i < n; ++i) {
                    const auto& r = recs[i];
                    csv += std::to_string(pass) + ',' + std::to_string(i + 1) + ',' + fmt(r.train_loss) + ',' +
                           fmt(r.val_loss) + ',' + fmt(r.val_f1) + ',' + fmt(r.val_oa) + ',' +
                           (static_cast<int>(i + 1) == best ? "1" : "0") + '\n';
                }
            }
            emit(csv, cur_out);
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return kExitRuntime;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
