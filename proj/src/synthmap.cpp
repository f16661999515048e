#include "urbanmap/synthmap.hpp"

#include "urbanmap/error.hpp"
#include "urbanmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace fs = std::filesystem;

namespace urbanmap {

namespace {

// Capital letters as strokes on a 5 x 7 grid: {x0, y0, x1, y1}.
struct Stroke {
    int x0, y0, x1, y1;
};
const std::vector<std::vector<Stroke>>& glyphs() {
    static const std::vector<std::vector<Stroke>> g = {
        {{0, 6, 2, 0}, {2, 0, 4, 6}, {1, 3, 3, 3}},                          // A
        {{0, 0, 0, 6}, {0, 0, 4, 0}, {0, 3, 3, 3}, {0, 6, 4, 6}},            // E
        {{0, 0, 0, 6}, {0, 0, 4, 0}, {0, 3, 3, 3}},                          // F
        {{0, 0, 0, 6}, {4, 0, 4, 6}, {0, 3, 4, 3}},                          // H
        {{2, 0, 2, 6}, {1, 0, 3, 0}, {1, 6, 3, 6}},                          // I
        {{0, 0, 0, 6}, {4, 0, 0, 3}, {0, 3, 4, 6}},                          // K
        {{0, 0, 0, 6}, {0, 6, 4, 6}},                                        // L
        {{0, 6, 0, 0}, {0, 0, 2, 3}, {2, 3, 4, 0}, {4, 0, 4, 6}},            // M
        {{0, 6, 0, 0}, {0, 0, 4, 6}, {4, 6, 4, 0}},                          // N
        {{0, 0, 4, 0}, {4, 0, 4, 6}, {4, 6, 0, 6}, {0, 6, 0, 0}},            // O
        {{0, 0, 4, 0}, {2, 0, 2, 6}},                                        // T
        {{0, 0, 2, 6}, {2, 6, 4, 0}},                                        // V
        {{0, 0, 1, 6}, {1, 6, 2, 3}, {2, 3, 3, 6}, {3, 6, 4, 0}},            // W
        {{0, 0, 4, 6}, {4, 0, 0, 6}},                                        // X
        {{0, 0, 2, 3}, {4, 0, 2, 3}, {2, 3, 2, 6}},                          // Y
        {{0, 0, 4, 0}, {4, 0, 0, 6}, {0, 6, 4, 6}},                          // Z
        {{4, 0, 0, 0}, {0, 0, 0, 6}, {0, 6, 4, 6}},                          // C
        {{0, 0, 0, 6}, {0, 6, 4, 6}, {4, 6, 4, 0}},                          // U
        {{0, 6, 0, 0}, {0, 0, 4, 0}, {4, 0, 4, 3}, {4, 3, 0, 3}, {1, 3, 4, 6}}, // R
        {{4, 0, 0, 0}, {0, 0, 0, 3}, {0, 3, 4, 3}, {4, 3, 4, 6}, {4, 6, 0, 6}}, // S
    };
    return g;
}

struct Box {
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    void add(int x, int y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    }
    bool empty() const { return x1 < x0; }
};

class Canvas {
public:
    Canvas(const SceneSpec& spec, Rng& rng) : spec_(spec), rng_(rng), image_(spec.width, spec.height, 3), truth_(spec.width, spec.height) {}

    int width() const { return spec_.width; }
    int height() const { return spec_.height; }
    Rng& rng() { return rng_; }
    Raster& image() { return image_; }
    BinaryMask& truth() { return truth_; }

    Rgb jitter(const Rgb& base, int spread) {
        Rgb c;
        for (int i = 0; i < 3; ++i)
            c[i] = static_cast<std::uint8_t>(std::clamp<int>(base[i] + static_cast<int>(rng_.uniform_int(-spread, spread)), 0, 255));
        return c;
    }

    bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < spec_.width && y < spec_.height; }

    void ink(int x, int y, const Rgb& c, Box& box) {
        if (!inside(x, y)) return;
        for (int i = 0; i < 3; ++i) image_.at(x, y, i) = c[i];
        box.add(x, y);
    }

    void line(double x0, double y0, double x1, double y1, const Rgb& c, Box& box) {
        const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0))));
        for (int i = 0; i <= steps; ++i) {
            const double t = steps == 0 ? 0.0 : static_cast<double>(i) / steps;
            ink(static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c, box);
        }
    }

    void fill_rect(int x, int y, int w, int h, const Rgb& c, Box& box) {
        for (int yy = y; yy < y + h; ++yy)
            for (int xx = x; xx < x + w; ++xx) ink(xx, yy, c, box);
    }

    std::size_t new_truth_pixels(int x, int y, int w, int h) const {
        std::size_t n = 0;
        for (int yy = std::max(0, y); yy < std::min(spec_.height, y + h); ++yy)
            for (int xx = std::max(0, x); xx < std::min(spec_.width, x + w); ++xx) n += truth_.at(xx, yy) == 0;
        return n;
    }

    void mark_truth(int x, int y, int w, int h) {
        for (int yy = std::max(0, y); yy < std::min(spec_.height, y + h); ++yy)
            for (int xx = std::max(0, x); xx < std::min(spec_.width, x + w); ++xx) truth_.at(xx, yy) = 1;
    }

private:
    const SceneSpec& spec_;
    Rng& rng_;
    Raster image_;
    BinaryMask truth_;
};

struct Rect {
    int x, y, w, h;
};

double scale_of(const SceneSpec& spec) { return std::max(0.25, std::min(spec.width, spec.height) / 128.0); }

int scaled(double v, double s) { return std::max(1, static_cast<int>(std::lround(v * s))); }

// Candidate urban element: rectangles forming its footprint, then drawn.
struct UrbanCandidate {
    UrbanStyle style;
    std::vector<Rect> parts;
};

UrbanCandidate propose_urban(Canvas& cv, UrbanStyle style, double s) {
    Rng& rng = cv.rng();
    UrbanCandidate c{style, {}};
    auto rect = [&](int lo, int hi) {
        const int w = std::min(cv.width(), static_cast<int>(rng.uniform_int(scaled(lo, s), scaled(hi, s))));
        const int h = std::min(cv.height(), static_cast<int>(rng.uniform_int(scaled(lo, s), scaled(hi, s))));
        const int x = static_cast<int>(rng.uniform_int(0, cv.width() - w));
        const int y = static_cast<int>(rng.uniform_int(0, cv.height() - h));
        return Rect{x, y, w, h};
    };
    switch (style) {
    case UrbanStyle::SolidBlock: c.parts.push_back(rect(7, 22)); break;
    case UrbanStyle::HatchedBlock: c.parts.push_back(rect(12, 28)); break;
    case UrbanStyle::RedOverprint: c.parts.push_back(rect(8, 24)); break;
    case UrbanStyle::ScatteredUnits: {
        const int cx = static_cast<int>(rng.uniform_int(0, cv.width() - 1));
        const int cy = static_cast<int>(rng.uniform_int(0, cv.height() - 1));
        const int n = static_cast<int>(rng.uniform_int(4, 9));
        const int radius = scaled(12, s);
        for (int i = 0; i < n; ++i) {
            const int size = static_cast<int>(rng.uniform_int(scaled(3, s), scaled(5, s)));
            const int x = std::clamp(cx + static_cast<int>(rng.uniform_int(-radius, radius)), 0, std::max(0, cv.width() - size));
            const int y = std::clamp(cy + static_cast<int>(rng.uniform_int(-radius, radius)), 0, std::max(0, cv.height() - size));
            c.parts.push_back({x, y, std::min(size, cv.width()), std::min(size, cv.height())});
        }
        break;
    }
    }
    return c;
}

const char* style_name(UrbanStyle s) {
    switch (s) {
    case UrbanStyle::SolidBlock: return "solid_block";
    case UrbanStyle::HatchedBlock: return "hatched_block";
    case UrbanStyle::ScatteredUnits: return "scattered_unit";
    case UrbanStyle::RedOverprint: return "red_overprint";
    }
    return "urban";
}

void draw_urban(Canvas& cv, const UrbanCandidate& c, const Palette& pal, std::vector<PlacedElement>& manifest) {
    for (const Rect& r : c.parts) {
        Box box;
        switch (c.style) {
        case UrbanStyle::SolidBlock:
        case UrbanStyle::ScatteredUnits: cv.fill_rect(r.x, r.y, r.w, r.h, cv.jitter(pal.ink, 8), box); break;
        case UrbanStyle::RedOverprint: cv.fill_rect(r.x, r.y, r.w, r.h, cv.jitter(pal.red, 10), box); break;
        case UrbanStyle::HatchedBlock: {
            const Rgb ink = cv.jitter(pal.ink, 8);
            for (int y = r.y; y < r.y + r.h; ++y)
                for (int x = r.x; x < r.x + r.w; ++x) {
                    const bool edge = x == r.x || y == r.y || x == r.x + r.w - 1 || y == r.y + r.h - 1;
                    if (edge || (x - y) % 3 == 0) cv.ink(x, y, ink, box);
                }
            break;
        }
        }
        cv.mark_truth(r.x, r.y, r.w, r.h);
        manifest.push_back({style_name(c.style), r.x, r.y, r.w, r.h, true});
    }
}

void record(std::vector<PlacedElement>& manifest, const char* type, const Box& box) {
    if (box.empty()) return;
    manifest.push_back({type, box.x0, box.y0, box.x1 - box.x0 + 1, box.y1 - box.y0 + 1, false});
}

void draw_contour(Canvas& cv, const Palette& pal, double s, std::vector<PlacedElement>& manifest) {
    Rng& rng = cv.rng();
    Box box;
    const Rgb c = cv.jitter(pal.contour, 10);
    double x = rng.uniform(0, cv.width()), y = rng.uniform(0, cv.height());
    double theta = rng.uniform(0, 2 * std::numbers::pi);
    const int length = static_cast<int>(rng.uniform(0.8, 1.6) * std::max(cv.width(), cv.height()));
    const double wobble = 0.12 / s;
    for (int i = 0; i < length; ++i) {
        theta += rng.uniform(-wobble, wobble);
        const double nx = x + std::cos(theta), ny = y + std::sin(theta);
        cv.line(x, y, nx, ny, c, box);
        x = nx;
        y = ny;
    }
    record(manifest, "contour_line", box);
}

void draw_text(Canvas& cv, const Palette& pal, double s, std::vector<PlacedElement>& manifest) {
    Rng& rng = cv.rng();
    Box box;
    const Rgb c = cv.jitter(pal.ink, 8);
    const int unit = std::max(1, static_cast<int>(std::lround(s)));
    const int letters = static_cast<int>(rng.uniform_int(3, 6));
    const int advance = 6 * unit;
    const int x0 = static_cast<int>(rng.uniform_int(-advance, std::max(0, cv.width() - letters * advance / 2)));
    const int y0 = static_cast<int>(rng.uniform_int(0, std::max(0, cv.height() - 7 * unit)));
    const auto& font = glyphs();
    for (int i = 0; i < letters; ++i) {
        const auto& glyph = font[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(font.size()) - 1))];
        const int gx = x0 + i * advance;
        for (const Stroke& st : glyph)
            cv.line(gx + st.x0 * unit, y0 + st.y0 * unit, gx + st.x1 * unit, y0 + st.y1 * unit, c, box);
    }
    record(manifest, "text_glyphs", box);
}

void draw_road(Canvas& cv, const Palette& pal, double s, std::vector<PlacedElement>& manifest) {
    Rng& rng = cv.rng();
    Box box;
    const Rgb c = cv.jitter(pal.ink, 8);
    const double px = rng.uniform(0, cv.width()), py = rng.uniform(0, cv.height());
    const double angle = rng.uniform(0, std::numbers::pi);
    const double dx = std::cos(angle), dy = std::sin(angle);
    const double nx = -dy, ny = dx;
    const double reach = std::hypot(cv.width(), cv.height());
    const double bend = rng.uniform(-0.15, 0.15) * cv.width();
    const double gap = 2.0 * std::max(1.0, s);
    for (double side : {-gap, gap}) {
        double lx = 0, ly = 0;
        bool first = true;
        for (double t = -reach; t <= reach; t += 1.0) {
            const double curve = bend * (t / reach) * (t / reach);
            const double x = px + t * dx + (curve + side) * nx;
            const double y = py + t * dy + (curve + side) * ny;
            if (!first) cv.line(lx, ly, x, y, c, box);
            lx = x;
            ly = y;
            first = false;
        }
    }
    record(manifest, "road_line", box);
}

void draw_field(Canvas& cv, const Palette& pal, double s, std::vector<PlacedElement>& manifest) {
    Rng& rng = cv.rng();
    Box box;
    Rgb base = pal.ink;
    for (auto& v : base) v = static_cast<std::uint8_t>(std::min(255, v + 30));
    const Rgb c = cv.jitter(base, 8);
    const int w = static_cast<int>(rng.uniform_int(scaled(20, s), scaled(40, s)));
    const int h = static_cast<int>(rng.uniform_int(scaled(20, s), scaled(40, s)));
    const int x0 = static_cast<int>(rng.uniform_int(0, std::max(0, cv.width() - w)));
    const int y0 = static_cast<int>(rng.uniform_int(0, std::max(0, cv.height() - h)));
    const int step = scaled(4, s);
    const int len = scaled(4, s);
    const bool diagonal = rng.chance(0.5);
    for (int y = y0; y < y0 + h; y += step)
        for (int x = x0 + static_cast<int>(rng.uniform_int(0, step)); x < x0 + w; x += step + len)
            cv.line(x, y, x + len - 1, diagonal ? y - len + 1 : y, c, box);
    record(manifest, "field_texture", box);
}

int density_count(Rng& rng, double mean) {
    const int base = static_cast<int>(std::floor(mean));
    return base + (rng.chance(mean - base) ? 1 : 0);
}

}  // namespace

void SceneSpec::validate() const {
    if (width < 8 || height < 8) fail(ErrorCode::Argument, "scene must be at least 8x8");
    if (!(urban_fraction >= 0.0 && urban_fraction <= 0.5)) fail(ErrorCode::Argument, "urban_fraction must be in [0, 0.5]");
    if (urban_fraction > 0.0 && (styles & kAllStyles) == 0)
        fail(ErrorCode::Argument, "at least one urban style is required when urban_fraction > 0");
    if (!(distractor_density >= 0.0)) fail(ErrorCode::Argument, "distractor density must be non-negative");
}

ScenePair generate_scene(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Canvas cv(spec, rng);
    const double s = scale_of(spec);
    const Palette& pal = spec.palette;
    std::vector<PlacedElement> manifest;

    // Paper background, optionally with a tint seam.
    const bool drift = (spec.distractors & static_cast<unsigned>(Distractor::HueDrift)) != 0 && rng.chance(0.5);
    const int seam = drift ? static_cast<int>(rng.uniform_int(spec.width / 4, 3 * spec.width / 4)) : spec.width;
    const std::array<int, 3> tint{static_cast<int>(rng.uniform_int(-22, -8)), static_cast<int>(rng.uniform_int(-12, 0)),
                                  static_cast<int>(rng.uniform_int(0, 12))};
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            for (int c = 0; c < 3; ++c)
                cv.image().at(x, y, c) = static_cast<std::uint8_t>(std::clamp(pal.paper[c] + (x >= seam ? tint[c] : 0), 0, 255));
    if (drift) manifest.push_back({"hue_drift", seam, 0, spec.width - seam, spec.height, false});

    // Urban elements until the requested fraction is reached.
    std::vector<UrbanStyle> styles;
    for (UrbanStyle st : {UrbanStyle::SolidBlock, UrbanStyle::HatchedBlock, UrbanStyle::ScatteredUnits, UrbanStyle::RedOverprint})
        if (spec.styles & static_cast<unsigned>(st)) styles.push_back(st);
    const double area = static_cast<double>(spec.width) * spec.height;
    const double target = spec.urban_fraction * area;
    const double overshoot = 0.03 * area;
    std::size_t covered = 0;
    for (int attempt = 0; attempt < 2000 && static_cast<double>(covered) < target; ++attempt) {
        const UrbanStyle st = styles[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(styles.size()) - 1))];
        const UrbanCandidate cand = propose_urban(cv, st, s);
        // Footprint growth, counting overlaps between parts once.
        BinaryMask before = cv.truth();
        std::size_t added = 0;
        for (const Rect& r : cand.parts) {
            added += cv.new_truth_pixels(r.x, r.y, r.w, r.h);
            cv.mark_truth(r.x, r.y, r.w, r.h);
        }
        cv.truth() = std::move(before);
        if (static_cast<double>(covered + added) > target + overshoot) continue;
        draw_urban(cv, cand, pal, manifest);
        covered += added;
    }
    if (static_cast<double>(covered) < target - 0.05 * area)
        fail(ErrorCode::Placement, "could not place urban fraction " + std::to_string(spec.urban_fraction) + " on a " +
                                       std::to_string(spec.width) + "x" + std::to_string(spec.height) + " canvas");

    // Distractors never touch the truth mask.
    auto enabled = [&](Distractor d) { return (spec.distractors & static_cast<unsigned>(d)) != 0; };
    const double k = spec.distractor_density * std::max(1.0, s * s);
    if (enabled(Distractor::ContourLines))
        for (int i = density_count(rng, 1.5 * k); i > 0; --i) draw_contour(cv, pal, s, manifest);
    if (enabled(Distractor::TextGlyphs))
        for (int i = density_count(rng, 2.0 * k); i > 0; --i) draw_text(cv, pal, s, manifest);
    if (enabled(Distractor::RoadLines))
        for (int i = density_count(rng, 0.8 * k); i > 0; --i) draw_road(cv, pal, s, manifest);
    if (enabled(Distractor::FieldTexture))
        for (int i = density_count(rng, 0.8 * k); i > 0; --i) draw_field(cv, pal, s, manifest);

    // Scanner-like grain.
    for (auto& v : cv.image().data) v = static_cast<std::uint8_t>(std::clamp<int>(v + static_cast<int>(rng.uniform_int(-5, 5)), 0, 255));

    return {std::move(cv.image()), std::move(cv.truth()), std::move(manifest)};
}

std::string manifest_text(const std::vector<PlacedElement>& manifest) {
    std::string out;
    for (const auto& e : manifest)
        out += e.type + ' ' + std::to_string(e.x) + ' ' + std::to_string(e.y) + ' ' + std::to_string(e.w) + ' ' +
               std::to_string(e.h) + '\n';
    return out;
}

SceneSpec corpus_scene_spec(const CorpusSpec& spec, int index) {
    SceneSpec s = spec.base;
    s.seed = spec.seed + static_cast<std::uint64_t>(index);
    if (spec.hard) {
        s.distractor_density = spec.base.distractor_density * 2.5;
        if (index % 4 == 3) s.urban_fraction = 0.0;  // targeted hard negative
    }
    return s;
}

namespace {

std::string numbered(const char* stem, int i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d%s", stem, i, ext);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) fail(ErrorCode::Io, "cannot write " + path.string());
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

void generate_corpus(const CorpusSpec& spec, const fs::path& out_dir) {
    if (spec.count < 1) fail(ErrorCode::Argument, "corpus needs at least one scene");
    if (spec.tiles < 0) fail(ErrorCode::Argument, "tile count must be non-negative");
    std::error_code ec;
    for (const char* sub : {"images", "masks", "manifests"}) {
        fs::create_directories(out_dir / sub, ec);
        if (ec) fail(ErrorCode::Io, "cannot create " + (out_dir / sub).string());
    }
    for (int i = 0; i < spec.count; ++i) {
        const ScenePair scene = generate_scene(corpus_scene_spec(spec, i));
        write_image(scene.image, out_dir / "images" / numbered("scene", i, ".ppm"));
        write_image(scene.truth, out_dir / "masks" / numbered("scene", i, ".pgm"));
        write_text(out_dir / "manifests" / numbered("scene", i, ".txt"), manifest_text(scene.manifest));
    }
    if (spec.tiles == 0) return;

    fs::create_directories(out_dir / "tiles", ec);
    fs::create_directories(out_dir / "tiles_truth", ec);
    if (ec) fail(ErrorCode::Io, "cannot create tile directories under " + out_dir.string());
    const int size = spec.tile_size > 0 ? spec.tile_size : 3 * spec.base.width;
    constexpr double pixel = 5.0;
    for (int i = 0; i < spec.tiles; ++i) {
        SceneSpec s = spec.base;
        s.width = s.height = size;
        s.seed = mix_seed(spec.seed, 0x7469'6c65ULL + static_cast<std::uint64_t>(i));
        if (spec.hard) s.distractor_density = spec.base.distractor_density * 2.5;
        ScenePair scene = generate_scene(s);
        // Tiles sit side by side in a row, 5 m pixels, north-up.
        const Geotransform geo{.origin_x = 600000.0 + pixel / 2 + static_cast<double>(i) * size * pixel,
                               .origin_y = 6800000.0 - pixel / 2,
                               .pixel_w = pixel,
                               .pixel_h = -pixel};
        scene.image.geo = scene.truth.geo = geo;
        scene.image.crs = scene.truth.crs = std::string("EPSG:2154");
        write_image(scene.image, out_dir / "tiles" / numbered("tile", i, ".ppm"));
        write_image(scene.truth, out_dir / "tiles_truth" / numbered("tile", i, ".pgm"));
    }
}

}  // namespace urbanmap
