#include "urbanmap/raster.hpp"

#include "urbanmap/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;

namespace urbanmap {

void validate(const Geotransform& geo) {
    if (geo.pixel_w == 0.0 || geo.pixel_h == 0.0)
        fail(ErrorCode::Argument, "geotransform pixel size must be non-zero");
    const double det = geo.pixel_w * geo.pixel_h - geo.rot_xy * geo.rot_yx;
    if (det == 0.0 || !std::isfinite(det))
        fail(ErrorCode::Argument, "geotransform is not invertible");
}

std::pair<double, double> pixel_to_world(const Geotransform& geo, double col, double row) {
    return {geo.origin_x + col * geo.pixel_w + row * geo.rot_xy,
            geo.origin_y + col * geo.rot_yx + row * geo.pixel_h};
}

std::pair<double, double> world_to_pixel(const Geotransform& geo, double x, double y) {
    validate(geo);
    const double dx = x - geo.origin_x;
    const double dy = y - geo.origin_y;
    const double det = geo.pixel_w * geo.pixel_h - geo.rot_xy * geo.rot_yx;
    return {(dx * geo.pixel_h - dy * geo.rot_xy) / det, (dy * geo.pixel_w - dx * geo.rot_yx) / det};
}

Raster::Raster(int w, int h, int ch)
    : width(w), height(h), channels(ch),
      data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(ch), 0) {}

BinaryMask::BinaryMask(int w, int h)
    : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

std::size_t BinaryMask::count_ones() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

void validate(const Raster& r) {
    if (r.channels != 1 && r.channels != 3)
        fail(ErrorCode::Argument, "raster channels must be 1 or 3, got " + std::to_string(r.channels));
    if (r.width < 0 || r.height < 0)
        fail(ErrorCode::Argument, "raster dimensions must be non-negative");
    const auto expected = static_cast<std::size_t>(r.width) * r.height * r.channels;
    if (r.data.size() != expected)
        fail(ErrorCode::Argument, "raster data length " + std::to_string(r.data.size()) +
                                      " does not match " + std::to_string(expected));
    if (r.geo) validate(*r.geo);
}

void validate(const BinaryMask& m) {
    if (m.width < 0 || m.height < 0)
        fail(ErrorCode::Argument, "mask dimensions must be non-negative");
    if (m.data.size() != static_cast<std::size_t>(m.width) * m.height)
        fail(ErrorCode::Argument, "mask data length does not match dimensions");
    if (std::any_of(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v > 1; }))
        fail(ErrorCode::Argument, "mask values must be 0 or 1");
    if (m.geo) validate(*m.geo);
}

BinaryMask mask_from_raster(const Raster& r) {
    if (r.channels != 1) fail(ErrorCode::Argument, "mask raster must have one channel");
    BinaryMask m(r.width, r.height);
    std::transform(r.data.begin(), r.data.end(), m.data.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v != 0); });
    m.geo = r.geo;
    m.crs = r.crs;
    return m;
}

Raster mask_to_raster(const BinaryMask& m) {
    Raster r(m.width, m.height, 1);
    std::transform(m.data.begin(), m.data.end(), r.data.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    r.geo = m.geo;
    r.crs = m.crs;
    return r;
}

fs::path world_file_path(const fs::path& image) {
    fs::path p = image;
    return p.replace_extension(".wld");
}

fs::path crs_file_path(const fs::path& image) {
    fs::path p = image;
    return p.replace_extension(".crs");
}

namespace {

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Netpbm header tokenizer: whitespace separated, '#' starts a comment line.
class HeaderReader {
public:
    HeaderReader(const std::string& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

    long next_int() {
        skip_space_and_comments();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
        if (start == pos_) fail(ErrorCode::Format, "malformed image header in " + path_.string());
        long v = 0;
        auto [ptr, ec] = std::from_chars(bytes_.data() + start, bytes_.data() + pos_, v);
        if (ec != std::errc{}) fail(ErrorCode::Format, "malformed number in header of " + path_.string());
        return v;
    }

    // Exactly one whitespace byte separates maxval from the payload.
    std::size_t payload_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
            fail(ErrorCode::Format, "missing whitespace before payload in " + path_.string());
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::string& bytes_;
    const fs::path& path_;
    std::size_t pos_ = 2;
};

void write_bytes(const fs::path& path, const std::string& header, const std::vector<std::uint8_t>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_sidecars(const std::optional<Geotransform>& geo, const std::optional<std::string>& crs,
                    const fs::path& image) {
    std::error_code ec;
    if (geo) {
        write_world_file(*geo, world_file_path(image));
    } else {
        fs::remove(world_file_path(image), ec);
    }
    if (crs) {
        std::ofstream out(crs_file_path(image), std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write " + crs_file_path(image).string());
        out << *crs;
        if (!out) fail(ErrorCode::Io, "write failed for " + crs_file_path(image).string());
    } else {
        fs::remove(crs_file_path(image), ec);
    }
}

}  // namespace

Geotransform read_world_file(const fs::path& path) {
    const std::string text = read_all(path);
    double v[6];
    std::size_t pos = 0;
    for (int i = 0; i < 6; ++i) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        std::size_t end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
        if (end == pos) fail(ErrorCode::Format, "world file " + path.string() + " has fewer than 6 values");
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + end, v[i]);
        if (ec != std::errc{} || ptr != text.data() + end)
            fail(ErrorCode::Format, "bad number in world file " + path.string());
        pos = end;
    }
    Geotransform geo{.origin_x = v[4], .origin_y = v[5], .pixel_w = v[0], .pixel_h = v[3], .rot_xy = v[2], .rot_yx = v[1]};
    validate(geo);
    return geo;
}

void write_world_file(const Geotransform& geo, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    for (double v : {geo.pixel_w, geo.rot_yx, geo.rot_xy, geo.pixel_h, geo.origin_x, geo.origin_y})
        out << format_double(v) << '\n';
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

Raster read_image(const fs::path& path) {
    const std::string bytes = read_all(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        fail(ErrorCode::Format, path.string() + " is not a binary PPM/PGM file");
    const int channels = bytes[1] == '6' ? 3 : 1;

    HeaderReader header(bytes, path);
    const long w = header.next_int();
    const long h = header.next_int();
    const long maxval = header.next_int();
    if (w <= 0 || h <= 0 || w > (1L << 20) || h > (1L << 20))
        fail(ErrorCode::Format, "invalid dimensions in " + path.string());
    if (maxval != 255)
        fail(ErrorCode::Unsupported, "maxval " + std::to_string(maxval) + " in " + path.string() + " (only 255)");
    const std::size_t offset = header.payload_offset();

    Raster r(static_cast<int>(w), static_cast<int>(h), channels);
    if (bytes.size() < offset + r.data.size())
        fail(ErrorCode::Io, "truncated payload in " + path.string());
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset), r.data.size(), r.data.begin());

    if (fs::exists(world_file_path(path))) r.geo = read_world_file(world_file_path(path));
    if (fs::exists(crs_file_path(path))) r.crs = read_all(crs_file_path(path));
    return r;
}

void write_image(const Raster& r, const fs::path& path) {
    validate(r);
    std::ostringstream header;
    header << (r.channels == 3 ? "P6" : "P5") << '\n' << r.width << ' ' << r.height << "\n255\n";
    write_bytes(path, header.str(), r.data);
    write_sidecars(r.geo, r.crs, path);
}

void write_image(const BinaryMask& m, const fs::path& path) {
    validate(m);
    write_image(mask_to_raster(m), path);
}

}  // namespace urbanmap
