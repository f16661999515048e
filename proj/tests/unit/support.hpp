#pragma once

#include "urbanmap/raster.hpp"
#include "urbanmap/rng.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("urbanmap_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline urbanmap::Raster random_raster(urbanmap::Rng& rng, int w, int h, int ch) {
    urbanmap::Raster r(w, h, ch);
    for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return r;
}

inline urbanmap::BinaryMask random_mask(urbanmap::Rng& rng, int w, int h, double p = 0.5) {
    urbanmap::BinaryMask m(w, h);
    for (auto& v : m.data) v = rng.chance(p) ? 1 : 0;
    return m;
}

}  // namespace testing
