#pragma once

#include <cstddef>
#include <vector>

namespace urbanmap {

// Dense channel-major activation volume: values[(c * height + y) * width + x].
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Tensor() = default;
    Tensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w),
          values(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return values.size(); }

    double& at(int c, int y, int x) { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }

    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    bool operator==(const Tensor&) const = default;
};

}  // namespace urbanmap
