#include "urbanmap/layers.hpp"

#include "urbanmap/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace urbanmap::layers {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Image rows per im2col block, sized so one block stays cache resident.
int block_rows(int channels, int kernel, int width) {
    const long budget = 128 * 1024;  // doubles
    const long per_row = static_cast<long>(channels) * kernel * kernel * width;
    return static_cast<int>(std::max(1L, budget / std::max(1L, per_row)));
}

// Rows indexed by (in_channel, ky, kx), columns by output pixel in image rows
// [y0, y1).
void im2col(const Tensor& x, int kernel, int y0, int y1, RowMatrix& col) {
    const int pad = kernel / 2;
    const int h = x.height, w = x.width;
    col.resize(static_cast<Eigen::Index>(x.channels) * kernel * kernel, static_cast<Eigen::Index>(y1 - y0) * w);
    Eigen::Index row = 0;
    for (int c = 0; c < x.channels; ++c) {
        const double* src = x.values.data() + static_cast<std::size_t>(c) * x.plane();
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx, ++row) {
                double* dst = col.data() + row * col.cols();
                const int dy = ky - pad, dx = kx - pad;
                const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
                for (int y = y0; y < y1; ++y) {
                    double* d = dst + static_cast<std::size_t>(y - y0) * w;
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) {
                        std::fill(d, d + w, 0.0);
                        continue;
                    }
                    const double* s = src + static_cast<std::size_t>(sy) * w + dx;
                    for (int xx = 0; xx < x_lo; ++xx) d[xx] = 0.0;
                    for (int xx = x_lo; xx < x_hi; ++xx) d[xx] = s[xx];
                    for (int xx = x_hi; xx < w; ++xx) d[xx] = 0.0;
                }
            }
        }
    }
}

void col2im_add(const RowMatrix& col, int kernel, int y0, int y1, Tensor& dx) {
    const int pad = kernel / 2;
    const int h = dx.height, w = dx.width;
    Eigen::Index row = 0;
    for (int c = 0; c < dx.channels; ++c) {
        double* dst = dx.values.data() + static_cast<std::size_t>(c) * dx.plane();
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx, ++row) {
                const double* src = col.data() + row * col.cols();
                const int dy = ky - pad, dxo = kx - pad;
                const int x_lo = std::max(0, -dxo), x_hi = std::min(w, w - dxo);
                for (int y = y0; y < y1; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    double* d = dst + static_cast<std::size_t>(sy) * w + dxo;
                    const double* s = src + static_cast<std::size_t>(y - y0) * w;
                    for (int xx = x_lo; xx < x_hi; ++xx) d[xx] += s[xx];
                }
            }
        }
    }
}

}  // namespace

Tensor conv_forward(const Tensor& x, std::span<const double> weights, std::span<const double> bias, int out_channels,
                    int kernel) {
    const auto k2 = static_cast<std::size_t>(kernel) * kernel;
    if (weights.size() != static_cast<std::size_t>(out_channels) * x.channels * k2 ||
        bias.size() != static_cast<std::size_t>(out_channels))
        fail(ErrorCode::Shape, "convolution parameters do not match input channels");
    Tensor y(out_channels, x.height, x.width);
    const auto pixels = static_cast<Eigen::Index>(x.plane());
    ConstMatrixMap w(weights.data(), out_channels, static_cast<Eigen::Index>(x.channels * k2));
    MatrixMap out(y.values.data(), out_channels, pixels);
    if (kernel == 1) {
        out.noalias() = w * ConstMatrixMap(x.values.data(), x.channels, pixels);
    } else {
        RowMatrix col;
        const int step = block_rows(x.channels, kernel, x.width);
        for (int y0 = 0; y0 < x.height; y0 += step) {
            const int y1 = std::min(x.height, y0 + step);
            im2col(x, kernel, y0, y1, col);
            out.middleCols(static_cast<Eigen::Index>(y0) * x.width, col.cols()).noalias() = w * col;
        }
    }
    for (int o = 0; o < out_channels; ++o) out.row(o).array() += bias[static_cast<std::size_t>(o)];
    return y;
}

Tensor conv_backward(const Tensor& x, std::span<const double> weights, const Tensor& dy, int kernel,
                     std::span<double> dweights, std::span<double> dbias) {
    const int out_channels = dy.channels;
    const auto k2 = static_cast<std::size_t>(kernel) * kernel;
    if (dy.height != x.height || dy.width != x.width || weights.size() != dweights.size() ||
        weights.size() != static_cast<std::size_t>(out_channels) * x.channels * k2 ||
        dbias.size() != static_cast<std::size_t>(out_channels))
        fail(ErrorCode::Shape, "convolution backward shapes disagree");
    const auto pixels = static_cast<Eigen::Index>(x.plane());
    const auto fan = static_cast<Eigen::Index>(x.channels * k2);
    ConstMatrixMap w(weights.data(), out_channels, fan);
    ConstMatrixMap g(dy.values.data(), out_channels, pixels);
    MatrixMap dw(dweights.data(), out_channels, fan);
    Eigen::Map<Eigen::VectorXd> db(dbias.data(), out_channels);
    // Plain loop: Eigen reductions peel by alignment, which varies between buffers.
    for (int o = 0; o < out_channels; ++o) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < pixels; ++i) s += g(o, i);
        db[o] += s;
    }

    Tensor dx(x.channels, x.height, x.width);
    if (kernel == 1) {
        ConstMatrixMap xin(x.values.data(), x.channels, pixels);
        dw.noalias() += g * xin.transpose();
        MatrixMap(dx.values.data(), x.channels, pixels).noalias() = w.transpose() * g;
    } else {
        RowMatrix col, dcol;
        const int step = block_rows(x.channels, kernel, x.width);
        for (int y0 = 0; y0 < x.height; y0 += step) {
            const int y1 = std::min(x.height, y0 + step);
            im2col(x, kernel, y0, y1, col);
            const auto gblock = g.middleCols(static_cast<Eigen::Index>(y0) * x.width, col.cols());
            dw.noalias() += gblock * col.transpose();
            dcol.noalias() = w.transpose() * gblock;
            col2im_add(dcol, kernel, y0, y1, dx);
        }
    }
    return dx;
}

void relu_inplace(Tensor& t) {
    for (double& v : t.values) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor& relu_out, Tensor& dy) {
    for (std::size_t i = 0; i < dy.values.size(); ++i)
        if (!(relu_out.values[i] > 0.0)) dy.values[i] = 0.0;
}

PoolResult maxpool2_forward(const Tensor& x) {
    if (x.height % 2 != 0 || x.width % 2 != 0) fail(ErrorCode::Shape, "max-pool input must have even dimensions");
    PoolResult r{Tensor(x.channels, x.height / 2, x.width / 2), {}};
    r.argmax.resize(r.output.size());
    std::size_t o = 0;
    for (int c = 0; c < x.channels; ++c) {
        for (int y = 0; y < r.output.height; ++y) {
            for (int xx = 0; xx < r.output.width; ++xx, ++o) {
                // First maximum in raster order wins ties.
                std::size_t best = (static_cast<std::size_t>(c) * x.height + 2 * y) * x.width + 2 * xx;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t i = (static_cast<std::size_t>(c) * x.height + 2 * y + dy) * x.width + 2 * xx + dx;
                        if (x.values[i] > x.values[best]) best = i;
                    }
                r.output.values[o] = x.values[best];
                r.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return r;
}

Tensor maxpool2_backward(int channels, int height, int width, const std::vector<std::uint32_t>& argmax,
                         const Tensor& dy) {
    if (argmax.size() != dy.size()) fail(ErrorCode::Shape, "max-pool backward shape mismatch");
    Tensor dx(channels, height, width);
    for (std::size_t o = 0; o < dy.size(); ++o) dx.values[argmax[o]] += dy.values[o];
    return dx;
}

Tensor upsample2_forward(const Tensor& x) {
    Tensor y(x.channels, x.height * 2, x.width * 2);
    for (int c = 0; c < y.channels; ++c)
        for (int yy = 0; yy < y.height; ++yy)
            for (int xx = 0; xx < y.width; ++xx) y.at(c, yy, xx) = x.at(c, yy / 2, xx / 2);
    return y;
}

Tensor upsample2_backward(const Tensor& dy) {
    if (dy.height % 2 != 0 || dy.width % 2 != 0) fail(ErrorCode::Shape, "upsample gradient must have even dimensions");
    Tensor dx(dy.channels, dy.height / 2, dy.width / 2);
    for (int c = 0; c < dy.channels; ++c)
        for (int yy = 0; yy < dy.height; ++yy)
            for (int xx = 0; xx < dy.width; ++xx) dx.at(c, yy / 2, xx / 2) += dy.at(c, yy, xx);
    return dx;
}

Tensor concat(const Tensor& a, const Tensor& b) {
    if (a.height != b.height || a.width != b.width) fail(ErrorCode::Shape, "concat inputs differ spatially");
    Tensor y(a.channels + b.channels, a.height, a.width);
    std::copy(a.values.begin(), a.values.end(), y.values.begin());
    std::copy(b.values.begin(), b.values.end(), y.values.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return y;
}

std::pair<Tensor, Tensor> concat_backward(const Tensor& dy, int channels_a) {
    Tensor da(channels_a, dy.height, dy.width);
    Tensor db(dy.channels - channels_a, dy.height, dy.width);
    std::copy_n(dy.values.begin(), da.size(), da.values.begin());
    std::copy(dy.values.begin() + static_cast<std::ptrdiff_t>(da.size()), dy.values.end(), db.values.begin());
    return {std::move(da), std::move(db)};
}

Tensor sigmoid_forward(const Tensor& z) {
    // Kept strictly inside (0, 1) for every finite logit.
    constexpr double lo = std::numeric_limits<double>::denorm_min();
    constexpr double hi = 1.0 - 0x1.0p-53;
    Tensor y(z.channels, z.height, z.width);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double v = z.values[i];
        double s;
        if (v >= 0.0) {
            s = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            s = e / (1.0 + e);
        }
        y.values[i] = std::clamp(s, lo, hi);
    }
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
    Tensor dz(y.channels, y.height, y.width);
    for (std::size_t i = 0; i < y.size(); ++i) dz.values[i] = dy.values[i] * y.values[i] * (1.0 - y.values[i]);
    return dz;
}

}  // namespace urbanmap::layers
