#include "urbanmap/micronet.hpp"

#include "urbanmap/error.hpp"
#include "urbanmap/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace urbanmap {

namespace {

constexpr char kMagic[8] = {'U', 'R', 'B', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

int level_channels(const NetConfig& cfg, int level) { return cfg.base_channels << level; }

std::size_t enc_conv(int level, int which) { return static_cast<std::size_t>(2 * level + which); }
std::size_t bott_conv(const NetConfig& cfg, int which) { return static_cast<std::size_t>(2 * cfg.depth + which); }
// which: 0 = up-conv, 1 = first 3x3, 2 = second 3x3
std::size_t dec_conv(const NetConfig& cfg, int level, int which) {
    const int k = cfg.depth - 1 - level;
    return static_cast<std::size_t>(2 * cfg.depth + 2 + 3 * k + which);
}
std::size_t head_conv(const NetConfig& cfg) { return static_cast<std::size_t>(5 * cfg.depth + 2); }

Tensor conv(const NetParams& p, std::size_t layer, const Tensor& x) {
    const ConvSpec& s = p.layout[layer];
    return layers::conv_forward(x, p.weights(layer), p.bias(layer), s.out_channels, s.kernel);
}

Tensor conv_relu(const NetParams& p, std::size_t layer, const Tensor& x) {
    Tensor y = conv(p, layer, x);
    layers::relu_inplace(y);
    return y;
}

Tensor conv_back(const NetParams& p, NetParams& g, std::size_t layer, const Tensor& x, const Tensor& dy) {
    return layers::conv_backward(x, p.weights(layer), dy, p.layout[layer].kernel, g.weights(layer), g.bias(layer));
}

void check_input(const NetParams& params, const NetConfig& cfg, const Tensor& x) {
    cfg.validate();
    if (params.layout.size() != conv_layout(cfg).size() || params.values.size() != NetParams::zeros(cfg).values.size())
        fail(ErrorCode::Shape, "parameters do not match network configuration");
    if (x.channels != cfg.in_channels)
        fail(ErrorCode::Shape, "input has " + std::to_string(x.channels) + " channels, network expects " +
                                   std::to_string(cfg.in_channels));
    if (x.height <= 0 || x.width <= 0 || x.height % cfg.divisor() != 0 || x.width % cfg.divisor() != 0)
        fail(ErrorCode::Shape, "input size " + std::to_string(x.width) + "x" + std::to_string(x.height) +
                                   " is not divisible by " + std::to_string(cfg.divisor()));
}

// Runs the network; when `cache` is null only the skip tensors are retained.
Tensor run_forward(const NetParams& p, const NetConfig& cfg, const Tensor& x, ForwardCache* cache) {
    check_input(p, cfg, x);
    const int depth = cfg.depth;
    std::vector<Tensor> skips(static_cast<std::size_t>(depth));
    if (cache) {
        cache->cfg = cfg;
        cache->params_digest = digest(p.values);
        cache->input = x;
        cache->enc_a.resize(depth);
        cache->pool_idx.resize(depth);
        cache->pooled.resize(depth);
        cache->dec_upsampled.resize(depth);
        cache->dec_up.resize(depth);
        cache->dec_cat.resize(depth);
        cache->dec_a.resize(depth);
        cache->dec_b.resize(depth);
    }

    Tensor cur = x;
    for (int l = 0; l < depth; ++l) {
        Tensor a = conv_relu(p, enc_conv(l, 0), cur);
        skips[l] = conv_relu(p, enc_conv(l, 1), a);
        layers::PoolResult pool = layers::maxpool2_forward(skips[l]);
        cur = std::move(pool.output);
        if (cache) {
            cache->enc_a[l] = std::move(a);
            cache->pool_idx[l] = std::move(pool.argmax);
            cache->pooled[l] = cur;
        }
    }
    {
        Tensor a = conv_relu(p, bott_conv(cfg, 0), cur);
        cur = conv_relu(p, bott_conv(cfg, 1), a);
        if (cache) {
            cache->bott_a = std::move(a);
            cache->bott_b = cur;
        }
    }
    for (int l = depth - 1; l >= 0; --l) {
        Tensor upsampled = layers::upsample2_forward(cur);
        Tensor up = conv_relu(p, dec_conv(cfg, l, 0), upsampled);
        Tensor cat = layers::concat(skips[l], up);
        Tensor a = conv_relu(p, dec_conv(cfg, l, 1), cat);
        cur = conv_relu(p, dec_conv(cfg, l, 2), a);
        if (cache) {
            cache->dec_upsampled[l] = std::move(upsampled);
            cache->dec_up[l] = std::move(up);
            cache->dec_cat[l] = std::move(cat);
            cache->dec_a[l] = std::move(a);
            cache->dec_b[l] = cur;
        } else {
            skips[l] = Tensor();
        }
    }
    if (cache) cache->enc_b = std::move(skips);
    Tensor y = layers::sigmoid_forward(conv(p, head_conv(cfg), cur));
    if (cache) cache->output = y;
    return y;
}

template <class T>
void put(std::ostream& out, T v) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) fail(ErrorCode::Io, "truncated checkpoint " + path.string());
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void NetConfig::validate() const {
    if (in_channels < 1) fail(ErrorCode::Argument, "in_channels must be >= 1");
    if (base_channels < 1) fail(ErrorCode::Argument, "base_channels must be >= 1");
    if (depth < 1 || depth > 12) fail(ErrorCode::Argument, "depth must be in [1, 12]");
    if (upsample != Upsample::NearestThenConv) fail(ErrorCode::Argument, "unknown upsample mode");
}

std::vector<ConvSpec> conv_layout(const NetConfig& cfg) {
    cfg.validate();
    std::vector<ConvSpec> specs;
    std::size_t offset = 0;
    auto add = [&](int in, int out, int kernel) {
        specs.push_back({in, out, kernel, offset});
        offset += specs.back().size();
    };
    for (int l = 0; l < cfg.depth; ++l) {
        const int in = l == 0 ? cfg.in_channels : level_channels(cfg, l - 1);
        add(in, level_channels(cfg, l), 3);
        add(level_channels(cfg, l), level_channels(cfg, l), 3);
    }
    add(level_channels(cfg, cfg.depth - 1), level_channels(cfg, cfg.depth), 3);
    add(level_channels(cfg, cfg.depth), level_channels(cfg, cfg.depth), 3);
    for (int l = cfg.depth - 1; l >= 0; --l) {
        add(level_channels(cfg, l + 1), level_channels(cfg, l), 3);
        add(2 * level_channels(cfg, l), level_channels(cfg, l), 3);
        add(level_channels(cfg, l), level_channels(cfg, l), 3);
    }
    add(level_channels(cfg, 0), 1, 1);
    return specs;
}

NetParams NetParams::zeros(const NetConfig& cfg) {
    NetParams p;
    p.layout = conv_layout(cfg);
    p.values.assign(p.layout.back().offset + p.layout.back().size(), 0.0);
    return p;
}

std::span<const double> NetParams::weights(std::size_t layer) const {
    const ConvSpec& s = layout.at(layer);
    return {values.data() + s.offset, s.weight_count()};
}
std::span<const double> NetParams::bias(std::size_t layer) const {
    const ConvSpec& s = layout.at(layer);
    return {values.data() + s.offset + s.weight_count(), static_cast<std::size_t>(s.out_channels)};
}
std::span<double> NetParams::weights(std::size_t layer) {
    const ConvSpec& s = layout.at(layer);
    return {values.data() + s.offset, s.weight_count()};
}
std::span<double> NetParams::bias(std::size_t layer) {
    const ConvSpec& s = layout.at(layer);
    return {values.data() + s.offset + s.weight_count(), static_cast<std::size_t>(s.out_channels)};
}

NetParams init_params(const NetConfig& cfg, std::uint64_t seed) {
    NetParams p = NetParams::zeros(cfg);
    Rng rng(seed);
    for (std::size_t i = 0; i < p.layout.size(); ++i) {
        const ConvSpec& s = p.layout[i];
        const double bound = std::sqrt(6.0 / (static_cast<double>(s.in_channels) * s.kernel * s.kernel));
        for (double& w : p.weights(i)) w = rng.uniform(-bound, bound);
    }
    return p;
}

std::uint64_t digest(std::span<const double> values) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        h ^= std::bit_cast<std::uint64_t>(v);
        h *= 0x100000001b3ULL;
        h ^= h >> 29;
    }
    return h;
}

ForwardResult forward(const NetParams& params, const NetConfig& cfg, const Tensor& x) {
    ForwardResult r;
    r.output = run_forward(params, cfg, x, &r.cache);
    return r;
}

Tensor infer(const NetParams& params, const NetConfig& cfg, const Tensor& x) {
    return run_forward(params, cfg, x, nullptr);
}

namespace {

void check_cache(const NetParams& p, const NetConfig& cfg, const ForwardCache& cache, const Tensor& grad) {
    if (!(cache.cfg == cfg) || cache.enc_b.size() != static_cast<std::size_t>(cfg.depth))
        fail(ErrorCode::Contract, "forward cache was produced with a different configuration");
    if (cache.params_digest != digest(p.values))
        fail(ErrorCode::Contract, "forward cache is stale: parameters changed since the forward pass");
    if (!grad.same_shape(cache.output))
        fail(ErrorCode::Shape, "loss gradient does not match network output shape");
}

NetParams backward_from_head(const NetParams& p, const NetConfig& cfg, const ForwardCache& cache, const Tensor& dz) {
    const int depth = cfg.depth;
    NetParams g = NetParams::zeros(cfg);

    Tensor dcur = conv_back(p, g, head_conv(cfg), cache.dec_b[0], dz);

    // Decoder, full resolution first.
    std::vector<Tensor> dskip(static_cast<std::size_t>(depth));
    for (int l = 0; l < depth; ++l) {
        layers::relu_backward_inplace(cache.dec_b[l], dcur);
        Tensor da = conv_back(p, g, dec_conv(cfg, l, 2), cache.dec_a[l], dcur);
        layers::relu_backward_inplace(cache.dec_a[l], da);
        Tensor dcat = conv_back(p, g, dec_conv(cfg, l, 1), cache.dec_cat[l], da);
        auto [ds, dup] = layers::concat_backward(dcat, level_channels(cfg, l));
        dskip[l] = std::move(ds);
        layers::relu_backward_inplace(cache.dec_up[l], dup);
        Tensor du = conv_back(p, g, dec_conv(cfg, l, 0), cache.dec_upsampled[l], dup);
        dcur = layers::upsample2_backward(du);
    }

    layers::relu_backward_inplace(cache.bott_b, dcur);
    Tensor dba = conv_back(p, g, bott_conv(cfg, 1), cache.bott_a, dcur);
    layers::relu_backward_inplace(cache.bott_a, dba);
    dcur = conv_back(p, g, bott_conv(cfg, 0), cache.pooled[depth - 1], dba);

    for (int l = depth - 1; l >= 0; --l) {
        const Tensor& b = cache.enc_b[l];
        Tensor db = layers::maxpool2_backward(b.channels, b.height, b.width, cache.pool_idx[l], dcur);
        for (std::size_t i = 0; i < db.size(); ++i) db.values[i] += dskip[l].values[i];
        layers::relu_backward_inplace(b, db);
        Tensor da = conv_back(p, g, enc_conv(l, 1), cache.enc_a[l], db);
        layers::relu_backward_inplace(cache.enc_a[l], da);
        dcur = conv_back(p, g, enc_conv(l, 0), l == 0 ? cache.input : cache.pooled[l - 1], da);
    }
    return g;
}

}  // namespace

NetParams backward(const NetParams& p, const NetConfig& cfg, const ForwardCache& cache, const Tensor& dloss_dy) {
    check_cache(p, cfg, cache, dloss_dy);
    return backward_from_head(p, cfg, cache, layers::sigmoid_backward(cache.output, dloss_dy));
}

NetParams backward_logits(const NetParams& p, const NetConfig& cfg, const ForwardCache& cache,
                          const Tensor& dloss_dz) {
    check_cache(p, cfg, cache, dloss_dz);
    return backward_from_head(p, cfg, cache, dloss_dz);
}

BinaryMask threshold_probabilities(const Tensor& probs, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        fail(ErrorCode::Argument, "threshold must lie in [0, 1]");
    if (probs.channels != 1) fail(ErrorCode::Shape, "probability map must have one channel");
    BinaryMask m(probs.width, probs.height);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = probs.values[i] > threshold ? 1 : 0;
    return m;
}

BinaryMask predict_mask(const NetParams& params, const NetConfig& cfg, const Tensor& x, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        fail(ErrorCode::Argument, "threshold must lie in [0, 1]");
    return threshold_probabilities(infer(params, cfg, x), threshold);
}

void save_checkpoint(const std::filesystem::path& path, const NetConfig& cfg, const NetParams& params) {
    cfg.validate();
    if (params.values.size() != NetParams::zeros(cfg).values.size())
        fail(ErrorCode::Shape, "parameters do not match configuration");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.in_channels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.base_channels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.depth));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.upsample));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(params.values.size()));
    for (double v : params.values) put<double>(out, v);
    if (!out) fail(ErrorCode::Io, "write failed for checkpoint " + path.string());
}

std::pair<NetConfig, NetParams> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open checkpoint " + path.string());
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        fail(ErrorCode::Format, path.string() + " is not a network checkpoint");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion)
        fail(ErrorCode::Unsupported, "checkpoint version " + std::to_string(version) + " is not supported");
    NetConfig cfg;
    cfg.in_channels = static_cast<int>(get<std::uint32_t>(in, path));
    cfg.base_channels = static_cast<int>(get<std::uint32_t>(in, path));
    cfg.depth = static_cast<int>(get<std::uint32_t>(in, path));
    cfg.upsample = static_cast<Upsample>(get<std::uint32_t>(in, path));
    try {
        cfg.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Format, "checkpoint " + path.string() + " has an invalid configuration: " + e.what());
    }
    NetParams params = NetParams::zeros(cfg);
    const auto count = get<std::uint64_t>(in, path);
    if (count != params.values.size())
        fail(ErrorCode::Shape, "checkpoint " + path.string() + " holds " + std::to_string(count) +
                                   " values, configuration needs " + std::to_string(params.values.size()));
    for (double& v : params.values) {
        v = get<double>(in, path);
        if (!std::isfinite(v)) fail(ErrorCode::Format, "checkpoint " + path.string() + " contains non-finite values");
    }
    if (in.peek() != std::char_traits<char>::eof())
        fail(ErrorCode::Format, "trailing bytes in checkpoint " + path.string());
    return {cfg, std::move(params)};
}

}  // namespace urbanmap
