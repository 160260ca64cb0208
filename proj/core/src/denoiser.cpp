// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include "styldiff/denoiser.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "styldiff/container.hpp"
#include "styldiff/error.hpp"
#include "styldiff/ops.hpp"

namespace styldiff {
namespace {

constexpr double kLeak = 0.2;
constexpr char kModelMagic[] = "SDFZ";
constexpr char kStateMagic[] = "SDTS";
constexpr std::uint16_t kStateVersion = 1;

int width_at(const DenoiserConfig& c, int level) { return c.base_width << level; }

NdArray gaussian(Rng& rng, Shape shape, std::size_t fan_in) {
    NdArray a = rng.normal_array(shape);
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : a.data()) v *= std;
    return a;
}

void add_conv(ParamSet& p, Rng& rng, const std::string& name, std::size_t out, std::size_t in, std::size_t k) {
    p.add(name + ".w", gaussian(rng, {out, in, k, k}, in * k * k));
    p.add(name + ".b", NdArray({out}, 0.0));
}

// Transposed kernels are stored [in, out, k, k]; each output pixel of a
// stride-k, kernel-k transposed conv sees exactly `in` weights.
void add_up(ParamSet& p, Rng& rng, const std::string& name, std::size_t in, std::size_t out, std::size_t k) {
    p.add(name + ".w", gaussian(rng, {in, out, k, k}, in));
    p.add(name + ".b", NdArray({out}, 0.0));
}

void add_dense(ParamSet& p, Rng& rng, const std::string& name, std::size_t in, std::size_t out) {
    p.add(name + ".w", gaussian(rng, {in, out}, in));
    p.add(name + ".b", NdArray({out}, 0.0));
}

void add_zero(ParamSet& p, const std::string& name, Shape w_shape, std::size_t out) {
    p.add(name + ".w", NdArray(std::move(w_shape), 0.0));
    p.add(name + ".b", NdArray({out}, 0.0));
}

void add_affine(ParamSet& p, const std::string& name, std::size_t c) {
    p.add(name + ".scale", NdArray({c}, 1.0));
    p.add(name + ".shift", NdArray({c}, 0.0));
}

void add_res_block(ParamSet& p, Rng& rng, const std::string& prefix, std::size_t c, std::size_t embed) {
    add_affine(p, prefix + ".norm1", c);
    add_conv(p, rng, prefix + ".conv1", c, c, 3);
    // The FiLM projections and the closing conv start at zero so each block
    // is the identity at init; otherwise the residual sum doubles the
    // activation variance per block.
    add_zero(p, prefix + ".temb_scale", {embed, c}, c);
    add_zero(p, prefix + ".temb_shift", {embed, c}, c);
    add_affine(p, prefix + ".norm2", c);
    add_zero(p, prefix + ".conv2", {c, c, 3, 3}, c);
}

ParamSet init_unet(const DenoiserConfig& c) {
    Rng rng(c.seed);
    ParamSet p;
    p.set_storage(Precision::f32);
    const auto E = static_cast<std::size_t>(c.time_embed_dim);
    add_dense(p, rng, "time.dense1", E, E);
    add_dense(p, rng, "time.dense2", E, E);
    add_conv(p, rng, "in", static_cast<std::size_t>(width_at(c, 0)), 3, 3);
    for (int l = 0; l < c.levels; ++l) {
        const auto w = static_cast<std::size_t>(width_at(c, l));
        add_res_block(p, rng, "enc" + std::to_string(l), w, E);
        if (l + 1 < c.levels) add_conv(p, rng, "down" + std::to_string(l), 2 * w, w, 3);
    }
    for (int l = c.levels - 2; l >= 0; --l) {
        const auto w = static_cast<std::size_t>(width_at(c, l));
        add_up(p, rng, "up" + std::to_string(l), 2 * w, w, 2);
        add_res_block(p, rng, "dec" + std::to_string(l), w, E);
    }
    add_affine(p, "out.norm", static_cast<std::size_t>(width_at(c, 0)));
    add_conv(p, rng, "out", 3, static_cast<std::size_t>(width_at(c, 0)), 3);
    return p;
}

// Sinusoidal features [N, E]: sin(t w_i) in the first half, cos(t w_i) in
// the second, w_i = 10000^(-i / (E/2)).
NdArray timestep_features(std::span<const int> t, int dim) {
    const std::size_t half = static_cast<std::size_t>(dim) / 2;
    NdArray out({t.size(), static_cast<std::size_t>(dim)});
    for (std::size_t n = 0; n < t.size(); ++n) {
        for (std::size_t i = 0; i < half; ++i) {
            const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
            const double arg = static_cast<double>(t[n]) * freq;
            out[n * 2 * half + i] = std::sin(arg);
            out[n * 2 * half + half + i] = std::cos(arg);
        }
    }
    return out;
}

Var dense(const BoundParams& w, const std::string& name, const Var& x) {
    return channel_add(matmul(x, w[name + ".w"]), w[name + ".b"]);
}

Var conv(const BoundParams& w, const std::string& name, const Var& x, std::size_t stride = 1) {
    return conv2d(x, w[name + ".w"], w[name + ".b"], {.stride = stride, .pad = 1});
}

// Per-channel affine followed by the leaky rectifier.
Var affine_act(const BoundParams& w, const std::string& name, const Var& x) {
    return channel_affine(x, w[name + ".scale"], w[name + ".shift"], kLeak);
}

void write_config(ContainerWriter& out, const DenoiserConfig& c) {
    out.put_u32(static_cast<std::uint32_t>(c.image_size));
    out.put_u32(static_cast<std::uint32_t>(c.base_width));
    out.put_u32(static_cast<std::uint32_t>(c.levels));
    out.put_u32(static_cast<std::uint32_t>(c.time_embed_dim));
    out.put_u64(c.seed);
}

DenoiserConfig read_config(ContainerReader& in) {
    DenoiserConfig c;
    c.image_size = static_cast<int>(in.get_u32());
    c.base_width = static_cast<int>(in.get_u32());
    c.levels = static_cast<int>(in.get_u32());
    c.time_embed_dim = static_cast<int>(in.get_u32());
    c.seed = in.get_u64();
    return c;
}

}  // namespace

void DenoiserConfig::validate() const {
    if (image_size < 16 || !std::has_single_bit(static_cast<unsigned>(image_size))) {
        throw ConfigError("denoiser: image_size must be a power of two >= 16, got " + std::to_string(image_size));
    }
    if (base_width < 1) throw ConfigError("denoiser: base_width must be positive");
    if (levels < 1 || levels > 8 || image_size % (1 << levels) != 0) {
        throw ConfigError("denoiser: image_size " + std::to_string(image_size) + " is not divisible by 2^" +
                          std::to_string(levels));
    }
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
        throw ConfigError("denoiser: time_embed_dim must be even and >= 2");
    }
}

std::string to_string(const DenoiserConfig& c) {
    return "image_size=" + std::to_string(c.image_size) + " base_width=" + std::to_string(c.base_width) +
           " levels=" + std::to_string(c.levels) + " time_embed_dim=" + std::to_string(c.time_embed_dim) +
           " seed=" + std::to_string(c.seed);
}

NdArray TrainableDenoiser::predict_noise(const NdArray& x, int t) const {
    const bool single = x.rank() == 3;
    if (!single && x.rank() != 4) throw ShapeError("predict_noise: expected {3,H,W} or {N,3,H,W}, got " + to_string(x.shape()));
    Tape tape(Tape::Mode::inference);
    const BoundParams w(tape, params());
    const Var input = tape.constant(single ? x.reshape({1, x.extent(0), x.extent(1), x.extent(2)}) : x);
    const std::vector<int> steps(input.shape()[0], t);
    NdArray out = forward(w, input, steps).value();
    return single ? out.reshape(x.shape()) : out;
}

UNetDenoiser::UNetDenoiser(const DenoiserConfig& config) : config_(config) {
    config_.validate();
    params_ = init_unet(config_);
}

UNetDenoiser::UNetDenoiser(const DenoiserConfig& config, ParamSet params) : config_(config) {
    config_.validate();
    params_ = init_unet(config_);
    if (!params.aligned_with(params_)) throw ShapeError("denoiser: parameters do not match " + to_string(config_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        params_.value(i) = std::move(params.value(i));
        round_to_f32(params_.value(i));
    }
}

Var UNetDenoiser::res_block(const BoundParams& w, const std::string& prefix, const Var& h, const Var& temb) const {
    Var r = conv(w, prefix + ".conv1", affine_act(w, prefix + ".norm1", h));
    const Var s = add_scalar(dense(w, prefix + ".temb_scale", temb), 1.0);
    r = channel_affine(r, s, dense(w, prefix + ".temb_shift", temb));
    r = conv(w, prefix + ".conv2", affine_act(w, prefix + ".norm2", r));
    return h + r;
}

Var UNetDenoiser::forward(const BoundParams& w, const Var& x, std::span<const int> t) const {
    const Shape& s = x.shape();
    const auto size = static_cast<std::size_t>(config_.image_size);
    if (s.size() != 4 || s[1] != 3 || s[2] != size || s[3] != size) {
        throw ShapeError("denoiser: expected {N,3," + std::to_string(size) + "," + std::to_string(size) + "}, got " +
                         to_string(s));
    }
    if (t.size() != s[0]) throw ShapeError("denoiser: need one timestep per batch element");

    Tape& tape = w.tape();
    const Var feats = tape.constant(timestep_features(t, config_.time_embed_dim));
    const Var temb = dense(w, "time.dense2", leaky_relu(dense(w, "time.dense1", feats), kLeak));

    std::vector<Var> skips;
    Var h = conv(w, "in", x);
    for (int l = 0; l < config_.levels; ++l) {
        h = res_block(w, "enc" + std::to_string(l), h, temb);
        skips.push_back(h);
        if (l + 1 < config_.levels) h = conv(w, "down" + std::to_string(l), h, 2);
    }
    for (int l = config_.levels - 2; l >= 0; --l) {
        const std::string up = "up" + std::to_string(l);
        h = conv_transpose2d(h, w[up + ".w"], w[up + ".b"], 2, 0) + skips[static_cast<std::size_t>(l)];
        h = res_block(w, "dec" + std::to_string(l), h, temb);
    }
    return conv(w, "out", affine_act(w, "out.norm", h));
}

void UNetDenoiser::save(const std::filesystem::path& path) const {
    ContainerWriter out(kModelMagic, kFormatVersion);
    write_config(out, config_);
    out.put_u32(static_cast<std::uint32_t>(params_.size()));
    for (std::size_t i = 0; i < params_.size(); ++i) out.put_array(params_.name(i), params_.value(i));
    out.write(path);
}

UNetDenoiser UNetDenoiser::load(const std::filesystem::path& path) {
    ContainerReader in = ContainerReader::open(path, kModelMagic, kFormatVersion);
    const DenoiserConfig config = read_config(in);
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("denoiser file: ") + e.what());
    }
    const std::uint32_t count = in.get_u32();
    ParamSet params;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto [name, value] = in.get_array();
        params.add(std::move(name), std::move(value));
    }
    if (!in.at_end()) throw FormatError("denoiser file: trailing bytes");
    try {
        return UNetDenoiser(config, std::move(params));
    } catch (const ShapeError& e) {
        throw FormatError(std::string("denoiser file: ") + e.what());
    }
}

UNetDenoiser UNetDenoiser::load(const std::filesystem::path& path, const DenoiserConfig& expected) {
    UNetDenoiser model = load(path);
    if (!(model.config() == expected)) {
        throw ConfigMismatchError("denoiser file '" + path.string() + "' has config {" + to_string(model.config()) +
                                  "}, expected {" + to_string(expected) + "}");
    }
    return model;
}

AffineDenoiser::AffineDenoiser(double a, double b) {
    params_.add("a", NdArray::scalar(a));
    params_.add("b", NdArray::scalar(b));
}

Var AffineDenoiser::forward(const BoundParams& w, const Var& x, std::span<const int> t) const {
    if (x.shape().empty() || t.size() != x.shape()[0]) throw ShapeError("affine denoiser: one timestep per batch element");
    return w["a"] * x + w["b"];
}

LinearGaussianOracle::LinearGaussianOracle(NdArray mean, NdArray var, const NoiseSchedule& sched)
    : mean_(std::move(mean)), var_(std::move(var)), sched_(&sched) {
    require_same_shape(mean_, var_, "linear_gaussian_oracle");
    for (double v : var_.data()) {
        if (!(v > 0.0)) throw DomainError("linear_gaussian_oracle: variances must be positive");
    }
}

NdArray LinearGaussianOracle::posterior_mean(const NdArray& x, int t) const {
    if (x.size() == 0 || x.size() % mean_.size() != 0) {
        throw ShapeError("linear_gaussian_oracle: input " + to_string(x.shape()) + " does not tile " +
                         to_string(mean_.shape()));
    }
    const double ab = sched_->alpha_bar(t);
    const double sab = std::sqrt(ab);
    NdArray out(x.shape());
    const std::size_t n = mean_.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = mean_[i % n], v = var_[i % n];
        out[i] = (sab * v * x[i] + (1.0 - ab) * m) / (ab * v + (1.0 - ab));
    }
    out.require_finite("linear_gaussian_oracle");
    return out;
}

NdArray LinearGaussianOracle::predict_noise(const NdArray& x, int t) const {
    if (t < 1) throw DomainError("linear_gaussian_oracle: queried at t = 0, where the noise scale is zero");
    const double ab = sched_->alpha_bar(t);
    const NdArray post = posterior_mean(x, t);
    return axpby(1.0 / std::sqrt(1.0 - ab), x, -std::sqrt(ab) / std::sqrt(1.0 - ab), post);
}

std::uint32_t param_checksum(const ParamSet& params) {
    std::vector<unsigned char> bytes;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.name(i);
        bytes.insert(bytes.end(), name.begin(), name.end());
        bytes.push_back(0);
        const NdArray& v = params.value(i);
        const auto* raw = reinterpret_cast<const unsigned char*>(v.raw());
        bytes.insert(bytes.end(), raw, raw + v.size() * sizeof(double));
    }
    return crc32(bytes);
}

void TrainingState::save(const std::filesystem::path& path, const ParamSet& params) const {
    if (adam.m.size() != params.size()) throw ShapeError("training state: optimizer state does not match parameters");
    ContainerWriter out(kStateMagic, kStateVersion);
    out.put_u64(static_cast<std::uint64_t>(steps_done));
    out.put_u64(static_cast<std::uint64_t>(adam.step));
    out.put_f64(adam.hyper.beta1);
    out.put_f64(adam.hyper.beta2);
    out.put_f64(adam.hyper.eps);
    out.put_string(rng_state);
    out.put_u32(param_checksum(params));
    out.put_u32(static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.put_array("m." + params.name(i), adam.m[i]);
        out.put_array("v." + params.name(i), adam.v[i]);
    }
    out.write(path);
}

TrainingState TrainingState::load(const std::filesystem::path& path, const ParamSet& params) {
    ContainerReader in = ContainerReader::open(path, kStateMagic, kStateVersion);
    TrainingState s;
    s.steps_done = static_cast<std::int64_t>(in.get_u64());
    s.adam.step = static_cast<std::int64_t>(in.get_u64());
    s.adam.hyper.beta1 = in.get_f64();
    s.adam.hyper.beta2 = in.get_f64();
    s.adam.hyper.eps = in.get_f64();
    s.rng_state = in.get_string();
    if (in.get_u32() != param_checksum(params)) {
        throw ProvenanceError("training state '" + path.string() + "' was saved with different parameters");
    }
    if (in.get_u32() != params.size()) throw FormatError("training state: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto [mname, m] = in.get_array();
        auto [vname, v] = in.get_array();
        if (mname != "m." + params.name(i) || vname != "v." + params.name(i) || m.shape() != params.value(i).shape() ||
            v.shape() != params.value(i).shape()) {
            throw FormatError("training state: moments do not match parameter '" + params.name(i) + "'");
        }
        s.adam.m.push_back(std::move(m));
        s.adam.v.push_back(std::move(v));
    }
    if (!in.at_end()) throw FormatError("training state: trailing bytes");
    return s;
}

PretrainResult pretrain(TrainableDenoiser& model, std::span<const NdArray> dataset, const NoiseSchedule& sched,
                        const PretrainOptions& options, std::optional<TrainingState> resume) {
    if (dataset.empty()) throw DomainError("pretrain: dataset is empty");
    if (options.steps < 0 || options.batch < 1) throw DomainError("pretrain: steps must be >= 0 and batch >= 1");
    for (const NdArray& img : dataset) {
        if (img.shape() != dataset[0].shape() || img.rank() != 3) {
            throw ShapeError("pretrain: dataset images must share one {3,H,W} shape");
        }
    }
    PretrainResult result;
    Rng rng(options.seed);
    if (resume) {
        result.state = std::move(*resume);
        rng.restore(result.state.rng_state);
    } else {
        result.state.adam = make_adam_state(model.params(), options.adam);
    }
    const int T = sched.steps();
    const auto B = static_cast<std::size_t>(options.batch);
    const Shape& img_shape = dataset[0].shape();
    Shape batch_shape{B};
    batch_shape.insert(batch_shape.end(), img_shape.begin(), img_shape.end());
    const std::size_t per = dataset[0].size();

    for (int step = 0; step < options.steps; ++step) {
        std::vector<int> t(B);
        NdArray x_t(batch_shape);
        NdArray eps(batch_shape);
        for (std::size_t b = 0; b < B; ++b) {
            const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(dataset.size()) - 1));
            t[b] = static_cast<int>(rng.uniform_int(1, T));
            const double ab = sched.alpha_bar(t[b]);
            const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
            const NdArray& x0 = dataset[idx];
            for (std::size_t i = 0; i < per; ++i) {
                const double e = rng.normal();
                eps[b * per + i] = e;
                x_t[b * per + i] = sa * x0[i] + sn * e;
            }
        }
        try {
            Tape tape;
            const BoundParams w(tape, model.params());
            const Var pred = model.forward(w, tape.constant(std::move(x_t)), t);
            const Var loss = mean(square(pred - tape.constant(std::move(eps))));
            const double value = loss.value().item();
            if (!std::isfinite(value)) throw NonFiniteError("loss is not finite");
            const ParamSet g = grad(loss, w);
            adam_step(model.params(), g, result.state.adam, options.lr);
            result.losses.push_back(value);
        } catch (const NonFiniteError& e) {
            throw NonFiniteError("pretrain: step " + std::to_string(result.state.steps_done + 1) + ": " + e.what());
        }
        result.state.steps_done += 1;
        if (options.on_step) options.on_step(static_cast<int>(result.state.steps_done), result.losses.back());
    }
    result.state.rng_state = rng.state();
    return result;
}

}  // namespace styldiff
