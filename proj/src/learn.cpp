#include "ltrs/learn.hpp"

#include "ltrs/error.hpp"
#include "ltrs/parallel.hpp"
#include "ltrs/random.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

namespace ltrs {

using nlohmann::json;

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::M1M1: return "m1m1";
        case Regime::M1M2: return "m1m2";
        case Regime::DM1DM2: return "dm1dm2";
    }
    return "unknown";
}

Regime parse_regime(std::string_view name) {
    if (name == "m1m1") return Regime::M1M1;
    if (name == "m1m2") return Regime::M1M2;
    if (name == "dm1dm2") return Regime::DM1DM2;
    throw Error(ErrorCode::Parameter, "unknown mask regime '" + std::string(name) + "'");
}

std::string_view to_string(InputKind k) {
    switch (k) {
        case InputKind::MsTrs: return "ms_trs";
        case InputKind::TOnly: return "t_only";
        case InputKind::CaRaw: return "ca_raw";
    }
    return "unknown";
}

InputKind parse_input_kind(std::string_view name) {
    if (name == "ms_trs" || name == "ms-trs") return InputKind::MsTrs;
    if (name == "t_only" || name == "t-only") return InputKind::TOnly;
    if (name == "ca_raw" || name == "ca-raw") return InputKind::CaRaw;
    throw Error(ErrorCode::Parameter, "unknown input kind '" + std::string(name) + "'");
}

void validate(const Pipeline& p) {
    validate(p.strides);
    if (p.pool < 1 || p.pool > p.strides.crop_size) throw Error(ErrorCode::Parameter, "pool must be in [1, crop_size]");
    if (!(p.open_fraction > 0.0 && p.open_fraction < 1.0)) {
        throw Error(ErrorCode::Parameter, "open_fraction must be in (0, 1)");
    }
    if (!(p.epsilon > 0.0)) throw Error(ErrorCode::Parameter, "epsilon must be > 0");
    if (p.capture.noise_sigma < 0.0) throw Error(ErrorCode::Parameter, "noise_sigma must be >= 0");
}

int pipeline_channels(const Pipeline& p) {
    switch (p.input) {
        case InputKind::MsTrs: return stack_channels(p.strides, FeatureSet::MsTrs);
        case InputKind::TOnly: return stack_channels(p.strides, FeatureSet::TOnly);
        case InputKind::CaRaw: return p.strides.clip_length;
    }
    return 0;
}

int feature_dim(const Pipeline& p) { return pipeline_channels(p) * p.pool * p.pool; }

std::vector<float> average_pool(std::span<const float> tensor, int channels, int height, int width, int pool) {
    const auto plane = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    if (tensor.size() != plane * static_cast<std::size_t>(channels)) {
        throw Error(ErrorCode::DimensionMismatch, "average_pool: tensor size does not match its shape");
    }
    std::vector<float> out(static_cast<std::size_t>(channels * pool * pool));
    std::size_t k = 0;
    for (int c = 0; c < channels; ++c) {
        const float* ch = tensor.data() + static_cast<std::size_t>(c) * plane;
        for (int py = 0; py < pool; ++py) {
            const int y0 = py * height / pool, y1 = (py + 1) * height / pool;
            for (int px = 0; px < pool; ++px) {
                const int x0 = px * width / pool, x1 = (px + 1) * width / pool;
                double acc = 0.0;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) acc += ch[static_cast<std::size_t>(y * width + x)];
                out[k++] = static_cast<float>(acc / ((y1 - y0) * (x1 - x0)));
            }
        }
    }
    return out;
}

std::vector<float> pooled_features(const std::vector<Frame>& window, const CodedCamera& camera, const Pipeline& p,
                                   std::uint64_t noise_stream) {
    const auto& s = p.strides;
    if (static_cast<int>(window.size()) != s.clip_length) {
        throw Error(ErrorCode::DimensionMismatch, "window must hold clip_length frames");
    }
    Clip ca;
    ca.frames.reserve(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        ca.frames.push_back(camera.capture(window[i], derive_seed(noise_stream, {i})));
    }
    if (p.input == InputKind::CaRaw) {
        const auto plane = static_cast<std::size_t>(s.crop_size) * static_cast<std::size_t>(s.crop_size);
        std::vector<float> tensor(plane * window.size());
        for (std::size_t i = 0; i < ca.frames.size(); ++i) {
            const Image c = crop_center(ca.frames[i], s.crop_size, s.crop_size);
            std::transform(c.values().begin(), c.values().end(), tensor.begin() + static_cast<std::ptrdiff_t>(i * plane),
                           [](double v) { return static_cast<float>(v); });
        }
        return average_pool(tensor, s.clip_length, s.crop_size, s.crop_size, p.pool);
    }
    ExtractOptions opts;
    opts.set = p.input == InputKind::MsTrs ? FeatureSet::MsTrs : FeatureSet::TOnly;
    opts.epsilon = p.epsilon;
    opts.log_polar = p.log_polar;
    const FeatureStack st = extract_mstrs(ca, s, 0, opts);
    return average_pool(st.tensor, st.channels, st.height, st.width, p.pool);
}

Frame fit_frame(const Frame& f, int sim_size, int short_side) {
    Image img = f;
    const int shortest = std::min(f.height(), f.width());
    if (short_side > 0 && short_side != shortest) {
        const double k = static_cast<double>(short_side) / shortest;
        img = resize_bilinear(f, std::max(1, static_cast<int>(std::lround(f.height() * k))),
                              std::max(1, static_cast<int>(std::lround(f.width() * k))));
    }
    if (img.height() == sim_size && img.width() == sim_size) return img;
    // centre crop, or edge-replicating pad when the frame is smaller
    const int top = (img.height() - sim_size) / 2, left = (img.width() - sim_size) / 2;
    Image out(sim_size, sim_size);
    for (int r = 0; r < sim_size; ++r) {
        const int sr = std::clamp(r + top, 0, img.height() - 1);
        for (int c = 0; c < sim_size; ++c) out(r, c) = img(sr, std::clamp(c + left, 0, img.width() - 1));
    }
    return out;
}

// ---------------------------------------------------------------- model

Model::Model(int k, int d)
    : classes(k),
      dim(d),
      mean(static_cast<std::size_t>(d), 0.0),
      inv_std(static_cast<std::size_t>(d), 1.0),
      weights(static_cast<std::size_t>(k) * static_cast<std::size_t>(d), 0.0),
      bias(static_cast<std::size_t>(k), 0.0),
      m_w(weights.size(), 0.0),
      v_w(weights.size(), 0.0),
      m_b(bias.size(), 0.0),
      v_b(bias.size(), 0.0) {
    if (k < 2 || d < 1) throw Error(ErrorCode::Parameter, "model needs >= 2 classes and >= 1 feature");
}

void Model::fit_standardizer(const std::vector<std::vector<float>>& samples) {
    if (samples.empty()) throw Error(ErrorCode::Parameter, "standardizer needs at least one sample");
    const auto d = static_cast<std::size_t>(dim);
    std::vector<double> sum(d, 0.0), sq(d, 0.0);
    for (const auto& s : samples) {
        if (s.size() != d) throw Error(ErrorCode::DimensionMismatch, "feature vector length differs from model");
        for (std::size_t j = 0; j < d; ++j) sum[j] += s[j];
    }
    const auto n = static_cast<double>(samples.size());
    for (std::size_t j = 0; j < d; ++j) mean[j] = sum[j] / n;
    for (const auto& s : samples)
        for (std::size_t j = 0; j < d; ++j) sq[j] += (s[j] - mean[j]) * (s[j] - mean[j]);
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(sq[j] / n);
        // a feature that never varies in training carries no signal
        inv_std[j] = sd > 1e-9 ? 1.0 / sd : 0.0;
    }
}

std::vector<double> Model::standardize(std::span<const float> x) const {
    if (x.size() != static_cast<std::size_t>(dim)) {
        throw Error(ErrorCode::DimensionMismatch, "feature vector length differs from model");
    }
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) * inv_std[j];
    return out;
}

namespace {

std::vector<double> softmax_logits(const Model& m, const std::vector<double>& xs) {
    const auto d = static_cast<std::size_t>(m.dim);
    std::vector<double> z(static_cast<std::size_t>(m.classes));
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double* w = m.weights.data() + k * d;
        z[k] = std::inner_product(xs.begin(), xs.end(), w, m.bias[k]);
    }
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) total += (v = std::exp(v - top));
    for (double& v : z) v /= total;
    return z;
}

int argmax_index(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<double> Model::probabilities(std::span<const float> x) const { return softmax_logits(*this, standardize(x)); }

LossGrad loss_and_gradient(const Model& model, const std::vector<std::vector<double>>& x, std::span<const int> labels,
                           double l2) {
    if (x.empty() || x.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "batch and labels differ");
    const auto d = static_cast<std::size_t>(model.dim);
    LossGrad out;
    out.grad_w.assign(model.weights.size(), 0.0);
    out.grad_b.assign(model.bias.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= model.classes) throw Error(ErrorCode::Parameter, "label out of range");
        if (x[i].size() != d) throw Error(ErrorCode::DimensionMismatch, "feature vector length differs from model");
        std::vector<double> p = softmax_logits(model, x[i]);
        out.loss -= std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300)) * inv_n;
        p[static_cast<std::size_t>(y)] -= 1.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double g = p[k] * inv_n;
            out.grad_b[k] += g;
            double* gw = out.grad_w.data() + k * d;
            for (std::size_t j = 0; j < d; ++j) gw[j] += g * x[i][j];
        }
    }
    if (l2 > 0.0) {
        double norm = 0.0;
        for (std::size_t j = 0; j < model.weights.size(); ++j) {
            norm += model.weights[j] * model.weights[j];
            out.grad_w[j] += l2 * model.weights[j];
        }
        out.loss += 0.5 * l2 * norm;
    }
    return out;
}

double adam_step(Model& model, const std::vector<std::vector<double>>& x, std::span<const int> labels, const Hyper& h) {
    const LossGrad lg = loss_and_gradient(model, x, labels, h.l2);
    if (!std::isfinite(lg.loss)) throw Error(ErrorCode::Divergence, "training loss is not finite");
    ++model.step;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(model.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(model.step));
    auto update = [&](std::vector<double>& w, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
            w[j] -= h.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + h.adam_eps);
        }
    };
    update(model.weights, model.m_w, model.v_w, lg.grad_w);
    update(model.bias, model.m_b, model.v_b, lg.grad_b);
    return lg.loss;
}

namespace {

void validate_hyper(const Hyper& h) {
    if (!(h.lr > 0.0)) throw Error(ErrorCode::Parameter, "learning rate must be > 0");
    if (!(h.beta1 >= 0.0 && h.beta1 < 1.0 && h.beta2 >= 0.0 && h.beta2 < 1.0)) {
        throw Error(ErrorCode::Parameter, "Adam betas must be in [0, 1)");
    }
    if (h.batch < 1 || h.epochs < 1) throw Error(ErrorCode::Parameter, "batch and epochs must be >= 1");
    if (h.l2 < 0.0) throw Error(ErrorCode::Parameter, "l2 must be >= 0");
}

struct Accuracy {
    double loss = 0;
    int correct = 0;
    int total = 0;

    void add(const std::vector<double>& p, int y) {
        loss -= std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
        correct += argmax_index(p) == y;
        ++total;
    }
    double mean_loss() const { return total ? loss / total : 0.0; }
    double rate() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

}  // namespace

Model fit_features(const std::vector<std::vector<float>>& x, const std::vector<int>& y, int classes, const Hyper& h,
                   std::vector<EpochStats>* log) {
    validate_hyper(h);
    if (x.empty() || x.size() != y.size()) throw Error(ErrorCode::Parameter, "features and labels differ in count");
    Model model(classes, static_cast<int>(x.front().size()));
    model.fit_standardizer(x);
    std::vector<std::vector<double>> xs;
    xs.reserve(x.size());
    for (const auto& v : x) xs.push_back(model.standardize(v));

    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    for (int e = 0; e < h.epochs; ++e) {
        Rng rng = make_rng(h.seed, {static_cast<std::uint64_t>(e), 1});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(h.batch)) {
            const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(h.batch));
            std::vector<std::vector<double>> bx;
            std::vector<int> by;
            for (std::size_t i = b; i < end; ++i) {
                bx.push_back(xs[order[i]]);
                by.push_back(y[order[i]]);
            }
            adam_step(model, bx, by, h);
        }
        if (log) {
            Accuracy acc;
            for (std::size_t i = 0; i < xs.size(); ++i) acc.add(softmax_logits(model, xs[i]), y[i]);
            log->push_back({e, acc.mean_loss(), acc.rate(), 0.0, 0.0});
        }
    }
    return model;
}

// ---------------------------------------------------------------- pipeline training

namespace {

/// Clips held as float frames so a whole benchmark split stays in memory.
class ClipStore {
public:
    ClipStore(const Benchmark& data, const std::vector<std::size_t>& ids, int threads) {
        std::vector<std::size_t> unique = ids;
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        std::vector<Entry> entries(unique.size());
        parallel_for(unique.size(), threads, [&](std::size_t i) {
            const Clip c = data.clip(unique[i]);
            Entry& e = entries[i];
            e.height = c.height();
            e.width = c.width();
            for (const Frame& f : c.frames) {
                e.frames.emplace_back(f.values().begin(), f.values().end());
            }
        });
        for (std::size_t i = 0; i < unique.size(); ++i) store_.emplace(unique[i], std::move(entries[i]));
    }

    int length(std::size_t id) const { return static_cast<int>(store_.at(id).frames.size()); }

    std::vector<Frame> window(std::size_t id, int start, int count) const {
        const Entry& e = store_.at(id);
        std::vector<Frame> out;
        for (int i = start; i < start + count; ++i) {
            const auto& src = e.frames.at(static_cast<std::size_t>(i));
            out.emplace_back(e.height, e.width, std::vector<double>(src.begin(), src.end()));
        }
        return out;
    }

private:
    struct Entry {
        int height = 0, width = 0;
        std::vector<std::vector<float>> frames;
    };
    std::map<std::size_t, Entry> store_;
};

Mask regime_mask(const Pipeline& p, std::uint64_t seed) {
    const int n = p.strides.sim_size;
    return generate_mask(p.family, n, n, p.open_fraction, seed);
}

json pipeline_json(const Pipeline& p) {
    return {{"strides", p.strides.strides},
            {"clip_length", p.strides.clip_length},
            {"sim_size", p.strides.sim_size},
            {"crop_size", p.strides.crop_size},
            {"input", to_string(p.input)},
            {"capture",
             {{"boundary_effect", p.capture.boundary_effect},
              {"noise_sigma", p.capture.noise_sigma},
              {"normalize_output", p.capture.normalize_output},
              {"seed", p.capture.seed}}},
            {"mask_family", to_string(p.family)},
            {"open_fraction", p.open_fraction},
            {"epsilon", p.epsilon},
            {"log_polar", {{"n_rho", p.log_polar.n_rho}, {"n_theta", p.log_polar.n_theta}, {"rho_min", p.log_polar.rho_min}}},
            {"pool", p.pool}};
}

Pipeline pipeline_from_json(const json& j) {
    Pipeline p;
    p.strides.strides = j.at("strides").get<std::vector<int>>();
    p.strides.clip_length = j.at("clip_length").get<int>();
    p.strides.sim_size = j.at("sim_size").get<int>();
    p.strides.crop_size = j.at("crop_size").get<int>();
    p.input = parse_input_kind(j.at("input").get<std::string>());
    const auto& c = j.at("capture");
    p.capture.boundary_effect = c.at("boundary_effect").get<bool>();
    p.capture.noise_sigma = c.at("noise_sigma").get<double>();
    p.capture.normalize_output = c.at("normalize_output").get<bool>();
    p.capture.seed = c.at("seed").get<std::uint64_t>();
    const auto family = parse_mask_family(j.at("mask_family").get<std::string>());
    if (!family) throw Error(ErrorCode::Schema, "unknown mask family in pipeline");
    p.family = *family;
    p.open_fraction = j.at("open_fraction").get<double>();
    p.epsilon = j.at("epsilon").get<double>();
    const auto& lp = j.at("log_polar");
    p.log_polar = {lp.at("n_rho").get<int>(), lp.at("n_theta").get<int>(), lp.at("rho_min").get<double>()};
    p.pool = j.at("pool").get<int>();
    return p;
}

json hyper_json(const Hyper& h) {
    return {{"lr", h.lr},         {"beta1", h.beta1},   {"beta2", h.beta2},
            {"adam_eps", h.adam_eps}, {"l2", h.l2},     {"batch", h.batch},
            {"epochs", h.epochs}, {"seed", h.seed},     {"augment", h.augment},
            {"standardize_samples", h.standardize_samples}};
}

}  // namespace

std::vector<int> clip_starts(int frames, int clip_length, int n) {
    if (frames < clip_length) {
        throw Error(ErrorCode::Validation, "clip has " + std::to_string(frames) + " frames, shorter than clip_length " +
                                               std::to_string(clip_length));
    }
    if (n < 1) throw Error(ErrorCode::Parameter, "number of starts must be >= 1");
    if (n == 1) return {0};
    const int avail = frames - clip_length;
    std::vector<int> starts;
    for (int k = 0; k < n; ++k) {
        starts.push_back(static_cast<int>(std::lround(static_cast<double>(k) * avail / (n - 1))));
    }
    return starts;
}

TrainResult train(const Benchmark& data, const Pipeline& p, const MaskRegime& regime, const Hyper& h) {
    validate(p);
    validate_hyper(h);
    if (data.train.empty() || data.val.empty()) throw Error(ErrorCode::Parameter, "train and val splits must be non-empty");
    if (regime.mode == Regime::M1M2 && regime.train_seed == regime.val_seed) {
        throw Error(ErrorCode::Parameter, "m1m2 needs different train and val mask seeds");
    }
    const int classes = static_cast<int>(data.class_names.size());
    const int l = p.strides.clip_length;
    const int sim = p.strides.sim_size;

    std::vector<std::size_t> needed = data.train;
    needed.insert(needed.end(), data.val.begin(), data.val.end());
    const ClipStore store(data, needed, h.threads);
    for (std::size_t id : needed) {
        if (store.length(id) < l) throw Error(ErrorCode::Validation, "clip " + data.names[id] + " is shorter than clip_length");
    }

    const bool fixed = regime.mode != Regime::DM1DM2;
    const CodedCamera train_camera(regime_mask(p, regime.train_seed), p.capture);
    const CodedCamera val_camera(regime.mode == Regime::M1M1 ? regime_mask(p, regime.train_seed)
                                                             : regime_mask(p, regime.val_seed),
                                 p.capture);

    // aug_seed is only read when augmenting
    auto window_for = [&](std::size_t id, int start, bool augmenting, std::uint64_t aug_seed = 0) {
        std::vector<Frame> w = store.window(id, start, l);
        if (augmenting) {
            Clip c;
            c.frames = std::move(w);
            return augment(c, sim, aug_seed).frames;
        }
        for (Frame& f : w) f = fit_frame(f, sim);
        return w;
    };

    TrainResult result;
    Model& model = result.model;
    model = Model(classes, feature_dim(p));
    model.class_names = data.class_names;
    model.pipeline = p;

    // standardizer from un-augmented first windows of a training subset
    {
        std::vector<std::size_t> subset = data.train;
        Rng rng = make_rng(h.seed, {0x7374});
        std::shuffle(subset.begin(), subset.end(), rng);
        subset.resize(std::min<std::size_t>(subset.size(), static_cast<std::size_t>(std::max(2, h.standardize_samples))));
        const CodedCamera cam(regime_mask(p, fixed ? regime.train_seed : derive_seed(regime.train_seed, {0x5354})),
                              p.capture);
        std::vector<std::vector<float>> feats(subset.size());
        parallel_for(subset.size(), h.threads, [&](std::size_t i) {
            feats[i] = pooled_features(window_for(subset[i], 0, false), cam, p, derive_seed(h.seed, {subset[i], 6}));
        });
        model.fit_standardizer(feats);
    }

    // feature caches for fixed masks without augmentation, keyed by (clip, start)
    std::map<std::pair<std::size_t, int>, std::vector<float>> train_cache;
    std::mutex cache_mutex;
    const bool cache_train = fixed && !h.augment;
    std::vector<std::vector<double>> val_x;
    std::vector<int> val_y;

    Model best = model;
    double best_acc = -1.0;
    std::vector<std::size_t> order = data.train;
    for (int e = 0; e < h.epochs; ++e) {
        const auto ue = static_cast<std::uint64_t>(e);
        Rng order_rng = make_rng(h.seed, {ue, 1});
        std::shuffle(order.begin(), order.end(), order_rng);
        Accuracy train_acc;
        for (std::size_t b0 = 0, batch = 0; b0 < order.size(); b0 += static_cast<std::size_t>(h.batch), ++batch) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(h.batch));
            std::unique_ptr<CodedCamera> batch_camera;
            if (!fixed) {
                batch_camera = std::make_unique<CodedCamera>(
                    regime_mask(p, derive_seed(regime.train_seed, {ue, batch})), p.capture);
            }
            const CodedCamera& cam = fixed ? train_camera : *batch_camera;

            std::vector<std::vector<float>> feats(b1 - b0);
            parallel_for(b1 - b0, h.threads, [&](std::size_t i) {
                const std::size_t id = order[b0 + i];
                Rng srng = make_rng(h.seed, {ue, 2, id});
                const int start = std::uniform_int_distribution<int>(0, store.length(id) - l)(srng);
                if (cache_train) {
                    {
                        std::lock_guard lock(cache_mutex);
                        if (auto it = train_cache.find({id, start}); it != train_cache.end()) {
                            feats[i] = it->second;
                            return;
                        }
                    }
                    feats[i] = pooled_features(window_for(id, start, false), cam, p,
                                               derive_seed(h.seed, {id, static_cast<std::uint64_t>(start), 4}));
                    std::lock_guard lock(cache_mutex);
                    train_cache.emplace(std::pair{id, start}, feats[i]);
                    return;
                }
                feats[i] = pooled_features(window_for(id, start, h.augment, derive_seed(h.seed, {ue, id, 1})), cam, p, derive_seed(h.seed, {ue, id, 3}));
            });

            std::vector<std::vector<double>> bx;
            std::vector<int> by;
            for (std::size_t i = 0; i < feats.size(); ++i) {
                bx.push_back(model.standardize(feats[i]));
                by.push_back(data.labels[order[b0 + i]]);
                train_acc.add(softmax_logits(model, bx.back()), by.back());
            }
            adam_step(model, bx, by, h);
        }

        if (val_x.empty()) {
            std::vector<std::vector<float>> feats(data.val.size());
            parallel_for(data.val.size(), h.threads, [&](std::size_t i) {
                const std::size_t id = data.val[i];
                feats[i] = pooled_features(window_for(id, 0, false), val_camera, p,
                                           derive_seed(regime.val_seed, {id, 5}));
            });
            for (std::size_t i = 0; i < feats.size(); ++i) {
                val_x.push_back(model.standardize(feats[i]));
                val_y.push_back(data.labels[data.val[i]]);
            }
        }
        Accuracy val_acc;
        for (std::size_t i = 0; i < val_x.size(); ++i) val_acc.add(softmax_logits(model, val_x[i]), val_y[i]);

        result.report.epochs.push_back({e, train_acc.mean_loss(), train_acc.rate(), val_acc.mean_loss(), val_acc.rate()});
        if (val_acc.rate() > best_acc) {
            best_acc = val_acc.rate();
            best = model;
            result.report.best_epoch = e;
        }
    }
    model = std::move(best);
    result.report.regime = regime.mode;
    result.report.config_json = json{{"pipeline", pipeline_json(p)},
                                     {"regime",
                                      {{"mode", to_string(regime.mode)},
                                       {"train_seed", regime.train_seed},
                                       {"val_seed", regime.val_seed}}},
                                     {"hyper", hyper_json(h)},
                                     {"train_clips", data.train.size()},
                                     {"val_clips", data.val.size()}}
                                    .dump();
    return result;
}

TestReport evaluate(const Model& model, const Benchmark& data, const std::vector<std::size_t>& videos,
                    const EvalProtocol& protocol) {
    const Pipeline& p = model.pipeline;
    validate(p);
    if (videos.empty()) throw Error(ErrorCode::Parameter, "no videos to evaluate");
    const int l = p.strides.clip_length;
    const std::vector<int> scales = protocol.scales.empty() ? std::vector<int>{0} : protocol.scales;
    for (int s : scales) {
        if (s < 0) throw Error(ErrorCode::Parameter, "evaluation scales must be positive");
    }
    const CodedCamera camera(regime_mask(p, protocol.mask_seed), p.capture);

    TestReport rep;
    rep.videos = static_cast<int>(videos.size());
    rep.video_scores.assign(videos.size(), std::vector<double>(static_cast<std::size_t>(model.classes), 0.0));
    std::vector<int> counts(videos.size(), 0);
    parallel_for(videos.size(), protocol.threads, [&](std::size_t v) {
        const Clip clip = data.clip(videos[v]);
        const std::vector<int> starts = clip_starts(clip.length(), l, protocol.starts);
        for (int scale : scales) {
            std::vector<Frame> fitted;
            fitted.reserve(clip.frames.size());
            for (const Frame& f : clip.frames) fitted.push_back(fit_frame(f, p.strides.sim_size, scale));
            for (int start : starts) {
                const std::vector<Frame> window(fitted.begin() + start, fitted.begin() + start + l);
                const auto probs = model.probabilities(
                    pooled_features(window, camera, p, derive_seed(protocol.mask_seed, {videos[v], 7})));
                for (std::size_t k = 0; k < probs.size(); ++k) rep.video_scores[v][k] += probs[k];
                ++counts[v];
            }
        }
        for (double& s : rep.video_scores[v]) s /= counts[v];
    });
    rep.clips_per_video = counts.front();

    rep.per_class.resize(static_cast<std::size_t>(model.classes));
    for (int k = 0; k < model.classes; ++k) {
        rep.per_class[static_cast<std::size_t>(k)].name =
            k < static_cast<int>(model.class_names.size()) ? model.class_names[static_cast<std::size_t>(k)] : "";
    }
    for (std::size_t v = 0; v < videos.size(); ++v) {
        const int y = data.labels[videos[v]];
        const auto& s = rep.video_scores[v];
        // rank of the true class; ties resolve to the lower class index
        int rank = 0;
        for (int k = 0; k < model.classes; ++k) {
            const double sk = s[static_cast<std::size_t>(k)], sy = s[static_cast<std::size_t>(y)];
            if (sk > sy || (sk == sy && k < y)) ++rank;
        }
        ClassScore& c = rep.per_class[static_cast<std::size_t>(y)];
        ++c.videos;
        c.top1 += rank < 1;
        c.top2 += rank < 2;
        c.top3 += rank < 3;
        rep.top1 += rank < 1;
        rep.top2 += rank < 2;
        rep.top3 += rank < 3;
    }
    for (ClassScore& c : rep.per_class) {
        if (c.videos == 0) continue;
        c.top1 /= c.videos;
        c.top2 /= c.videos;
        c.top3 /= c.videos;
    }
    rep.top1 /= rep.videos;
    rep.top2 /= rep.videos;
    rep.top3 /= rep.videos;
    return rep;
}

// ---------------------------------------------------------------- serialization

namespace {

std::string encode_f32(const std::vector<double>& values) {
    std::string bytes;
    bytes.reserve(values.size() * 4);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
    }
    using namespace boost::archive::iterators;
    using Encoder = base64_from_binary<transform_width<std::string::const_iterator, 6, 8>>;
    std::string out(Encoder(bytes.begin()), Encoder(bytes.end()));
    out.append((3 - bytes.size() % 3) % 3, '=');
    return out;
}

std::vector<double> decode_f32(const std::string& text, std::size_t expected, const char* what) {
    using namespace boost::archive::iterators;
    using Decoder = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
    std::string body = text;
    const auto pad = static_cast<std::size_t>(std::count(body.begin(), body.end(), '='));
    std::replace(body.begin(), body.end(), '=', 'A');
    std::string bytes;
    try {
        bytes.assign(Decoder(body.begin()), Decoder(body.end()));
    } catch (const std::exception&) {
        throw Error(ErrorCode::Format, std::string("invalid base64 in ") + what);
    }
    if (pad > bytes.size()) throw Error(ErrorCode::Format, std::string("invalid base64 padding in ") + what);
    bytes.resize(bytes.size() - pad);
    if (bytes.size() != expected * 4) {
        throw Error(ErrorCode::Format, std::string(what) + ": expected " + std::to_string(expected) + " floats");
    }
    std::vector<double> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model) {
    const json j = {
        {"format", "ltrs-model"},
        {"version", 1},
        {"classes", model.classes},
        {"dim", model.dim},
        {"class_names", model.class_names},
        {"pipeline", pipeline_json(model.pipeline)},
        {"encoding", "base64 float32 little-endian"},
        {"mean", encode_f32(model.mean)},
        {"inv_std", encode_f32(model.inv_std)},
        {"weights", encode_f32(model.weights)},
        {"bias", encode_f32(model.bias)},
        {"adam", {{"step", model.step},
                  {"m_w", encode_f32(model.m_w)},
                  {"v_w", encode_f32(model.v_w)},
                  {"m_b", encode_f32(model.m_b)},
                  {"v_b", encode_f32(model.v_b)}}},
    };
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << j.dump() << '\n';
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("format").get<std::string>() != "ltrs-model" || j.at("version").get<int>() != 1) {
            throw Error(ErrorCode::Format, path.string() + ": not an ltrs model (format/version)");
        }
        Model m(j.at("classes").get<int>(), j.at("dim").get<int>());
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        m.pipeline = pipeline_from_json(j.at("pipeline"));
        if (feature_dim(m.pipeline) != m.dim) throw Error(ErrorCode::Schema, path.string() + ": dim disagrees with pipeline");
        const auto d = static_cast<std::size_t>(m.dim), kd = m.weights.size(), k = m.bias.size();
        m.mean = decode_f32(j.at("mean").get<std::string>(), d, "mean");
        m.inv_std = decode_f32(j.at("inv_std").get<std::string>(), d, "inv_std");
        m.weights = decode_f32(j.at("weights").get<std::string>(), kd, "weights");
        m.bias = decode_f32(j.at("bias").get<std::string>(), k, "bias");
        const auto& a = j.at("adam");
        m.step = a.at("step").get<long>();
        m.m_w = decode_f32(a.at("m_w").get<std::string>(), kd, "m_w");
        m.v_w = decode_f32(a.at("v_w").get<std::string>(), kd, "v_w");
        m.m_b = decode_f32(a.at("m_b").get<std::string>(), k, "m_b");
        m.v_b = decode_f32(a.at("v_b").get<std::string>(), k, "v_b");
        for (double w : m.weights) {
            if (!std::isfinite(w)) throw Error(ErrorCode::Validation, path.string() + ": non-finite weight");
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Schema, path.string() + ": " + e.what());
    }
}

std::string test_json(const TestReport& t) {
    json classes = json::array();
    for (const auto& c : t.per_class) {
        classes.push_back({{"name", c.name}, {"videos", c.videos}, {"top1", c.top1}, {"top2", c.top2}, {"top3", c.top3}});
    }
    return json{{"videos", t.videos},
                {"clips_per_video", t.clips_per_video},
                {"top1", t.top1},
                {"top2", t.top2},
                {"top3", t.top3},
                {"per_class", classes}}
        .dump(2);
}

std::string report_json(const TrainReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"train_acc", e.train_acc},
                          {"val_loss", e.val_loss},
                          {"val_acc", e.val_acc}});
    }
    json j = {{"regime", to_string(r.regime)},
              {"config", r.config_json.empty() ? json(nullptr) : json::parse(r.config_json)},
              {"epochs", epochs},
              {"best_epoch", r.best_epoch}};
    if (r.test.videos > 0) j["test"] = json::parse(test_json(r.test));
    return j.dump(2);
}

std::string epochs_csv(const std::vector<EpochStats>& epochs) {
    std::ostringstream out;
    out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& e : epochs) {
        out << e.epoch << ',' << e.train_loss << ',' << e.train_acc << ',' << e.val_loss << ',' << e.val_acc << '\n';
    }
    return out.str();
}

}  // namespace ltrs
