#include "ltrs/cli.hpp"

#include "ltrs/attack.hpp"
#include "ltrs/error.hpp"
#include "ltrs/parallel.hpp"
#include "ltrs/pgm.hpp"
#include "ltrs/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <sstream>

namespace ltrs {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorCode::Schema, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw Error(ErrorCode::Schema, "unknown config key '" + where + key + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& into) {
    if (auto it = j.find(key); it != j.end()) into = it->get<T>();
}

template <class Enum, class Parse>
void read_enum(const json& j, const char* key, Enum& into, Parse parse) {
    if (auto it = j.find(key); it != j.end()) into = parse(it->get<std::string>());
}

MaskFamily family_or_throw(std::string_view name) {
    const auto f = parse_mask_family(name);
    if (!f) throw Error(ErrorCode::Parameter, "unknown mask family '" + std::string(name) + "'");
    return *f;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, RunConfig c) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Schema, std::string("config is not valid JSON: ") + e.what());
    }
    try {
        check_keys(j, {"seed", "threads", "capture", "mask", "features", "learn", "benchmark", "eval", "paths"}, "");
        read(j, "seed", c.seed);
        read(j, "threads", c.threads);
        if (auto it = j.find("capture"); it != j.end()) {
            check_keys(*it, {"boundary_effect", "noise_sigma", "normalize_output"}, "capture.");
            read(*it, "boundary_effect", c.capture.boundary_effect);
            read(*it, "noise_sigma", c.capture.noise_sigma);
            read(*it, "normalize_output", c.capture.normalize_output);
        }
        if (auto it = j.find("mask"); it != j.end()) {
            check_keys(*it, {"family", "open_fraction", "size"}, "mask.");
            read_enum(*it, "family", c.mask_family, family_or_throw);
            read(*it, "open_fraction", c.open_fraction);
            read(*it, "size", c.mask_size);
        }
        if (auto it = j.find("features"); it != j.end()) {
            check_keys(*it, {"strides", "clip_length", "sim_size", "crop_size", "set", "epsilon", "log_polar"},
                       "features.");
            read(*it, "strides", c.strides.strides);
            read(*it, "clip_length", c.strides.clip_length);
            read(*it, "sim_size", c.strides.sim_size);
            read(*it, "crop_size", c.strides.crop_size);
            read_enum(*it, "set", c.feature_set, parse_feature_set);
            read(*it, "epsilon", c.epsilon);
            if (auto lp = it->find("log_polar"); lp != it->end()) {
                check_keys(*lp, {"n_rho", "n_theta", "rho_min"}, "features.log_polar.");
                read(*lp, "n_rho", c.log_polar.n_rho);
                read(*lp, "n_theta", c.log_polar.n_theta);
                read(*lp, "rho_min", c.log_polar.rho_min);
            }
        }
        if (auto it = j.find("learn"); it != j.end()) {
            check_keys(*it, {"input", "pool", "regime", "hyper"}, "learn.");
            read_enum(*it, "input", c.input, parse_input_kind);
            read(*it, "pool", c.pool);
            if (auto r = it->find("regime"); r != it->end()) {
                check_keys(*r, {"mode", "train_seed", "val_seed"}, "learn.regime.");
                read_enum(*r, "mode", c.regime.mode, parse_regime);
                read(*r, "train_seed", c.regime.train_seed);
                read(*r, "val_seed", c.regime.val_seed);
            }
            if (auto h = it->find("hyper"); h != it->end()) {
                check_keys(*h,
                           {"lr", "beta1", "beta2", "adam_eps", "l2", "batch", "epochs", "augment",
                            "standardize_samples"},
                           "learn.hyper.");
                read(*h, "lr", c.hyper.lr);
                read(*h, "beta1", c.hyper.beta1);
                read(*h, "beta2", c.hyper.beta2);
                read(*h, "adam_eps", c.hyper.adam_eps);
                read(*h, "l2", c.hyper.l2);
                read(*h, "batch", c.hyper.batch);
                read(*h, "epochs", c.hyper.epochs);
                read(*h, "augment", c.hyper.augment);
                read(*h, "standardize_samples", c.hyper.standardize_samples);
            }
        }
        if (auto it = j.find("benchmark"); it != j.end()) {
            check_keys(*it,
                       {"classes", "clips_per_class", "size", "length", "flat_background", "train_fraction",
                        "val_fraction"},
                       "benchmark.");
            if (auto cl = it->find("classes"); cl != it->end()) {
                c.benchmark.classes.clear();
                for (const auto& name : *cl) c.benchmark.classes.push_back(parse_motion_class(name.get<std::string>()));
            }
            read(*it, "clips_per_class", c.benchmark.clips_per_class);
            read(*it, "size", c.benchmark.size);
            read(*it, "length", c.benchmark.length);
            read(*it, "flat_background", c.benchmark.flat_background);
            read(*it, "train_fraction", c.benchmark.train_fraction);
            read(*it, "val_fraction", c.benchmark.val_fraction);
        }
        if (auto it = j.find("eval"); it != j.end()) {
            check_keys(*it, {"scales", "starts", "mask_seed"}, "eval.");
            read(*it, "scales", c.eval.scales);
            read(*it, "starts", c.eval.starts);
            read(*it, "mask_seed", c.eval.mask_seed);
        }
        if (auto it = j.find("paths"); it != j.end()) {
            check_keys(*it, {"data", "out", "model"}, "paths.");
            if (it->contains("data")) c.data = it->at("data").get<std::string>();
            if (it->contains("out")) c.out = it->at("out").get<std::string>();
            if (it->contains("model")) c.model = it->at("model").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Schema, std::string("config: ") + e.what());
    } catch (const Error& e) {
        // a bad enum name inside the document is a schema problem
        if (e.code() == ErrorCode::Parameter) throw Error(ErrorCode::Schema, std::string("config: ") + e.what());
        throw;
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), std::move(base));
}

Pipeline pipeline_of(const RunConfig& c) {
    Pipeline p;
    p.strides = c.strides;
    p.input = c.input;
    p.capture = c.capture;
    p.capture.seed = c.seed;
    p.family = c.mask_family;
    p.open_fraction = c.open_fraction;
    p.epsilon = c.epsilon;
    p.log_polar = c.log_polar;
    p.pool = c.pool;
    return p;
}

namespace {

/// Flag whose value only overrides the config when given on the command line.
template <class T>
struct Flag {
    T value{};
    CLI::Option* opt = nullptr;
    explicit operator bool() const { return opt != nullptr && opt->count() > 0; }
    void apply(T& into) const {
        if (*this) into = value;
    }
};

template <class T>
Flag<T>& add(CLI::App* app, Flag<T>& f, const std::string& name, const std::string& help) {
    f.opt = app->add_option(name, f.value, help);
    if constexpr (std::is_same_v<T, std::vector<int>> || std::is_same_v<T, std::vector<std::string>>) {
        f.opt->delimiter(',');
    }
    return f;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

/// Writes to `path` when given, otherwise to stdout.
void emit(std::ostream& out, const std::filesystem::path& path, const std::string& text) {
    if (path.empty()) {
        out << text << '\n';
    } else {
        write_text(path, text);
    }
}

void require_path(const std::filesystem::path& p, const char* flag) {
    if (p.empty()) throw Error(ErrorCode::Parameter, std::string(flag) + " is required");
}

Benchmark dataset(const RunConfig& c) {
    if (!c.data.empty()) return load_benchmark(c.data);
    BenchmarkSpec spec = c.benchmark;
    spec.seed = c.seed;
    return make_benchmark(spec);
}

std::filesystem::path with_suffix(std::filesystem::path p, const std::string& suffix) {
    p.replace_extension();
    p += suffix;
    return p;
}

json error_json(std::string_view code, int status, const std::string& message) {
    return {{"error", {{"code", code}, {"status", status}, {"message", message}}}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Coded-aperture video simulation, MS-TRS motion features and privacy probes", "ltrs"};
    app.require_subcommand(1);
    app.fallthrough();

    Flag<std::uint64_t> seed;
    Flag<int> threads;
    Flag<std::string> config;
    add(&app, seed, "--seed", "Base seed for every random choice");
    add(&app, threads, "--threads", "Worker threads (default: all cores)");
    add(&app, config, "--config", std::string("JSON run config (or set ") + kConfigEnv + ")");

    RunConfig cfg;
    std::function<void()> action;

    // ---- mask
    auto* mask = app.add_subcommand("mask", "Generate or inspect coded-aperture masks");
    mask->require_subcommand(1);
    auto* mask_gen = mask->add_subcommand("gen", "Generate a mask and write it as PGM plus JSON sidecar");
    Flag<std::string> mg_family, mg_out;
    Flag<double> mg_open;
    Flag<int> mg_size;
    add(mask_gen, mg_family, "--family", "pseudorandom | mls-separable | circular");
    add(mask_gen, mg_open, "--open-fraction", "Fraction of clear cells");
    add(mask_gen, mg_size, "--size", "Mask side in pixels");
    add(mask_gen, mg_out, "--out", "Output PGM path").opt->required();
    mask_gen->callback([&] {
        action = [&] {
            if (mg_family) cfg.mask_family = family_or_throw(mg_family.value);
            mg_open.apply(cfg.open_fraction);
            mg_size.apply(cfg.mask_size);
            const Mask m = generate_mask(cfg.mask_family, cfg.mask_size, cfg.mask_size, cfg.open_fraction, cfg.seed);
            if (const auto dir = std::filesystem::path(mg_out.value).parent_path(); !dir.empty()) {
                std::filesystem::create_directories(dir);
            }
            write_mask(mg_out.value, m);
            out << json{{"mask", mg_out.value},
                        {"family", to_string(m.family())},
                        {"size", cfg.mask_size},
                        {"seed", m.seed()},
                        {"open_fraction", m.open_fraction()}}
                       .dump(2)
                << '\n';
        };
    });

    auto* mask_report = mask->add_subcommand("report", "Spectral report of a mask");
    Flag<std::string> mr_mask, mr_out;
    Flag<double> mr_threshold, mr_max_fraction;
    mr_threshold.value = kBroadbandRelativeThreshold;
    mr_max_fraction.value = 0.01;
    add(mask_report, mr_mask, "--mask", "Mask PGM (with sidecar)").opt->required();
    add(mask_report, mr_threshold, "--threshold", "Magnitude threshold relative to DC");
    add(mask_report, mr_max_fraction, "--max-fraction", "Broadband if at most this fraction of bins is below");
    add(mask_report, mr_out, "--out", "Report path (default: stdout)");
    mask_report->callback([&] {
        action = [&] {
            const Mask m = read_mask(mr_mask.value);
            const SpectralReport r = spectral_report(m, mr_threshold.value);
            emit(out, mr_out.value,
                 json{{"family", to_string(m.family())},
                      {"height", m.height()},
                      {"width", m.width()},
                      {"open_fraction", m.open_fraction()},
                      {"min_magnitude", r.min_magnitude},
                      {"mean_magnitude", r.mean_magnitude},
                      {"fraction_below_threshold", r.fraction_below_threshold},
                      {"threshold", r.threshold},
                      {"broadband", is_broadband(r, mr_max_fraction.value)}}
                     .dump(2));
        };
    });

    // ---- sim
    auto* sim = app.add_subcommand("sim", "Coded-aperture capture");
    sim->require_subcommand(1);
    auto* sim_capture = sim->add_subcommand("capture", "Capture a PGM frame or a clip directory through a mask");
    Flag<std::string> sc_in, sc_out, sc_mask, sc_family;
    Flag<double> sc_noise;
    bool sc_be = false, sc_raw = false;
    add(sim_capture, sc_in, "--in", "Scene PGM or clip directory").opt->required();
    add(sim_capture, sc_out, "--out", "Output PGM or clip directory").opt->required();
    add(sim_capture, sc_mask, "--mask", "Mask PGM; generated from --family and --seed when absent");
    add(sim_capture, sc_family, "--family", "Family of the generated mask");
    add(sim_capture, sc_noise, "--noise", "Gaussian noise sigma");
    sim_capture->add_flag("--be", sc_be, "Model the boundary effect (linear convolution)");
    sim_capture->add_flag("--no-normalize", sc_raw, "Keep raw sensor units instead of dividing by the peak");
    sim_capture->callback([&] {
        action = [&] {
            if (sc_be) cfg.capture.boundary_effect = true;
            if (sc_raw) cfg.capture.normalize_output = false;
            sc_noise.apply(cfg.capture.noise_sigma);
            if (sc_family) cfg.mask_family = family_or_throw(sc_family.value);
            cfg.capture.seed = cfg.seed;
            const std::filesystem::path in = sc_in.value;
            const bool is_clip = std::filesystem::is_directory(in);
            Clip clip;
            if (is_clip) {
                clip = load_clip_dir(in);
            } else {
                clip.frames.push_back(read_pgm(in).image);
            }
            const Mask m = sc_mask ? read_mask(sc_mask.value)
                                   : generate_mask(cfg.mask_family, clip.height(), clip.width(), cfg.open_fraction,
                                                   cfg.seed);
            // PGM stores [0, 1], so raw sensor sums are rescaled on write
            Clip ca = capture_clip(clip, m, cfg.capture);
            ca.fps = clip.fps;
            ca.label = clip.label;
            ca.provenance.generator = "capture";
            ca.provenance.params_json = json{{"mask_family", to_string(m.family())},
                                             {"mask_seed", m.seed()},
                                             {"boundary_effect", cfg.capture.boundary_effect},
                                             {"noise_sigma", cfg.capture.noise_sigma},
                                             {"normalize_output", cfg.capture.normalize_output},
                                             {"seed", cfg.seed},
                                             {"source", clip.provenance.params_json}}
                                            .dump();
            if (is_clip) {
                save_clip_dir(sc_out.value, ca, 16);
            } else {
                const std::filesystem::path o = sc_out.value;
                if (o.has_parent_path()) std::filesystem::create_directories(o.parent_path());
                write_pgm(o, ca.frames.front(), 16);
            }
            out << json{{"out", sc_out.value}, {"frames", ca.length()}, {"mask_family", to_string(m.family())}}.dump(2)
                << '\n';
        };
    });

    // ---- synth
    auto* synth = app.add_subcommand("synth", "Synthetic motion clips");
    synth->require_subcommand(1);
    auto* synth_gen = synth->add_subcommand("gen", "Write one clip, or the whole benchmark with --benchmark");
    Flag<std::string> sg_out, sg_class;
    Flag<int> sg_size, sg_length, sg_per_class, sg_direction, sg_bits;
    Flag<double> sg_speed;
    bool sg_benchmark = false, sg_textured = false;
    sg_bits.value = 8;
    add(synth_gen, sg_out, "--out", "Output directory").opt->required();
    synth_gen->add_flag("--benchmark", sg_benchmark, "Write the labelled benchmark with its split");
    add(synth_gen, sg_class, "--class", "Motion class of a single clip");
    add(synth_gen, sg_size, "--size", "Frame side in pixels");
    add(synth_gen, sg_length, "--length", "Frames per clip");
    add(synth_gen, sg_speed, "--speed", "Class-specific speed of a single clip");
    add(synth_gen, sg_direction, "--direction", "+1 or -1 (0: drawn from the seed)");
    add(synth_gen, sg_per_class, "--clips-per-class", "Benchmark clips per class");
    add(synth_gen, sg_bits, "--bit-depth", "PGM bit depth, 8 or 16");
    synth_gen->add_flag("--textured", sg_textured, "Procedural textured background instead of flat grey");
    synth_gen->callback([&] {
        action = [&] {
            if (sg_benchmark) {
                BenchmarkSpec spec = cfg.benchmark;
                spec.seed = cfg.seed;
                sg_size.apply(spec.size);
                sg_length.apply(spec.length);
                sg_per_class.apply(spec.clips_per_class);
                if (sg_textured) spec.flat_background = false;
                const Benchmark b = make_benchmark(spec);
                write_benchmark(sg_out.value, b, sg_bits.value);
                out << json{{"out", sg_out.value},
                            {"clips", b.size()},
                            {"train", b.train.size()},
                            {"val", b.val.size()},
                            {"test", b.test.size()}}
                           .dump(2)
                    << '\n';
                return;
            }
            if (!sg_class) throw Error(ErrorCode::Parameter, "--class is required without --benchmark");
            SynthSpec s;
            s.motion = parse_motion_class(sg_class.value);
            s.height = s.width = cfg.benchmark.size;
            s.length = cfg.benchmark.length;
            s.flat_background = cfg.benchmark.flat_background && !sg_textured;
            if (sg_size) s.height = s.width = sg_size.value;
            sg_length.apply(s.length);
            sg_speed.apply(s.speed);
            sg_direction.apply(s.direction);
            s.sprite_size = std::max(8, s.height * 9 / 32);
            s.seed = cfg.seed;
            const Clip c = generate_clip(s);
            save_clip_dir(sg_out.value, c, sg_bits.value);
            out << json{{"out", sg_out.value}, {"class", to_string(s.motion)}, {"frames", c.length()}}.dump(2) << '\n';
        };
    });

    // ---- feat
    auto* feat = app.add_subcommand("feat", "MS-TRS features");
    feat->require_subcommand(1);
    auto* feat_extract = feat->add_subcommand("extract", "Write the MS-TRS stack of a clip as .mstr");
    Flag<std::string> fe_in, fe_out, fe_mask, fe_set;
    Flag<std::vector<int>> fe_strides;
    Flag<int> fe_len, fe_sim, fe_crop, fe_start;
    add(feat_extract, fe_in, "--in", "Clip directory").opt->required();
    add(feat_extract, fe_out, "--out", "Output .mstr path").opt->required();
    add(feat_extract, fe_strides, "--strides", "Comma-separated temporal strides");
    add(feat_extract, fe_len, "--clip-len", "Frames per clip window");
    add(feat_extract, fe_sim, "--sim-size", "Simulation size (default: frame size)");
    add(feat_extract, fe_crop, "--crop-size", "Crop size (default: 7/8 of the simulation size)");
    add(feat_extract, fe_start, "--start", "First frame of the window");
    add(feat_extract, fe_set, "--set", "ms_trs | t_only");
    add(feat_extract, fe_mask, "--mask", "Capture through this mask PGM first");
    feat_extract->callback([&] {
        action = [&] {
            Clip clip = load_clip_dir(fe_in.value);
            fe_strides.apply(cfg.strides.strides);
            fe_len.apply(cfg.strides.clip_length);
            if (fe_set) cfg.feature_set = parse_feature_set(fe_set.value);
            const int short_side = std::min(clip.height(), clip.width());
            cfg.strides.sim_size = fe_sim ? fe_sim.value : short_side;
            cfg.strides.crop_size = fe_crop ? fe_crop.value : cfg.strides.sim_size * 7 / 8;
            for (Frame& f : clip.frames) f = fit_frame(f, cfg.strides.sim_size);
            if (fe_mask) {
                cfg.capture.seed = cfg.seed;
                clip = capture_clip(clip, read_mask(fe_mask.value), cfg.capture);
            }
            ExtractOptions o;
            o.set = cfg.feature_set;
            o.epsilon = cfg.epsilon;
            o.log_polar = cfg.log_polar;
            o.threads = cfg.threads;
            const FeatureStack st = extract_mstrs(clip, cfg.strides, fe_start ? fe_start.value : 0, o);
            write_stack(fe_out.value, st);
            out << json{{"out", fe_out.value}, {"channels", st.channels}, {"height", st.height}, {"width", st.width}}
                       .dump(2)
                << '\n';
        };
    });

    // ---- learn
    auto* learn = app.add_subcommand("learn", "Reference classifier");
    learn->require_subcommand(1);
    auto* learn_train = learn->add_subcommand("train", "Train under a mask regime and report per-epoch metrics");
    Flag<std::string> lt_regime, lt_input, lt_out, lt_data;
    Flag<std::vector<int>> lt_strides;
    Flag<int> lt_len, lt_epochs, lt_batch, lt_pool, lt_train_seed, lt_val_seed;
    Flag<double> lt_lr;
    bool lt_no_augment = false;
    add(learn_train, lt_regime, "--regime", "m1m1 | m1m2 | dm1dm2");
    add(learn_train, lt_input, "--input", "ms_trs | t_only | ca_raw");
    add(learn_train, lt_strides, "--strides", "Comma-separated temporal strides");
    add(learn_train, lt_len, "--clip-len", "Frames per clip window");
    add(learn_train, lt_epochs, "--epochs", "Training epochs");
    add(learn_train, lt_batch, "--batch", "Batch size");
    add(learn_train, lt_lr, "--lr", "Adam learning rate");
    add(learn_train, lt_pool, "--pool", "Average-pool cells per side");
    add(learn_train, lt_train_seed, "--train-mask-seed", "Training mask seed");
    add(learn_train, lt_val_seed, "--val-mask-seed", "Validation mask seed");
    add(learn_train, lt_data, "--data", "Benchmark directory (default: generate from the config)");
    add(learn_train, lt_out, "--out", "Model JSON path (or paths.out in the config)");
    learn_train->add_flag("--no-augment", lt_no_augment, "Disable scale/flip/crop augmentation");
    learn_train->callback([&] {
        action = [&] {
            if (lt_regime) cfg.regime.mode = parse_regime(lt_regime.value);
            if (lt_input) cfg.input = parse_input_kind(lt_input.value);
            lt_strides.apply(cfg.strides.strides);
            lt_len.apply(cfg.strides.clip_length);
            lt_epochs.apply(cfg.hyper.epochs);
            lt_batch.apply(cfg.hyper.batch);
            lt_lr.apply(cfg.hyper.lr);
            lt_pool.apply(cfg.pool);
            if (lt_train_seed) cfg.regime.train_seed = static_cast<std::uint64_t>(lt_train_seed.value);
            if (lt_val_seed) cfg.regime.val_seed = static_cast<std::uint64_t>(lt_val_seed.value);
            if (lt_data) cfg.data = lt_data.value;
            if (lt_no_augment) cfg.hyper.augment = false;
            cfg.hyper.seed = cfg.seed;
            cfg.hyper.threads = cfg.threads;
            cfg.eval.threads = cfg.threads;

            const Benchmark data = dataset(cfg);
            TrainResult r = train(data, pipeline_of(cfg), cfg.regime, cfg.hyper);
            if (!data.test.empty()) r.report.test = evaluate(r.model, data, data.test, cfg.eval);
            if (lt_out) cfg.out = lt_out.value;
            require_path(cfg.out, "--out");
            const std::filesystem::path model_path = cfg.out;
            if (model_path.has_parent_path()) std::filesystem::create_directories(model_path.parent_path());
            save_model(model_path, r.model);
            write_text(with_suffix(model_path, ".report.json"), report_json(r.report));
            write_text(with_suffix(model_path, ".epochs.csv"), epochs_csv(r.report.epochs));
            const auto& best = r.report.epochs.at(static_cast<std::size_t>(r.report.best_epoch));
            out << json{{"model", model_path.string()},
                        {"regime", to_string(cfg.regime.mode)},
                        {"best_epoch", r.report.best_epoch},
                        {"val_acc", best.val_acc},
                        {"test_top1", r.report.test.top1}}
                       .dump(2)
                << '\n';
        };
    });

    auto* learn_eval = learn->add_subcommand("eval", "Score videos over scales x starts under an unseen mask");
    Flag<std::string> le_model, le_data, le_split, le_out;
    Flag<std::vector<int>> le_scales;
    Flag<int> le_starts, le_mask_seed;
    le_split.value = "test";
    add(learn_eval, le_model, "--model", "Model JSON (or paths.model in the config)");
    add(learn_eval, le_data, "--data", "Benchmark directory (default: generate from the config)");
    add(learn_eval, le_split, "--split", "train | val | test | all");
    add(learn_eval, le_scales, "--scales", "Comma-separated short-side sizes");
    add(learn_eval, le_starts, "--starts", "Clip starts per video");
    add(learn_eval, le_mask_seed, "--mask-seed", "Seed of the test mask");
    add(learn_eval, le_out, "--out", "Report path (default: stdout)");
    learn_eval->callback([&] {
        action = [&] {
            le_scales.apply(cfg.eval.scales);
            le_starts.apply(cfg.eval.starts);
            if (le_mask_seed) cfg.eval.mask_seed = static_cast<std::uint64_t>(le_mask_seed.value);
            if (le_data) cfg.data = le_data.value;
            cfg.eval.threads = cfg.threads;
            if (le_model) cfg.model = le_model.value;
            require_path(cfg.model, "--model");
            const Model model = load_model(cfg.model);
            const Benchmark data = dataset(cfg);
            std::vector<std::size_t> videos;
            if (le_split.value == "train") {
                videos = data.train;
            } else if (le_split.value == "val") {
                videos = data.val;
            } else if (le_split.value == "test") {
                videos = data.test;
            } else if (le_split.value == "all") {
                videos.resize(data.size());
                for (std::size_t i = 0; i < videos.size(); ++i) videos[i] = i;
            } else {
                throw Error(ErrorCode::Parameter, "unknown split '" + le_split.value + "'");
            }
            emit(out, le_out.value, test_json(evaluate(model, data, videos, cfg.eval)));
        };
    });

    // ---- attack
    auto* attack = app.add_subcommand("attack", "Privacy probes");
    attack->require_subcommand(1);
    auto* attack_leak = attack->add_subcommand("leak", "Autocorrelation leakage of a CA frame");
    Flag<std::string> al_scene, al_ca, al_out;
    Flag<std::vector<std::string>> al_families;
    Flag<int> al_seeds;
    bool al_survey = false;
    add(attack_leak, al_scene, "--scene", "Scene PGM").opt->required();
    add(attack_leak, al_ca, "--ca", "CA observation PGM");
    attack_leak->add_flag("--survey", al_survey, "Capture the scene through many masks instead of reading --ca");
    add(attack_leak, al_families, "--families", "Comma-separated mask families for --survey");
    add(attack_leak, al_seeds, "--seeds", "Masks per family for --survey");
    add(attack_leak, al_out, "--out", "Report path (default: stdout)");
    attack_leak->callback([&] {
        action = [&] {
            const Image scene = read_pgm(al_scene.value).image;
            if (!al_survey) {
                if (!al_ca) throw Error(ErrorCode::Parameter, "--ca is required without --survey");
                emit(out, al_out.value, to_json(leakage(scene, read_pgm(al_ca.value).image)));
                return;
            }
            SurveyOptions o;
            if (al_families) {
                o.families.clear();
                for (const auto& f : al_families.value) o.families.push_back(family_or_throw(f));
            }
            al_seeds.apply(o.seeds);
            o.first_seed = cfg.seed;
            o.open_fraction = cfg.open_fraction;
            o.capture = cfg.capture;
            o.capture.seed = cfg.seed;
            o.threads = cfg.threads;
            emit(out, al_out.value, to_json(leakage_survey(scene, o)));
        };
    });

    // ---- verify
    auto* verify = app.add_subcommand("verify", "End-to-end property checks");
    verify->require_subcommand(1);
    auto* verify_inv = verify->add_subcommand("invariance", "Mask invariance of T maps over masks x shifts");
    Flag<int> vi_masks, vi_shifts, vi_size, vi_max_shift;
    Flag<double> vi_eps;
    Flag<std::string> vi_out;
    add(verify_inv, vi_masks, "--masks", "Number of masks");
    add(verify_inv, vi_shifts, "--shifts", "Random global shifts per mask");
    add(verify_inv, vi_size, "--size", "Frame side in pixels");
    add(verify_inv, vi_max_shift, "--max-shift", "Largest shift component");
    add(verify_inv, vi_eps, "--epsilon", "Cross-power regularizer (relative to the median magnitude)");
    add(verify_inv, vi_out, "--out", "Report path (default: stdout)");
    verify_inv->callback([&] {
        action = [&] {
            InvarianceOptions o;
            vi_masks.apply(o.masks);
            vi_shifts.apply(o.shifts);
            vi_size.apply(o.size);
            o.max_shift = vi_max_shift ? vi_max_shift.value : std::max(1, o.size / 8);
            o.epsilon = vi_eps ? vi_eps.value : cfg.epsilon;
            o.family = cfg.mask_family;
            o.open_fraction = cfg.open_fraction;
            o.seed = cfg.seed;
            o.threads = cfg.threads;
            const InvarianceResult r = verify_invariance(o);
            emit(out, vi_out.value, to_json(r));
            if (!r.pass) throw Error(ErrorCode::Validation, "mask invariance check failed");
        };
    });

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        if (!rev.empty()) rev.pop_back();  // program name
        app.parse(rev);

        std::filesystem::path config_path = config ? config.value : std::string{};
        if (config_path.empty()) {
            if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') config_path = env;
        }
        if (!config_path.empty()) cfg = load_run_config(config_path);
        seed.apply(cfg.seed);
        threads.apply(cfg.threads);
        if (cfg.threads <= 0) cfg.threads = default_threads();
        if (!action) throw Error(ErrorCode::Parameter, "no command given");
        action();
        return 0;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        const auto code = ErrorCode::Parameter;
        err << error_json(to_string(code), static_cast<int>(code), e.what()).dump() << '\n';
        return static_cast<int>(code);
    } catch (const Error& e) {
        err << error_json(to_string(e.code()), static_cast<int>(e.code()), e.what()).dump() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        err << error_json("Internal", 1, e.what()).dump() << '\n';
        return 1;
    }
}

}  // namespace ltrs
