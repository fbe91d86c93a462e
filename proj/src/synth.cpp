#include "ltrs/synth.hpp"

#include "ltrs/error.hpp"
#include "ltrs/pgm.hpp"
#include "ltrs/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

namespace ltrs {

namespace {

struct ClassName {
    MotionClass value;
    std::string_view name;
};

constexpr ClassName kClassNames[] = {
    {MotionClass::TranslateH, "translate-h"}, {MotionClass::TranslateV, "translate-v"},
    {MotionClass::Diagonal, "diagonal"},      {MotionClass::Rotate, "rotate"},
    {MotionClass::ScalePulse, "scale-pulse"}, {MotionClass::Jump, "jump"},
    {MotionClass::Still, "still"},
};

int class_index(MotionClass c) {
    for (std::size_t i = 0; i < std::size(kClassNames); ++i) {
        if (kClassNames[i].value == c) return static_cast<int>(i);
    }
    return -1;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Multi-octave value noise with a few hard-edged rectangles on top.
Image procedural_texture(int h, int w, Rng& rng, std::initializer_list<std::pair<int, double>> octaves,
                         int rectangles) {
    Image img(h, w, 0.5);
    for (const auto& [cells, amp] : octaves) {
        Image grid(std::max(2, h / cells), std::max(2, w / cells));
        for (double& v : grid.values()) v = uniform(rng, -amp, amp);
        const Image up = resize_bilinear(grid, h, w);
        for (std::size_t i = 0; i < img.size(); ++i) img.values()[i] += up.values()[i];
    }
    std::uniform_int_distribution<int> ry(0, h - 1), rx(0, w - 1);
    for (int k = 0; k < rectangles; ++k) {
        const int y0 = ry(rng), x0 = rx(rng);
        const int rh = 2 + ry(rng) / 4, rw = 2 + rx(rng) / 4;
        const double v = uniform(rng, 0.0, 1.0);
        for (int y = y0; y < std::min(h, y0 + rh); ++y)
            for (int x = x0; x < std::min(w, x0 + rw); ++x) img(y, x) = v;
    }
    for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);
    return img;
}

/// Sprite defined in continuous coordinates (origin at its centre), so any
/// rotation or scale renders as an exact resampling of the same pattern.
struct Sprite {
    struct Dot {
        double x, y, sigma, amp;
    };
    double semi_x = 0, semi_y = 0;  // ellipse semi-axes
    double base = 0.5;
    std::vector<Dot> dots;
    // dots bucketed on a coarse grid so a pixel only visits its neighbours
    static constexpr double kCell = 4.0;
    int grid_w = 0, grid_h = 0;
    std::vector<std::vector<int>> cells;

    void index_dots() {
        grid_w = static_cast<int>(std::ceil(2 * semi_x / kCell)) + 1;
        grid_h = static_cast<int>(std::ceil(2 * semi_y / kCell)) + 1;
        cells.assign(static_cast<std::size_t>(grid_w * grid_h), {});
        for (std::size_t i = 0; i < dots.size(); ++i) {
            const auto [gx, gy] = cell_of(dots[i].x, dots[i].y);
            cells[static_cast<std::size_t>(gy * grid_w + gx)].push_back(static_cast<int>(i));
        }
    }
    std::pair<int, int> cell_of(double x, double y) const {
        return {static_cast<int>(std::floor((x + semi_x) / kCell)), static_cast<int>(std::floor((y + semi_y) / kCell))};
    }
};

Sprite make_sprite(int size, Rng& rng) {
    Sprite s;
    s.semi_x = size / 2.0 - 1.0;
    s.semi_y = 0.6 * s.semi_x;
    s.base = uniform(rng, 0.35, 0.65);
    const auto count = static_cast<int>(std::numbers::pi * s.semi_x * s.semi_y / 2.0);
    while (static_cast<int>(s.dots.size()) < count) {
        const double x = uniform(rng, -s.semi_x, s.semi_x), y = uniform(rng, -s.semi_y, s.semi_y);
        if ((x * x) / (s.semi_x * s.semi_x) + (y * y) / (s.semi_y * s.semi_y) > 1.0) continue;
        s.dots.push_back({x, y, uniform(rng, 0.55, 0.9), uniform(rng, -0.5, 0.5)});
    }
    s.index_dots();
    return s;
}

/// Composites the sprite with its centre at (cy, cx), rotated by `angle`
/// (from +x towards +y) and scaled by `scale`.
void draw_sprite(Image& out, const Sprite& sp, double cy, double cx, double angle, double scale) {
    constexpr double kEdge = 1.0;  // soft edge width in sprite units
    const double half = (sp.semi_x + kEdge) * scale + 1.0;
    const double cs = std::cos(angle), sn = std::sin(angle);
    const int r0 = std::max(0, static_cast<int>(std::floor(cy - half)));
    const int r1 = std::min(out.height() - 1, static_cast<int>(std::ceil(cy + half)));
    const int q0 = std::max(0, static_cast<int>(std::floor(cx - half)));
    const int q1 = std::min(out.width() - 1, static_cast<int>(std::ceil(cx + half)));
    for (int r = r0; r <= r1; ++r) {
        for (int q = q0; q <= q1; ++q) {
            const double dx = q - cx, dy = r - cy;
            // inverse rotation then inverse scale
            const double u = (cs * dx + sn * dy) / scale;
            const double v = (-sn * dx + cs * dy) / scale;
            const double rad = std::hypot(u / sp.semi_x, v / sp.semi_y);
            const double alpha = std::clamp((1.0 - rad) * sp.semi_y / kEdge + 0.5, 0.0, 1.0);
            if (alpha <= 0.0) continue;
            double value = sp.base;
            const auto [gx, gy] = sp.cell_of(u, v);
            for (int cy2 = std::max(0, gy - 1); cy2 <= std::min(sp.grid_h - 1, gy + 1); ++cy2) {
                for (int cx2 = std::max(0, gx - 1); cx2 <= std::min(sp.grid_w - 1, gx + 1); ++cx2) {
                    for (int i : sp.cells[static_cast<std::size_t>(cy2 * sp.grid_w + cx2)]) {
                        const auto& d = sp.dots[static_cast<std::size_t>(i)];
                        const double ex = u - d.x, ey = v - d.y;
                        const double r2 = ex * ex + ey * ey;
                        const double s2 = d.sigma * d.sigma;
                        if (r2 > 16.0 * s2) continue;
                        value += d.amp * std::exp(-r2 / (2.0 * s2));
                    }
                }
            }
            out(r, q) = (1.0 - alpha) * out(r, q) + alpha * std::clamp(value, 0.0, 1.0);
        }
    }
}

/// Triangle wave rising 0 -> period/2 and back, evaluated at integer t.
double triangle(int t, int period) {
    const int m = t % period;
    return m <= period / 2 ? m : period - m;
}

nlohmann::json spec_json(const SynthSpec& s) {
    return {{"class", to_string(s.motion)}, {"height", s.height},   {"width", s.width},
            {"length", s.length},           {"speed", s.speed},     {"sprite_size", s.sprite_size},
            {"direction", s.direction},     {"period", s.period},   {"flat_background", s.flat_background},
            {"fps", s.fps},                 {"seed", s.seed}};
}

}  // namespace

std::string_view to_string(MotionClass c) {
    const int i = class_index(c);
    return i >= 0 ? kClassNames[i].name : "unknown";
}

MotionClass parse_motion_class(std::string_view name) {
    for (const auto& c : kClassNames) {
        if (c.name == name) return c.value;
    }
    throw Error(ErrorCode::Parameter, "unknown motion class '" + std::string(name) + "'");
}

const std::vector<MotionClass>& all_motion_classes() {
    static const std::vector<MotionClass> all = [] {
        std::vector<MotionClass> v;
        for (const auto& c : kClassNames) v.push_back(c.value);
        return v;
    }();
    return all;
}

Clip generate_clip(const SynthSpec& spec) {
    if (spec.length < 2) throw Error(ErrorCode::Parameter, "clip length must be >= 2");
    if (spec.height < 8 || spec.width < 8) throw Error(ErrorCode::Parameter, "frame dimensions must be >= 8");
    if (!(spec.speed >= 0.0)) throw Error(ErrorCode::Parameter, "speed must be >= 0");
    if (spec.sprite_size < 4) throw Error(ErrorCode::Parameter, "sprite_size must be >= 4");
    if (spec.period < 2) throw Error(ErrorCode::Parameter, "period must be >= 2");
    if (spec.direction < -1 || spec.direction > 1) throw Error(ErrorCode::Parameter, "direction must be -1, 0 or 1");

    Rng rng = make_rng(spec.seed, {0x73796e});
    const int dir = spec.direction != 0 ? spec.direction : (std::bernoulli_distribution(0.5)(rng) ? 1 : -1);
    const int dir_y = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;

    const double v = spec.speed;
    const int last = spec.length - 1;
    const double max_scale = spec.motion == MotionClass::ScalePulse ? std::exp(v * (spec.period / 2)) : 1.0;
    const double extent = (spec.sprite_size / 2.0 + 1.0) * max_scale;
    if (2 * extent > std::min(spec.height, spec.width)) {
        throw Error(ErrorCode::Parameter, "sprite does not fit in the frame");
    }

    // travel of the centre along each axis, used to place the start so the
    // whole trajectory fits; otherwise positions are clamped at the border
    double travel_x = 0, travel_y = 0;
    switch (spec.motion) {
        case MotionClass::TranslateH: travel_x = dir * v * last; break;
        case MotionClass::TranslateV: travel_y = dir * v * last; break;
        case MotionClass::Diagonal:
            travel_x = dir * v * last;
            travel_y = dir_y * v * last;
            break;
        case MotionClass::Jump: travel_y = -v * (spec.period / 2); break;
        default: break;
    }
    auto place = [&](double lo, double hi, double travel) {
        const double a = travel >= 0 ? lo : lo - travel;
        const double b = travel >= 0 ? hi - travel : hi;
        if (a <= b) return uniform(rng, a, b);
        return travel >= 0 ? lo : hi;
    };
    const double cx0 = place(extent, spec.width - extent, travel_x);
    const double cy0 = place(extent, spec.height - extent, travel_y);

    const Image background = spec.flat_background
                                 ? Image(spec.height, spec.width, 0.5)
                                 : procedural_texture(spec.height, spec.width, rng, {{4, 0.2}, {16, 0.15}, {32, 0.1}}, 12);
    const Sprite sprite = make_sprite(spec.sprite_size, rng);

    Clip clip;
    clip.fps = spec.fps;
    clip.label = {class_index(spec.motion), std::string(to_string(spec.motion))};
    clip.provenance.generator = "synth";
    nlohmann::json params = spec_json(spec);
    params["direction"] = dir;
    clip.provenance.params_json = params.dump();

    for (int t = 0; t < spec.length; ++t) {
        double cx = cx0, cy = cy0, angle = 0.0, scale = 1.0;
        switch (spec.motion) {
            case MotionClass::TranslateH: cx += dir * v * t; break;
            case MotionClass::TranslateV: cy += dir * v * t; break;
            case MotionClass::Diagonal:
                cx += dir * v * t;
                cy += dir_y * v * t;
                break;
            case MotionClass::Rotate: angle = dir * v * t; break;
            case MotionClass::ScalePulse: scale = std::exp(v * triangle(t, spec.period)); break;
            case MotionClass::Jump: cy -= v * triangle(t, spec.period); break;
            case MotionClass::Still: break;
        }
        cx = std::clamp(cx, extent, spec.width - extent);
        cy = std::clamp(cy, extent, spec.height - extent);
        Image frame = background;
        draw_sprite(frame, sprite, cy, cx, angle, scale);
        clip.frames.push_back(std::move(frame));
        clip.provenance.motion.push_back({cx - cx0, cy - cy0, angle, scale});
    }
    return clip;
}

Image dead_leaves(int height, int width, std::uint64_t seed, int count) {
    if (height < 4 || width < 4 || count < 0) throw Error(ErrorCode::Parameter, "dead_leaves needs >= 4x4 and count >= 0");
    Rng rng = make_rng(seed, {0x646c});
    Image img(height, width, 0.5);
    const double r_min = 1.5, r_max = std::min(height, width) / 4.0;
    const double a = 1.0 / (r_min * r_min), b = 1.0 / (r_max * r_max);
    for (int k = 0; k < count; ++k) {
        // inverse CDF of the 1/r^3 density on [r_min, r_max]
        const double r = 1.0 / std::sqrt(a - uniform(rng, 0.0, 1.0) * (a - b));
        const double cy = uniform(rng, 0.0, height), cx = uniform(rng, 0.0, width), v = uniform(rng, 0.0, 1.0);
        for (int y = static_cast<int>(std::floor(cy - r)); y <= static_cast<int>(cy + r); ++y)
            for (int x = static_cast<int>(std::floor(cx - r)); x <= static_cast<int>(cx + r); ++x) {
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) > r * r) continue;
                img(((y % height) + height) % height, ((x % width) + width) % width) = v;
            }
    }
    return img;
}

Clip augment(const Clip& clip, int target, std::uint64_t seed, const AugmentOptions& opts) {
    validate_clip(clip, 1);
    const int short_side = std::min(clip.height(), clip.width());
    if (target < 8 || target > short_side) {
        throw Error(ErrorCode::Parameter, "augment target must be in [8, " + std::to_string(short_side) + "]");
    }
    Rng rng = make_rng(seed, {0x617567});
    const int hi = static_cast<int>(std::lround(target * 8.0 / 7.0));
    const int side = std::uniform_int_distribution<int>(target, hi)(rng);
    const double f = static_cast<double>(side) / short_side;
    const int h = std::max(target, static_cast<int>(std::lround(clip.height() * f)));
    const int w = std::max(target, static_cast<int>(std::lround(clip.width() * f)));
    const bool vflip = opts.vertical_flip && std::bernoulli_distribution(0.5)(rng);
    const bool hflip = opts.horizontal_flip && std::bernoulli_distribution(0.5)(rng);
    const int top = std::uniform_int_distribution<int>(0, h - target)(rng);
    const int left = std::uniform_int_distribution<int>(0, w - target)(rng);

    Clip out;
    out.fps = clip.fps;
    out.label = clip.label;
    out.provenance = clip.provenance;
    for (const Frame& frame : clip.frames) {
        Image img = resize_bilinear(frame, h, w);
        if (vflip) img = flip_vertical(img);
        if (hflip) img = flip_horizontal(img);
        out.frames.push_back(crop(img, top, left, target, target));
    }
    const double fy = static_cast<double>(h) / clip.height(), fx = static_cast<double>(w) / clip.width();
    for (FrameMotion& m : out.provenance.motion) {
        m.dx *= hflip ? -fx : fx;
        m.dy *= vflip ? -fy : fy;
        if (vflip != hflip) m.angle = -m.angle;
    }
    nlohmann::json params = nlohmann::json::object();
    if (!clip.provenance.params_json.empty()) {
        params = nlohmann::json::parse(clip.provenance.params_json, nullptr, false);
        if (params.is_discarded() || !params.is_object()) params = nlohmann::json::object();
    }
    params["augment"] = {{"seed", seed},   {"short_side", side}, {"vertical_flip", vflip},
                         {"horizontal_flip", hflip}, {"top", top}, {"left", left}};
    out.provenance.params_json = params.dump();
    return out;
}

namespace {

std::string frame_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04d.pgm", i);
    return buf;
}

}  // namespace

void save_clip_dir(const std::filesystem::path& dir, const Clip& clip, int bit_depth) {
    validate_clip(clip, 1);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json files = nlohmann::json::array();
    for (int i = 0; i < clip.length(); ++i) {
        const std::string name = frame_name(i);
        write_pgm(dir / name, clip.frames[static_cast<std::size_t>(i)], bit_depth);
        files.push_back(name);
    }
    nlohmann::json motion = nlohmann::json::array();
    for (const auto& m : clip.provenance.motion) {
        motion.push_back({{"dx", m.dx}, {"dy", m.dy}, {"angle", m.angle}, {"scale", m.scale}});
    }
    nlohmann::json params = nullptr;
    if (!clip.provenance.params_json.empty()) {
        params = nlohmann::json::parse(clip.provenance.params_json, nullptr, false);
        if (params.is_discarded()) params = clip.provenance.params_json;
    }
    const nlohmann::json manifest = {
        {"fps", clip.fps},
        {"label", {{"id", clip.label.id}, {"name", clip.label.name}}},
        {"bit_depth", bit_depth},
        {"height", clip.height()},
        {"width", clip.width()},
        {"frame_files", files},
        {"provenance", {{"generator", clip.provenance.generator}, {"params", params}, {"motion", motion}}},
    };
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

Clip load_clip_dir(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + manifest_path.string());

    Clip clip;
    int bit_depth = 0;
    std::vector<std::string> files;
    try {
        const auto j = nlohmann::json::parse(in);
        clip.fps = j.at("fps").get<double>();
        clip.label = {j.at("label").at("id").get<int>(), j.at("label").at("name").get<std::string>()};
        bit_depth = j.at("bit_depth").get<int>();
        files = j.at("frame_files").get<std::vector<std::string>>();
        if (const auto it = j.find("provenance"); it != j.end()) {
            clip.provenance.generator = it->value("generator", "");
            if (it->contains("params") && !it->at("params").is_null()) {
                clip.provenance.params_json = it->at("params").dump();
            }
            for (const auto& m : it->value("motion", nlohmann::json::array())) {
                clip.provenance.motion.push_back({m.at("dx").get<double>(), m.at("dy").get<double>(),
                                                  m.at("angle").get<double>(), m.at("scale").get<double>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Schema, manifest_path.string() + ": " + e.what());
    }
    if (files.empty()) throw Error(ErrorCode::Schema, manifest_path.string() + ": no frame files");

    for (const auto& name : files) {
        const auto path = dir / name;
        if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "missing frame " + path.string());
        PgmImage pgm = read_pgm(path);
        if (pgm.bit_depth != bit_depth) {
            throw Error(ErrorCode::Format, path.string() + ": bit depth " + std::to_string(pgm.bit_depth) +
                                               " does not match manifest " + std::to_string(bit_depth));
        }
        clip.frames.push_back(std::move(pgm.image));
    }
    validate_clip(clip, 1);
    return clip;
}

Clip Benchmark::clip(std::size_t i) const {
    if (i >= size()) throw Error(ErrorCode::Parameter, "benchmark clip index out of range");
    Clip c = i < specs.size() ? generate_clip(specs[i]) : load_clip_dir(dirs.at(i));
    c.label = {labels[i], class_names.at(static_cast<std::size_t>(labels[i]))};
    return c;
}

Benchmark make_benchmark(const BenchmarkSpec& spec) {
    if (spec.classes.empty() || spec.clips_per_class < 1) throw Error(ErrorCode::Parameter, "empty benchmark");
    if (!(spec.train_fraction > 0 && spec.val_fraction >= 0 && spec.train_fraction + spec.val_fraction < 1)) {
        throw Error(ErrorCode::Parameter, "split fractions must leave a non-empty test share");
    }
    Benchmark b;
    for (MotionClass c : spec.classes) b.class_names.emplace_back(to_string(c));

    for (std::size_t k = 0; k < spec.classes.size(); ++k) {
        const MotionClass mc = spec.classes[k];
        std::vector<std::size_t> members;
        for (int j = 0; j < spec.clips_per_class; ++j) {
            Rng rng = make_rng(spec.seed, {k, static_cast<std::uint64_t>(j)});
            SynthSpec s;
            s.motion = mc;
            s.height = s.width = spec.size;
            s.length = spec.length;
            s.flat_background = spec.flat_background;
            s.sprite_size = std::uniform_int_distribution<int>(spec.size * 7 / 32, spec.size * 11 / 32)(rng);
            switch (mc) {
                case MotionClass::Rotate: s.speed = uniform(rng, 0.04, 0.10); break;
                case MotionClass::ScalePulse: s.speed = uniform(rng, 0.06, 0.12); break;
                case MotionClass::Jump: s.speed = uniform(rng, 1.5, 3.0); break;
                case MotionClass::Still: s.speed = 0.0; break;
                default: s.speed = uniform(rng, 1.0, 3.0); break;
            }
            s.seed = rng();
            members.push_back(b.specs.size());
            b.specs.push_back(s);
            b.labels.push_back(static_cast<int>(k));
            char name[64];
            std::snprintf(name, sizeof name, "%s_%03d", b.class_names[k].c_str(), j);
            b.names.emplace_back(name);
        }
        Rng split_rng = make_rng(spec.seed, {0x73706c, k});
        std::shuffle(members.begin(), members.end(), split_rng);
        const auto n = members.size();
        const auto n_train = static_cast<std::size_t>(std::lround(spec.train_fraction * static_cast<double>(n)));
        const auto n_val = static_cast<std::size_t>(std::lround(spec.val_fraction * static_cast<double>(n)));
        for (std::size_t i = 0; i < n; ++i) {
            auto& bucket = i < n_train ? b.train : (i < n_train + n_val ? b.val : b.test);
            bucket.push_back(members[i]);
        }
    }
    for (auto* v : {&b.train, &b.val, &b.test}) std::sort(v->begin(), v->end());
    return b;
}

void write_benchmark(const std::filesystem::path& dir, const Benchmark& bench, int bit_depth) {
    nlohmann::json clips = nlohmann::json::array();
    for (std::size_t i = 0; i < bench.size(); ++i) {
        save_clip_dir(dir / bench.names[i], bench.clip(i), bit_depth);
        nlohmann::json entry = {{"name", bench.names[i]}, {"label", bench.labels[i]}};
        if (i < bench.specs.size()) entry["spec"] = spec_json(bench.specs[i]);
        clips.push_back(entry);
    }
    auto names_of = [&](const std::vector<std::size_t>& idx) {
        nlohmann::json a = nlohmann::json::array();
        for (auto i : idx) a.push_back(bench.names[i]);
        return a;
    };
    const nlohmann::json manifest = {
        {"classes", bench.class_names},
        {"clips", clips},
        {"splits", {{"train", names_of(bench.train)}, {"val", names_of(bench.val)}, {"test", names_of(bench.test)}}},
    };
    std::ofstream out(dir / "benchmark.json");
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "benchmark.json").string());
    out << manifest.dump(2) << '\n';
}

Benchmark load_benchmark(const std::filesystem::path& dir) {
    const auto path = dir / "benchmark.json";
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    Benchmark b;
    try {
        const auto j = nlohmann::json::parse(in);
        b.class_names = j.at("classes").get<std::vector<std::string>>();
        std::map<std::string, std::size_t> index;
        for (const auto& c : j.at("clips")) {
            const auto name = c.at("name").get<std::string>();
            const int label = c.at("label").get<int>();
            if (label < 0 || label >= static_cast<int>(b.class_names.size())) {
                throw Error(ErrorCode::Schema, path.string() + ": label out of range for " + name);
            }
            index[name] = b.names.size();
            b.names.push_back(name);
            b.labels.push_back(label);
            b.dirs.push_back(dir / name);
        }
        const auto& splits = j.at("splits");
        for (auto [key, bucket] : {std::pair{"train", &b.train}, {"val", &b.val}, {"test", &b.test}}) {
            for (const auto& n : splits.at(key)) {
                const auto it = index.find(n.get<std::string>());
                if (it == index.end()) throw Error(ErrorCode::Schema, path.string() + ": unknown clip in split");
                bucket->push_back(it->second);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Schema, path.string() + ": " + e.what());
    }
    return b;
}

}  // namespace ltrs
