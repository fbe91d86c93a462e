#pragma once

#include "ltrs/features.hpp"
#include "ltrs/mask.hpp"
#include "ltrs/optics.hpp"
#include "ltrs/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ltrs {

enum class Regime { M1M1, M1M2, DM1DM2 };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view name);

/// m1m1: one mask for training and validation. m1m2: two different fixed
/// masks. dm1dm2: a fresh training mask per batch (shared by the clips of the
/// batch) and a fixed validation mask.
struct MaskRegime {
    Regime mode = Regime::DM1DM2;
    std::uint64_t train_seed = 1;
    std::uint64_t val_seed = 2;
};

/// Classifier inputs: MS-TRS stacks, their T channels only, or the pooled CA
/// frames themselves.
enum class InputKind { MsTrs, TOnly, CaRaw };

std::string_view to_string(InputKind k);
InputKind parse_input_kind(std::string_view name);

/// Everything between a raw clip window and a pooled feature vector.
struct Pipeline {
    StrideConfig strides{{2, 3, 4, 6}, 13, 128, 112};
    InputKind input = InputKind::MsTrs;
    CaptureConfig capture;
    MaskFamily family = MaskFamily::Pseudorandom;
    double open_fraction = 0.5;
    double epsilon = kDefaultEpsilon;
    LogPolarParams log_polar;
    int pool = 8;
};

void validate(const Pipeline& p);

/// Channels before pooling for this pipeline.
int pipeline_channels(const Pipeline& p);
int feature_dim(const Pipeline& p);

/// Average-pools each channel of a C x H x W tensor to pool x pool cells.
std::vector<float> average_pool(std::span<const float> tensor, int channels, int height, int width, int pool);

/// Captures `window` (exactly strides.clip_length frames at sim_size) through
/// the camera and returns the pooled feature vector.
std::vector<float> pooled_features(const std::vector<Frame>& window, const CodedCamera& camera, const Pipeline& p,
                                   std::uint64_t noise_stream = 0);

/// Brings a frame to sim_size: rescale so the short side is `short_side`
/// (0 keeps the frame), then centre-crop or edge-pad to sim_size.
Frame fit_frame(const Frame& f, int sim_size, int short_side = 0);

/// Linear softmax classifier on standardized pooled features.
struct Model {
    int classes = 0;
    int dim = 0;
    std::vector<double> mean, inv_std;  // standardizer, length dim
    std::vector<double> weights;         // classes x dim, row-major
    std::vector<double> bias;            // classes
    std::vector<std::string> class_names;
    Pipeline pipeline;

    // Adam state
    std::vector<double> m_w, v_w, m_b, v_b;
    long step = 0;

    Model() = default;
    Model(int classes, int dim);

    void fit_standardizer(const std::vector<std::vector<float>>& samples);
    std::vector<double> standardize(std::span<const float> x) const;
    std::vector<double> probabilities(std::span<const float> x) const;
};

struct Hyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double l2 = 0.0;
    int batch = 16;
    int epochs = 50;
    std::uint64_t seed = 0;
    bool augment = true;
    int standardize_samples = 64;
    int threads = 1;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_w;
    std::vector<double> grad_b;
};

/// Mean cross-entropy over standardized inputs plus 0.5 * l2 * ||W||^2.
LossGrad loss_and_gradient(const Model& model, const std::vector<std::vector<double>>& x, std::span<const int> labels,
                           double l2 = 0.0);

/// One Adam update. Throws Divergence on a non-finite loss.
double adam_step(Model& model, const std::vector<std::vector<double>>& x, std::span<const int> labels, const Hyper& h);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0, train_acc = 0;
    double val_loss = 0, val_acc = 0;
};

struct ClassScore {
    std::string name;
    int videos = 0;
    double top1 = 0, top2 = 0, top3 = 0;
};

struct TestReport {
    int videos = 0;
    int clips_per_video = 0;
    double top1 = 0, top2 = 0, top3 = 0;
    std::vector<ClassScore> per_class;
    std::vector<std::vector<double>> video_scores;  // mean softmax per video
};

struct TrainReport {
    Regime regime = Regime::DM1DM2;
    std::string config_json;
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    TestReport test;
};

struct TrainResult {
    Model model;
    TrainReport report;
};

/// Trains on pre-computed feature vectors (no CA simulation). Used for
/// sanity checks and by train() internally once features exist.
Model fit_features(const std::vector<std::vector<float>>& x, const std::vector<int>& y, int classes, const Hyper& h,
                   std::vector<EpochStats>* log = nullptr);

/// Full pipeline: per-epoch random clip starts, optional augmentation,
/// on-the-fly CA simulation per the mask regime, pooled features, Adam. The
/// model with the best validation accuracy is returned.
TrainResult train(const Benchmark& data, const Pipeline& p, const MaskRegime& regime, const Hyper& h);

struct EvalProtocol {
    std::vector<int> scales;  // short-side sizes; empty means native size
    int starts = 1;
    std::uint64_t mask_seed = 3;
    int threads = 1;
};

/// Start frames used for a clip of `frames` frames.
std::vector<int> clip_starts(int frames, int clip_length, int n);

/// Per-video score is the mean softmax over scales x starts; top-k per class.
TestReport evaluate(const Model& model, const Benchmark& data, const std::vector<std::size_t>& videos,
                    const EvalProtocol& protocol);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

std::string report_json(const TrainReport& report);
std::string epochs_csv(const std::vector<EpochStats>& epochs);
std::string test_json(const TestReport& test);

}  // namespace ltrs
