#pragma once

#include "ltrs/features.hpp"
#include "ltrs/learn.hpp"
#include "ltrs/mask.hpp"
#include "ltrs/optics.hpp"
#include "ltrs/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ltrs {

/// Everything a run can be configured with. Command-line flags override the
/// values loaded from the config document, which override these defaults.
struct RunConfig {
    std::uint64_t seed = 0;
    int threads = 0;  // 0: every available core

    CaptureConfig capture;
    MaskFamily mask_family = MaskFamily::Pseudorandom;
    double open_fraction = 0.5;
    int mask_size = 128;

    StrideConfig strides{{2, 3, 4, 6}, 13, 128, 112};
    FeatureSet feature_set = FeatureSet::MsTrs;
    double epsilon = kDefaultEpsilon;
    LogPolarParams log_polar;

    InputKind input = InputKind::MsTrs;
    int pool = 8;
    MaskRegime regime;
    Hyper hyper;

    BenchmarkSpec benchmark;
    EvalProtocol eval;

    std::filesystem::path data;   // benchmark directory; empty means generate in memory
    std::filesystem::path out;
    std::filesystem::path model;
};

/// Parses a config document. Unknown keys and wrongly typed values throw Schema.
RunConfig parse_run_config(const std::string& json_text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Pipeline assembled from the config.
Pipeline pipeline_of(const RunConfig& cfg);

/// Environment variable naming a config file when --config is absent.
inline constexpr const char* kConfigEnv = "LTRS_CONFIG";

/// Runs one command line (argv[0] is the program name). Results go to `out`;
/// failures print a JSON error object to `err`. Returns the process exit code:
/// 0 on success, the numeric ErrorCode otherwise.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ltrs
