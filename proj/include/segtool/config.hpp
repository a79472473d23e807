#pragma once

#include <filesystem>

#include "segtool/forest.hpp"
#include "segtool/patch_features.hpp"
#include "segtool/phantom.hpp"
#include "segtool/slic.hpp"

namespace seg {

// Every tunable of the pipeline, with defaults matching the documented
// behavior. Serialized as versioned JSON; missing fields take defaults.
struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 1; // 0 = all hardware threads

    int body_threshold = kDefaultBodyThreshold;
    SlicParams slic;
    PatchGrid grid;
    DsiftParams dsift;
    double lut_bandwidth = 0.0; // 0 = Silverman per class

    TrainConfig c1{};  // seeds are derived per fold; the seed field is ignored
    TrainConfig c2{};
    TrainConfig c3{};
    double c1_neg_ratio = 5.0;
    double c2_neg_ratio = 5.0;
    double t2_sensitivity = 0.99;
    double t3 = 0.5;

    PhantomSpec phantom;
};

RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);
std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);

} // namespace seg
