#include "segtool/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace seg {

namespace {

constexpr int kConfigVersion = 1;

nlohmann::json train_to_json(const TrainConfig& t) {
    return {{"n_trees", t.n_trees},
            {"max_depth", t.max_depth},
            {"min_leaf", t.min_leaf},
            {"features_per_split", t.features_per_split},
            {"bootstrap", t.bootstrap}};
}

TrainConfig train_from_json(const nlohmann::json& j, TrainConfig base) {
    base.n_trees = j.value("n_trees", base.n_trees);
    base.max_depth = j.value("max_depth", base.max_depth);
    base.min_leaf = j.value("min_leaf", base.min_leaf);
    base.features_per_split = j.value("features_per_split", base.features_per_split);
    base.bootstrap = j.value("bootstrap", base.bootstrap);
    return base;
}

} // namespace

std::string config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["version"] = kConfigVersion;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["body_threshold"] = c.body_threshold;
    j["slic"] = {{"region_size", c.slic.region_size},
                 {"compactness", c.slic.compactness},
                 {"iterations", c.slic.iterations},
                 {"intensity_scale", c.slic.intensity_scale}};
    j["grid"] = {{"stride", c.grid.stride}, {"patch_size", c.grid.patch_size}};
    j["dsift"] = {{"bin_size", c.dsift.bin_size}};
    j["lut_bandwidth"] = c.lut_bandwidth;
    j["c1"] = train_to_json(c.c1);
    j["c2"] = train_to_json(c.c2);
    j["c3"] = train_to_json(c.c3);
    j["c1_neg_ratio"] = c.c1_neg_ratio;
    j["c2_neg_ratio"] = c.c2_neg_ratio;
    j["t2_sensitivity"] = c.t2_sensitivity;
    j["t3"] = c.t3;
    j["phantom"] = {{"dims", {c.phantom.dims.nx, c.phantom.dims.ny, c.phantom.dims.nz}},
                    {"spacing", {c.phantom.sx, c.phantom.sy, c.phantom.sz}},
                    {"background_level", c.phantom.background_level},
                    {"body_level", c.phantom.body_level},
                    {"body_band", c.phantom.body_band},
                    {"pancreas_level", c.phantom.pancreas_level},
                    {"pancreas_band", c.phantom.pancreas_band},
                    {"distractor_min", c.phantom.distractor_min},
                    {"distractor_max", c.phantom.distractor_max},
                    {"noise_std", c.phantom.noise_std},
                    {"table", c.phantom.table},
                    {"target_frac_min", c.phantom.target_frac_min},
                    {"target_frac_max", c.phantom.target_frac_max}};
    return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig c;
    try {
        if (j.value("version", kConfigVersion) != kConfigVersion)
            throw ConfigError("unsupported config version");
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        c.body_threshold = j.value("body_threshold", c.body_threshold);
        if (j.contains("slic")) {
            const auto& s = j["slic"];
            c.slic.region_size = s.value("region_size", c.slic.region_size);
            c.slic.compactness = s.value("compactness", c.slic.compactness);
            c.slic.iterations = s.value("iterations", c.slic.iterations);
            c.slic.intensity_scale = s.value("intensity_scale", c.slic.intensity_scale);
        }
        if (j.contains("grid")) {
            c.grid.stride = j["grid"].value("stride", c.grid.stride);
            c.grid.patch_size = j["grid"].value("patch_size", c.grid.patch_size);
        }
        if (j.contains("dsift")) c.dsift.bin_size = j["dsift"].value("bin_size", c.dsift.bin_size);
        c.lut_bandwidth = j.value("lut_bandwidth", c.lut_bandwidth);
        if (j.contains("c1")) c.c1 = train_from_json(j["c1"], c.c1);
        if (j.contains("c2")) c.c2 = train_from_json(j["c2"], c.c2);
        if (j.contains("c3")) c.c3 = train_from_json(j["c3"], c.c3);
        c.c1_neg_ratio = j.value("c1_neg_ratio", c.c1_neg_ratio);
        c.c2_neg_ratio = j.value("c2_neg_ratio", c.c2_neg_ratio);
        c.t2_sensitivity = j.value("t2_sensitivity", c.t2_sensitivity);
        c.t3 = j.value("t3", c.t3);
        if (j.contains("phantom")) {
            const auto& p = j["phantom"];
            if (p.contains("dims")) {
                c.phantom.dims.nx = p["dims"].at(0).get<int>();
                c.phantom.dims.ny = p["dims"].at(1).get<int>();
                c.phantom.dims.nz = p["dims"].at(2).get<int>();
            }
            if (p.contains("spacing")) {
                c.phantom.sx = p["spacing"].at(0).get<double>();
                c.phantom.sy = p["spacing"].at(1).get<double>();
                c.phantom.sz = p["spacing"].at(2).get<double>();
            }
            c.phantom.background_level = p.value("background_level", c.phantom.background_level);
            c.phantom.body_level = p.value("body_level", c.phantom.body_level);
            c.phantom.body_band = p.value("body_band", c.phantom.body_band);
            c.phantom.pancreas_level = p.value("pancreas_level", c.phantom.pancreas_level);
            c.phantom.pancreas_band = p.value("pancreas_band", c.phantom.pancreas_band);
            c.phantom.distractor_min = p.value("distractor_min", c.phantom.distractor_min);
            c.phantom.distractor_max = p.value("distractor_max", c.phantom.distractor_max);
            c.phantom.noise_std = p.value("noise_std", c.phantom.noise_std);
            c.phantom.table = p.value("table", c.phantom.table);
            c.phantom.target_frac_min = p.value("target_frac_min", c.phantom.target_frac_min);
            c.phantom.target_frac_max = p.value("target_frac_max", c.phantom.target_frac_max);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config schema error: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << config_to_json(cfg);
}

} // namespace seg
