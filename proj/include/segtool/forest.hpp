#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "segtool/errors.hpp"

namespace seg {

struct TrainConfig {
    int n_trees = 50;
    int max_depth = 0;          // 0 = unlimited
    int min_leaf = 5;           // nodes with <= min_leaf samples become leaves
    int features_per_split = 0; // 0 = ceil(sqrt(d))
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

// One tree node, stored in preorder. Internal nodes route x[feature] < threshold
// to `left`, otherwise `right`; leaves carry the positive-class posterior.
struct TreeNode {
    bool is_leaf = false;
    int feature = 0;
    double threshold = 0;
    std::int32_t left = -1, right = -1; // indices into the tree's node array
    double posterior = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> x) const;
};

struct ForestModel {
    int feature_count = 0;
    TrainConfig config;
    std::vector<Tree> trees;
};

// Grows `n_trees` CART trees on bootstrap resamples, sampling
// features_per_split candidate features per node (without replacement) and
// splitting at the Gini-optimal midpoint of consecutive sorted unique
// values. Ties in Gini go to the lowest feature index, then the lowest
// threshold. Fully deterministic given (X, y, cfg); tree t draws its
// randomness from SplitMix64(cfg.seed + t), so trees may be grown
// concurrently without changing the result.
ForestModel train_forest(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                         const TrainConfig& cfg, int threads = 1);

// Mean of the leaf posteriors reached in each tree.
double predict_proba(const ForestModel& model, std::span<const double> x);

// Versioned JSON model file with nodes in preorder; byte-identical for
// identical training inputs.
void save_model(const std::filesystem::path& path, const ForestModel& model);
ForestModel load_model(const std::filesystem::path& path);

std::string model_to_json(const ForestModel& model);
ForestModel model_from_json(const std::string& text);

} // namespace seg
