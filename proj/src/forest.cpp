#include "segtool/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segtool/parallel.hpp"
#include "segtool/rng.hpp"

namespace seg {

double Tree::predict(std::span<const double> x) const {
    std::int32_t i = 0;
    while (!nodes[i].is_leaf)
        i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].posterior;
}

namespace {

struct Split {
    bool found = false;
    int feature = 0;
    double threshold = 0;
    double gain = 0;
};

double gini(std::size_t pos, std::size_t n) {
    if (n == 0) return 0;
    double p = static_cast<double>(pos) / static_cast<double>(n);
    return 2.0 * p * (1.0 - p);
}

// Candidate features for one node: `k` distinct indices out of d, by
// partial Fisher-Yates on the identity permutation.
std::vector<int> sample_features(Rng& rng, int d, int k) {
    std::vector<int> idx(d);
    for (int i = 0; i < d; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
        int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                const TrainConfig& cfg, Rng rng)
        : X_(X), y_(y), cfg_(cfg), rng_(rng), d_(static_cast<int>(X[0].size())) {}

    Tree build(std::vector<std::size_t> indices) {
        Tree t;
        grow(std::move(indices), 0, t);
        return t;
    }

private:
    std::int32_t grow(std::vector<std::size_t> indices, int depth, Tree& t) {
        std::size_t n = indices.size();
        std::size_t pos = 0;
        for (std::size_t i : indices) pos += static_cast<std::size_t>(y_[i]);

        std::int32_t node_id = static_cast<std::int32_t>(t.nodes.size());
        t.nodes.emplace_back();

        bool stop = pos == 0 || pos == n || n <= static_cast<std::size_t>(cfg_.min_leaf) ||
                    (cfg_.max_depth > 0 && depth >= cfg_.max_depth);
        Split split;
        if (!stop) split = best_split(indices, pos);
        if (stop || !split.found) {
            t.nodes[node_id].is_leaf = true;
            t.nodes[node_id].posterior = static_cast<double>(pos) / static_cast<double>(n);
            return node_id;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t i : indices)
            (X_[i][split.feature] < split.threshold ? left : right).push_back(i);
        indices.clear();
        indices.shrink_to_fit();

        t.nodes[node_id].feature = split.feature;
        t.nodes[node_id].threshold = split.threshold;
        std::int32_t l = grow(std::move(left), depth + 1, t);
        std::int32_t r = grow(std::move(right), depth + 1, t);
        t.nodes[node_id].left = l;
        t.nodes[node_id].right = r;
        return node_id;
    }

    Split best_split(const std::vector<std::size_t>& indices, std::size_t pos_total) {
        const std::size_t n = indices.size();
        const double parent = gini(pos_total, n);
        int k = cfg_.features_per_split > 0
                    ? std::min(cfg_.features_per_split, d_)
                    : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d_))));
        std::vector<int> feats = sample_features(rng_, d_, k);

        Split best;
        std::vector<std::pair<double, int>> vals(n); // (value, class)
        for (int f : feats) {
            for (std::size_t i = 0; i < n; ++i)
                vals[i] = {X_[indices[i]][f], y_[indices[i]]};
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::size_t left_n = 0, left_pos = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                ++left_n;
                left_pos += static_cast<std::size_t>(vals[i].second);
                if (vals[i].first == vals[i + 1].first) continue;
                double t = (vals[i].first + vals[i + 1].first) / 2.0;
                std::size_t right_n = n - left_n;
                std::size_t right_pos = pos_total - left_pos;
                double child = (static_cast<double>(left_n) * gini(left_pos, left_n) +
                                static_cast<double>(right_n) * gini(right_pos, right_n)) /
                               static_cast<double>(n);
                double gain = parent - child;
                if (gain <= 0) continue;
                bool better = !best.found || gain > best.gain ||
                              (gain == best.gain &&
                               (f < best.feature || (f == best.feature && t < best.threshold)));
                if (better) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = t;
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& X_;
    const std::vector<int>& y_;
    const TrainConfig& cfg_;
    Rng rng_;
    int d_;
};

} // namespace

ForestModel train_forest(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                         const TrainConfig& cfg, int threads) {
    if (X.empty()) throw EmptyTrainingError("empty training set");
    if (X.size() != y.size()) throw DimensionMismatchError("feature/label count mismatch");
    if (X.size() < 2) throw EmptyTrainingError("need at least two training samples");
    const std::size_t n = X.size();
    const int d = static_cast<int>(X[0].size());
    if (d == 0) throw DimensionMismatchError("zero-dimensional features");

    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (X[i].size() != static_cast<std::size_t>(d))
            throw DimensionMismatchError("ragged feature matrix");
        for (double v : X[i])
            if (!std::isfinite(v)) throw NonFiniteFeatureError("non-finite feature value");
        if (y[i] != 0 && y[i] != 1) throw DataError("labels must be 0 or 1");
        pos += static_cast<std::size_t>(y[i]);
    }
    if (pos == 0 || pos == n) throw SingleClassError("training labels contain a single class");
    if (cfg.n_trees < 1) throw ConfigError("n_trees must be >= 1");
    if (cfg.features_per_split > d)
        throw ConfigError("features_per_split exceeds feature count");

    ForestModel model;
    model.feature_count = d;
    model.config = cfg;
    model.trees.resize(cfg.n_trees);

    parallel_for(cfg.n_trees, threads, [&](int t) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(t));
        std::vector<std::size_t> indices(n);
        if (cfg.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) indices[i] = rng.next_below(n);
        } else {
            for (std::size_t i = 0; i < n; ++i) indices[i] = i;
        }
        TreeBuilder builder(X, y, cfg, rng);
        model.trees[t] = builder.build(std::move(indices));
    });
    return model;
}

double predict_proba(const ForestModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.feature_count)
        throw DimensionMismatchError("feature vector has wrong dimension");
    double sum = 0;
    for (const Tree& t : model.trees) sum += t.predict(x);
    return sum / static_cast<double>(model.trees.size());
}

namespace {

constexpr int kModelVersion = 1;

nlohmann::json tree_to_json(const Tree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : t.nodes) {
        if (n.is_leaf)
            nodes.push_back({{"leaf", n.posterior}});
        else
            nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
    }
    return {{"nodes", nodes}};
}

Tree tree_from_json(const nlohmann::json& j) {
    Tree t;
    for (const auto& nj : j.at("nodes")) {
        TreeNode n;
        if (nj.contains("leaf")) {
            n.is_leaf = true;
            n.posterior = nj.at("leaf").get<double>();
            if (n.posterior < 0 || n.posterior > 1)
                throw ModelFormatError("leaf posterior outside [0,1]");
        } else {
            n.feature = nj.at("f").get<int>();
            n.threshold = nj.at("t").get<double>();
            n.left = nj.at("l").get<std::int32_t>();
            n.right = nj.at("r").get<std::int32_t>();
        }
        t.nodes.push_back(n);
    }
    if (t.nodes.empty()) throw ModelFormatError("tree with no nodes");
    for (const TreeNode& n : t.nodes) {
        if (n.is_leaf) continue;
        auto sz = static_cast<std::int32_t>(t.nodes.size());
        if (n.left < 0 || n.left >= sz || n.right < 0 || n.right >= sz)
            throw ModelFormatError("node child index out of range");
    }
    return t;
}

} // namespace

std::string model_to_json(const ForestModel& model) {
    nlohmann::json j;
    j["version"] = kModelVersion;
    j["feature_count"] = model.feature_count;
    j["config"] = {{"n_trees", model.config.n_trees},
                   {"max_depth", model.config.max_depth},
                   {"min_leaf", model.config.min_leaf},
                   {"features_per_split", model.config.features_per_split},
                   {"bootstrap", model.config.bootstrap},
                   {"seed", model.config.seed}};
    j["trees"] = nlohmann::json::array();
    for (const Tree& t : model.trees) j["trees"].push_back(tree_to_json(t));
    return j.dump(2) + "\n";
}

ForestModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("model parse error: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != kModelVersion)
            throw ModelVersionError("unsupported model version");
        ForestModel m;
        m.feature_count = j.at("feature_count").get<int>();
        const auto& c = j.at("config");
        m.config.n_trees = c.at("n_trees").get<int>();
        m.config.max_depth = c.at("max_depth").get<int>();
        m.config.min_leaf = c.at("min_leaf").get<int>();
        m.config.features_per_split = c.at("features_per_split").get<int>();
        m.config.bootstrap = c.at("bootstrap").get<bool>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        for (const auto& tj : j.at("trees")) {
            Tree t = tree_from_json(tj);
            for (const TreeNode& n : t.nodes)
                if (!n.is_leaf && (n.feature < 0 || n.feature >= m.feature_count))
                    throw ModelFormatError("feature index out of range");
            m.trees.push_back(std::move(t));
        }
        if (m.trees.empty()) throw ModelFormatError("model with no trees");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("model schema error: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ForestModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << model_to_json(model);
}

ForestModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

} // namespace seg
