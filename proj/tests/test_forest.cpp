#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "segtool/forest.hpp"
#include "segtool/rng.hpp"

using namespace seg;

namespace {

std::filesystem::path tmpdir() {
    auto p = std::filesystem::temp_directory_path() / "segtool_test_forest";
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("separable 1D data trains to perfect accuracy") {
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        X.push_back({static_cast<double>(i) * 0.5});
        y.push_back(0); // negatives at x in [0, 4.5]
        X.push_back({12.0 + i * 0.5});
        y.push_back(1); // positives at x in [12, 16.5], margin > 2
    }
    TrainConfig cfg;
    cfg.seed = 99;
    ForestModel model = train_forest(X, y, cfg);
    for (std::size_t i = 0; i < X.size(); ++i) {
        double p = predict_proba(model, std::span(X[i]));
        CHECK((p >= 0.5 ? 1 : 0) == y[i]);
    }
}

TEST_CASE("single-class input is an error") {
    std::vector<std::vector<double>> X{{1.0}, {2.0}, {3.0}};
    CHECK_THROWS_AS(train_forest(X, {1, 1, 1}, {}), SingleClassError);
    CHECK_THROWS_AS(train_forest(X, {0, 0, 0}, {}), SingleClassError);
    CHECK_THROWS_AS(train_forest({}, {}, {}), EmptyTrainingError);
    CHECK_THROWS_AS(train_forest({{1.0}, {std::nan("")}}, {0, 1}, {}), NonFiniteFeatureError);
}

TEST_CASE("identical seeds give byte-identical serialized models") {
    Rng rng(3);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 80; ++i) {
        X.push_back({rng.next_double() * 4, rng.next_double() * 4});
        y.push_back(X.back()[0] + X.back()[1] > 4 ? 1 : 0);
    }
    TrainConfig cfg;
    cfg.n_trees = 11;
    cfg.seed = 42;
    std::string a = model_to_json(train_forest(X, y, cfg));
    std::string b = model_to_json(train_forest(X, y, cfg));
    CHECK(a == b);
    // Multi-threaded training changes nothing.
    std::string c = model_to_json(train_forest(X, y, cfg, 4));
    CHECK(a == c);
    // A different seed gives a different model.
    cfg.seed = 43;
    CHECK(a != model_to_json(train_forest(X, y, cfg)));
}

TEST_CASE("prediction is the mean of leaf posteriors") {
    ForestModel m;
    m.feature_count = 2;
    Tree leaf1, leaf2;
    leaf1.nodes.push_back({true, 0, 0, -1, -1, 0.2});
    leaf2.nodes.push_back({true, 0, 0, -1, -1, 0.6});

    ForestModel single;
    single.feature_count = 2;
    single.trees = {leaf1};
    std::vector<double> x{1.0, 2.0};
    CHECK(predict_proba(single, std::span(x)) == 0.2);

    m.trees = {leaf1, leaf2};
    CHECK(predict_proba(m, std::span(x)) == doctest::Approx(0.4).epsilon(1e-15));

    ForestModel ones;
    ones.feature_count = 2;
    Tree t;
    t.nodes.push_back({true, 0, 0, -1, -1, 1.0});
    ones.trees = {t, t, t};
    CHECK(predict_proba(ones, std::span(x)) == 1.0);

    std::vector<double> bad{1.0};
    CHECK_THROWS_AS(predict_proba(m, std::span(bad)), DimensionMismatchError);
}

TEST_CASE("model file round trip preserves predictions exactly") {
    Rng rng(7);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 120; ++i) {
        X.push_back({rng.next_double() * 10, rng.next_double() * 10, rng.next_double()});
        y.push_back(X.back()[0] > 5 ? 1 : 0);
    }
    TrainConfig cfg;
    cfg.n_trees = 9;
    cfg.seed = 5;
    ForestModel model = train_forest(X, y, cfg);

    auto path = tmpdir() / "model.json";
    save_model(path, model);
    ForestModel back = load_model(path);
    CHECK(back.feature_count == 3);
    CHECK(back.config.n_trees == 9);

    for (int i = 0; i < 100; ++i) {
        std::vector<double> x{rng.next_double() * 12 - 1, rng.next_double() * 12 - 1,
                              rng.next_double() * 2 - 0.5};
        CHECK(predict_proba(model, std::span(x)) == predict_proba(back, std::span(x)));
    }

    // Truncated file fails to parse.
    std::string text = model_to_json(model);
    std::ofstream out(tmpdir() / "trunc.json", std::ios::binary);
    out << text.substr(0, text.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_model(tmpdir() / "trunc.json"), ModelFormatError);

    // Version mismatch is its own error.
    std::string bumped = text;
    auto pos = bumped.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, 12, "\"version\": 9");
    CHECK_THROWS_AS(model_from_json(bumped), ModelVersionError);
}

TEST_CASE("feature_count 46 survives a round trip") {
    Rng rng(13);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
        std::vector<double> row(46);
        for (auto& v : row) v = rng.next_double();
        X.push_back(row);
        y.push_back(i % 2);
    }
    TrainConfig cfg;
    cfg.n_trees = 3;
    ForestModel model = train_forest(X, y, cfg);
    auto path = tmpdir() / "f46.json";
    save_model(path, model);
    CHECK(load_model(path).feature_count == 46);
}

TEST_CASE("ensemble prediction lies between tree extremes") {
    Rng rng(17);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
        X.push_back({rng.next_double() * 6 - 3, rng.next_double() * 6 - 3});
        y.push_back(X.back()[0] * X.back()[1] > 0 ? 1 : 0);
    }
    TrainConfig cfg;
    cfg.n_trees = 15;
    cfg.seed = 2;
    ForestModel model = train_forest(X, y, cfg);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{rng.next_double() * 6 - 3, rng.next_double() * 6 - 3};
        double lo = 1, hi = 0;
        for (const Tree& t : model.trees) {
            double p = t.predict(std::span(x));
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        double p = predict_proba(model, std::span(x));
        CHECK(p >= lo - 1e-15);
        CHECK(p <= hi + 1e-15);
    }
}

TEST_CASE("row permutation does not change training-set predictions") {
    // Small instance with unique Gini-optimal splits, bootstrap off, all
    // features considered per node.
    std::vector<std::vector<double>> X{{1, 10}, {2, 9}, {3, 8}, {4, 7},
                                       {11, 6}, {12, 5}, {13, 4}, {14, 3}};
    std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
    TrainConfig cfg;
    cfg.n_trees = 5;
    cfg.bootstrap = false;
    cfg.features_per_split = 2;
    cfg.min_leaf = 1;
    cfg.seed = 8;
    ForestModel a = train_forest(X, y, cfg);

    std::vector<std::size_t> perm{5, 2, 7, 0, 3, 6, 1, 4};
    std::vector<std::vector<double>> Xp;
    std::vector<int> yp;
    for (std::size_t i : perm) {
        Xp.push_back(X[i]);
        yp.push_back(y[i]);
    }
    ForestModel b = train_forest(Xp, yp, cfg);
    for (const auto& x : X)
        CHECK(predict_proba(a, std::span(x)) == predict_proba(b, std::span(x)));
}

TEST_CASE("XOR requires interactions and the forest captures them") {
    Rng rng(19);
    auto make = [&](int n) {
        std::pair<std::vector<std::vector<double>>, std::vector<int>> out;
        for (int i = 0; i < n; ++i) {
            double cx = rng.next_below(2) ? 0.5 : -0.5;
            double cy = rng.next_below(2) ? 0.5 : -0.5;
            double x = cx + rng.next_normal() * 0.15;
            double y = cy + rng.next_normal() * 0.15;
            out.first.push_back({x, y});
            out.second.push_back((cx > 0) != (cy > 0) ? 1 : 0);
        }
        return out;
    };
    auto [Xtr, ytr] = make(400);
    auto [Xte, yte] = make(400);
    TrainConfig cfg;
    cfg.n_trees = 50;
    cfg.seed = 21;
    ForestModel model = train_forest(Xtr, ytr, cfg);
    int correct = 0;
    for (std::size_t i = 0; i < Xte.size(); ++i)
        correct += (predict_proba(model, std::span(Xte[i])) >= 0.5 ? 1 : 0) == yte[i];
    CHECK(static_cast<double>(correct) / Xte.size() >= 0.9);
}

TEST_CASE("posterior near the midpoint of two symmetric Gaussians is calibrated") {
    Rng rng(23);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = 0; i < 400; ++i) {
        int cls = static_cast<int>(rng.next_below(2));
        X.push_back({(cls ? 2.0 : -2.0) + rng.next_normal()});
        y.push_back(cls);
    }
    TrainConfig cfg;
    cfg.seed = 31;
    ForestModel model = train_forest(X, y, cfg);
    std::vector<double> mid{0.0};
    double p = predict_proba(model, std::span(mid));
    CHECK(p >= 0.35);
    CHECK(p <= 0.65);
}
