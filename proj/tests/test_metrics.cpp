#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "segtool/metrics.hpp"
#include "segtool/rng.hpp"

using namespace seg;

namespace {

BinaryMask random_mask(Dims dims, double density, Rng& rng) {
    BinaryMask m;
    m.dims = dims;
    m.bits.resize(dims.count());
    for (auto& b : m.bits) b = rng.next_double() < density;
    return m;
}

} // namespace

TEST_CASE("identical masks score 1 everywhere") {
    Rng rng(1);
    BinaryMask gt = random_mask({8, 8, 4}, 0.4, rng);
    gt.bits[0] = 1;
    OverlapReport r = overlap_report(gt, gt);
    CHECK(r.dice == 1.0);
    CHECK(r.jaccard == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
}

TEST_CASE("disjoint masks score 0 everywhere") {
    BinaryMask a, b;
    a.dims = b.dims = {4, 4, 1};
    a.bits.assign(16, 0);
    b.bits.assign(16, 0);
    a.bits[0] = 1;
    b.bits[5] = 1;
    OverlapReport r = overlap_report(a, b);
    CHECK(r.dice == 0.0);
    CHECK(r.jaccard == 0.0);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
}

TEST_CASE("half overlap gives the textbook values") {
    BinaryMask a, b;
    a.dims = b.dims = {20, 10, 1};
    a.bits.assign(200, 0);
    b.bits.assign(200, 0);
    for (int i = 0; i < 100; ++i) a.bits[i] = 1;        // |A| = 100
    for (int i = 50; i < 150; ++i) b.bits[i] = 1;       // |B| = 100, |A∩B| = 50
    OverlapReport r = overlap_report(a, b);
    CHECK(r.dice == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.jaccard == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 0.5);
}

TEST_CASE("empty prediction is defined as zero") {
    BinaryMask a, b;
    a.dims = b.dims = {4, 4, 1};
    a.bits.assign(16, 0);
    b.bits.assign(16, 0);
    b.bits[3] = 1;
    OverlapReport r = overlap_report(a, b);
    CHECK(r.dice == 0.0);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
}

TEST_CASE("dims mismatch and empty ground truth are errors") {
    BinaryMask a, b;
    a.dims = {4, 4, 1};
    a.bits.assign(16, 1);
    b.dims = {4, 4, 2};
    b.bits.assign(32, 1);
    CHECK_THROWS_AS(overlap_report(a, b), DimsMismatchError);
    b.dims = {4, 4, 1};
    b.bits.assign(16, 0);
    CHECK_THROWS_AS(overlap_report(a, b), EmptyGroundTruthError);
}

TEST_CASE("random masks match the counting oracle exactly") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        BinaryMask pred = random_mask({20, 20, 10}, rng.next_double() * 0.6, rng);
        BinaryMask gt = random_mask({20, 20, 10}, 0.05 + rng.next_double() * 0.5, rng);
        if (gt.count_set() == 0) gt.bits[0] = 1;

        OverlapReport r = overlap_report(pred, gt);
        auto c = oracle::count_overlap(pred.bits, gt.bits);
        double inter = static_cast<double>(c.inter);
        CHECK(r.dice == 2.0 * inter / static_cast<double>(c.a + c.b));
        CHECK(r.jaccard == inter / static_cast<double>(c.a + c.b - c.inter));
        CHECK(r.precision == (c.a == 0 ? 0.0 : inter / static_cast<double>(c.a)));
        CHECK(r.recall == inter / static_cast<double>(c.b));
        if (r.dice > 0)
            CHECK(std::abs(r.jaccard - r.dice / (2.0 - r.dice)) <= 1e-12);
        CHECK(r.dice >= r.jaccard);
    }
}

TEST_CASE("symmetry: dice(A,B) = dice(B,A) and precision(A,B) = recall(B,A)") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask a = random_mask({10, 10, 4}, 0.4, rng);
        BinaryMask b = random_mask({10, 10, 4}, 0.4, rng);
        a.bits[1] = 1;
        b.bits[2] = 1;
        OverlapReport ab = overlap_report(a, b);
        OverlapReport ba = overlap_report(b, a);
        CHECK(ab.dice == ba.dice);
        CHECK(ab.jaccard == ba.jaccard);
        CHECK(ab.precision == ba.recall);
        CHECK(ab.recall == ba.precision);
    }
}

TEST_CASE("adding a true-positive voxel never decreases dice") {
    Rng rng(33);
    BinaryMask pred = random_mask({10, 10, 2}, 0.3, rng);
    BinaryMask gt = random_mask({10, 10, 2}, 0.3, rng);
    gt.bits[7] = 1;
    for (std::size_t i = 0; i < gt.bits.size(); ++i) {
        if (!gt.bits[i] || pred.bits[i]) continue;
        OverlapReport before = overlap_report(pred, gt);
        pred.bits[i] = 1;
        OverlapReport after = overlap_report(pred, gt);
        CHECK(after.dice >= before.dice);
    }
}

TEST_CASE("summary of a single report is degenerate") {
    OverlapReport r;
    r.dice = 0.7;
    r.jaccard = 0.5;
    r.precision = 0.6;
    r.recall = 0.8;
    SummaryTable t = summarize({r});
    CHECK(t.dice.mean == 0.7);
    CHECK(t.dice.stddev == 0.0);
    CHECK(t.dice.min == 0.7);
    CHECK(t.dice.max == 0.7);
}

TEST_CASE("two-report summary") {
    OverlapReport a, b;
    a.dice = 0.4;
    b.dice = 0.8;
    SummaryTable t = summarize({a, b});
    CHECK(t.dice.mean == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(t.dice.stddev == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(t.dice.min == 0.4);
    CHECK(t.dice.max == 0.8);
}

TEST_CASE("summary matches a direct accumulation oracle") {
    Rng rng(41);
    std::vector<OverlapReport> reports(50);
    for (auto& r : reports) {
        r.dice = rng.next_double();
        r.jaccard = rng.next_double();
        r.precision = rng.next_double();
        r.recall = rng.next_double();
    }
    SummaryTable t = summarize(reports);

    double sum = 0;
    for (const auto& r : reports) sum += r.dice;
    double mean = sum / 50.0;
    double ss = 0;
    for (const auto& r : reports) ss += (r.dice - mean) * (r.dice - mean);
    CHECK(std::abs(t.dice.mean - mean) <= 1e-12);
    CHECK(std::abs(t.dice.stddev - std::sqrt(ss / 50.0)) <= 1e-12);

    CHECK_THROWS_AS(summarize({}), EmptyReportListError);
}

TEST_CASE("report JSON and summary CSV round trips") {
    auto dir = std::filesystem::temp_directory_path() / "segtool_test_metrics";
    std::filesystem::create_directories(dir);
    OverlapReport r;
    r.dice = 0.25;
    r.jaccard = 0.25 / (2 - 0.25);
    r.precision = 0.3;
    r.recall = 0.2;
    r.count_pred = 10;
    r.count_gt = 15;
    r.count_intersection = 3;
    save_report_json(dir / "r.json", r);
    OverlapReport back = load_report_json(dir / "r.json");
    CHECK(back.dice == r.dice);
    CHECK(back.count_gt == 15);

    SummaryTable t = summarize({r});
    std::string csv = summary_to_csv(t);
    CHECK(csv.find("metric,mean,std,min,max\n") == 0);
    CHECK(csv.find("dice,") != std::string::npos);
    CHECK(csv.find("recall,") != std::string::npos);
}
