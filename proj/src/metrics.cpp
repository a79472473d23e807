#include "segtool/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segtool/csv.hpp"

namespace seg {

OverlapReport overlap_report(const BinaryMask& pred, const BinaryMask& gt) {
    if (!(pred.dims == gt.dims)) throw DimsMismatchError("prediction and ground truth dims differ");

    OverlapReport r;
    for (std::size_t i = 0; i < pred.bits.size(); ++i) {
        bool a = pred.bits[i] != 0, b = gt.bits[i] != 0;
        r.count_pred += a;
        r.count_gt += b;
        r.count_intersection += (a && b);
    }
    if (r.count_gt == 0) throw EmptyGroundTruthError("ground-truth mask is empty");

    double inter = static_cast<double>(r.count_intersection);
    double na = static_cast<double>(r.count_pred);
    double nb = static_cast<double>(r.count_gt);
    r.dice = 2.0 * inter / (na + nb);
    r.jaccard = inter / (na + nb - inter);
    r.precision = r.count_pred == 0 ? 0.0 : inter / na;
    r.recall = inter / nb;
    return r;
}

namespace {

MetricSummary summarize_one(const std::vector<double>& values) {
    MetricSummary s;
    s.min = values[0];
    s.max = values[0];
    double sum = 0;
    for (double v : values) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    return s;
}

} // namespace

SummaryTable summarize(const std::vector<OverlapReport>& reports) {
    if (reports.empty()) throw EmptyReportListError("no reports to summarize");
    std::vector<double> d, j, p, r;
    for (const auto& rep : reports) {
        d.push_back(rep.dice);
        j.push_back(rep.jaccard);
        p.push_back(rep.precision);
        r.push_back(rep.recall);
    }
    return {summarize_one(d), summarize_one(j), summarize_one(p), summarize_one(r)};
}

void save_report_json(const std::filesystem::path& path, const OverlapReport& r) {
    nlohmann::json j;
    j["dice"] = r.dice;
    j["jaccard"] = r.jaccard;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["counts"] = {{"pred", r.count_pred}, {"gt", r.count_gt}, {"intersection", r.count_intersection}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

OverlapReport load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        OverlapReport r;
        r.dice = j.at("dice").get<double>();
        r.jaccard = j.at("jaccard").get<double>();
        r.precision = j.at("precision").get<double>();
        r.recall = j.at("recall").get<double>();
        r.count_pred = j.at("counts").at("pred").get<std::size_t>();
        r.count_gt = j.at("counts").at("gt").get<std::size_t>();
        r.count_intersection = j.at("counts").at("intersection").get<std::size_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad report JSON " + path.string() + ": " + e.what());
    }
}

std::string summary_to_csv(const SummaryTable& t) {
    std::ostringstream out;
    out << "metric,mean,std,min,max\n";
    auto row = [&](const char* name, const MetricSummary& s) {
        out << name << "," << csv_double(s.mean) << "," << csv_double(s.stddev) << ","
            << csv_double(s.min) << "," << csv_double(s.max) << "\n";
    };
    row("dice", t.dice);
    row("jaccard", t.jaccard);
    row("precision", t.precision);
    row("recall", t.recall);
    return out.str();
}

void save_summary_csv(const std::filesystem::path& path, const SummaryTable& t) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << summary_to_csv(t);
}

} // namespace seg
