#pragma once

#include <filesystem>
#include <vector>

#include "segtool/volume.hpp"

namespace seg {

// Volume-overlap metrics between a predicted mask A and ground truth B.
struct OverlapReport {
    double dice = 0, jaccard = 0, precision = 0, recall = 0;
    std::size_t count_pred = 0, count_gt = 0, count_intersection = 0;
};

// dice = 2|A∩B| / (|A|+|B|), jaccard = |A∩B| / |A∪B|, precision = |A∩B|/|A|
// (0 when A is empty), recall = |A∩B|/|B|. Ground truth must be non-empty.
OverlapReport overlap_report(const BinaryMask& pred, const BinaryMask& gt);

struct MetricSummary {
    double mean = 0, stddev = 0, min = 0, max = 0;
};

// Per-metric mean, population std, min, max over a set of reports.
struct SummaryTable {
    MetricSummary dice, jaccard, precision, recall;
};
SummaryTable summarize(const std::vector<OverlapReport>& reports);

void save_report_json(const std::filesystem::path& path, const OverlapReport& r);
OverlapReport load_report_json(const std::filesystem::path& path);

// CSV with header `metric,mean,std,min,max` and one row per metric.
void save_summary_csv(const std::filesystem::path& path, const SummaryTable& t);
std::string summary_to_csv(const SummaryTable& t);

} // namespace seg
