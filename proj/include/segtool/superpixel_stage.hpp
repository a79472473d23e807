#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segtool/forest.hpp"
#include "segtool/volume.hpp"

namespace seg {

constexpr int kSpFeatureDims = 24;

// Per-channel layout (channel A = intensity, channel B = patch response):
//   [0..3]   mean, std, skewness, excess kurtosis
//   [4..10]  percentiles 20,30,40,60,70,80,90
//   [11]     median (the p50 of the same interpolation scheme)
// Channel B occupies [12..23] in the same order.
using SpFeatureVector = std::array<double, kSpFeatureDims>;

extern const std::array<const char*, kSpFeatureDims> kSpFeatureNames;

// Patch-classifier probabilities spread over one slice: every body pixel
// takes the probability of its nearest grid center (Euclidean, ties to the
// lowest (y,x) center); non-body pixels are 0.
struct ResponseMap {
    int nx = 0, ny = 0;
    std::vector<double> p;
    double at(int x, int y) const { return p[static_cast<std::size_t>(y) * nx + x]; }
};

struct CenterProb {
    int x = 0, y = 0;
    double prob = 0;
};

ResponseMap build_response_map(int nx, int ny, const std::vector<CenterProb>& centers,
                               PlaneView<std::uint8_t> body_slice);

// Overlap-ratio labeling of training superpixels.
enum class OverlapClass : int { Negative = 0, Positive = 1, Ambiguous = 2 };

inline OverlapClass classify_overlap(double r) {
    if (r >= 0.5) return OverlapClass::Positive;
    if (r <= 0.2) return OverlapClass::Negative;
    return OverlapClass::Ambiguous;
}

// r = |superpixel ∩ gt| / |superpixel| for pixels given as linear slice indices.
double superpixel_overlap_ratio(std::span<const int> sp_pixels, PlaneView<std::uint8_t> gt_slice);

// 24 statistics over the superpixel's intensity and response distributions.
// Skewness and excess kurtosis are 0 for a constant distribution; percentile
// p interpolates order statistics at rank p/100*(N-1).
SpFeatureVector superpixel_features(std::span<const int> sp_pixels,
                                    PlaneView<std::uint16_t> intensity_slice,
                                    const ResponseMap& response);

// Pixel lists per label for one slice, in row-major discovery order.
std::vector<std::vector<int>> group_superpixels(PlaneView<std::uint32_t> labels);

struct SpInstance {
    int z = 0;
    std::uint32_t label = 0;
    int size = 0;
    SpFeatureVector features{};
    double overlap = -1.0;                    // -1 when extracted without gt
    OverlapClass cls = OverlapClass::Ambiguous;
};

// One instance per candidate superpixel: a candidate lies entirely inside
// the body mask. When gt is present, instances carry overlap labels.
std::vector<SpInstance> extract_superpixel_instances(const CtVolume& vol, const LabelVolume& sp,
                                                     const std::vector<ResponseMap>& response,
                                                     const BinaryMask& body,
                                                     const BinaryMask* gt = nullptr);

// Two-level cascade: C2 over all labeled superpixels (negatives subsampled),
// C3 over the positives versus C2's surviving hard negatives.
struct CascadeModel {
    ForestModel c2, c3;
    double t2 = 0.5, t3 = 0.5;
};

struct CascadeTrainOptions {
    TrainConfig c2, c3;               // per-stage seeds are derived from `seed`
    std::uint64_t seed = 0;
    double sensitivity_target = 0.99; // sets t2 on C2's training positives
    double neg_ratio = 5.0;           // negatives per positive for C2
    double t3 = 0.5;
};

// Row indices (into the input arrays) each stage actually trained on.
struct CascadeTrainInfo {
    std::vector<std::size_t> c2_rows, c3_rows;
};

CascadeModel train_cascade(const std::vector<SpFeatureVector>& features,
                           const std::vector<OverlapClass>& labels,
                           const CascadeTrainOptions& opt, int threads = 1,
                           CascadeTrainInfo* info = nullptr);

// A superpixel is positive iff C2 score >= t2 and C3 score >= t3; positive
// superpixels are painted whole, slices stacked into the 3D mask. Instances
// must cover every candidate superpixel.
BinaryMask classify_and_stack(const LabelVolume& sp, const BinaryMask& body,
                              const std::vector<SpInstance>& instances,
                              const CascadeModel& cascade);

void save_cascade(const std::filesystem::path& path, const CascadeModel& m);
CascadeModel load_cascade(const std::filesystem::path& path);

// ROC over superpixel scores; weights default to 1 per superpixel, or pass
// sizes for the pixel-weighted variant.
struct RocPoint {
    double threshold = 0, tpr = 0, fpr = 0;
};
std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels,
                                const std::vector<double>& weights = {});

// CSV helpers: z,label,size[,case][,r,class],<24 feature names>.
std::string sp_feature_csv_header(bool with_case, bool with_labels);
void write_sp_features_csv(const std::filesystem::path& path,
                           const std::vector<SpInstance>& instances,
                           const std::optional<std::string>& case_tag, bool with_labels);

} // namespace seg
