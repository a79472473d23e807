#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segtool/body.hpp"
#include "segtool/dsift.hpp"
#include "segtool/lut.hpp"
#include "segtool/slic.hpp"
#include "segtool/volume.hpp"

namespace seg {

constexpr int kPatchFeatureDims = 46;

// Fixed layout:
//   [0..31]  dSIFT
//   [32..34] intensity mean/median/std over P (the full patch)
//   [35..37] intensity mean/median/std over P' (patch ∩ center's superpixel)
//   [38..40] LUT-probability mean/median/std over P
//   [41..43] LUT-probability mean/median/std over P'
//   [44..45] relX, relY inside the body bounding box
using PatchFeatureVector = std::array<double, kPatchFeatureDims>;

extern const std::array<const char*, kPatchFeatureDims> kPatchFeatureNames;

struct PatchGrid {
    int stride = 3;
    int patch_size = 25; // odd
};

enum class PatchRegion { Full, SuperpixelClipped };            // P, P'
enum class PatchChannel { Intensity, LutProbability };

struct PatchStats {
    double mean = 0, median = 0, stddev = 0;
};

// Statistics over the selected pixel multiset. Median of an even count is
// the mean of the two middle order statistics; std is the population
// standard deviation.
PatchStats patch_stats(PlaneView<std::uint16_t> slice, int cx, int cy, int patch_size,
                       PatchRegion region, PatchChannel channel,
                       PlaneView<std::uint32_t> sp_labels, const IntensityLut* lut);

// relX = (x - xmin)/(xmax - xmin), relY analogous, both in [0,1].
std::pair<double, double> relative_position(int x, int y, const Bbox2D& body_bbox);

struct PatchRecord {
    int z = 0, x = 0, y = 0;
    PatchFeatureVector features{};
    int label = -1; // 1/0 when extracted with ground truth, else -1
};

// One record per grid center; centers step by `stride` from the first
// admissible offset, keep only positions whose patch and dSIFT support fit
// inside the slice and whose center pixel is inside the body mask, and are
// ordered by (z, y, x). Slices without body pixels contribute nothing.
// When gt is non-null each record is labeled by its center pixel.
std::vector<PatchRecord> extract_patch_features(const CtVolume& vol, const BinaryMask& body,
                                                const LabelVolume& sp, const IntensityLut& lut,
                                                const PatchGrid& grid, const DsiftParams& dsift,
                                                const BinaryMask* gt = nullptr, int threads = 1);

// Grid centers for one slice (same admissibility rules as above).
std::vector<std::pair<int, int>> patch_grid_centers(PlaneView<std::uint8_t> body_slice,
                                                    const PatchGrid& grid,
                                                    const DsiftParams& dsift);

// CSV: z,x,y[,case][,label],<46 feature names>.
std::string patch_feature_csv_header(bool with_case, bool with_label);
void write_patch_features_csv(const std::filesystem::path& path,
                              const std::vector<PatchRecord>& records,
                              const std::optional<std::string>& case_tag, bool with_label);

struct LabeledFeatures {
    std::vector<std::array<double, kPatchFeatureDims>> x;
    std::vector<int> y;
};

} // namespace seg
