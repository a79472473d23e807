#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "segtool/config.hpp"
#include "segtool/metrics.hpp"
#include "segtool/superpixel_stage.hpp"

namespace seg {

// Everything the inference chain needs.
struct ModelSet {
    RunConfig cfg;
    IntensityLut lut;
    ForestModel c1;
    CascadeModel cascade;
};

void save_model_set(const std::filesystem::path& dir, const ModelSet& models);
ModelSet load_model_set(const std::filesystem::path& dir);

// Intermediate products of one volume that do not depend on trained models.
struct CasePrep {
    BinaryMask body;
    LabelVolume sp;
};
CasePrep prepare_case(const CtVolume& vol, const RunConfig& cfg);

// Patch responses spread into per-slice maps.
std::vector<ResponseMap> response_maps_for(const CtVolume& vol, const CasePrep& prep,
                                           const ModelSet& models,
                                           const std::vector<PatchRecord>& records);

// Full inference chain: body -> per-slice SLIC -> patch features -> C1 ->
// response maps -> superpixel features -> cascade -> stacked 3D mask.
BinaryMask segment_volume(const CtVolume& vol, const ModelSet& models);

// Same chain with body/SLIC already computed.
BinaryMask segment_prepared(const CtVolume& vol, const CasePrep& prep, const ModelSet& models);

// Trains LUT, C1 and the cascade on the given manifest cases. fold_label
// scopes the derived seeds; when artifact_dir is set the exact training
// rows are written there as case-tagged CSVs.
ModelSet train_models(const DatasetManifest& manifest, const std::vector<std::size_t>& train_cases,
                      const RunConfig& cfg, const std::string& fold_label,
                      const std::optional<std::filesystem::path>& artifact_dir);

struct CaseResult {
    std::size_t case_index = 0;
    int fold = 0;
    OverlapReport report;
};

struct CrossvalResult {
    std::vector<CaseResult> cases; // in manifest order
    SummaryTable summary;
};

// 6-fold cross-validation: for each fold, train on the other folds and
// evaluate every case of this fold. Writes per-fold model dirs, training
// CSVs, predicted masks, per_case.csv and summary.csv under out_dir.
CrossvalResult crossval(const DatasetManifest& manifest, const RunConfig& cfg,
                        const std::filesystem::path& out_dir);

// Negative subsampling shared by the training drivers: keeps all positives
// and at most ratio * |positives| negatives (seeded partial shuffle).
std::vector<std::size_t> subsample_negatives(const std::vector<int>& labels, double ratio,
                                             std::uint64_t seed);

} // namespace seg
