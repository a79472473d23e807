#include "segtool/pipeline.hpp"

#include <fstream>
#include <map>

#include "segtool/csv.hpp"
#include "segtool/parallel.hpp"
#include "segtool/rng.hpp"

namespace seg {

void save_model_set(const std::filesystem::path& dir, const ModelSet& models) {
    std::filesystem::create_directories(dir);
    save_config(dir / "config.json", models.cfg);
    save_lut(dir / "lut.txt", models.lut);
    save_model(dir / "c1.json", models.c1);
    save_cascade(dir / "cascade.json", models.cascade);
}

ModelSet load_model_set(const std::filesystem::path& dir) {
    ModelSet m;
    m.cfg = load_config(dir / "config.json");
    m.lut = load_lut(dir / "lut.txt");
    m.c1 = load_model(dir / "c1.json");
    m.cascade = load_cascade(dir / "cascade.json");
    if (m.c1.feature_count != kPatchFeatureDims)
        throw ModelFormatError("c1 model must have 46 features");
    return m;
}

CasePrep prepare_case(const CtVolume& vol, const RunConfig& cfg) {
    CasePrep prep;
    prep.body = segment_body(vol, cfg.body_threshold);
    prep.sp = slic_volume(vol, cfg.slic, cfg.threads);
    return prep;
}

std::vector<ResponseMap> response_maps_for(const CtVolume& vol, const CasePrep& prep,
                                           const ModelSet& models,
                                           const std::vector<PatchRecord>& records) {
    std::vector<std::vector<CenterProb>> per_slice(vol.dims.nz);
    for (const PatchRecord& r : records) {
        double p = predict_proba(models.c1, std::span(r.features));
        per_slice[r.z].push_back({r.x, r.y, p});
    }
    std::vector<ResponseMap> maps(vol.dims.nz);
    parallel_for(vol.dims.nz, models.cfg.threads, [&](int z) {
        maps[z] = build_response_map(vol.dims.nx, vol.dims.ny, per_slice[z], prep.body.slice(z));
    });
    return maps;
}

BinaryMask segment_prepared(const CtVolume& vol, const CasePrep& prep, const ModelSet& models) {
    auto records = extract_patch_features(vol, prep.body, prep.sp, models.lut, models.cfg.grid,
                                          models.cfg.dsift, nullptr, models.cfg.threads);
    auto maps = response_maps_for(vol, prep, models, records);
    auto instances = extract_superpixel_instances(vol, prep.sp, maps, prep.body, nullptr);
    return classify_and_stack(prep.sp, prep.body, instances, models.cascade);
}

BinaryMask segment_volume(const CtVolume& vol, const ModelSet& models) {
    CasePrep prep = prepare_case(vol, models.cfg);
    return segment_prepared(vol, prep, models);
}

std::vector<std::size_t> subsample_negatives(const std::vector<int>& labels, double ratio,
                                             std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);

    std::size_t keep = static_cast<std::size_t>(ratio * static_cast<double>(pos.size()));
    keep = std::max<std::size_t>(keep, 1);
    if (neg.size() > keep) {
        Rng rng(seed);
        for (std::size_t i = 0; i < keep; ++i) {
            std::size_t j = i + rng.next_below(neg.size() - i);
            std::swap(neg[i], neg[j]);
        }
        neg.resize(keep);
    }
    pos.insert(pos.end(), neg.begin(), neg.end());
    return pos;
}

namespace {

struct CaseData {
    std::string tag;
    CtVolume vol;
    BinaryMask gt;
    CasePrep prep;
};

std::string case_tag(const DatasetManifest& manifest, std::size_t i) {
    return std::filesystem::path(manifest.entries[i].volume).stem().string();
}

CaseData load_case(const DatasetManifest& manifest, std::size_t i, const RunConfig& cfg) {
    CaseData c;
    c.tag = case_tag(manifest, i);
    c.vol = load_volume(manifest.volume_path(i));
    c.gt = load_mask(manifest.mask_path(i));
    if (!(c.vol.dims == c.gt.dims))
        throw DimsMismatchError("volume/mask dims differ for " + c.tag);
    c.prep = prepare_case(c.vol, cfg);
    return c;
}

ModelSet train_models_cached(const std::vector<const CaseData*>& cases, const RunConfig& cfg,
                             const std::string& fold_label,
                             const std::optional<std::filesystem::path>& artifact_dir) {
    if (cases.empty()) throw EmptyTrainingError("no training cases");

    ModelSet models;
    models.cfg = cfg;

    // Intensity LUT from ground-truth voxels (positives) versus the rest of
    // the body (negatives), pooled over the training cases.
    {
        std::vector<int> pos, neg;
        for (const CaseData* c : cases) {
            const std::size_t n = c->vol.dims.count();
            for (std::size_t i = 0; i < n; ++i) {
                if (c->gt.bits[i]) pos.push_back(c->vol.voxels[i]);
                else if (c->prep.body.bits[i]) neg.push_back(c->vol.voxels[i]);
            }
        }
        models.lut = build_intensity_lut(pos, neg, cfg.lut_bandwidth);
    }

    // Patch features, labeled by the ground truth at the patch center.
    std::vector<std::vector<PatchRecord>> case_records(cases.size());
    std::vector<PatchRecord> records;
    std::vector<std::size_t> record_case; // index into `cases`
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const CaseData* c = cases[ci];
        case_records[ci] = extract_patch_features(c->vol, c->prep.body, c->prep.sp, models.lut,
                                                  cfg.grid, cfg.dsift, &c->gt, cfg.threads);
        record_case.insert(record_case.end(), case_records[ci].size(), ci);
        records.insert(records.end(), case_records[ci].begin(), case_records[ci].end());
    }

    std::vector<int> patch_labels(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) patch_labels[i] = records[i].label;
    std::vector<std::size_t> c1_rows = subsample_negatives(
        patch_labels, cfg.c1_neg_ratio, derive_seed(cfg.seed, fold_label + "/c1-subsample"));

    {
        std::vector<std::vector<double>> X;
        std::vector<int> y;
        X.reserve(c1_rows.size());
        for (std::size_t i : c1_rows) {
            X.emplace_back(records[i].features.begin(), records[i].features.end());
            y.push_back(records[i].label);
        }
        TrainConfig c1_cfg = cfg.c1;
        c1_cfg.seed = derive_seed(cfg.seed, fold_label + "/c1");
        models.c1 = train_forest(X, y, c1_cfg, cfg.threads);
    }

    if (artifact_dir) {
        std::ofstream out(*artifact_dir / "train_patch_c1.csv");
        if (!out) throw DataError("cannot write training CSV");
        out << patch_feature_csv_header(true, true) << "\n";
        for (std::size_t i : c1_rows) {
            const PatchRecord& r = records[i];
            out << r.z << "," << r.x << "," << r.y << "," << cases[record_case[i]]->tag << ","
                << r.label;
            for (double f : r.features) out << "," << csv_double(f);
            out << "\n";
        }
    }

    // Superpixel instances over C1 response maps.
    std::vector<SpInstance> instances;
    std::vector<std::size_t> instance_case;
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const CaseData* c = cases[ci];
        auto maps = response_maps_for(c->vol, c->prep, models, case_records[ci]);
        auto insts = extract_superpixel_instances(c->vol, c->prep.sp, maps, c->prep.body, &c->gt);
        instance_case.insert(instance_case.end(), insts.size(), ci);
        instances.insert(instances.end(), insts.begin(), insts.end());
    }

    std::vector<SpFeatureVector> sp_x(instances.size());
    std::vector<OverlapClass> sp_y(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        sp_x[i] = instances[i].features;
        sp_y[i] = instances[i].cls;
    }

    CascadeTrainOptions opt;
    opt.c2 = cfg.c2;
    opt.c3 = cfg.c3;
    opt.seed = derive_seed(cfg.seed, fold_label + "/cascade");
    opt.sensitivity_target = cfg.t2_sensitivity;
    opt.neg_ratio = cfg.c2_neg_ratio;
    opt.t3 = cfg.t3;
    CascadeTrainInfo info;
    models.cascade = train_cascade(sp_x, sp_y, opt, cfg.threads, &info);

    if (artifact_dir) {
        auto write_rows = [&](const std::filesystem::path& path,
                              const std::vector<std::size_t>& rows) {
            std::ofstream out(path);
            if (!out) throw DataError("cannot write training CSV");
            out << sp_feature_csv_header(true, true) << "\n";
            for (std::size_t i : rows) {
                const SpInstance& s = instances[i];
                out << s.z << "," << s.label << "," << s.size << "," << cases[instance_case[i]]->tag
                    << "," << csv_double(s.overlap) << "," << static_cast<int>(s.cls);
                for (double f : s.features) out << "," << csv_double(f);
                out << "\n";
            }
        };
        write_rows(*artifact_dir / "train_sp_c2.csv", info.c2_rows);
        write_rows(*artifact_dir / "train_sp_c3.csv", info.c3_rows);
    }
    return models;
}

} // namespace

ModelSet train_models(const DatasetManifest& manifest, const std::vector<std::size_t>& train_cases,
                      const RunConfig& cfg, const std::string& fold_label,
                      const std::optional<std::filesystem::path>& artifact_dir) {
    std::vector<CaseData> storage;
    storage.reserve(train_cases.size());
    for (std::size_t i : train_cases) storage.push_back(load_case(manifest, i, cfg));
    std::vector<const CaseData*> cases;
    for (const auto& c : storage) cases.push_back(&c);
    if (artifact_dir) std::filesystem::create_directories(*artifact_dir);
    return train_models_cached(cases, cfg, fold_label, artifact_dir);
}

CrossvalResult crossval(const DatasetManifest& manifest, const RunConfig& cfg,
                        const std::filesystem::path& out_dir) {
    if (manifest.entries.size() < 6)
        throw ManifestError("cross-validation needs at least 6 cases");
    for (int f = 0; f < 6; ++f) {
        bool found = false;
        for (const auto& e : manifest.entries) found = found || e.fold == f;
        if (!found) throw ManifestError("fold " + std::to_string(f) + " has no cases");
    }
    std::filesystem::create_directories(out_dir);

    // Body masks and superpixels do not depend on the fold, so each case is
    // prepared once.
    std::vector<CaseData> cases;
    cases.reserve(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        cases.push_back(load_case(manifest, i, cfg));

    CrossvalResult result;
    result.cases.resize(cases.size());

    for (int fold = 0; fold < 6; ++fold) {
        std::filesystem::path fold_dir = out_dir / ("fold" + std::to_string(fold));
        std::filesystem::create_directories(fold_dir);

        std::vector<const CaseData*> train;
        for (std::size_t i = 0; i < cases.size(); ++i)
            if (manifest.entries[i].fold != fold) train.push_back(&cases[i]);

        std::string fold_label = "fold" + std::to_string(fold);
        ModelSet models;
        try {
            models = train_models_cached(train, cfg, fold_label, fold_dir);
        } catch (const DataError& e) {
            throw DataError(fold_label + ": " + e.what());
        }
        save_model_set(fold_dir, models);

        for (std::size_t i = 0; i < cases.size(); ++i) {
            if (manifest.entries[i].fold != fold) continue;
            BinaryMask pred;
            try {
                pred = segment_prepared(cases[i].vol, cases[i].prep, models);
            } catch (const DataError& e) {
                throw DataError(fold_label + "/" + cases[i].tag + ": " + e.what());
            }
            save_mask(fold_dir / (cases[i].tag + "_pred.mvol"), pred, cases[i].vol.sx,
                      cases[i].vol.sy, cases[i].vol.sz);
            result.cases[i] = {i, fold, overlap_report(pred, cases[i].gt)};
        }
    }

    std::vector<OverlapReport> reports;
    for (const auto& c : result.cases) reports.push_back(c.report);
    result.summary = summarize(reports);

    {
        std::ofstream out(out_dir / "per_case.csv");
        out << "case,fold,dice,jaccard,precision,recall\n";
        for (std::size_t i = 0; i < result.cases.size(); ++i) {
            const auto& c = result.cases[i];
            out << cases[i].tag << "," << c.fold << "," << csv_double(c.report.dice) << ","
                << csv_double(c.report.jaccard) << "," << csv_double(c.report.precision) << ","
                << csv_double(c.report.recall) << "\n";
        }
    }
    save_summary_csv(out_dir / "summary.csv", result.summary);
    return result;
}

} // namespace seg
