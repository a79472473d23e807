#include "segtool/superpixel_stage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segtool/csv.hpp"
#include "segtool/rng.hpp"

namespace seg {

const std::array<const char*, kSpFeatureDims> kSpFeatureNames = {
    "amean", "astd", "askew", "akurt", "ap20", "ap30", "ap40", "ap60",
    "ap70",  "ap80", "ap90",  "amed",  "bmean", "bstd", "bskew", "bkurt",
    "bp20",  "bp30", "bp40",  "bp60",  "bp70",  "bp80", "bp90",  "bmed"};

namespace {

// 12 statistics of one empirical distribution, written to out[0..11].
// Values are sorted up front so the result does not depend on pixel
// enumeration order, summation included.
void channel_stats(std::vector<double>& v, double* out) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);

    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : v) {
        double d = x - mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);

    out[0] = mean;
    out[1] = std::sqrt(m2);
    out[2] = m2 == 0.0 ? 0.0 : m3 / std::pow(m2, 1.5);
    out[3] = m2 == 0.0 ? 0.0 : m4 / (m2 * m2) - 3.0;

    auto percentile = [&](double p) {
        double rank = p / 100.0 * static_cast<double>(n - 1);
        std::size_t lo = static_cast<std::size_t>(std::floor(rank));
        std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
        double frac = rank - static_cast<double>(lo);
        return v[lo] + frac * (v[hi] - v[lo]);
    };
    // p50 is carried by the median slot, so the seven percentile slots skip it.
    constexpr double kPercentiles[7] = {20, 30, 40, 60, 70, 80, 90};
    for (int i = 0; i < 7; ++i) out[4 + i] = percentile(kPercentiles[i]);
    out[11] = n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

} // namespace

ResponseMap build_response_map(int nx, int ny, const std::vector<CenterProb>& centers,
                               PlaneView<std::uint8_t> body_slice) {
    ResponseMap map;
    map.nx = nx;
    map.ny = ny;
    map.p.assign(static_cast<std::size_t>(nx) * ny, 0.0);
    if (centers.empty()) return map;

    // Bucket the centers so each pixel only scans nearby rings; distances
    // are exact integer squares, so ties resolve exactly.
    constexpr int kBucket = 16;
    const int bnx = (nx + kBucket - 1) / kBucket;
    const int bny = (ny + kBucket - 1) / kBucket;
    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(bnx) * bny);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        int bx = centers[c].x / kBucket, by = centers[c].y / kBucket;
        buckets[static_cast<std::size_t>(by) * bnx + bx].push_back(static_cast<int>(c));
    }
    const int max_ring = std::max(bnx, bny);

    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            if (!body_slice.at(x, y)) continue;
            const int pbx = x / kBucket, pby = y / kBucket;
            long long best_d2 = -1;
            int best_c = -1;

            auto consider = [&](int bx, int by) {
                if (bx < 0 || bx >= bnx || by < 0 || by >= bny) return;
                for (int c : buckets[static_cast<std::size_t>(by) * bnx + bx]) {
                    long long dx = centers[c].x - x, dy = centers[c].y - y;
                    long long d2 = dx * dx + dy * dy;
                    if (best_c < 0 || d2 < best_d2) {
                        best_d2 = d2;
                        best_c = c;
                    } else if (d2 == best_d2) {
                        auto key = [&](int i) {
                            return std::make_pair(centers[i].y, centers[i].x);
                        };
                        if (key(c) < key(best_c)) best_c = c;
                    }
                }
            };

            for (int ring = 0; ring <= max_ring; ++ring) {
                if (best_c >= 0) {
                    long long lb = static_cast<long long>(ring - 1) * kBucket + 1;
                    if (ring >= 1 && lb * lb > best_d2) break;
                }
                if (ring == 0) {
                    consider(pbx, pby);
                    continue;
                }
                for (int bx = pbx - ring; bx <= pbx + ring; ++bx) {
                    consider(bx, pby - ring);
                    consider(bx, pby + ring);
                }
                for (int by = pby - ring + 1; by <= pby + ring - 1; ++by) {
                    consider(pbx - ring, by);
                    consider(pbx + ring, by);
                }
            }
            map.p[static_cast<std::size_t>(y) * nx + x] = centers[best_c].prob;
        }
    }
    return map;
}

double superpixel_overlap_ratio(std::span<const int> sp_pixels, PlaneView<std::uint8_t> gt_slice) {
    if (sp_pixels.empty()) throw EmptySuperpixelError("superpixel with no pixels");
    std::size_t inside = 0;
    for (int i : sp_pixels) inside += gt_slice.px[i] ? 1 : 0;
    return static_cast<double>(inside) / static_cast<double>(sp_pixels.size());
}

SpFeatureVector superpixel_features(std::span<const int> sp_pixels,
                                    PlaneView<std::uint16_t> intensity_slice,
                                    const ResponseMap& response) {
    if (sp_pixels.empty()) throw EmptySuperpixelError("superpixel with no pixels");
    std::vector<double> a, b;
    a.reserve(sp_pixels.size());
    b.reserve(sp_pixels.size());
    for (int i : sp_pixels) {
        a.push_back(static_cast<double>(intensity_slice.px[i]));
        b.push_back(response.p[i]);
    }
    SpFeatureVector f{};
    channel_stats(a, f.data());
    channel_stats(b, f.data() + 12);
    return f;
}

std::vector<std::vector<int>> group_superpixels(PlaneView<std::uint32_t> labels) {
    std::uint32_t k = 0;
    for (std::size_t i = 0; i < labels.count(); ++i) k = std::max(k, labels.px[i]);
    std::vector<std::vector<int>> groups(k + 1);
    for (std::size_t i = 0; i < labels.count(); ++i)
        groups[labels.px[i]].push_back(static_cast<int>(i));
    return groups;
}

std::vector<SpInstance> extract_superpixel_instances(const CtVolume& vol, const LabelVolume& sp,
                                                     const std::vector<ResponseMap>& response,
                                                     const BinaryMask& body, const BinaryMask* gt) {
    if (!(vol.dims == sp.dims) || !(vol.dims == body.dims) ||
        (gt != nullptr && !(vol.dims == gt->dims)))
        throw DimsMismatchError("volume, superpixel, body and gt dims must match");
    if (static_cast<int>(response.size()) != vol.dims.nz)
        throw DimsMismatchError("response stack does not match volume depth");

    std::vector<SpInstance> out;
    for (int z = 0; z < vol.dims.nz; ++z) {
        auto groups = group_superpixels(sp.slice(z));
        auto body_slice = body.slice(z);
        auto im = vol.slice(z);
        for (std::uint32_t label = 0; label < groups.size(); ++label) {
            const auto& pixels = groups[label];
            bool inside = !pixels.empty();
            for (int i : pixels) {
                if (!body_slice.px[i]) {
                    inside = false;
                    break;
                }
            }
            if (!inside) continue;

            SpInstance inst;
            inst.z = z;
            inst.label = label;
            inst.size = static_cast<int>(pixels.size());
            inst.features = superpixel_features(pixels, im, response[z]);
            if (gt != nullptr) {
                inst.overlap = superpixel_overlap_ratio(pixels, gt->slice(z));
                inst.cls = classify_overlap(inst.overlap);
            }
            out.push_back(std::move(inst));
        }
    }
    return out;
}

namespace {

std::vector<std::size_t> subsample_indices(std::vector<std::size_t> pool, std::size_t keep,
                                           Rng& rng) {
    if (pool.size() <= keep) return pool;
    for (std::size_t i = 0; i < keep; ++i) {
        std::size_t j = i + rng.next_below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(keep);
    return pool;
}

} // namespace

CascadeModel train_cascade(const std::vector<SpFeatureVector>& features,
                           const std::vector<OverlapClass>& labels,
                           const CascadeTrainOptions& opt, int threads,
                           CascadeTrainInfo* info) {
    if (features.size() != labels.size())
        throw DimensionMismatchError("feature/label count mismatch");

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == OverlapClass::Positive) pos.push_back(i);
        else if (labels[i] == OverlapClass::Negative) neg.push_back(i);
        // Ambiguous superpixels never enter either training set.
    }
    if (pos.empty() || neg.empty())
        throw SingleClassError("cascade training needs both positive and negative superpixels");

    auto to_rows = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        std::vector<std::vector<double>> X;
        std::vector<int> y;
        X.reserve(a.size() + b.size());
        for (std::size_t i : a) {
            X.emplace_back(features[i].begin(), features[i].end());
            y.push_back(1);
        }
        for (std::size_t i : b) {
            X.emplace_back(features[i].begin(), features[i].end());
            y.push_back(0);
        }
        return std::make_pair(std::move(X), std::move(y));
    };

    CascadeModel model;
    model.t3 = opt.t3;

    // C2 on all positives and a bounded negative sample.
    Rng sub_rng(derive_seed(opt.seed, "cascade-subsample"));
    std::size_t keep = static_cast<std::size_t>(opt.neg_ratio * static_cast<double>(pos.size()));
    keep = std::max<std::size_t>(keep, 1);
    std::vector<std::size_t> c2_neg = subsample_indices(neg, keep, sub_rng);

    auto [x2, y2] = to_rows(pos, c2_neg);
    TrainConfig cfg2 = opt.c2;
    cfg2.seed = derive_seed(opt.seed, "c2");
    model.c2 = train_forest(x2, y2, cfg2, threads);

    // t2: the largest threshold keeping at least sensitivity_target of the
    // training positives.
    std::vector<double> pos_scores;
    pos_scores.reserve(pos.size());
    for (std::size_t i : pos)
        pos_scores.push_back(predict_proba(model.c2, std::span(features[i])));
    std::sort(pos_scores.begin(), pos_scores.end());
    std::size_t need = static_cast<std::size_t>(
        std::ceil(opt.sensitivity_target * static_cast<double>(pos.size())));
    need = std::clamp<std::size_t>(need, 1, pos.size());
    model.t2 = pos_scores[pos.size() - need];

    // Hard negatives: every labeled negative C2 fails to reject at t2.
    std::vector<std::size_t> hard;
    for (std::size_t i : neg)
        if (predict_proba(model.c2, std::span(features[i])) >= model.t2) hard.push_back(i);
    if (hard.empty())
        throw DegenerateCascadeError(
            "no hard negatives survive C2 at t2; lower the t2 sensitivity target");

    auto [x3, y3] = to_rows(pos, hard);
    TrainConfig cfg3 = opt.c3;
    cfg3.seed = derive_seed(opt.seed, "c3");
    model.c3 = train_forest(x3, y3, cfg3, threads);

    if (info != nullptr) {
        info->c2_rows = pos;
        info->c2_rows.insert(info->c2_rows.end(), c2_neg.begin(), c2_neg.end());
        info->c3_rows = pos;
        info->c3_rows.insert(info->c3_rows.end(), hard.begin(), hard.end());
    }
    return model;
}

BinaryMask classify_and_stack(const LabelVolume& sp, const BinaryMask& body,
                              const std::vector<SpInstance>& instances,
                              const CascadeModel& cascade) {
    if (!(sp.dims == body.dims)) throw DimsMismatchError("superpixel and body dims differ");

    BinaryMask mask;
    mask.dims = sp.dims;
    mask.bits.assign(sp.dims.count(), 0);
    const std::size_t plane = static_cast<std::size_t>(sp.dims.nx) * sp.dims.ny;

    // Group instances by slice and check coverage of every candidate.
    std::vector<std::vector<const SpInstance*>> by_slice(sp.dims.nz);
    for (const auto& inst : instances) {
        if (inst.z < 0 || inst.z >= sp.dims.nz)
            throw MissingFeatureError("instance slice index out of range");
        by_slice[inst.z].push_back(&inst);
    }

    for (int z = 0; z < sp.dims.nz; ++z) {
        auto groups = group_superpixels(sp.slice(z));
        auto body_slice = body.slice(z);

        std::vector<const SpInstance*> of_label(groups.size(), nullptr);
        for (const SpInstance* inst : by_slice[z]) {
            if (inst->label >= groups.size())
                throw MissingFeatureError("instance label out of range in slice " +
                                          std::to_string(z));
            of_label[inst->label] = inst;
        }

        for (std::uint32_t label = 0; label < groups.size(); ++label) {
            const auto& pixels = groups[label];
            bool candidate = !pixels.empty();
            for (int i : pixels) {
                if (!body_slice.px[i]) {
                    candidate = false;
                    break;
                }
            }
            if (!candidate) continue;
            const SpInstance* inst = of_label[label];
            if (inst == nullptr)
                throw MissingFeatureError("no features for superpixel " + std::to_string(label) +
                                          " in slice " + std::to_string(z));
            if (predict_proba(cascade.c2, std::span(inst->features)) < cascade.t2) continue;
            if (predict_proba(cascade.c3, std::span(inst->features)) < cascade.t3) continue;
            for (int i : pixels) mask.bits[plane * z + i] = 1;
        }
    }
    return mask;
}

void save_cascade(const std::filesystem::path& path, const CascadeModel& m) {
    nlohmann::json j;
    j["version"] = 1;
    j["t2"] = m.t2;
    j["t3"] = m.t3;
    j["c2"] = nlohmann::json::parse(model_to_json(m.c2));
    j["c3"] = nlohmann::json::parse(model_to_json(m.c3));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

CascadeModel load_cascade(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("cascade parse error: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1)
            throw ModelVersionError("unsupported cascade version");
        CascadeModel m;
        m.t2 = j.at("t2").get<double>();
        m.t3 = j.at("t3").get<double>();
        m.c2 = model_from_json(j.at("c2").dump());
        m.c3 = model_from_json(j.at("c3").dump());
        if (m.c2.feature_count != kSpFeatureDims || m.c3.feature_count != kSpFeatureDims)
            throw ModelFormatError("cascade forests must have 24 features");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("cascade schema error: ") + e.what());
    }
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels,
                                const std::vector<double>& weights) {
    if (scores.size() != labels.size())
        throw DimensionMismatchError("score/label count mismatch");
    if (!weights.empty() && weights.size() != scores.size())
        throw DimensionMismatchError("score/weight count mismatch");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double wpos = 0, wneg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        double w = weights.empty() ? 1.0 : weights[i];
        (labels[i] ? wpos : wneg) += w;
    }
    if (wpos == 0 || wneg == 0)
        throw SingleClassError("ROC needs both classes");

    std::vector<RocPoint> curve;
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double t = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == t; ++i) {
            double w = weights.empty() ? 1.0 : weights[order[i]];
            (labels[order[i]] ? tp : fp) += w;
        }
        curve.push_back({t, tp / wpos, fp / wneg});
    }
    return curve;
}

std::string sp_feature_csv_header(bool with_case, bool with_labels) {
    std::string h = "z,label,size";
    if (with_case) h += ",case";
    if (with_labels) h += ",r,class";
    for (const char* name : kSpFeatureNames) {
        h += ",";
        h += name;
    }
    return h;
}

void write_sp_features_csv(const std::filesystem::path& path,
                           const std::vector<SpInstance>& instances,
                           const std::optional<std::string>& case_tag, bool with_labels) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << sp_feature_csv_header(case_tag.has_value(), with_labels) << "\n";
    for (const auto& inst : instances) {
        out << inst.z << "," << inst.label << "," << inst.size;
        if (case_tag) out << "," << *case_tag;
        if (with_labels)
            out << "," << csv_double(inst.overlap) << "," << static_cast<int>(inst.cls);
        for (double f : inst.features) out << "," << csv_double(f);
        out << "\n";
    }
}

} // namespace seg
