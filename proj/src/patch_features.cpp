#include "segtool/patch_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "segtool/csv.hpp"
#include "segtool/parallel.hpp"

namespace seg {

const std::array<const char*, kPatchFeatureDims> kPatchFeatureNames = {
    "dsift00", "dsift01", "dsift02", "dsift03", "dsift04", "dsift05", "dsift06", "dsift07",
    "dsift08", "dsift09", "dsift10", "dsift11", "dsift12", "dsift13", "dsift14", "dsift15",
    "dsift16", "dsift17", "dsift18", "dsift19", "dsift20", "dsift21", "dsift22", "dsift23",
    "dsift24", "dsift25", "dsift26", "dsift27", "dsift28", "dsift29", "dsift30", "dsift31",
    "imeanP",  "imedP",   "istdP",   "imeanPp", "imedPp",  "istdPp",  "pmeanP",  "pmedP",
    "pstdP",   "pmeanPp", "pmedPp",  "pstdPp",  "relx",    "rely"};

namespace {

PatchStats stats_of(std::vector<double>& values) {
    PatchStats s;
    const std::size_t n = values.size();
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(n);
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n));
    std::sort(values.begin(), values.end());
    s.median = n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    return s;
}

} // namespace

PatchStats patch_stats(PlaneView<std::uint16_t> slice, int cx, int cy, int patch_size,
                       PatchRegion region, PatchChannel channel,
                       PlaneView<std::uint32_t> sp_labels, const IntensityLut* lut) {
    if (patch_size < 1 || patch_size % 2 == 0)
        throw WindowBoundsError("patch_size must be odd and positive");
    const int r = patch_size / 2;
    if (cx - r < 0 || cx + r > slice.nx - 1 || cy - r < 0 || cy + r > slice.ny - 1)
        throw WindowBoundsError("patch out of bounds at (" + std::to_string(cx) + "," +
                                std::to_string(cy) + ")");
    if (channel == PatchChannel::LutProbability && lut == nullptr)
        throw WindowBoundsError("LUT channel requested without a LUT");

    const std::uint32_t center_label =
        region == PatchRegion::SuperpixelClipped ? sp_labels.at(cx, cy) : 0;

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(patch_size) * patch_size);
    for (int y = cy - r; y <= cy + r; ++y) {
        for (int x = cx - r; x <= cx + r; ++x) {
            if (region == PatchRegion::SuperpixelClipped && sp_labels.at(x, y) != center_label)
                continue;
            double v = static_cast<double>(slice.at(x, y));
            if (channel == PatchChannel::LutProbability) v = lut->at(slice.at(x, y));
            values.push_back(v);
        }
    }
    return stats_of(values);
}

std::pair<double, double> relative_position(int x, int y, const Bbox2D& bb) {
    if (bb.xmax <= bb.xmin || bb.ymax <= bb.ymin)
        throw DegenerateBboxError("degenerate body bounding box");
    double relx = static_cast<double>(x - bb.xmin) / static_cast<double>(bb.xmax - bb.xmin);
    double rely = static_cast<double>(y - bb.ymin) / static_cast<double>(bb.ymax - bb.ymin);
    return {relx, rely};
}

std::vector<std::pair<int, int>> patch_grid_centers(PlaneView<std::uint8_t> body_slice,
                                                    const PatchGrid& grid,
                                                    const DsiftParams& dsift) {
    if (grid.stride < 1) throw WindowBoundsError("stride must be positive");
    if (grid.patch_size < 1 || grid.patch_size % 2 == 0)
        throw WindowBoundsError("patch_size must be odd and positive");
    const int r = grid.patch_size / 2;
    const int lo_x = std::max(r, dsift.bin_size + 1);
    const int lo_y = lo_x;
    const int hi_x = std::min(body_slice.nx - 1 - r, body_slice.nx - 1 - dsift.bin_size);
    const int hi_y = std::min(body_slice.ny - 1 - r, body_slice.ny - 1 - dsift.bin_size);

    std::vector<std::pair<int, int>> centers;
    for (int y = lo_y; y <= hi_y; y += grid.stride)
        for (int x = lo_x; x <= hi_x; x += grid.stride)
            if (body_slice.at(x, y)) centers.emplace_back(x, y);
    return centers;
}

std::vector<PatchRecord> extract_patch_features(const CtVolume& vol, const BinaryMask& body,
                                                const LabelVolume& sp, const IntensityLut& lut,
                                                const PatchGrid& grid, const DsiftParams& dsift,
                                                const BinaryMask* gt, int threads) {
    if (!(vol.dims == body.dims) || !(vol.dims == sp.dims) ||
        (gt != nullptr && !(vol.dims == gt->dims)))
        throw DimsMismatchError("volume, body, superpixel and gt dims must match");

    std::vector<std::vector<PatchRecord>> per_slice(vol.dims.nz);
    parallel_for(vol.dims.nz, threads, [&](int z) {
        auto body_slice = body.slice(z);
        auto centers = patch_grid_centers(body_slice, grid, dsift);
        if (centers.empty()) return;

        Bbox2D bb = bounding_box_2d(body, z);
        auto im = vol.slice(z);
        auto labels = sp.slice(z);
        auto& out = per_slice[z];
        out.reserve(centers.size());

        for (auto [x, y] : centers) {
            PatchRecord rec;
            rec.z = z;
            rec.x = x;
            rec.y = y;

            auto d = dsift_descriptor(im, x, y, dsift);
            std::copy(d.begin(), d.end(), rec.features.begin());

            auto put = [&](int at, const PatchStats& s) {
                rec.features[at] = s.mean;
                rec.features[at + 1] = s.median;
                rec.features[at + 2] = s.stddev;
            };
            put(32, patch_stats(im, x, y, grid.patch_size, PatchRegion::Full,
                                PatchChannel::Intensity, labels, nullptr));
            put(35, patch_stats(im, x, y, grid.patch_size, PatchRegion::SuperpixelClipped,
                                PatchChannel::Intensity, labels, nullptr));
            put(38, patch_stats(im, x, y, grid.patch_size, PatchRegion::Full,
                                PatchChannel::LutProbability, labels, &lut));
            put(41, patch_stats(im, x, y, grid.patch_size, PatchRegion::SuperpixelClipped,
                                PatchChannel::LutProbability, labels, &lut));

            auto [relx, rely] = relative_position(x, y, bb);
            rec.features[44] = relx;
            rec.features[45] = rely;

            if (gt != nullptr) rec.label = gt->at(x, y, z) ? 1 : 0;
            out.push_back(rec);
        }
    });

    std::vector<PatchRecord> records;
    for (auto& v : per_slice)
        records.insert(records.end(), v.begin(), v.end());
    return records;
}

std::string patch_feature_csv_header(bool with_case, bool with_label) {
    std::string h = "z,x,y";
    if (with_case) h += ",case";
    if (with_label) h += ",label";
    for (const char* name : kPatchFeatureNames) {
        h += ",";
        h += name;
    }
    return h;
}

void write_patch_features_csv(const std::filesystem::path& path,
                              const std::vector<PatchRecord>& records,
                              const std::optional<std::string>& case_tag, bool with_label) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << patch_feature_csv_header(case_tag.has_value(), with_label) << "\n";
    for (const auto& r : records) {
        out << r.z << "," << r.x << "," << r.y;
        if (case_tag) out << "," << *case_tag;
        if (with_label) out << "," << r.label;
        for (double f : r.features) out << "," << csv_double(f);
        out << "\n";
    }
}

} // namespace seg
