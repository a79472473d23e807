#include "segtool/volume.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "MVOL I/O assumes a little-endian host");

namespace seg {

std::size_t BinaryMask::count_set() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
}

namespace {

std::string format_double(double v) {
    std::array<char, 64> buf;
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

std::string read_line(std::istream& in, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line))
        throw MvolHeaderError("truncated MVOL header in " + path.string());
    return line;
}

MvolHeader parse_header(std::istream& in, const std::filesystem::path& path) {
    if (read_line(in, path) != "MVOL 1")
        throw MvolHeaderError("missing MVOL 1 magic in " + path.string());

    MvolHeader h;
    {
        std::istringstream ls(read_line(in, path));
        std::string tag;
        if (!(ls >> tag >> h.dims.nx >> h.dims.ny >> h.dims.nz) || tag != "dims" ||
            h.dims.nx <= 0 || h.dims.ny <= 0 || h.dims.nz <= 0)
            throw MvolHeaderError("bad dims line in " + path.string());
    }
    {
        std::istringstream ls(read_line(in, path));
        std::string tag;
        if (!(ls >> tag >> h.sx >> h.sy >> h.sz) || tag != "spacing" ||
            h.sx <= 0 || h.sy <= 0 || h.sz <= 0)
            throw MvolHeaderError("bad spacing line in " + path.string());
    }
    {
        std::istringstream ls(read_line(in, path));
        std::string tag;
        if (!(ls >> tag >> h.dtype) || tag != "dtype" ||
            (h.dtype != "u8" && h.dtype != "u16" && h.dtype != "u32"))
            throw MvolHeaderError("bad dtype line in " + path.string());
    }
    if (read_line(in, path) != "data raw-le")
        throw MvolHeaderError("bad data line in " + path.string());
    return h;
}

template <typename T>
std::vector<T> read_payload(std::istream& in, const Dims& dims, const std::filesystem::path& path) {
    std::vector<T> out(dims.count());
    in.read(reinterpret_cast<char*>(out.data()),
            static_cast<std::streamsize>(out.size() * sizeof(T)));
    if (static_cast<std::size_t>(in.gcount()) != out.size() * sizeof(T))
        throw MvolSizeError("payload shorter than dims in " + path.string());
    // A conforming file ends exactly at the payload.
    if (in.peek() != std::ifstream::traits_type::eof())
        throw MvolSizeError("payload longer than dims in " + path.string());
    return out;
}

template <typename T>
void write_mvol(const std::filesystem::path& path, const Dims& dims, double sx, double sy,
                double sz, const char* dtype, const std::vector<T>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "MVOL 1\n"
        << "dims " << dims.nx << " " << dims.ny << " " << dims.nz << "\n"
        << "spacing " << format_double(sx) << " " << format_double(sy) << " "
        << format_double(sz) << "\n"
        << "dtype " << dtype << "\n"
        << "data raw-le\n";
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(T)));
    if (!out) throw DataError("write failed: " + path.string());
}

std::ifstream open_mvol(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    return in;
}

} // namespace

MvolHeader read_mvol_header(const std::filesystem::path& path) {
    auto in = open_mvol(path);
    return parse_header(in, path);
}

CtVolume load_volume(const std::filesystem::path& path) {
    auto in = open_mvol(path);
    MvolHeader h = parse_header(in, path);
    if (h.dtype != "u16")
        throw MvolTypeError("expected dtype u16 for a volume, got " + h.dtype + " in " +
                            path.string());
    CtVolume vol;
    vol.dims = h.dims;
    vol.sx = h.sx;
    vol.sy = h.sy;
    vol.sz = h.sz;
    vol.voxels = read_payload<std::uint16_t>(in, h.dims, path);
    for (std::uint16_t v : vol.voxels)
        if (v > kIntensityMax)
            throw IntensityRangeError("intensity above 4095 in " + path.string());
    return vol;
}

void save_volume(const std::filesystem::path& path, const CtVolume& vol) {
    if (vol.voxels.size() != vol.dims.count())
        throw MvolSizeError("voxel count does not match dims");
    for (std::uint16_t v : vol.voxels)
        if (v > kIntensityMax) throw IntensityRangeError("intensity above 4095");
    write_mvol(path, vol.dims, vol.sx, vol.sy, vol.sz, "u16", vol.voxels);
}

BinaryMask load_mask(const std::filesystem::path& path) {
    auto in = open_mvol(path);
    MvolHeader h = parse_header(in, path);
    if (h.dtype != "u8")
        throw MvolTypeError("expected dtype u8 for a mask, got " + h.dtype + " in " +
                            path.string());
    BinaryMask m;
    m.dims = h.dims;
    m.bits = read_payload<std::uint8_t>(in, h.dims, path);
    for (std::uint8_t b : m.bits)
        if (b > 1) throw MaskValueError("mask value not in {0,1} in " + path.string());
    return m;
}

void save_mask(const std::filesystem::path& path, const BinaryMask& mask, double sx, double sy,
               double sz) {
    if (mask.bits.size() != mask.dims.count())
        throw MvolSizeError("bit count does not match dims");
    for (std::uint8_t b : mask.bits)
        if (b > 1) throw MaskValueError("mask value not in {0,1}");
    write_mvol(path, mask.dims, sx, sy, sz, "u8", mask.bits);
}

LabelVolume load_labels(const std::filesystem::path& path) {
    auto in = open_mvol(path);
    MvolHeader h = parse_header(in, path);
    if (h.dtype != "u32")
        throw MvolTypeError("expected dtype u32 for labels, got " + h.dtype + " in " +
                            path.string());
    LabelVolume lv;
    lv.dims = h.dims;
    lv.labels = read_payload<std::uint32_t>(in, h.dims, path);

    // Each slice must use exactly the label set {0..K-1}.
    const std::size_t plane = static_cast<std::size_t>(h.dims.nx) * h.dims.ny;
    for (int z = 0; z < h.dims.nz; ++z) {
        const std::uint32_t* p = lv.labels.data() + plane * z;
        std::uint32_t maxl = 0;
        for (std::size_t i = 0; i < plane; ++i) maxl = std::max(maxl, p[i]);
        if (maxl >= plane)
            throw LabelSetError("label out of range in slice " + std::to_string(z));
        std::vector<std::uint8_t> seen(maxl + 1, 0);
        for (std::size_t i = 0; i < plane; ++i) seen[p[i]] = 1;
        for (std::uint32_t l = 0; l <= maxl; ++l)
            if (!seen[l])
                throw LabelSetError("label gap (" + std::to_string(l) + ") in slice " +
                                    std::to_string(z));
    }
    return lv;
}

void save_labels(const std::filesystem::path& path, const LabelVolume& lv, double sx, double sy,
                 double sz) {
    if (lv.labels.size() != lv.dims.count())
        throw MvolSizeError("label count does not match dims");
    write_mvol(path, lv.dims, sx, sy, sz, "u32", lv.labels);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("manifest parse error: ") + e.what());
    }

    DatasetManifest m;
    m.base_dir = path.parent_path();
    try {
        m.phantom = j.value("phantom", false);
        for (const auto& e : j.at("entries")) {
            ManifestEntry me;
            me.volume = e.at("volume").get<std::string>();
            me.mask = e.at("mask").get<std::string>();
            me.fold = e.at("fold").get<int>();
            m.entries.push_back(std::move(me));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("manifest schema error: ") + e.what());
    }

    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& e = m.entries[i];
        if (e.fold < 0 || e.fold > 5)
            throw ManifestError("fold index out of [0,5] for " + e.volume);
        MvolHeader hv = read_mvol_header(m.volume_path(i));
        MvolHeader hm = read_mvol_header(m.mask_path(i));
        if (!(hv.dims == hm.dims))
            throw ManifestError("volume/mask dims differ for " + e.volume);
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    nlohmann::json j;
    j["phantom"] = m.phantom;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : m.entries)
        j["entries"].push_back({{"volume", e.volume}, {"mask", e.mask}, {"fold", e.fold}});
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

} // namespace seg
