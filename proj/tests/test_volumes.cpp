#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "segtool/body.hpp"
#include "segtool/rng.hpp"
#include "segtool/volume.hpp"

using namespace seg;
namespace fs = std::filesystem;

namespace {

fs::path tmpdir() {
    auto p = fs::temp_directory_path() / "segtool_test_volumes";
    fs::create_directories(p);
    return p;
}

CtVolume make_volume(int nx, int ny, int nz, std::uint64_t seed) {
    CtVolume v;
    v.dims = {nx, ny, nz};
    v.sx = 0.7;
    v.sy = 0.7;
    v.sz = 2.5;
    v.voxels.resize(v.dims.count());
    Rng rng(seed);
    for (auto& x : v.voxels) x = static_cast<std::uint16_t>(rng.next_below(4096));
    return v;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("volume round trip is identity") {
    auto dir = tmpdir();
    CtVolume v = make_volume(4, 4, 2, 7);
    save_volume(dir / "v.mvol", v);
    CtVolume w = load_volume(dir / "v.mvol");
    CHECK(w.dims == v.dims);
    CHECK(w.voxels == v.voxels);
    CHECK(w.sx == v.sx);
    CHECK(w.sz == v.sz);

    // Saving the loaded volume reproduces the file byte for byte.
    save_volume(dir / "v2.mvol", w);
    CHECK(read_bytes(dir / "v.mvol") == read_bytes(dir / "v2.mvol"));
}

TEST_CASE("mask and label round trips") {
    auto dir = tmpdir();
    BinaryMask m;
    m.dims = {5, 3, 2};
    m.bits.assign(m.dims.count(), 0);
    m.bits[3] = 1;
    m.bits[17] = 1;
    save_mask(dir / "m.mvol", m);
    BinaryMask m2 = load_mask(dir / "m.mvol");
    CHECK(m2.bits == m.bits);

    LabelVolume lv;
    lv.dims = {4, 2, 2};
    lv.labels = {0, 0, 1, 1, 0, 0, 1, 1, 1, 1, 0, 0, 2, 2, 0, 1};
    save_labels(dir / "l.mvol", lv);
    LabelVolume lv2 = load_labels(dir / "l.mvol");
    CHECK(lv2.labels == lv.labels);
}

TEST_CASE("payload size mismatch is a named error") {
    auto dir = tmpdir();
    std::ofstream out(dir / "short.mvol", std::ios::binary);
    out << "MVOL 1\ndims 2 2 2\nspacing 1 1 1\ndtype u16\ndata raw-le\n";
    std::uint16_t payload[7] = {1, 2, 3, 4, 5, 6, 7};
    out.write(reinterpret_cast<const char*>(payload), sizeof(payload));
    out.close();
    CHECK_THROWS_AS(load_volume(dir / "short.mvol"), MvolSizeError);

    std::ofstream out2(dir / "long.mvol", std::ios::binary);
    out2 << "MVOL 1\ndims 2 2 1\nspacing 1 1 1\ndtype u16\ndata raw-le\n";
    std::uint16_t payload2[5] = {1, 2, 3, 4, 5};
    out2.write(reinterpret_cast<const char*>(payload2), sizeof(payload2));
    out2.close();
    CHECK_THROWS_AS(load_volume(dir / "long.mvol"), MvolSizeError);
}

TEST_CASE("dtype mismatch is a named error") {
    auto dir = tmpdir();
    BinaryMask m;
    m.dims = {2, 2, 2};
    m.bits.assign(8, 1);
    save_mask(dir / "mask.mvol", m);
    CHECK_THROWS_AS(load_volume(dir / "mask.mvol"), MvolTypeError);

    CtVolume v = make_volume(2, 2, 2, 1);
    save_volume(dir / "vol.mvol", v);
    CHECK_THROWS_AS(load_mask(dir / "vol.mvol"), MvolTypeError);
    CHECK_THROWS_AS(load_labels(dir / "vol.mvol"), MvolTypeError);
}

TEST_CASE("malformed headers are named errors") {
    auto dir = tmpdir();
    auto write = [&](const char* name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        out << text;
        return dir / name;
    };
    CHECK_THROWS_AS(load_volume(write("bad1.mvol", "MVOL 2\n")), MvolHeaderError);
    CHECK_THROWS_AS(load_volume(write("bad2.mvol", "MVOL 1\ndims 0 2 2\n")), MvolHeaderError);
    CHECK_THROWS_AS(load_volume(write("bad3.mvol", "MVOL 1\ndims 2 2 2\nspacing 1 -1 1\n")),
                    MvolHeaderError);
    CHECK_THROWS_AS(
        load_volume(write("bad4.mvol", "MVOL 1\ndims 2 2 2\nspacing 1 1 1\ndtype f32\n")),
        MvolHeaderError);
    CHECK_THROWS_AS(load_volume(write(
                        "bad5.mvol", "MVOL 1\ndims 2 2 2\nspacing 1 1 1\ndtype u16\ndata raw\n")),
                    MvolHeaderError);
}

TEST_CASE("intensity above 4095 is rejected") {
    auto dir = tmpdir();
    std::ofstream out(dir / "hot.mvol", std::ios::binary);
    out << "MVOL 1\ndims 2 1 1\nspacing 1 1 1\ndtype u16\ndata raw-le\n";
    std::uint16_t payload[2] = {100, 5000};
    out.write(reinterpret_cast<const char*>(payload), sizeof(payload));
    out.close();
    CHECK_THROWS_AS(load_volume(dir / "hot.mvol"), IntensityRangeError);
}

TEST_CASE("label volumes must use {0..K-1} per slice") {
    auto dir = tmpdir();
    LabelVolume lv;
    lv.dims = {2, 2, 1};
    lv.labels = {0, 0, 2, 2}; // label 1 missing
    save_labels(dir / "gap.mvol", lv);
    CHECK_THROWS_AS(load_labels(dir / "gap.mvol"), LabelSetError);
}

TEST_CASE("manifest round trip and validation") {
    auto dir = tmpdir() / "manifest";
    fs::create_directories(dir);
    CtVolume v = make_volume(6, 5, 4, 3);
    save_volume(dir / "case0.mvol", v);
    BinaryMask m;
    m.dims = v.dims;
    m.bits.assign(v.dims.count(), 0);
    m.bits[0] = 1;
    save_mask(dir / "case0_mask.mvol", m);

    DatasetManifest man;
    man.phantom = true;
    man.entries.push_back({"case0.mvol", "case0_mask.mvol", 2});
    save_manifest(dir / "manifest.json", man);

    DatasetManifest back = load_manifest(dir / "manifest.json");
    CHECK(back.phantom);
    REQUIRE(back.entries.size() == 1);
    CHECK(back.entries[0].fold == 2);
    CHECK(back.volume_path(0) == dir / "case0.mvol");

    man.entries[0].fold = 6;
    save_manifest(dir / "badfold.json", man);
    CHECK_THROWS_AS(load_manifest(dir / "badfold.json"), ManifestError);

    man.entries[0] = {"missing.mvol", "case0_mask.mvol", 0};
    save_manifest(dir / "missing.json", man);
    CHECK_THROWS_AS(load_manifest(dir / "missing.json"), DataError);
}

// ---- segment_body ----------------------------------------------------------

namespace {

CtVolume ellipsoid_volume(int nx, int ny, int nz, double rx, double ry, double rz, int lo,
                          int hi) {
    CtVolume v;
    v.dims = {nx, ny, nz};
    v.voxels.assign(v.dims.count(), static_cast<std::uint16_t>(lo));
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                double dx = (x - nx / 2.0) / rx, dy = (y - ny / 2.0) / ry,
                       dz = (z - nz / 2.0) / rz;
                if (dx * dx + dy * dy + dz * dz <= 1.0)
                    v.at(x, y, z) = static_cast<std::uint16_t>(hi);
            }
    return v;
}

} // namespace

TEST_CASE("segment_body keeps the bright ellipsoid") {
    CtVolume v = ellipsoid_volume(30, 28, 12, 10, 9, 4, 30, 1000);
    BinaryMask body = segment_body(v);

    std::vector<std::uint8_t> th(v.dims.count(), 0);
    for (std::size_t i = 0; i < th.size(); ++i) th[i] = v.voxels[i] >= kDefaultBodyThreshold;
    auto expected = oracle::largest_component_6(th, v.dims.nx, v.dims.ny, v.dims.nz);
    CHECK(body.bits == expected);
}

TEST_CASE("segment_body rejects an all-dark volume") {
    CtVolume v;
    v.dims = {4, 4, 4};
    v.voxels.assign(64, 0);
    CHECK_THROWS_AS(segment_body(v), EmptyBodyError);
}

TEST_CASE("segment_body keeps only the larger of two blobs") {
    CtVolume v;
    v.dims = {40, 10, 3};
    v.voxels.assign(v.dims.count(), 0);
    // Big blob: x in [2,15]; small blob: x in [25,28]; disjoint in x.
    for (int z = 0; z < 3; ++z)
        for (int y = 2; y < 8; ++y) {
            for (int x = 2; x <= 15; ++x) v.at(x, y, z) = 1000;
            for (int x = 25; x <= 28; ++x) v.at(x, y, z) = 1000;
        }
    BinaryMask body = segment_body(v);
    std::vector<std::uint8_t> th(v.dims.count(), 0);
    for (std::size_t i = 0; i < th.size(); ++i) th[i] = v.voxels[i] >= kDefaultBodyThreshold;
    auto expected = oracle::largest_component_6(th, 40, 10, 3);
    CHECK(body.bits == expected);
    CHECK(body.at(26, 4, 1) == 0);
    CHECK(body.at(10, 4, 1) == 1);
}

TEST_CASE("segment_body fills interior holes per slice") {
    CtVolume v;
    v.dims = {20, 20, 1};
    v.voxels.assign(v.dims.count(), 0);
    for (int y = 3; y <= 16; ++y)
        for (int x = 3; x <= 16; ++x) v.at(x, y, 0) = 1000;
    for (int y = 8; y <= 11; ++y)
        for (int x = 8; x <= 11; ++x) v.at(x, y, 0) = 10; // air pocket
    BinaryMask body = segment_body(v);
    CHECK(body.at(9, 9, 0) == 1);
    CHECK(body.at(0, 0, 0) == 0);
}

TEST_CASE("segment_body output is 6-connected and contains the threshold set of its component") {
    CtVolume v = ellipsoid_volume(24, 22, 10, 8, 7, 3, 20, 900);
    BinaryMask body = segment_body(v);

    // Connectivity: flood from the first set voxel reaches all set voxels.
    std::vector<std::uint8_t> seen(body.bits.size(), 0);
    std::size_t first = 0;
    while (!body.bits[first]) ++first;
    std::vector<std::size_t> stack{first};
    seen[first] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
        std::size_t i = stack.back();
        stack.pop_back();
        ++reached;
        int x = static_cast<int>(i % 24), y = static_cast<int>((i / 24) % 22),
            z = static_cast<int>(i / (24 * 22));
        const int dx[6] = {-1, 1, 0, 0, 0, 0}, dy[6] = {0, 0, -1, 1, 0, 0},
                  dz[6] = {0, 0, 0, 0, -1, 1};
        for (int k = 0; k < 6; ++k) {
            int xx = x + dx[k], yy = y + dy[k], zz = z + dz[k];
            if (xx < 0 || xx >= 24 || yy < 0 || yy >= 22 || zz < 0 || zz >= 10) continue;
            std::size_t j = (static_cast<std::size_t>(zz) * 22 + yy) * 24 + xx;
            if (body.bits[j] && !seen[j]) {
                seen[j] = 1;
                stack.push_back(j);
            }
        }
    }
    CHECK(reached == body.count_set());

    // Hole-free input: the mask equals the thresholded set exactly.
    std::vector<std::uint8_t> th(v.dims.count(), 0);
    for (std::size_t i = 0; i < th.size(); ++i) th[i] = v.voxels[i] >= kDefaultBodyThreshold;
    CHECK(body.bits == th);
}

// ---- bounding_box_2d -------------------------------------------------------

TEST_CASE("bounding box basics") {
    BinaryMask m;
    m.dims = {10, 8, 2};
    m.bits.assign(m.dims.count(), 0);
    m.at(3, 5, 0) = 1;
    CHECK(bounding_box_2d(m, 0) == Bbox2D{3, 3, 5, 5});

    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 10; ++x) m.at(x, y, 1) = 1;
    CHECK(bounding_box_2d(m, 1) == Bbox2D{0, 9, 0, 7});
}

TEST_CASE("bounding box of an L-shaped region") {
    BinaryMask m;
    m.dims = {10, 8, 1};
    m.bits.assign(m.dims.count(), 0);
    // L occupying rows 2..4, cols 1..6.
    for (int x = 1; x <= 6; ++x) m.at(x, 4, 0) = 1;
    for (int y = 2; y <= 4; ++y) m.at(1, y, 0) = 1;

    // Scan oracle.
    int xmin = 10, xmax = -1, ymin = 8, ymax = -1;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 10; ++x)
            if (m.at(x, y, 0)) {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
    Bbox2D bb = bounding_box_2d(m, 0);
    CHECK(bb == Bbox2D{xmin, xmax, ymin, ymax});
    CHECK(bb == Bbox2D{1, 6, 2, 4});
}

TEST_CASE("bounding box of an empty slice is an error") {
    BinaryMask m;
    m.dims = {4, 4, 1};
    m.bits.assign(16, 0);
    CHECK_THROWS_AS(bounding_box_2d(m, 0), EmptySliceError);
}

TEST_CASE("bounding box touches set pixels on every side") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        BinaryMask m;
        m.dims = {16, 12, 1};
        m.bits.assign(m.dims.count(), 0);
        int npix = 1 + static_cast<int>(rng.next_below(20));
        for (int i = 0; i < npix; ++i)
            m.bits[rng.next_below(m.dims.count())] = 1;
        Bbox2D bb = bounding_box_2d(m, 0);
        bool touch_xmin = false, touch_xmax = false, touch_ymin = false, touch_ymax = false;
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 16; ++x)
                if (m.at(x, y, 0)) {
                    CHECK(x >= bb.xmin);
                    CHECK(x <= bb.xmax);
                    CHECK(y >= bb.ymin);
                    CHECK(y <= bb.ymax);
                    touch_xmin |= x == bb.xmin;
                    touch_xmax |= x == bb.xmax;
                    touch_ymin |= y == bb.ymin;
                    touch_ymax |= y == bb.ymax;
                }
        CHECK(touch_xmin);
        CHECK(touch_xmax);
        CHECK(touch_ymin);
        CHECK(touch_ymax);
    }
}
