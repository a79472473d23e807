#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "segtool/errors.hpp"

namespace seg {

// Intensities are stored as offset CT numbers: HU + 1024, so the full
// 12-bit range indexes [0, 4095] directly.
constexpr int kIntensityMax = 4095;
constexpr int kHuOffset = 1024;

inline int offset_to_hu(int v) { return v - kHuOffset; }
inline int hu_to_offset(int hu) { return hu + kHuOffset; }

struct Dims {
    int nx = 0, ny = 0, nz = 0;
    bool operator==(const Dims&) const = default;
    std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
};

// Non-owning view of one axial slice of a voxel array (x-fastest layout).
template <typename T>
struct PlaneView {
    const T* px = nullptr;
    int nx = 0, ny = 0;
    T at(int x, int y) const { return px[static_cast<std::size_t>(y) * nx + x]; }
    std::size_t count() const { return static_cast<std::size_t>(nx) * ny; }
};

// 12-bit CT volume, x-fastest linear order, physical spacing in mm.
struct CtVolume {
    Dims dims;
    double sx = 1.0, sy = 1.0, sz = 1.0;
    std::vector<std::uint16_t> voxels;

    std::uint16_t at(int x, int y, int z) const {
        return voxels[(static_cast<std::size_t>(z) * dims.ny + y) * dims.nx + x];
    }
    std::uint16_t& at(int x, int y, int z) {
        return voxels[(static_cast<std::size_t>(z) * dims.ny + y) * dims.nx + x];
    }
    PlaneView<std::uint16_t> slice(int z) const {
        return {voxels.data() + static_cast<std::size_t>(z) * dims.nx * dims.ny, dims.nx, dims.ny};
    }
};

// Binary voxel mask with the same ordering as CtVolume.
struct BinaryMask {
    Dims dims;
    std::vector<std::uint8_t> bits;

    std::uint8_t at(int x, int y, int z) const {
        return bits[(static_cast<std::size_t>(z) * dims.ny + y) * dims.nx + x];
    }
    std::uint8_t& at(int x, int y, int z) {
        return bits[(static_cast<std::size_t>(z) * dims.ny + y) * dims.nx + x];
    }
    PlaneView<std::uint8_t> slice(int z) const {
        return {bits.data() + static_cast<std::size_t>(z) * dims.nx * dims.ny, dims.nx, dims.ny};
    }
    std::size_t count_set() const;
};

// Per-slice superpixel label volume; labels are meaningful within a z-slice
// only, where they form {0..K-1} for some K >= 1.
struct LabelVolume {
    Dims dims;
    std::vector<std::uint32_t> labels;

    std::uint32_t at(int x, int y, int z) const {
        return labels[(static_cast<std::size_t>(z) * dims.ny + y) * dims.nx + x];
    }
    PlaneView<std::uint32_t> slice(int z) const {
        return {labels.data() + static_cast<std::size_t>(z) * dims.nx * dims.ny, dims.nx, dims.ny};
    }
};

// ---- MVOL file format ----------------------------------------------------
// Text header of five newline-terminated lines, then the raw payload:
//   MVOL 1
//   dims <nx> <ny> <nz>
//   spacing <sx> <sy> <sz>
//   dtype <u8|u16|u32>
//   data raw-le
// Payload is little-endian, x-fastest. Volumes are u16 (values <= 4095),
// masks u8 (values in {0,1}), label volumes u32. Byte-exact round trip.

CtVolume load_volume(const std::filesystem::path& path);
void save_volume(const std::filesystem::path& path, const CtVolume& vol);

BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const BinaryMask& mask,
               double sx = 1.0, double sy = 1.0, double sz = 1.0);

LabelVolume load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelVolume& lv,
                 double sx = 1.0, double sy = 1.0, double sz = 1.0);

// Reads only the header; used for cheap manifest validation.
struct MvolHeader {
    Dims dims;
    double sx, sy, sz;
    std::string dtype;
};
MvolHeader read_mvol_header(const std::filesystem::path& path);

// ---- Dataset manifest ------------------------------------------------------
// JSON document listing volume/mask pairs and their cross-validation fold.
// Paths are stored relative to the manifest file's directory.

struct ManifestEntry {
    std::string volume;
    std::string mask;
    int fold = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    bool phantom = false;
    std::filesystem::path base_dir; // directory the manifest was loaded from

    std::filesystem::path volume_path(std::size_t i) const { return base_dir / entries[i].volume; }
    std::filesystem::path mask_path(std::size_t i) const { return base_dir / entries[i].mask; }
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

} // namespace seg
