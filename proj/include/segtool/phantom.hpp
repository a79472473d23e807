#pragma once

#include <filesystem>

#include "segtool/volume.hpp"

namespace seg {

// Synthetic abdominal phantom: an ellipsoidal body on a dark background,
// a thin bright table slab (so body segmentation has something to remove),
// a deformed tubular target structure, and a few distractor blobs with
// overlapping intensities. All intensities are offset CT numbers.
struct PhantomSpec {
    Dims dims{128, 128, 40};
    double sx = 1.0, sy = 1.0, sz = 2.0;

    int background_level = 30;
    int body_level = 1000;
    int body_band = 40;       // per-phantom body level jitter
    int pancreas_level = 1080;
    int pancreas_band = 40;   // per-phantom target level jitter
    int distractor_min = 2;
    int distractor_max = 4;
    double noise_std = 10.0;
    bool table = true;

    // Target volume as a fraction of body voxels.
    double target_frac_min = 0.001;
    double target_frac_max = 0.01;

    std::uint64_t seed = 1;
};

struct Phantom {
    CtVolume volume;
    BinaryMask mask;
};

// Fully determined by spec.seed. The mask is guaranteed non-empty, inside
// the body, and within the configured volume-fraction range.
Phantom generate_phantom(const PhantomSpec& spec);

// Writes `count` volume/mask pairs plus a manifest with round-robin fold
// assignment (case i -> fold i mod 6). Case i is generated with the
// sub-seed derive_seed(spec.seed, "phantom-case-<i>").
DatasetManifest generate_phantoms(const PhantomSpec& spec, int count,
                                  const std::filesystem::path& out_dir);

} // namespace seg
