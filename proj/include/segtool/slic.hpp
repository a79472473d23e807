#pragma once

#include <cstdint>
#include <vector>

#include "segtool/volume.hpp"

namespace seg {

struct SlicParams {
    int region_size = 10;          // grid step S, pixels
    double compactness = 10.0;     // m
    int iterations = 10;
    double intensity_scale = 16.0; // maps [0,4095] to [0,256) for the color term
};

// One over-segmented slice: per-pixel label in {0..K-1}, each label's pixel
// set 4-connected and non-empty.
struct SuperpixelSlice {
    int nx = 0, ny = 0;
    std::uint32_t k = 0;
    std::vector<std::uint32_t> labels;

    std::uint32_t at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * nx + x];
    }
};

struct BoundaryRecallCurve {
    std::vector<int> distances;
    std::vector<double> recall;
};

// SLIC over-segmentation of a single slice. Grayscale variant: the color
// distance is |I_i - I_k| / intensity_scale; the combined distance is
// D^2 = d_c^2 + (d_s/S)^2 m^2. Throws SliceTooSmallError when the slice
// cannot hold one region.
SuperpixelSlice slic_slice(PlaneView<std::uint16_t> slice, const SlicParams& params);

// Applies slic_slice independently per axial slice; label spaces per slice.
LabelVolume slic_volume(const CtVolume& vol, const SlicParams& params, int threads = 1);

// Pixels having at least one 4-neighbor with a different label.
std::vector<std::uint8_t> label_boundaries(const SuperpixelSlice& sp);

// Boundary pixels of a binary slice: set pixels with an in-image 4-neighbor
// that is not set.
std::vector<std::uint8_t> mask_boundary(PlaneView<std::uint8_t> gt);

// Fraction of ground-truth boundary pixels within Chebyshev distance d of
// some superpixel boundary pixel, for each distance in `distances`.
// Throws EmptyBoundaryError when the ground truth has no boundary pixel.
BoundaryRecallCurve boundary_recall(const SuperpixelSlice& sp, PlaneView<std::uint8_t> gt,
                                    const std::vector<int>& distances = {1, 2, 3, 4, 5, 6});

// Pooled variant over a label volume and a 3D ground-truth mask: recall
// counts are summed over all slices that have a ground-truth boundary.
BoundaryRecallCurve boundary_recall_volume(const LabelVolume& sp, const BinaryMask& gt,
                                           const std::vector<int>& distances = {1, 2, 3, 4, 5, 6});

} // namespace seg
