#pragma once

#include <array>

#include "segtool/volume.hpp"

namespace seg {

constexpr int kDsiftDims = 32; // 2 x 2 spatial bins x 8 orientation bins

struct DsiftParams {
    int bin_size = 6; // pixels per spatial bin
};

// Dense-SIFT descriptor at one grid center: gradient magnitudes binned into
// 8 orientations (linear interpolation between adjacent orientation bins)
// over a flat 2x2 grid of bin_size x bin_size cells; L2-normalized, clamped
// at 0.2, re-normalized. A zero-gradient window yields the all-zero vector.
//
// The support covers x in [cx-bin_size, cx+bin_size-1] (same in y) and
// central-difference gradients need one extra pixel on each side; the whole
// extent must lie inside the slice.
std::array<double, kDsiftDims> dsift_descriptor(PlaneView<std::uint16_t> slice, int cx, int cy,
                                                const DsiftParams& params);

} // namespace seg
