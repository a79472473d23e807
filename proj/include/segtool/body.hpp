#pragma once

#include "segtool/volume.hpp"

namespace seg {

// Default body threshold: offset intensity 524 (about -500 HU), separating
// air and table padding from tissue.
constexpr int kDefaultBodyThreshold = 524;

// Abdominal body segmentation (table removal): keep voxels at or above the
// threshold, restrict to the largest 6-connected 3D component, then fill
// interior holes slice by slice (2D flood fill from the slice border).
// Throws EmptyBodyError if nothing reaches the threshold.
BinaryMask segment_body(const CtVolume& vol, int threshold = kDefaultBodyThreshold);

// Tight axis-aligned bounds of the set pixels in slice z.
// Throws EmptySliceError if the slice has no set pixel.
struct Bbox2D {
    int xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool operator==(const Bbox2D&) const = default;
};
Bbox2D bounding_box_2d(const BinaryMask& mask, int z);

} // namespace seg
