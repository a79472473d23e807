#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "segtool/volume.hpp"

namespace seg {

// Pancreas-likelihood lookup table over the full offset-intensity range:
// table[h] = f+(h) / (f+(h) + f-(h)) where f+/f- are Gaussian KDEs of the
// positive/negative intensity samples. Entries where both densities
// underflow to zero are 0 (treated as non-pancreas).
struct IntensityLut {
    std::array<double, kIntensityMax + 1> table{};

    double at(int h) const { return table[h]; }
};

// bandwidth <= 0 selects Silverman's rule per class:
//   sigma = 1.06 * s * N^(-1/5)
// with s the population standard deviation of that class's samples
// (sigma falls back to 1.0 when s is 0).
IntensityLut build_intensity_lut(const std::vector<int>& pos_samples,
                                 const std::vector<int>& neg_samples, double bandwidth = 0.0);

// LUT file: 4096 lines, one probability per line.
void save_lut(const std::filesystem::path& path, const IntensityLut& lut);
IntensityLut load_lut(const std::filesystem::path& path);

double silverman_bandwidth(const std::vector<int>& samples);

} // namespace seg
