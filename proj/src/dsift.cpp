#include "segtool/dsift.hpp"

#include <cmath>

namespace seg {

std::array<double, kDsiftDims> dsift_descriptor(PlaneView<std::uint16_t> slice, int cx, int cy,
                                                const DsiftParams& params) {
    const int b = params.bin_size;
    if (b < 1) throw WindowBoundsError("bin_size must be positive");
    if (cx - b < 1 || cx + b - 1 > slice.nx - 2 || cy - b < 1 || cy + b - 1 > slice.ny - 2)
        throw WindowBoundsError("dSIFT support window out of bounds at (" + std::to_string(cx) +
                                "," + std::to_string(cy) + ")");

    std::array<double, kDsiftDims> hist{};
    constexpr double kTwoPi = 6.283185307179586476925286766559;

    for (int y = cy - b; y <= cy + b - 1; ++y) {
        for (int x = cx - b; x <= cx + b - 1; ++x) {
            double gx = (static_cast<double>(slice.at(x + 1, y)) - slice.at(x - 1, y)) / 2.0;
            double gy = (static_cast<double>(slice.at(x, y + 1)) - slice.at(x, y - 1)) / 2.0;
            double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx);
            if (theta < 0) theta += kTwoPi;
            double u = theta * 8.0 / kTwoPi;
            int o0 = static_cast<int>(u) % 8;
            int o1 = (o0 + 1) % 8;
            double w1 = u - std::floor(u);
            int bx = x < cx ? 0 : 1;
            int by = y < cy ? 0 : 1;
            int cell = by * 2 + bx;
            hist[cell * 8 + o0] += mag * (1.0 - w1);
            hist[cell * 8 + o1] += mag * w1;
        }
    }

    double norm = 0;
    for (double v : hist) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) return hist;
    for (double& v : hist) v = std::min(v / norm, 0.2);
    norm = 0;
    for (double v : hist) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : hist) v /= norm;
    return hist;
}

} // namespace seg
