#pragma once

// Reference implementations used only by the tests. Deliberately naive and
// independent of the library code paths they check: direct double sums,
// all-pairs scans, explicit sorting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Largest 6-connected 3D component of a predicate mask, brute force.
inline std::vector<std::uint8_t> largest_component_6(const std::vector<std::uint8_t>& in, int nx,
                                                     int ny, int nz) {
    const std::size_t n = in.size();
    std::vector<int> comp(n, -1);
    int ncomp = 0;
    std::vector<std::size_t> best_pixels;
    for (std::size_t s = 0; s < n; ++s) {
        if (!in[s] || comp[s] >= 0) continue;
        std::vector<std::size_t> pixels, stack{s};
        comp[s] = ncomp;
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            pixels.push_back(i);
            int x = static_cast<int>(i % nx);
            int y = static_cast<int>((i / nx) % ny);
            int z = static_cast<int>(i / (static_cast<std::size_t>(nx) * ny));
            const int dx[6] = {-1, 1, 0, 0, 0, 0};
            const int dy[6] = {0, 0, -1, 1, 0, 0};
            const int dz[6] = {0, 0, 0, 0, -1, 1};
            for (int k = 0; k < 6; ++k) {
                int xx = x + dx[k], yy = y + dy[k], zz = z + dz[k];
                if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz) continue;
                std::size_t j = (static_cast<std::size_t>(zz) * ny + yy) * nx + xx;
                if (in[j] && comp[j] < 0) {
                    comp[j] = ncomp;
                    stack.push_back(j);
                }
            }
        }
        if (pixels.size() > best_pixels.size()) best_pixels = pixels;
        ++ncomp;
    }
    std::vector<std::uint8_t> out(n, 0);
    for (std::size_t i : best_pixels) out[i] = 1;
    return out;
}

// Direct double-sum KDE ratio at one intensity.
inline double kde_ratio(int h, const std::vector<int>& pos, const std::vector<int>& neg,
                        double sigma_pos, double sigma_neg) {
    auto density = [](int at, const std::vector<int>& samples, double sigma) {
        double sum = 0;
        for (int s : samples) {
            double u = (at - s) / sigma;
            sum += std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
        }
        return sum / static_cast<double>(samples.size());
    };
    double fp = density(h, pos, sigma_pos);
    double fn = density(h, neg, sigma_neg);
    double denom = fp + fn;
    return denom == 0.0 ? 0.0 : fp / denom;
}

// Boundary recall by all-pairs Chebyshev distances.
inline std::vector<double> boundary_recall_allpairs(const std::vector<std::uint8_t>& sp_boundary,
                                                    const std::vector<std::uint8_t>& gt_boundary,
                                                    int nx, const std::vector<int>& distances) {
    std::vector<std::pair<int, int>> sps, gts;
    for (std::size_t i = 0; i < sp_boundary.size(); ++i)
        if (sp_boundary[i]) sps.push_back({static_cast<int>(i % nx), static_cast<int>(i / nx)});
    for (std::size_t i = 0; i < gt_boundary.size(); ++i)
        if (gt_boundary[i]) gts.push_back({static_cast<int>(i % nx), static_cast<int>(i / nx)});

    std::vector<double> recall;
    for (int d : distances) {
        std::size_t hit = 0;
        for (auto [gx, gy] : gts) {
            bool found = false;
            for (auto [sx, sy] : sps) {
                if (std::max(std::abs(gx - sx), std::abs(gy - sy)) <= d) {
                    found = true;
                    break;
                }
            }
            hit += found;
        }
        recall.push_back(gts.empty() ? 0.0 : static_cast<double>(hit) / gts.size());
    }
    return recall;
}

// The 12 channel statistics (mean, std, skew, excess kurtosis, percentiles
// 20,30,40,60,70,80,90, median) by explicit sort and interpolation.
inline std::array<double, 12> channel_stats_oracle(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : v) {
        m2 += std::pow(x - mean, 2);
        m3 += std::pow(x - mean, 3);
        m4 += std::pow(x - mean, 4);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    std::array<double, 12> out{};
    out[0] = mean;
    out[1] = std::sqrt(m2);
    out[2] = m2 == 0 ? 0 : m3 / std::pow(m2, 1.5);
    out[3] = m2 == 0 ? 0 : m4 / (m2 * m2) - 3.0;
    const double ps[7] = {20, 30, 40, 60, 70, 80, 90};
    for (int i = 0; i < 7; ++i) {
        double rank = ps[i] / 100.0 * (n - 1);
        std::size_t lo = static_cast<std::size_t>(std::floor(rank));
        std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
        out[4 + i] = v[lo] + (rank - lo) * (v[hi] - v[lo]);
    }
    std::size_t half = v.size() / 2;
    out[11] = v.size() % 2 == 1 ? v[half] : (v[half - 1] + v[half]) / 2.0;
    return out;
}

struct OverlapCounts {
    std::size_t a = 0, b = 0, inter = 0;
};

inline OverlapCounts count_overlap(const std::vector<std::uint8_t>& pred,
                                   const std::vector<std::uint8_t>& gt) {
    OverlapCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i]) ++c.a;
        if (gt[i]) ++c.b;
        if (pred[i] && gt[i]) ++c.inter;
    }
    return c;
}

} // namespace oracle
