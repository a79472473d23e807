#include "segtool/lut.hpp"

#include <cmath>
#include <fstream>

#include "segtool/csv.hpp"

namespace seg {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

void check_samples(const std::vector<int>& samples, const char* name) {
    if (samples.empty()) throw EmptySamplesError(std::string(name) + " sample list is empty");
    for (int s : samples)
        if (s < 0 || s > kIntensityMax)
            throw SampleRangeError(std::string(name) + " sample out of [0,4095]");
}

// Density over h = 0..4095 from integer samples. Samples are histogrammed
// first; the kernel depends only on h - v, so one kernel table serves every
// entry. Equivalent to the direct per-sample sum up to summation order.
std::vector<double> kde_density(const std::vector<int>& samples, double sigma) {
    std::array<std::size_t, kIntensityMax + 1> counts{};
    for (int s : samples) ++counts[s];

    std::vector<double> kernel(kIntensityMax + 1);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const double scale = kInvSqrt2Pi / sigma;
    for (int d = 0; d <= kIntensityMax; ++d)
        kernel[d] = scale * std::exp(-static_cast<double>(d) * d * inv2s2);

    std::vector<double> density(kIntensityMax + 1, 0.0);
    for (int v = 0; v <= kIntensityMax; ++v) {
        if (counts[v] == 0) continue;
        double w = static_cast<double>(counts[v]);
        for (int h = 0; h <= kIntensityMax; ++h)
            density[h] += w * kernel[std::abs(h - v)];
    }
    const double n = static_cast<double>(samples.size());
    for (double& d : density) d /= n;
    return density;
}

} // namespace

double silverman_bandwidth(const std::vector<int>& samples) {
    const double n = static_cast<double>(samples.size());
    double mean = 0;
    for (int s : samples) mean += s;
    mean /= n;
    double ss = 0;
    for (int s : samples) ss += (s - mean) * (s - mean);
    double sd = std::sqrt(ss / n);
    if (sd == 0.0) return 1.0;
    return 1.06 * sd * std::pow(n, -0.2);
}

IntensityLut build_intensity_lut(const std::vector<int>& pos_samples,
                                 const std::vector<int>& neg_samples, double bandwidth) {
    check_samples(pos_samples, "positive");
    check_samples(neg_samples, "negative");

    double sigma_pos = bandwidth > 0 ? bandwidth : silverman_bandwidth(pos_samples);
    double sigma_neg = bandwidth > 0 ? bandwidth : silverman_bandwidth(neg_samples);

    std::vector<double> fpos = kde_density(pos_samples, sigma_pos);
    std::vector<double> fneg = kde_density(neg_samples, sigma_neg);

    IntensityLut lut;
    for (int h = 0; h <= kIntensityMax; ++h) {
        double denom = fpos[h] + fneg[h];
        lut.table[h] = denom == 0.0 ? 0.0 : fpos[h] / denom;
    }
    return lut;
}

void save_lut(const std::filesystem::path& path, const IntensityLut& lut) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    for (double v : lut.table) out << csv_double(v) << "\n";
}

IntensityLut load_lut(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    IntensityLut lut;
    std::string line;
    for (int h = 0; h <= kIntensityMax; ++h) {
        if (!std::getline(in, line)) throw DataError("LUT file truncated: " + path.string());
        try {
            lut.table[h] = std::stod(line);
        } catch (const std::exception&) {
            throw DataError("bad LUT entry at line " + std::to_string(h + 1));
        }
        if (lut.table[h] < 0.0 || lut.table[h] > 1.0)
            throw DataError("LUT entry outside [0,1] at line " + std::to_string(h + 1));
    }
    if (std::getline(in, line) && !line.empty())
        throw DataError("LUT file has trailing data: " + path.string());
    return lut;
}

} // namespace seg
