#include "segtool/slic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "segtool/parallel.hpp"

namespace seg {

namespace {

struct Cluster {
    double x, y, intensity;
};

// Gradient magnitude (squared) by central differences with replicated borders.
double grad_sq(PlaneView<std::uint16_t> im, int x, int y) {
    auto I = [&](int xx, int yy) {
        xx = std::clamp(xx, 0, im.nx - 1);
        yy = std::clamp(yy, 0, im.ny - 1);
        return static_cast<double>(im.at(xx, yy));
    };
    double gx = I(x + 1, y) - I(x - 1, y);
    double gy = I(x, y + 1) - I(x, y - 1);
    return gx * gx + gy * gy;
}

std::vector<Cluster> init_clusters(PlaneView<std::uint16_t> im, int S) {
    std::vector<Cluster> cs;
    for (int cy = S / 2; cy < im.ny; cy += S) {
        for (int cx = S / 2; cx < im.nx; cx += S) {
            // Shift to the lowest-gradient position in the 3x3 neighborhood
            // (strictly lower only, scanned row-major, so ties keep the seed).
            int bx = cx, by = cy;
            double best = grad_sq(im, cx, cy);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    int x = cx + dx, y = cy + dy;
                    if (x < 0 || x >= im.nx || y < 0 || y >= im.ny) continue;
                    double g = grad_sq(im, x, y);
                    if (g < best) {
                        best = g;
                        bx = x;
                        by = y;
                    }
                }
            }
            cs.push_back({static_cast<double>(bx), static_cast<double>(by),
                          static_cast<double>(im.at(bx, by))});
        }
    }
    return cs;
}

// Connected components of equal-label pixels, 4-connectivity.
struct Fragment {
    std::uint32_t label;
    std::vector<int> pixels; // linear indices, in discovery (scan) order
};

std::vector<Fragment> label_fragments(const std::vector<std::uint32_t>& labels, int nx, int ny) {
    std::vector<Fragment> frags;
    std::vector<std::int32_t> frag_of(labels.size(), -1);
    std::vector<int> stack;
    for (int start = 0; start < nx * ny; ++start) {
        if (frag_of[start] >= 0) continue;
        std::int32_t id = static_cast<std::int32_t>(frags.size());
        frags.push_back({labels[start], {}});
        frag_of[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            frags[id].pixels.push_back(i);
            int x = i % nx, y = i / nx;
            auto visit = [&](int j) {
                if (frag_of[j] < 0 && labels[j] == frags[id].label) {
                    frag_of[j] = id;
                    stack.push_back(j);
                }
            };
            if (x > 0) visit(i - 1);
            if (x < nx - 1) visit(i + 1);
            if (y > 0) visit(i - nx);
            if (y < ny - 1) visit(i + nx);
        }
    }
    return frags;
}

// Merge every fragment that is not the largest fragment of its label into
// the neighboring label it shares the most boundary with (ties: lowest
// label). Repeats until each label is one connected component.
void enforce_connectivity(std::vector<std::uint32_t>& labels, int nx, int ny,
                          std::uint32_t num_labels) {
    for (;;) {
        auto frags = label_fragments(labels, nx, ny);

        // Largest fragment per label; scan order breaks size ties.
        std::vector<std::int32_t> keeper(num_labels, -1);
        for (std::size_t f = 0; f < frags.size(); ++f) {
            std::uint32_t l = frags[f].label;
            if (keeper[l] < 0 || frags[f].pixels.size() > frags[keeper[l]].pixels.size())
                keeper[l] = static_cast<std::int32_t>(f);
        }

        bool merged_any = false;
        for (std::size_t f = 0; f < frags.size(); ++f) {
            if (keeper[frags[f].label] == static_cast<std::int32_t>(f)) continue;
            // Count shared edges with each neighboring label, reading the
            // current (possibly already updated) label array.
            std::vector<std::size_t> adj(num_labels, 0);
            std::uint32_t own = frags[f].label;
            for (int i : frags[f].pixels) {
                int x = i % nx, y = i / nx;
                auto count = [&](int j) {
                    if (labels[j] != own) ++adj[labels[j]];
                };
                if (x > 0) count(i - 1);
                if (x < nx - 1) count(i + 1);
                if (y > 0) count(i - nx);
                if (y < ny - 1) count(i + nx);
            }
            std::uint32_t best = num_labels;
            std::size_t best_count = 0;
            for (std::uint32_t l = 0; l < num_labels; ++l) {
                if (adj[l] > best_count) {
                    best_count = adj[l];
                    best = l;
                }
            }
            if (best == num_labels) continue; // absorbed by an earlier merge this pass
            for (int i : frags[f].pixels) labels[i] = best;
            merged_any = true;
        }
        if (!merged_any) break;
    }
}

// Compact labels to {0..K-1} in order of first appearance (row-major scan).
std::uint32_t compact_labels(std::vector<std::uint32_t>& labels, std::uint32_t num_labels) {
    constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> remap(num_labels, kUnset);
    std::uint32_t next = 0;
    for (auto& l : labels) {
        if (remap[l] == kUnset) remap[l] = next++;
        l = remap[l];
    }
    return next;
}

} // namespace

SuperpixelSlice slic_slice(PlaneView<std::uint16_t> im, const SlicParams& params) {
    const int S = params.region_size;
    if (S < 2) throw SliceTooSmallError("region_size must be at least 2");
    if (im.nx < S || im.ny < S)
        throw SliceTooSmallError("slice " + std::to_string(im.nx) + "x" + std::to_string(im.ny) +
                                 " smaller than one region of size " + std::to_string(S));
    if (params.compactness <= 0 || params.iterations < 1 || params.intensity_scale <= 0)
        throw SliceTooSmallError("invalid SLIC parameters");

    std::vector<Cluster> clusters = init_clusters(im, S);
    const std::size_t n = im.count();
    const double mw = params.compactness / static_cast<double>(S);

    std::vector<std::uint32_t> labels(n, 0);
    std::vector<double> dist(n);

    for (int it = 0; it < params.iterations; ++it) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());

        // Assignment: each cluster competes for pixels in its 2S x 2S window.
        // Equal distances go to the later cluster.
        for (std::size_t k = 0; k < clusters.size(); ++k) {
            const Cluster& c = clusters[k];
            int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - S);
            int x1 = std::min(im.nx - 1, static_cast<int>(std::ceil(c.x)) + S);
            int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - S);
            int y1 = std::min(im.ny - 1, static_cast<int>(std::ceil(c.y)) + S);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    double dc = (static_cast<double>(im.at(x, y)) - c.intensity) /
                                params.intensity_scale;
                    double dx = x - c.x, dy = y - c.y;
                    double ds2 = dx * dx + dy * dy;
                    double d2 = dc * dc + ds2 * mw * mw;
                    std::size_t i = static_cast<std::size_t>(y) * im.nx + x;
                    if (d2 <= dist[i]) {
                        dist[i] = d2;
                        labels[i] = static_cast<std::uint32_t>(k);
                    }
                }
            }
        }

        // Pixels outside every window (possible once centers drift): full scan.
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isinf(dist[i])) continue;
            int x = static_cast<int>(i % im.nx), y = static_cast<int>(i / im.nx);
            for (std::size_t k = 0; k < clusters.size(); ++k) {
                const Cluster& c = clusters[k];
                double dc = (static_cast<double>(im.at(x, y)) - c.intensity) /
                            params.intensity_scale;
                double dx = x - c.x, dy = y - c.y;
                double d2 = dc * dc + (dx * dx + dy * dy) * mw * mw;
                if (d2 <= dist[i]) {
                    dist[i] = d2;
                    labels[i] = static_cast<std::uint32_t>(k);
                }
            }
        }

        // Update: move clusters to the mean of their pixels. Clusters that
        // lost every pixel keep their previous state.
        std::vector<double> sx(clusters.size(), 0), sy(clusters.size(), 0),
            si(clusters.size(), 0);
        std::vector<std::size_t> cnt(clusters.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t k = labels[i];
            sx[k] += static_cast<double>(i % im.nx);
            sy[k] += static_cast<double>(i / im.nx);
            si[k] += static_cast<double>(im.px[i]);
            ++cnt[k];
        }
        for (std::size_t k = 0; k < clusters.size(); ++k) {
            if (cnt[k] == 0) continue;
            clusters[k].x = sx[k] / cnt[k];
            clusters[k].y = sy[k] / cnt[k];
            clusters[k].intensity = si[k] / cnt[k];
        }
    }

    enforce_connectivity(labels, im.nx, im.ny, static_cast<std::uint32_t>(clusters.size()));
    std::uint32_t k = compact_labels(labels, static_cast<std::uint32_t>(clusters.size()));

    SuperpixelSlice out;
    out.nx = im.nx;
    out.ny = im.ny;
    out.k = k;
    out.labels = std::move(labels);
    return out;
}

LabelVolume slic_volume(const CtVolume& vol, const SlicParams& params, int threads) {
    LabelVolume lv;
    lv.dims = vol.dims;
    lv.labels.resize(vol.dims.count());
    const std::size_t plane = static_cast<std::size_t>(vol.dims.nx) * vol.dims.ny;
    parallel_for(vol.dims.nz, threads, [&](int z) {
        SuperpixelSlice sp;
        try {
            sp = slic_slice(vol.slice(z), params);
        } catch (const DataError& e) {
            throw SliceTooSmallError("slice " + std::to_string(z) + ": " + e.what());
        }
        std::copy(sp.labels.begin(), sp.labels.end(), lv.labels.begin() + plane * z);
    });
    return lv;
}

std::vector<std::uint8_t> label_boundaries(const SuperpixelSlice& sp) {
    std::vector<std::uint8_t> b(sp.labels.size(), 0);
    for (int y = 0; y < sp.ny; ++y) {
        for (int x = 0; x < sp.nx; ++x) {
            std::uint32_t l = sp.at(x, y);
            bool edge = (x > 0 && sp.at(x - 1, y) != l) || (x < sp.nx - 1 && sp.at(x + 1, y) != l) ||
                        (y > 0 && sp.at(x, y - 1) != l) || (y < sp.ny - 1 && sp.at(x, y + 1) != l);
            if (edge) b[static_cast<std::size_t>(y) * sp.nx + x] = 1;
        }
    }
    return b;
}

std::vector<std::uint8_t> mask_boundary(PlaneView<std::uint8_t> gt) {
    std::vector<std::uint8_t> b(gt.count(), 0);
    for (int y = 0; y < gt.ny; ++y) {
        for (int x = 0; x < gt.nx; ++x) {
            if (!gt.at(x, y)) continue;
            bool edge = (x > 0 && !gt.at(x - 1, y)) || (x < gt.nx - 1 && !gt.at(x + 1, y)) ||
                        (y > 0 && !gt.at(x, y - 1)) || (y < gt.ny - 1 && !gt.at(x, y + 1));
            if (edge) b[static_cast<std::size_t>(y) * gt.nx + x] = 1;
        }
    }
    return b;
}

namespace {

// Chebyshev distance to the nearest set pixel, via multi-source BFS over the
// 8-neighborhood (chessboard metric).
std::vector<int> chebyshev_distance(const std::vector<std::uint8_t>& set, int nx, int ny) {
    std::vector<int> d(set.size(), std::numeric_limits<int>::max());
    std::deque<int> q;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i]) {
            d[i] = 0;
            q.push_back(static_cast<int>(i));
        }
    }
    while (!q.empty()) {
        int i = q.front();
        q.pop_front();
        int x = i % nx, y = i / nx;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                int xx = x + dx, yy = y + dy;
                if (xx < 0 || xx >= nx || yy < 0 || yy >= ny) continue;
                int j = yy * nx + xx;
                if (d[j] > d[i] + 1) {
                    d[j] = d[i] + 1;
                    q.push_back(j);
                }
            }
        }
    }
    return d;
}

struct RecallCounts {
    std::vector<std::size_t> hits; // per distance
    std::size_t total = 0;
};

RecallCounts recall_counts(const SuperpixelSlice& sp, PlaneView<std::uint8_t> gt,
                           const std::vector<int>& distances) {
    auto spb = label_boundaries(sp);
    auto gtb = mask_boundary(gt);
    auto dt = chebyshev_distance(spb, sp.nx, sp.ny);

    RecallCounts rc;
    rc.hits.assign(distances.size(), 0);
    for (std::size_t i = 0; i < gtb.size(); ++i) {
        if (!gtb[i]) continue;
        ++rc.total;
        for (std::size_t di = 0; di < distances.size(); ++di)
            if (dt[i] <= distances[di]) ++rc.hits[di];
    }
    return rc;
}

} // namespace

BoundaryRecallCurve boundary_recall(const SuperpixelSlice& sp, PlaneView<std::uint8_t> gt,
                                    const std::vector<int>& distances) {
    if (sp.nx != gt.nx || sp.ny != gt.ny)
        throw DimsMismatchError("superpixel slice and ground truth dims differ");
    RecallCounts rc = recall_counts(sp, gt, distances);
    if (rc.total == 0) throw EmptyBoundaryError("ground-truth mask has no boundary pixel");

    BoundaryRecallCurve curve;
    curve.distances = distances;
    for (std::size_t di = 0; di < distances.size(); ++di)
        curve.recall.push_back(static_cast<double>(rc.hits[di]) / static_cast<double>(rc.total));
    return curve;
}

BoundaryRecallCurve boundary_recall_volume(const LabelVolume& sp, const BinaryMask& gt,
                                           const std::vector<int>& distances) {
    if (!(sp.dims == gt.dims)) throw DimsMismatchError("label volume and mask dims differ");
    std::vector<std::size_t> hits(distances.size(), 0);
    std::size_t total = 0;
    for (int z = 0; z < sp.dims.nz; ++z) {
        SuperpixelSlice s;
        s.nx = sp.dims.nx;
        s.ny = sp.dims.ny;
        auto view = sp.slice(z);
        s.labels.assign(view.px, view.px + view.count());
        RecallCounts rc = recall_counts(s, gt.slice(z), distances);
        total += rc.total;
        for (std::size_t di = 0; di < distances.size(); ++di) hits[di] += rc.hits[di];
    }
    if (total == 0) throw EmptyBoundaryError("ground-truth mask has no boundary pixel");

    BoundaryRecallCurve curve;
    curve.distances = distances;
    for (std::size_t di = 0; di < distances.size(); ++di)
        curve.recall.push_back(static_cast<double>(hits[di]) / static_cast<double>(total));
    return curve;
}

} // namespace seg
