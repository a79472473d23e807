#include "segtool/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "segtool/rng.hpp"

namespace seg {

namespace {

struct Vec3 {
    double x, y, z;
};

struct Ellipsoid {
    Vec3 c;
    Vec3 r;
    bool contains(double x, double y, double z) const {
        double dx = (x - c.x) / r.x, dy = (y - c.y) / r.y, dz = (z - c.z) / r.z;
        return dx * dx + dy * dy + dz * dz <= 1.0;
    }
};

// Polyline samples with per-sample radius, swept as spheres. The z radius is
// scaled by the voxel anisotropy so the tube looks round in physical space.
struct Tube {
    std::vector<Vec3> samples;
    std::vector<double> radius;
};

void stamp_tube(const Tube& tube, double z_scale, const Dims& d,
                std::vector<std::uint8_t>& out) {
    for (std::size_t s = 0; s < tube.samples.size(); ++s) {
        const Vec3& p = tube.samples[s];
        double r = tube.radius[s];
        double rz = r / z_scale;
        int x0 = std::max(0, static_cast<int>(std::floor(p.x - r)));
        int x1 = std::min(d.nx - 1, static_cast<int>(std::ceil(p.x + r)));
        int y0 = std::max(0, static_cast<int>(std::floor(p.y - r)));
        int y1 = std::min(d.ny - 1, static_cast<int>(std::ceil(p.y + r)));
        int z0 = std::max(0, static_cast<int>(std::floor(p.z - rz)));
        int z1 = std::min(d.nz - 1, static_cast<int>(std::ceil(p.z + rz)));
        for (int z = z0; z <= z1; ++z) {
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    double dx = x - p.x, dy = y - p.y, dz = (z - p.z) * z_scale;
                    if (dx * dx + dy * dy + dz * dz <= r * r)
                        out[(static_cast<std::size_t>(z) * d.ny + y) * d.nx + x] = 1;
                }
            }
        }
    }
}

} // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
    const Dims d = spec.dims;
    const std::size_t n = d.count();
    Rng rng(spec.seed);

    const double cx = d.nx / 2.0, cy = d.ny / 2.0, cz = d.nz / 2.0;
    Ellipsoid body{{cx, cy, cz},
                   {0.42 * d.nx * rng.next_range(0.95, 1.05),
                    0.38 * d.ny * rng.next_range(0.95, 1.05),
                    0.58 * d.nz * rng.next_range(0.95, 1.05)}};

    std::vector<std::uint8_t> in_body(n, 0);
    std::size_t body_count = 0;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x)
                if (body.contains(x, y, z)) {
                    in_body[(static_cast<std::size_t>(z) * d.ny + y) * d.nx + x] = 1;
                    ++body_count;
                }

    // Target centerline: a short random walk inside the central part of the
    // body, clamped so the swept tube cannot leave it.
    const double z_scale = spec.sz / spec.sx; // voxel anisotropy
    const double margin = 0.62;
    auto clamp_inside = [&](Vec3 p, double r) {
        Vec3 lim{body.r.x * margin - r, body.r.y * margin - r,
                 body.r.z * margin - r / z_scale};
        p.x = std::clamp(p.x, cx - lim.x, cx + lim.x);
        p.y = std::clamp(p.y, cy - lim.y, cy + lim.y);
        p.z = std::clamp(p.z, cz - lim.z, cz + lim.z);
        return p;
    };

    const int segments = 3, per_segment = 14;
    Vec3 start{cx + rng.next_range(-0.12, 0.12) * d.nx, cy + rng.next_range(-0.12, 0.12) * d.ny,
               cz + rng.next_range(-0.15, 0.15) * d.nz};
    std::vector<Vec3> knots{start};
    for (int s = 0; s < segments; ++s) {
        Vec3 prev = knots.back();
        knots.push_back({prev.x + rng.next_range(-0.16, 0.16) * d.nx,
                         prev.y + rng.next_range(-0.16, 0.16) * d.ny,
                         prev.z + rng.next_range(-0.10, 0.10) * d.nz});
    }

    double target_frac = rng.next_range(spec.target_frac_min, spec.target_frac_max);
    double target_vox = target_frac * static_cast<double>(body_count);

    // Path length in voxel units (z scaled to physical proportions).
    double length = 0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        double dx = knots[i].x - knots[i - 1].x, dy = knots[i].y - knots[i - 1].y,
               dz = (knots[i].z - knots[i - 1].z) * z_scale;
        length += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    double radius = std::sqrt(target_vox / (3.14159265358979323846 * std::max(length, 1.0)));
    radius = std::max(radius, 1.5);

    std::vector<double> bulge;
    for (int i = 0; i <= segments * per_segment; ++i) bulge.push_back(rng.next_range(0.75, 1.25));

    std::vector<std::uint8_t> target(n, 0);
    double scale = 1.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::fill(target.begin(), target.end(), 0);
        Tube tube;
        for (int s = 0; s < segments; ++s) {
            for (int i = 0; i < per_segment; ++i) {
                double t = static_cast<double>(i) / per_segment;
                int k = s * per_segment + i;
                Vec3 p{knots[s].x + t * (knots[s + 1].x - knots[s].x),
                       knots[s].y + t * (knots[s + 1].y - knots[s].y),
                       knots[s].z + t * (knots[s + 1].z - knots[s].z)};
                double r = radius * scale * bulge[k];
                tube.samples.push_back(clamp_inside(p, r));
                tube.radius.push_back(r);
            }
        }
        stamp_tube(tube, z_scale, d, target);

        std::size_t got = 0;
        for (std::uint8_t v : target) got += v;
        double frac = static_cast<double>(got) / static_cast<double>(body_count);
        if (frac >= spec.target_frac_min && frac <= spec.target_frac_max) break;
        double want = std::clamp(target_frac, spec.target_frac_min, spec.target_frac_max);
        scale *= std::sqrt(want * static_cast<double>(body_count) / std::max(1.0, (double)got));
    }

    // Distractor blobs: intensity overlaps the target band, kept away from
    // the target centerline.
    int n_distractors =
        spec.distractor_min +
        static_cast<int>(rng.next_below(
            static_cast<std::uint64_t>(spec.distractor_max - spec.distractor_min + 1)));
    std::vector<std::pair<Ellipsoid, int>> distractors;
    for (int di = 0; di < n_distractors; ++di) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            Vec3 c{cx + rng.next_range(-0.55, 0.55) * body.r.x,
                   cy + rng.next_range(-0.55, 0.55) * body.r.y,
                   cz + rng.next_range(-0.55, 0.55) * body.r.z};
            Vec3 r{rng.next_range(4.0, 11.0), rng.next_range(4.0, 11.0),
                   rng.next_range(2.0, 5.0)};
            double clearance = std::max({r.x, r.y, r.z * z_scale}) + radius * scale + 5.0;
            bool ok = true;
            for (const Vec3& p : knots) {
                double dx = p.x - c.x, dy = p.y - c.y, dz = (p.z - c.z) * z_scale;
                if (dx * dx + dy * dy + dz * dz < clearance * clearance) {
                    ok = false;
                    break;
                }
            }
            if (!ok && attempt < 19) continue;
            int level = spec.pancreas_level +
                        static_cast<int>(rng.next_range(-60.0, 60.0));
            distractors.push_back({Ellipsoid{c, r}, level});
            break;
        }
    }

    const int body_base = spec.body_level + static_cast<int>(rng.next_range(
                                                -static_cast<double>(spec.body_band),
                                                static_cast<double>(spec.body_band)));
    const int target_base = spec.pancreas_level + static_cast<int>(rng.next_range(
                                                      -static_cast<double>(spec.pancreas_band),
                                                      static_cast<double>(spec.pancreas_band)));

    Phantom ph;
    ph.volume.dims = d;
    ph.volume.sx = spec.sx;
    ph.volume.sy = spec.sy;
    ph.volume.sz = spec.sz;
    ph.volume.voxels.resize(n);
    ph.mask.dims = d;
    ph.mask.bits = target;

    const int table_y0 = d.ny - 6, table_y1 = d.ny - 4;
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                std::size_t i = (static_cast<std::size_t>(z) * d.ny + y) * d.nx + x;
                double v = spec.background_level;
                if (in_body[i]) {
                    v = body_base;
                    for (const auto& [e, level] : distractors)
                        if (e.contains(x, y, z)) v = level;
                    if (target[i]) v = target_base;
                } else if (spec.table && y >= table_y0 && y <= table_y1 && x >= d.nx / 6 &&
                           x <= 5 * d.nx / 6) {
                    v = 900;
                }
                v += rng.next_normal() * spec.noise_std;
                ph.volume.voxels[i] = static_cast<std::uint16_t>(
                    std::clamp(static_cast<int>(std::lround(v)), 0, kIntensityMax));
            }
        }
    }

    // The mask must be non-empty and strictly inside the body.
    std::size_t mask_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ph.mask.bits[i]) {
            ++mask_count;
            if (!in_body[i]) throw DataError("phantom target escaped the body");
        }
    }
    if (mask_count == 0) throw DataError("phantom target is empty");
    return ph;
}

DatasetManifest generate_phantoms(const PhantomSpec& spec, int count,
                                  const std::filesystem::path& out_dir) {
    if (count < 1) throw ConfigError("phantom count must be >= 1");
    std::filesystem::create_directories(out_dir);

    DatasetManifest m;
    m.phantom = true;
    m.base_dir = out_dir;
    for (int i = 0; i < count; ++i) {
        PhantomSpec s = spec;
        s.seed = derive_seed(spec.seed, "phantom-case-" + std::to_string(i));
        Phantom ph = generate_phantom(s);

        char name[32];
        std::snprintf(name, sizeof(name), "phantom_%03d", i);
        std::string vol_name = std::string(name) + ".mvol";
        std::string mask_name = std::string(name) + "_mask.mvol";
        save_volume(out_dir / vol_name, ph.volume);
        save_mask(out_dir / mask_name, ph.mask, spec.sx, spec.sy, spec.sz);
        m.entries.push_back({vol_name, mask_name, i % 6});
    }
    save_manifest(out_dir / "manifest.json", m);
    return m;
}

} // namespace seg
