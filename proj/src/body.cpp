#include "segtool/body.hpp"

#include <vector>

namespace seg {

namespace {

// Largest 6-connected component of the thresholded set, by voxel count;
// ties go to the component discovered first in scan order.
std::vector<std::uint8_t> largest_component(const std::vector<std::uint8_t>& in, const Dims& d) {
    const int nx = d.nx, ny = d.ny, nz = d.nz;
    const std::size_t n = d.count();
    std::vector<std::int32_t> comp(n, -1);
    std::vector<std::size_t> stack;

    std::int32_t best_comp = -1;
    std::size_t best_size = 0;
    std::int32_t next_comp = 0;

    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!in[seed] || comp[seed] >= 0) continue;
        std::size_t size = 0;
        comp[seed] = next_comp;
        stack.push_back(seed);
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            ++size;
            int x = static_cast<int>(i % nx);
            int y = static_cast<int>((i / nx) % ny);
            int z = static_cast<int>(i / (static_cast<std::size_t>(nx) * ny));
            auto visit = [&](int xx, int yy, int zz) {
                if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz) return;
                std::size_t j = (static_cast<std::size_t>(zz) * ny + yy) * nx + xx;
                if (in[j] && comp[j] < 0) {
                    comp[j] = next_comp;
                    stack.push_back(j);
                }
            };
            visit(x - 1, y, z);
            visit(x + 1, y, z);
            visit(x, y - 1, z);
            visit(x, y + 1, z);
            visit(x, y, z - 1);
            visit(x, y, z + 1);
        }
        if (size > best_size) {
            best_size = size;
            best_comp = next_comp;
        }
        ++next_comp;
    }

    std::vector<std::uint8_t> out(n, 0);
    for (std::size_t i = 0; i < n; ++i) out[i] = (comp[i] == best_comp) ? 1 : 0;
    return out;
}

// Fill 2D holes in one slice: flood the complement from the border; anything
// unreachable is an interior hole.
void fill_holes_slice(std::uint8_t* m, int nx, int ny) {
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(nx) * ny, 0);
    std::vector<int> stack;
    auto push = [&](int x, int y) {
        int i = y * nx + x;
        if (!m[i] && !outside[i]) {
            outside[i] = 1;
            stack.push_back(i);
        }
    };
    for (int x = 0; x < nx; ++x) {
        push(x, 0);
        push(x, ny - 1);
    }
    for (int y = 0; y < ny; ++y) {
        push(0, y);
        push(nx - 1, y);
    }
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        int x = i % nx, y = i / nx;
        if (x > 0) push(x - 1, y);
        if (x < nx - 1) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y < ny - 1) push(x, y + 1);
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(nx) * ny; ++i)
        if (!m[i] && !outside[i]) m[i] = 1;
}

} // namespace

BinaryMask segment_body(const CtVolume& vol, int threshold) {
    const std::size_t n = vol.dims.count();
    std::vector<std::uint8_t> th(n, 0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (vol.voxels[i] >= threshold) {
            th[i] = 1;
            any = true;
        }
    }
    if (!any) throw EmptyBodyError("no voxel at or above the body threshold");

    BinaryMask mask;
    mask.dims = vol.dims;
    mask.bits = largest_component(th, vol.dims);

    const std::size_t plane = static_cast<std::size_t>(vol.dims.nx) * vol.dims.ny;
    for (int z = 0; z < vol.dims.nz; ++z)
        fill_holes_slice(mask.bits.data() + plane * z, vol.dims.nx, vol.dims.ny);
    return mask;
}

Bbox2D bounding_box_2d(const BinaryMask& mask, int z) {
    auto sl = mask.slice(z);
    Bbox2D bb{mask.dims.nx, -1, mask.dims.ny, -1};
    for (int y = 0; y < sl.ny; ++y) {
        for (int x = 0; x < sl.nx; ++x) {
            if (!sl.at(x, y)) continue;
            bb.xmin = std::min(bb.xmin, x);
            bb.xmax = std::max(bb.xmax, x);
            bb.ymin = std::min(bb.ymin, y);
            bb.ymax = std::max(bb.ymax, y);
        }
    }
    if (bb.xmax < 0) throw EmptySliceError("slice " + std::to_string(z) + " has no set pixel");
    return bb;
}

} // namespace seg
