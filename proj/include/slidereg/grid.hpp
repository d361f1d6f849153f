#pragma once

#include <cmath>
#include <vector>

#include "slidereg/errors.hpp"
#include "slidereg/geometry.hpp"

namespace slidereg {

// Uniform control-point lattice of displacement vectors, bilinearly
// interpolated to a dense field. Displacements are zero outside the lattice
// support (no extrapolation), keeping the composed map total.
struct DisplacementGrid {
    int gw = 0;
    int gh = 0;
    double h = 1.0; // node spacing, px, both axes
    Vec2 origin{0.0, 0.0};
    std::vector<double> u1; // row-major, gw × gh
    std::vector<double> u2;

    DisplacementGrid() = default;
    DisplacementGrid(int gw_, int gh_, double h_, Vec2 origin_ = {0.0, 0.0})
        : gw(gw_), gh(gh_), h(h_), origin(origin_),
          u1(static_cast<size_t>(gw_) * gh_, 0.0), u2(static_cast<size_t>(gw_) * gh_, 0.0) {
        require(gw_ >= 2 && gh_ >= 2, errc::argument, "grid needs at least 2x2 nodes");
        require(h_ > 0.0, errc::argument, "grid spacing must be positive");
    }

    size_t node(int ix, int iy) const { return static_cast<size_t>(iy) * gw + ix; }
    size_t node_count() const { return static_cast<size_t>(gw) * gh; }
    Vec2 node_pos(int ix, int iy) const { return {origin.x + ix * h, origin.y + iy * h}; }

    // Cell index and bilinear weights for a point inside the support.
    // Returns false when p is outside.
    bool locate(Vec2 p, int* cx, int* cy, double* fx, double* fy) const {
        double lx = (p.x - origin.x) / h;
        double ly = (p.y - origin.y) / h;
        if (lx < 0.0 || lx > gw - 1 || ly < 0.0 || ly > gh - 1) return false;
        int ix = std::min(static_cast<int>(std::floor(lx)), gw - 2);
        int iy = std::min(static_cast<int>(std::floor(ly)), gh - 2);
        *cx = ix;
        *cy = iy;
        *fx = lx - ix;
        *fy = ly - iy;
        return true;
    }

    Vec2 interpolate(Vec2 p) const {
        int cx, cy;
        double fx, fy;
        if (!locate(p, &cx, &cy, &fx, &fy)) return {0.0, 0.0};
        double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
        double w01 = (1 - fx) * fy, w11 = fx * fy;
        size_t i00 = node(cx, cy), i10 = node(cx + 1, cy);
        size_t i01 = node(cx, cy + 1), i11 = node(cx + 1, cy + 1);
        return {w00 * u1[i00] + w10 * u1[i10] + w01 * u1[i01] + w11 * u1[i11],
                w00 * u2[i00] + w10 * u2[i10] + w01 * u2[i01] + w11 * u2[i11]};
    }

    double max_abs_displacement() const {
        double m = 0.0;
        for (size_t i = 0; i < u1.size(); ++i)
            m = std::max({m, std::abs(u1[i]), std::abs(u2[i])});
        return m;
    }
};

inline Vec2 grid_interpolate(const DisplacementGrid& g, Vec2 p) { return g.interpolate(p); }

// Lattice with spacing h whose support covers [0, w-1] × [0, h-1].
inline DisplacementGrid make_covering_grid(int width, int height, double spacing) {
    int gw = static_cast<int>(std::ceil((width - 1) / spacing)) + 1;
    int gh = static_cast<int>(std::ceil((height - 1) / spacing)) + 1;
    return DisplacementGrid(std::max(gw, 2), std::max(gh, 2), spacing);
}

} // namespace slidereg
