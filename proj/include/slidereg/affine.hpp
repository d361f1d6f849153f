#pragma once

#include <cmath>

#include "slidereg/errors.hpp"
#include "slidereg/geometry.hpp"

namespace slidereg {

// 2-D affine map p -> A·p + t. By convention transforms map reference (H&E)
// coordinates into moving (IHC) coordinates; landmark mapping goes the other
// way and uses the inverse.
struct AffineTransform {
    double a11 = 1.0, a12 = 0.0;
    double a21 = 0.0, a22 = 1.0;
    double tx = 0.0, ty = 0.0;

    Vec2 apply(Vec2 p) const {
        return {a11 * p.x + a12 * p.y + tx, a21 * p.x + a22 * p.y + ty};
    }

    Vec2 apply_linear(Vec2 p) const { return {a11 * p.x + a12 * p.y, a21 * p.x + a22 * p.y}; }

    double det() const { return a11 * a22 - a12 * a21; }

    bool is_identity() const {
        return a11 == 1.0 && a12 == 0.0 && a21 == 0.0 && a22 == 1.0 && tx == 0.0 && ty == 0.0;
    }

    AffineTransform inverse() const {
        double d = det();
        if (std::abs(d) <= 1e-12)
            fail(errc::singular, "affine transform is singular (det = " + std::to_string(d) + ")");
        AffineTransform inv;
        inv.a11 = a22 / d;
        inv.a12 = -a12 / d;
        inv.a21 = -a21 / d;
        inv.a22 = a11 / d;
        inv.tx = -(inv.a11 * tx + inv.a12 * ty);
        inv.ty = -(inv.a21 * tx + inv.a22 * ty);
        return inv;
    }

    // this ∘ other: apply `other` first.
    AffineTransform compose(const AffineTransform& o) const {
        AffineTransform r;
        r.a11 = a11 * o.a11 + a12 * o.a21;
        r.a12 = a11 * o.a12 + a12 * o.a22;
        r.a21 = a21 * o.a11 + a22 * o.a21;
        r.a22 = a21 * o.a12 + a22 * o.a22;
        Vec2 t = apply({o.tx, o.ty});
        r.tx = t.x;
        r.ty = t.y;
        return r;
    }

    static AffineTransform identity() { return {}; }

    // Rotation by phi (radians) about `center`, then translation by tau.
    static AffineTransform rigid(double phi, Vec2 tau, Vec2 center = {0.0, 0.0}) {
        double c = std::cos(phi), s = std::sin(phi);
        AffineTransform r;
        r.a11 = c;
        r.a12 = -s;
        r.a21 = s;
        r.a22 = c;
        r.tx = center.x - (c * center.x - s * center.y) + tau.x;
        r.ty = center.y - (s * center.x + c * center.y) + tau.y;
        return r;
    }
};

inline AffineTransform invert_affine(const AffineTransform& a) { return a.inverse(); }

// Rigid parameters used by the rotational pre-alignment stages: rotation phi
// about a fixed center plus translation (t1, t2) of that center.
struct RigidParams {
    double phi = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    Vec2 center{0.0, 0.0};

    AffineTransform to_affine() const { return AffineTransform::rigid(phi, {t1, t2}, center); }
};

} // namespace slidereg
