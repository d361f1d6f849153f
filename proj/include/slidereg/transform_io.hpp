#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slidereg/composite.hpp"
#include "slidereg/numfmt.hpp"

namespace slidereg {

// Text transform file:
//   affine a11 a12 a21 a22 tx ty
//   grid gw gh h ox oy            (optional)
//   u1 u2                          (gw·gh lines, row-major)
// Decimals at 17 significant digits.

inline std::string transform_to_string(const CompositeTransform& t) {
    std::ostringstream out;
    out << "affine " << format_g17(t.affine.a11) << " " << format_g17(t.affine.a12) << " "
        << format_g17(t.affine.a21) << " " << format_g17(t.affine.a22) << " "
        << format_g17(t.affine.tx) << " " << format_g17(t.affine.ty) << "\n";
    if (t.deform) {
        const DisplacementGrid& g = *t.deform;
        out << "grid " << g.gw << " " << g.gh << " " << format_g17(g.h) << " "
            << format_g17(g.origin.x) << " " << format_g17(g.origin.y) << "\n";
        for (size_t i = 0; i < g.node_count(); ++i)
            out << format_g17(g.u1[i]) << " " << format_g17(g.u2[i]) << "\n";
    }
    return out.str();
}

inline void write_transform(const CompositeTransform& t, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(errc::io, "cannot open '" + path + "' for writing");
    out << transform_to_string(t);
    if (!out) fail(errc::io, "write failed for '" + path + "'");
}

inline CompositeTransform parse_transform(std::istream& in, const std::string& what) {
    CompositeTransform t;
    std::string line;
    int lineno = 0;

    auto next_line = [&](std::string& dst) {
        while (std::getline(in, dst)) {
            ++lineno;
            if (!dst.empty() && dst.back() == '\r') dst.pop_back();
            if (!dst.empty()) return true;
        }
        return false;
    };

    if (!next_line(line)) fail(errc::format, what + ": empty transform file");
    {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag != "affine") fail(errc::format, what + ":" + std::to_string(lineno) + ": expected 'affine'");
        std::string f[6];
        for (auto& s : f)
            if (!(ls >> s)) fail(errc::format, what + ":" + std::to_string(lineno) + ": affine needs 6 values");
        t.affine.a11 = parse_double(f[0], what);
        t.affine.a12 = parse_double(f[1], what);
        t.affine.a21 = parse_double(f[2], what);
        t.affine.a22 = parse_double(f[3], what);
        t.affine.tx = parse_double(f[4], what);
        t.affine.ty = parse_double(f[5], what);
    }

    if (!next_line(line)) return t;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != "grid") fail(errc::format, what + ":" + std::to_string(lineno) + ": expected 'grid'");
    long long gw = 0, gh = 0;
    std::string hs, oxs, oys;
    if (!(ls >> gw >> gh >> hs >> oxs >> oys))
        fail(errc::format, what + ":" + std::to_string(lineno) + ": grid needs gw gh h ox oy");
    if (gw < 2 || gh < 2) fail(errc::format, what + ":" + std::to_string(lineno) + ": grid too small");
    DisplacementGrid g(static_cast<int>(gw), static_cast<int>(gh), parse_double(hs, what),
                       {parse_double(oxs, what), parse_double(oys, what)});
    for (size_t i = 0; i < g.node_count(); ++i) {
        if (!next_line(line))
            fail(errc::format, what + ": grid ends early, expected " + std::to_string(g.node_count()) +
                                   " node lines");
        std::istringstream ns(line);
        std::string u1s, u2s;
        if (!(ns >> u1s >> u2s))
            fail(errc::format, what + ":" + std::to_string(lineno) + ": node line needs 'u1 u2'");
        g.u1[i] = parse_double(u1s, what);
        g.u2[i] = parse_double(u2s, what);
    }
    t.deform = std::move(g);
    return t;
}

inline CompositeTransform read_transform(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "' for reading");
    return parse_transform(in, path);
}

} // namespace slidereg
