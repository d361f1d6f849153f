#pragma once

#include <cmath>
#include <vector>

#include "slidereg/image.hpp"

namespace slidereg {

// Knobs shared by the similarity measures. epsilon is the NGF edge parameter
// (intensity-gradient units on unit-interval images), h the quadrature
// spacing of the h²/2 sum weight, window the local-NCC window side (odd).
struct SimilarityConfig {
    double epsilon = 0.01;
    double h = 1.0;
    int window = 9;

    void validate() const {
        require(epsilon > 0.0, errc::argument, "epsilon must be positive");
        require(h > 0.0, errc::argument, "h must be positive");
        require(window >= 3 && window % 2 == 1, errc::argument, "window must be odd and >= 3");
    }
};

struct NccResult {
    double value = 0.0;
    bool degenerate = false; // zero-variance input
};

// Pearson correlation of intensities over matching geometry.
inline NccResult ncc(const Image& a, const Image& b) {
    require(a.same_geometry(b), errc::argument, "ncc needs matching geometry");
    require(a.samples.size() > 1, errc::argument, "ncc needs more than one sample");
    double n = double(a.samples.size());
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        ma += a.samples[i];
        mb += b.samples[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        double da = a.samples[i] - ma, db = b.samples[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    // threshold absorbs mean-subtraction roundoff; any true 8-bit contrast
    // yields a variance many orders above it
    if (saa <= 1e-12 || sbb <= 1e-12) return {0.0, true};
    return {sab / std::sqrt(saa * sbb), false};
}

struct LocalNccResult {
    double value = 0.0;
    bool all_degenerate = false;
};

// Mean per-window NCC over the dense stride-1 grid of fully interior windows.
// Zero-variance windows contribute 0 but still count.
inline LocalNccResult local_ncc(const Image& a, const Image& b, const SimilarityConfig& cfg) {
    cfg.validate();
    require(a.same_geometry(b) && a.channels == 1, errc::argument,
            "local_ncc needs matching grayscale geometry");
    int w = cfg.window;
    require(w <= a.width && w <= a.height, errc::argument, "window exceeds image size");

    // Summed-area tables over value, value², and the cross product.
    size_t W = static_cast<size_t>(a.width) + 1, H = static_cast<size_t>(a.height) + 1;
    std::vector<double> sa(W * H, 0.0), sb(W * H, 0.0), saa(W * H, 0.0), sbb(W * H, 0.0),
        sab(W * H, 0.0);
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            size_t i = static_cast<size_t>(y + 1) * W + (x + 1);
            size_t up = i - W, left = i - 1, diag = up - 1;
            double va = a.at(x, y), vb = b.at(x, y);
            sa[i] = va + sa[up] + sa[left] - sa[diag];
            sb[i] = vb + sb[up] + sb[left] - sb[diag];
            saa[i] = va * va + saa[up] + saa[left] - saa[diag];
            sbb[i] = vb * vb + sbb[up] + sbb[left] - sbb[diag];
            sab[i] = va * vb + sab[up] + sab[left] - sab[diag];
        }
    auto box = [&](const std::vector<double>& s, int x0, int y0) {
        size_t x1 = static_cast<size_t>(x0 + w), y1 = static_cast<size_t>(y0 + w);
        return s[y1 * W + x1] - s[static_cast<size_t>(y0) * W + x1] -
               s[y1 * W + static_cast<size_t>(x0)] + s[static_cast<size_t>(y0) * W + x0];
    };

    double nwin = double(w) * w;
    double total = 0.0;
    size_t windows = 0, degenerate = 0;
    for (int y0 = 0; y0 + w <= a.height; ++y0)
        for (int x0 = 0; x0 + w <= a.width; ++x0) {
            double Sa = box(sa, x0, y0), Sb = box(sb, x0, y0);
            double va = box(saa, x0, y0) - Sa * Sa / nwin;
            double vb = box(sbb, x0, y0) - Sb * Sb / nwin;
            double cov = box(sab, x0, y0) - Sa * Sb / nwin;
            ++windows;
            // summed-area differencing cancels catastrophically on flat
            // windows; 1e-9 sits far below any real window variance
            if (va <= 1e-9 || vb <= 1e-9) {
                ++degenerate;
                continue;
            }
            total += cov / std::sqrt(va * vb);
        }
    return {windows ? total / double(windows) : 0.0, degenerate == windows};
}

inline double mse(const Image& a, const Image& b) {
    require(a.same_geometry(b), errc::argument, "mse needs matching geometry");
    double s = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        double d = a.samples[i] - b.samples[i];
        s += d * d;
    }
    return s / double(a.samples.size());
}

} // namespace slidereg
