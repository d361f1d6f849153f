#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "slidereg/geometry.hpp"
#include "slidereg/image.hpp"

namespace slidereg {

// Rec.601 luminance, then inversion, so tissue (dark on white) becomes bright
// on a zero background. Involution on grayscale inputs.
inline Image to_gray_inverted(const Image& img) {
    Image out(img.width, img.height, 1, img.mpp);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            int gray;
            if (img.channels == 3) {
                double lum = 0.299 * img.at8(x, y, 0) + 0.587 * img.at8(x, y, 1) +
                             0.114 * img.at8(x, y, 2);
                gray = round_half_away(lum);
            } else {
                gray = img.at8(x, y);
            }
            out.at(x, y) = (255 - gray) / 255.0;
        }
    }
    return out;
}

inline Image invert_gray(const Image& img) {
    require(img.channels == 1, errc::argument, "invert_gray needs a grayscale image");
    Image out(img.width, img.height, 1, img.mpp);
    for (size_t i = 0; i < img.samples.size(); ++i)
        out.samples[i] = (255 - round_half_away(img.samples[i] * 255.0)) / 255.0;
    return out;
}

// k×k box-filter mean; partial boxes at the right/bottom edges average the
// samples they do cover. Output is re-quantized to the 8-bit grid.
inline Image downsample(const Image& img, int k) {
    require(k >= 1, errc::argument, "downsample factor must be >= 1");
    if (k == 1) return img;
    int ow = (img.width + k - 1) / k;
    int oh = (img.height + k - 1) / k;
    Image out(ow, oh, img.channels, img.mpp * k);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            int x0 = ox * k, x1 = std::min(x0 + k, img.width);
            int y0 = oy * k, y1 = std::min(y0 + k, img.height);
            for (int c = 0; c < img.channels; ++c) {
                double sum = 0.0;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) sum += img.at(x, y, c) * 255.0;
                double mean = sum / ((x1 - x0) * (y1 - y0));
                out.at(ox, oy, c) = clamp8(round_half_away(mean)) / 255.0;
            }
        }
    }
    return out;
}

// Smallest integer factor bringing the max dimension to <= max_dim.
inline int downsample_factor_for(const Image& img, int max_dim) {
    require(max_dim >= 1, errc::argument, "max dimension must be >= 1");
    int k = 1;
    while ((img.max_dim() + k - 1) / k > max_dim) ++k;
    return k;
}

inline Image downsample_to_max_dim(const Image& img, int max_dim) {
    return downsample(img, downsample_factor_for(img, max_dim));
}

// Foreground iff lo <= value <= hi on the 8-bit scale, both ends inclusive.
// Expects the un-inverted grayscale (white background excluded by hi < 255).
inline Mask threshold_mask(const Image& img, int lo, int hi) {
    require(img.channels == 1, errc::argument, "threshold_mask needs a grayscale image");
    require(0 <= lo && lo <= hi && hi <= 255, errc::argument, "thresholds must satisfy 0 <= lo <= hi <= 255");
    Mask m(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            int v = img.at8(x, y);
            m.set(x, y, lo <= v && v <= hi);
        }
    return m;
}

// 1-D k-means (k=3) on the 8-bit intensity histogram, centroids seeded at the
// min / median / max observed values, Lloyd iterations to an assignment
// fixpoint. Foreground = the two clusters with lower mean intensity (the
// brightest cluster is the white background).
inline Mask kmeans_mask(const Image& img) {
    require(img.channels == 1, errc::argument, "kmeans_mask needs a grayscale image");
    std::array<size_t, 256> hist{};
    for (size_t i = 0; i < img.samples.size(); ++i)
        ++hist[static_cast<size_t>(round_half_away(img.samples[i] * 255.0))];

    int distinct = 0, vmin = -1, vmax = -1;
    for (int v = 0; v < 256; ++v)
        if (hist[v] > 0) {
            ++distinct;
            if (vmin < 0) vmin = v;
            vmax = v;
        }
    if (distinct < 3) fail(errc::degenerate, "kmeans_mask needs >= 3 distinct intensity values");

    size_t total = img.pixel_count();
    // Lower median of pixel values; fall back to the median distinct value if
    // it collides with an extreme so the three centroids stay distinct.
    int vmed = vmin;
    {
        size_t cum = 0, target = (total - 1) / 2;
        for (int v = 0; v < 256; ++v) {
            cum += hist[v];
            if (cum > target) { vmed = v; break; }
        }
        if (vmed == vmin || vmed == vmax) {
            std::vector<int> vals;
            for (int v = 0; v < 256; ++v)
                if (hist[v] > 0) vals.push_back(v);
            vmed = vals[vals.size() / 2];
            if (vmed == vmin || vmed == vmax) vmed = vals[1]; // distinct >= 3 guarantees an interior value
        }
    }

    std::array<double, 3> centroid = {double(vmin), double(vmed), double(vmax)};
    std::array<int, 256> assign{};
    assign.fill(-1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        std::array<double, 3> sum{};
        std::array<size_t, 3> cnt{};
        for (int v = 0; v < 256; ++v) {
            if (hist[v] == 0) continue;
            int best = 0;
            double bestd = std::abs(v - centroid[0]);
            for (int c = 1; c < 3; ++c) {
                double d = std::abs(v - centroid[c]);
                if (d < bestd) { bestd = d; best = c; }
            }
            if (assign[v] != best) { assign[v] = best; changed = true; }
            sum[best] += double(v) * hist[v];
            cnt[best] += hist[v];
        }
        for (int c = 0; c < 3; ++c)
            if (cnt[c] > 0) centroid[c] = sum[c] / cnt[c];
        if (!changed) break;
    }

    // Order clusters by mean; drop the brightest.
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return centroid[a] < centroid[b]; });
    int background = order[2];

    Mask m(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            int v = img.at8(x, y);
            m.set(x, y, assign[v] != background);
        }
    return m;
}

// Contrast-limited adaptive histogram equalization. Per-tile 256-bin
// histograms, clipped at clip × tile pixel count with the excess spread
// uniformly, per-tile map(v) = floor(255·cdf(v)), bilinear blending between
// tile centers. A tile whose histogram occupies a single bin keeps the
// identity map, so constant regions pass through unchanged. tiles=1, clip=1
// reduces to global histogram equalization.
inline Image equalize_clahe(const Image& img, int tiles = 8, double clip = 0.01) {
    require(img.channels == 1, errc::argument, "equalize_clahe needs a grayscale image");
    require(tiles >= 1, errc::argument, "tiles must be >= 1");
    require(clip > 0.0 && clip <= 1.0, errc::argument, "clip must be in (0, 1]");
    tiles = std::min({tiles, img.width, img.height});

    struct Tile {
        std::array<double, 256> map;
        double cx, cy;
    };
    std::vector<Tile> grid(static_cast<size_t>(tiles) * tiles);

    for (int ty = 0; ty < tiles; ++ty) {
        for (int tx = 0; tx < tiles; ++tx) {
            int x0 = tx * img.width / tiles, x1 = (tx + 1) * img.width / tiles;
            int y0 = ty * img.height / tiles, y1 = (ty + 1) * img.height / tiles;
            std::array<long long, 256> hist{};
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) ++hist[static_cast<size_t>(img.at8(x, y))];
            long long count = static_cast<long long>(x1 - x0) * (y1 - y0);

            int occupied = 0;
            for (int v = 0; v < 256; ++v)
                if (hist[v] > 0) ++occupied;

            Tile& t = grid[static_cast<size_t>(ty) * tiles + tx];
            t.cx = (x0 + x1 - 1) / 2.0;
            t.cy = (y0 + y1 - 1) / 2.0;
            if (occupied <= 1) {
                for (int v = 0; v < 256; ++v) t.map[v] = v;
                continue;
            }
            if (clip < 1.0) {
                long long limit = std::max<long long>(1, round_half_away(clip * double(count)));
                long long excess = 0;
                for (int v = 0; v < 256; ++v)
                    if (hist[v] > limit) { excess += hist[v] - limit; hist[v] = limit; }
                long long share = excess / 256, rem = excess % 256;
                for (int v = 0; v < 256; ++v) hist[v] += share + (v < rem ? 1 : 0);
            }
            long long cum = 0;
            for (int v = 0; v < 256; ++v) {
                cum += hist[v];
                t.map[v] = std::floor(255.0 * double(cum) / double(count));
            }
        }
    }

    Image out(img.width, img.height, 1, img.mpp);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            int v = img.at8(x, y);
            // Bracketing tile centers along each axis, clamped at the borders.
            int tx1 = 0;
            while (tx1 < tiles - 1 && grid[tx1].cx < x) ++tx1;
            int tx0 = std::max(0, tx1 - 1);
            if (grid[tx1].cx < x) tx0 = tx1; // right of last center
            int ty1 = 0;
            while (ty1 < tiles - 1 && grid[static_cast<size_t>(ty1) * tiles].cy < y) ++ty1;
            int ty0 = std::max(0, ty1 - 1);
            if (grid[static_cast<size_t>(ty1) * tiles].cy < y) ty0 = ty1;

            double cx0 = grid[tx0].cx, cx1 = grid[tx1].cx;
            double cy0 = grid[static_cast<size_t>(ty0) * tiles].cy;
            double cy1 = grid[static_cast<size_t>(ty1) * tiles].cy;
            double fx = (tx0 == tx1) ? 0.0 : std::clamp((x - cx0) / (cx1 - cx0), 0.0, 1.0);
            double fy = (ty0 == ty1) ? 0.0 : std::clamp((y - cy0) / (cy1 - cy0), 0.0, 1.0);

            double m00 = grid[static_cast<size_t>(ty0) * tiles + tx0].map[v];
            double m10 = grid[static_cast<size_t>(ty0) * tiles + tx1].map[v];
            double m01 = grid[static_cast<size_t>(ty1) * tiles + tx0].map[v];
            double m11 = grid[static_cast<size_t>(ty1) * tiles + tx1].map[v];
            double blended = (1 - fy) * ((1 - fx) * m00 + fx * m10) + fy * ((1 - fx) * m01 + fx * m11);
            out.at(x, y) = blended / 255.0;
        }
    }
    return out;
}

// Separable Gaussian, sigma given in microns and converted through mpp.
// Kernel radius ceil(3σ), normalized to unit sum, replicate padding at the
// edges. Operates on the real-valued samples; no re-quantization.
inline Image gaussian_smooth(const Image& img, double sigma_um) {
    require(img.channels == 1, errc::argument, "gaussian_smooth needs a grayscale image");
    require(sigma_um >= 0.0, errc::argument, "sigma must be non-negative");
    double sigma = sigma_um / img.mpp;
    if (sigma == 0.0) return img;

    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[static_cast<size_t>(i + radius)];
    }
    for (auto& k : kernel) k /= sum;

    Image tmp(img.width, img.height, 1, img.mpp);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                int xx = std::clamp(x + i, 0, img.width - 1);
                acc += kernel[static_cast<size_t>(i + radius)] * img.at(xx, y);
            }
            tmp.at(x, y) = acc;
        }
    Image out(img.width, img.height, 1, img.mpp);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                int yy = std::clamp(y + i, 0, img.height - 1);
                acc += kernel[static_cast<size_t>(i + radius)] * tmp.at(x, yy);
            }
            out.at(x, y) = acc;
        }
    return out;
}

struct CropResult {
    Image image;
    int offset_x = 0;
    int offset_y = 0;
};

// Removes floor(frac · dim) pixels from each side of each axis.
inline CropResult crop_border(const Image& img, double frac) {
    require(frac >= 0.0 && frac < 0.5, errc::argument, "crop fraction must be in [0, 0.5)");
    int dx = static_cast<int>(std::floor(frac * img.width));
    int dy = static_cast<int>(std::floor(frac * img.height));
    int w = img.width - 2 * dx, h = img.height - 2 * dy;
    require(w > 0 && h > 0, errc::argument, "crop would produce an empty image");
    Image out(w, h, img.channels, img.mpp);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(x + dx, y + dy, c);
    return {std::move(out), dx, dy};
}

// Intensity-weighted mean of pixel-center coordinates.
inline Vec2 center_of_mass(const Image& img) {
    require(img.channels == 1, errc::argument, "center_of_mass needs a grayscale image");
    double sx = 0.0, sy = 0.0, mass = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double v = img.at(x, y);
            sx += v * x;
            sy += v * y;
            mass += v;
        }
    if (mass <= 0.0) fail(errc::degenerate, "center_of_mass of an all-zero image");
    return {sx / mass, sy / mass};
}

inline Vec2 center_of_mass(const Mask& m) {
    double sx = 0.0, sy = 0.0, mass = 0.0;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                sx += x;
                sy += y;
                mass += 1.0;
            }
    if (mass <= 0.0) fail(errc::empty_mask, "center_of_mass of an empty mask");
    return {sx / mass, sy / mass};
}

// Repeated box downsampling until the next level would drop below min_dim.
inline Pyramid build_pyramid(const Image& img, int factor = 2, int min_dim = 8) {
    require(factor >= 2, errc::argument, "pyramid factor must be >= 2");
    require(min_dim >= 8, errc::argument, "pyramid min_dim must be >= 8");
    Pyramid p;
    p.factor = factor;
    p.levels.push_back(img);
    while (true) {
        const Image& top = p.levels.back();
        int next = (top.max_dim() + factor - 1) / factor;
        if (next < min_dim) break;
        p.levels.push_back(downsample(top, factor));
    }
    return p;
}

// Masked copy: samples outside the foreground go to zero.
inline Image apply_mask(const Image& img, const Mask& m) {
    require(img.channels == 1 && img.width == m.width && img.height == m.height, errc::argument,
            "apply_mask needs matching grayscale geometry");
    Image out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (!m.at(x, y)) out.at(x, y) = 0.0;
    return out;
}

} // namespace slidereg
