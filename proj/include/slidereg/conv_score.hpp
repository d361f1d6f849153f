#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "slidereg/image.hpp"

namespace slidereg {

// Score per integer template offset. Ties at the maximum resolve to the
// smallest dy, then smallest dx (row-major first maximizer).
struct ScoreMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    int argmax_dx = 0;
    int argmax_dy = 0;
    double max_value = -std::numeric_limits<double>::infinity();

    double at(int dx, int dy) const { return values[static_cast<size_t>(dy) * width + dx]; }

    void finish_argmax() {
        max_value = -std::numeric_limits<double>::infinity();
        for (int dy = 0; dy < height; ++dy)
            for (int dx = 0; dx < width; ++dx) {
                double v = at(dx, dy);
                if (v > max_value) {
                    max_value = v;
                    argmax_dx = dx;
                    argmax_dy = dy;
                }
            }
    }
};

// Valid-mode cross-correlation of the template over the image on the 8-bit
// integer scale: values[dy][dx] = sum_t template(u,v) · image(dx+u, dy+v).
// Integer accumulation, exact by construction.
inline ScoreMap conv_score_map(const Image& image, const Image& templ) {
    require(image.channels == 1 && templ.channels == 1, errc::argument,
            "conv_score_map needs grayscale inputs");
    require(templ.width <= image.width && templ.height <= image.height, errc::argument,
            "template must not exceed the image");

    std::vector<std::int64_t> img8(image.pixel_count()), tpl8(templ.pixel_count());
    for (size_t i = 0; i < img8.size(); ++i) img8[i] = round_half_away(image.samples[i] * 255.0);
    for (size_t i = 0; i < tpl8.size(); ++i) tpl8[i] = round_half_away(templ.samples[i] * 255.0);

    ScoreMap map;
    map.width = image.width - templ.width + 1;
    map.height = image.height - templ.height + 1;
    map.values.resize(static_cast<size_t>(map.width) * map.height);

    for (int dy = 0; dy < map.height; ++dy) {
        for (int dx = 0; dx < map.width; ++dx) {
            std::int64_t acc = 0;
            for (int v = 0; v < templ.height; ++v) {
                const std::int64_t* trow = tpl8.data() + static_cast<size_t>(v) * templ.width;
                const std::int64_t* irow =
                    img8.data() + static_cast<size_t>(dy + v) * image.width + dx;
                for (int u = 0; u < templ.width; ++u) acc += trow[u] * irow[u];
            }
            map.values[static_cast<size_t>(dy) * map.width + dx] = double(acc);
        }
    }
    map.finish_argmax();
    return map;
}

// Per-offset Pearson correlation of the template against the overlapped
// window (the NCC template-matching criterion). Degenerate windows score 0.
inline ScoreMap ncc_score_map(const Image& image, const Image& templ) {
    require(image.channels == 1 && templ.channels == 1, errc::argument,
            "ncc_score_map needs grayscale inputs");
    require(templ.width <= image.width && templ.height <= image.height, errc::argument,
            "template must not exceed the image");

    double n = double(templ.pixel_count());
    double tmean = 0.0;
    for (double v : templ.samples) tmean += v;
    tmean /= n;
    double tvar = 0.0;
    for (double v : templ.samples) tvar += (v - tmean) * (v - tmean);

    ScoreMap map;
    map.width = image.width - templ.width + 1;
    map.height = image.height - templ.height + 1;
    map.values.assign(static_cast<size_t>(map.width) * map.height, 0.0);
    if (tvar <= 1e-15) {
        map.finish_argmax();
        return map;
    }

    for (int dy = 0; dy < map.height; ++dy) {
        for (int dx = 0; dx < map.width; ++dx) {
            double isum = 0.0, isq = 0.0, cross = 0.0;
            for (int v = 0; v < templ.height; ++v)
                for (int u = 0; u < templ.width; ++u) {
                    double iv = image.at(dx + u, dy + v);
                    double tv = templ.at(u, v);
                    isum += iv;
                    isq += iv * iv;
                    cross += iv * tv;
                }
            double ivar = isq - isum * isum / n;
            if (ivar <= 1e-15) continue;
            double cov = cross - isum * tmean;
            map.values[static_cast<size_t>(dy) * map.width + dx] =
                cov / std::sqrt(ivar * tvar);
        }
    }
    map.finish_argmax();
    return map;
}

} // namespace slidereg
