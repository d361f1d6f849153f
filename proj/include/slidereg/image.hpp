#pragma once

#include <cstdint>
#include <vector>

#include "slidereg/errors.hpp"
#include "slidereg/numfmt.hpp"

namespace slidereg {

// 2-D raster. Samples are stored row-major as unit-interval reals; file IO
// quantizes to 8 bits. mpp (microns per pixel) converts px distances to µm.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1; // 1 = gray, 3 = RGB
    double mpp = 1.0;
    std::vector<double> samples;

    Image() = default;
    Image(int w, int h, int c, double mpp_ = 1.0, double fill = 0.0)
        : width(w), height(h), channels(c), mpp(mpp_),
          samples(static_cast<size_t>(w) * h * c, fill) {
        require(w > 0 && h > 0, errc::argument, "image dimensions must be positive");
        require(c == 1 || c == 3, errc::argument, "channels must be 1 or 3");
        require(mpp_ > 0.0 && std::isfinite(mpp_), errc::argument, "mpp must be positive and finite");
    }

    size_t index(int x, int y, int c = 0) const {
        return (static_cast<size_t>(y) * width + x) * channels + c;
    }
    double at(int x, int y, int c = 0) const { return samples[index(x, y, c)]; }
    double& at(int x, int y, int c = 0) { return samples[index(x, y, c)]; }

    // 8-bit view of a stored sample (samples written by IO are k/255 exactly).
    int at8(int x, int y, int c = 0) const { return round_half_away(at(x, y, c) * 255.0); }

    bool same_geometry(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
    int max_dim() const { return width > height ? width : height; }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// Binary foreground raster.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    Mask(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }

    size_t foreground_count() const {
        size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }
    bool empty_foreground() const { return foreground_count() == 0; }
};

// Coarse-to-fine image stack; level 0 is the source image itself.
struct Pyramid {
    std::vector<Image> levels;
    int factor = 2;

    const Image& level(size_t i) const { return levels[i]; }
    size_t count() const { return levels.size(); }
};

} // namespace slidereg
