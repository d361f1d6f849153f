#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "slidereg/composite.hpp"
#include "slidereg/image.hpp"
#include "slidereg/prng.hpp"

namespace testsup {

// Gray image from 8-bit values, row-major.
inline slidereg::Image gray_image(int w, int h, const std::vector<int>& v8, double mpp = 1.0) {
    slidereg::Image img(w, h, 1, mpp);
    for (size_t i = 0; i < v8.size(); ++i) img.samples[i] = v8[i] / 255.0;
    return img;
}

inline slidereg::Image constant_image(int w, int h, int v8, double mpp = 1.0) {
    slidereg::Image img(w, h, 1, mpp);
    for (auto& s : img.samples) s = v8 / 255.0;
    return img;
}

// Smooth band-limited random field in [0,1]: a few random sinusoids. Good
// gradient structure for NGF tests.
inline slidereg::Image smooth_random_image(int w, int h, std::uint64_t seed, int waves = 6) {
    slidereg::PrngStream rng(seed, 42);
    slidereg::Image img(w, h, 1, 1.0);
    std::vector<double> fx(waves), fy(waves), ph(waves), amp(waves);
    for (int k = 0; k < waves; ++k) {
        fx[k] = rng.uniform(0.3, 3.0) / w;
        fy[k] = rng.uniform(0.3, 3.0) / h;
        ph[k] = rng.uniform(0.0, 6.283185307179586);
        amp[k] = rng.uniform(0.3, 1.0);
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = 0.0;
            for (int k = 0; k < waves; ++k)
                v += amp[k] * std::sin(6.283185307179586 * (fx[k] * x + fy[k] * y) + ph[k]);
            img.at(x, y) = 0.5 + 0.5 * v / waves;
        }
    return img;
}

inline slidereg::Image random_quantized_image(int w, int h, std::uint64_t seed, int channels = 1) {
    slidereg::PrngStream rng(seed, 7);
    slidereg::Image img(w, h, channels, 0.25 + rng.uniform());
    for (auto& s : img.samples) s = double(rng.uniform_int(256)) / 255.0;
    return img;
}

// Tissue-like test content in the inverted convention: zero background with
// bright textured elliptical blobs. Returns the image and its foreground mask.
struct BlobScene {
    slidereg::Image image;
    slidereg::Mask mask;
};

// position-hashed noise in [0,1); pure function of (seed, x, y)
inline double speckle_at(std::uint64_t seed, int x, int y) {
    slidereg::PrngStream s(seed, 0x5eed0000ull + std::uint64_t(x) * 131071ull + std::uint64_t(y));
    return s.uniform();
}

// Blob interiors carry low-frequency shading plus nuclei-like smooth dark
// bumps (2-D structure with a few-px correlation length, so motion is pinned
// in both axes and the NGF basin stays wide). speckle_amp adds per-pixel
// noise on top, for convolution-matching tests that want a sharply peaked
// autocorrelation.
inline BlobScene blob_scene(int w, int h, std::uint64_t seed, int n_blobs = 3,
                            double speckle_amp = 0.0) {
    slidereg::PrngStream rng(seed, 19);
    slidereg::Image img(w, h, 1, 1.0);
    slidereg::Mask mask(w, h);
    struct Blob {
        double cx, cy, rx, ry, ang, fx, fy, ph;
    };
    std::vector<Blob> blobs;
    std::vector<double> darken(size_t(w) * h, 0.0);
    for (int i = 0; i < n_blobs; ++i) {
        Blob b;
        b.cx = rng.uniform(0.3, 0.7) * w;
        b.cy = rng.uniform(0.3, 0.7) * h;
        b.rx = rng.uniform(0.10, 0.18) * std::min(w, h);
        b.ry = rng.uniform(0.10, 0.18) * std::min(w, h);
        b.ang = rng.uniform(0.0, 3.14159);
        b.fx = rng.uniform(0.5, 2.0) / b.rx;
        b.fy = rng.uniform(0.5, 2.0) / b.ry;
        b.ph = rng.uniform(0.0, 6.28318);
        blobs.push_back(b);

        int n_nuclei = int(b.rx * b.ry / 12.0) + 4;
        for (int k = 0; k < n_nuclei; ++k) {
            double a = rng.uniform(0.0, 6.28318), r = std::sqrt(rng.uniform(0.0, 0.81));
            double nx = b.cx + r * b.rx * std::cos(a), ny = b.cy + r * b.ry * std::sin(a);
            double sig = rng.uniform(1.2, 2.4), depth = rng.uniform(0.2, 0.4);
            int rad = int(3 * sig) + 1;
            for (int yy = std::max(0, int(ny) - rad); yy <= std::min(h - 1, int(ny) + rad); ++yy)
                for (int xx = std::max(0, int(nx) - rad); xx <= std::min(w - 1, int(nx) + rad); ++xx) {
                    double d2 = (xx - nx) * (xx - nx) + (yy - ny) * (yy - ny);
                    darken[size_t(yy) * w + xx] += depth * std::exp(-d2 / (2 * sig * sig));
                }
        }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            for (const Blob& b : blobs) {
                double dx = x - b.cx, dy = y - b.cy;
                double c = std::cos(b.ang), s = std::sin(b.ang);
                double u = (c * dx + s * dy) / b.rx, v = (-s * dx + c * dy) / b.ry;
                if (u * u + v * v <= 1.0) {
                    double tex = 0.75 + 0.15 * std::sin(6.28318 * (b.fx * dx + b.fy * dy) + b.ph) -
                                 darken[size_t(y) * w + x] +
                                 speckle_amp * (2.0 * speckle_at(seed, x, y) - 1.0);
                    img.at(x, y) = std::max(img.at(x, y), std::clamp(tex, 0.05, 1.0));
                    mask.set(x, y, true);
                }
            }
        }
    return {std::move(img), std::move(mask)};
}

// Moving image consistent with a reference->moving pull-back y:
// M(z) = F(y^{-1}(z)). For composites the inverse is found per pixel by
// fixed-point iteration.
inline slidereg::Image synth_moving(const slidereg::Image& fixed,
                                    const slidereg::CompositeTransform& y, int w, int h) {
    slidereg::Image out(w, h, 1, fixed.mpp);
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
            slidereg::InvertedPoint q =
                slidereg::invert_point(y, {double(xx), double(yy)}, 1e-8, 200);
            out.at(xx, yy) = slidereg::sample_bilinear(fixed, q.point.x, q.point.y);
        }
    return out;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("slidereg_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::filesystem::path path() const { return path_; }
    std::string str(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace testsup
