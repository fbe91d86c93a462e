#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the FFT path of the library.

#include "ltrs/image.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace ltrs::oracle {

inline Image random_frame(int h, int w, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w);
    for (double& v : img.values()) v = u(gen);
    return img;
}

/// Smooth-ish random texture: sum of random Gaussian blobs on a base level.
inline Image blob_texture(int h, int w, unsigned seed, int blobs = 40) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w, 0.2);
    for (int b = 0; b < blobs; ++b) {
        const double cy = u(gen) * h, cx = u(gen) * w, s = 1.5 + 4.0 * u(gen), a = 0.5 * u(gen);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                // periodic distance so the texture tiles
                double dy = std::abs(r - cy), dx = std::abs(c - cx);
                dy = std::min(dy, h - dy);
                dx = std::min(dx, w - dx);
                img(r, c) += a * std::exp(-(dx * dx + dy * dy) / (2 * s * s));
            }
    }
    return img;
}

/// out(y, x) = sum_{u, v} o(u, v) * a((y - u) mod H, (x - v) mod W)
inline Image circular_convolution(const Image& o, const Image& a) {
    const int h = o.height(), w = o.width();
    Image out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int u = 0; u < h; ++u)
                for (int v = 0; v < w; ++v) acc += o(u, v) * a(((y - u) % h + h) % h, ((x - v) % w + w) % w);
            out(y, x) = acc;
        }
    return out;
}

/// Full zero-padded linear convolution, then the window starting at (H/2, W/2).
inline Image linear_convolution_central(const Image& o, const Image& a) {
    const int h = o.height(), w = o.width();
    Image out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int fy = y + h / 2, fx = x + w / 2;
            double acc = 0.0;
            for (int u = 0; u < h; ++u) {
                const int ky = fy - u;
                if (ky < 0 || ky >= h) continue;
                for (int v = 0; v < w; ++v) {
                    const int kx = fx - v;
                    if (kx < 0 || kx >= w) continue;
                    acc += o(u, v) * a(ky, kx);
                }
            }
            out(y, x) = acc;
        }
    return out;
}

struct Shift {
    int dx = 0;
    int dy = 0;
};

/// argmax_k sum_p (f1(p) - mean1) * (f2(p + k) - mean2), k wrapped to [-N/2, N/2).
inline Shift xcorr_argmax(const Image& f1, const Image& f2) {
    const int h = f1.height(), w = f1.width();
    const double m1 = mean(f1), m2 = mean(f2);
    double best = -1e300;
    Shift s;
    for (int ky = 0; ky < h; ++ky)
        for (int kx = 0; kx < w; ++kx) {
            double acc = 0.0;
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) acc += (f1(r, c) - m1) * (f2((r + ky) % h, (c + kx) % w) - m2);
            if (acc > best) {
                best = acc;
                s = {kx >= w / 2 ? kx - w : kx, ky >= h / 2 ? ky - h : ky};
            }
        }
    return s;
}

/// Dead-leaves scene: occluding disks with power-law radii, a common stand-in
/// for the spectral statistics of natural images.
inline Image dead_leaves(int h, int w, unsigned seed, int count = 400) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w, 0.5);
    const double r_min = 1.5, r_max = std::min(h, w) / 4.0;
    for (int k = 0; k < count; ++k) {
        // density ~ 1/r^3 between r_min and r_max
        const double a = 1.0 / (r_min * r_min), b = 1.0 / (r_max * r_max);
        const double r = 1.0 / std::sqrt(a - u(gen) * (a - b));
        const double cy = u(gen) * h, cx = u(gen) * w, v = u(gen);
        for (int y = static_cast<int>(cy - r); y <= static_cast<int>(cy + r); ++y)
            for (int x = static_cast<int>(cx - r); x <= static_cast<int>(cx + r); ++x) {
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) > r * r) continue;
                img(((y % h) + h) % h, ((x % w) + w) % w) = v;
            }
    }
    return img;
}

struct Blob {
    double y, x, sigma, amp;
};

inline std::vector<Blob> random_blobs(int count, double radius, unsigned seed, double sigma_lo = 1.2,
                                      double sigma_hi = 3.0) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Blob> blobs;
    while (static_cast<int>(blobs.size()) < count) {
        const double y = (2 * u(gen) - 1) * radius, x = (2 * u(gen) - 1) * radius;
        if (x * x + y * y > radius * radius) continue;
        blobs.push_back({y, x, sigma_lo + (sigma_hi - sigma_lo) * u(gen), 0.3 + 0.7 * u(gen)});
    }
    return blobs;
}

/// Analytic rendering of the blob scene rotated by `angle` (from +x towards +y)
/// and scaled by `scale` about the frame centre (H/2, W/2).
inline Image render_blobs(const std::vector<Blob>& blobs, int h, int w, double angle, double scale) {
    Image img(h, w, 0.0);
    const double c = std::cos(angle), s = std::sin(angle);
    for (const auto& b : blobs) {
        const double by = h / 2 + scale * (s * b.x + c * b.y);
        const double bx = w / 2 + scale * (c * b.x - s * b.y);
        const double sig = b.sigma * scale;
        for (int r = 0; r < h; ++r)
            for (int col = 0; col < w; ++col) {
                const double dy = r - by, dx = col - bx;
                img(r, col) += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * sig * sig));
            }
    }
    return img;
}

/// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> x, std::size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    return (fp - fm) / (2 * h);
}

}  // namespace ltrs::oracle
