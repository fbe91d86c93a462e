#include "ltrs/image.hpp"

#include "ltrs/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ltrs {

namespace {

int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                        " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
    }
}

}  // namespace

Image::Image(int height, int width, double fill) : height_(height), width_(width) {
    if (height < 0 || width < 0) throw Error(ErrorCode::Parameter, "negative image dimensions");
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

Image::Image(int height, int width, std::vector<double> values)
    : height_(height), width_(width), data_(std::move(values)) {
    if (height < 0 || width < 0 ||
        data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw Error(ErrorCode::DimensionMismatch, "pixel buffer does not match image dimensions");
    }
}

double sum(const Image& img) {
    auto v = img.values();
    return std::accumulate(v.begin(), v.end(), 0.0);
}

double mean(const Image& img) { return img.empty() ? 0.0 : sum(img) / static_cast<double>(img.size()); }

double max_value(const Image& img) {
    auto v = img.values();
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double min_value(const Image& img) {
    auto v = img.values();
    return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

bool all_finite(const Image& img) {
    auto v = img.values();
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double relative_l2(const Image& a, const Image& b) {
    require_same_shape(a, b, "relative_l2");
    double num = 0.0;
    double den = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double d = va[i] - vb[i];
        num += d * d;
        den += vb[i] * vb[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double max_abs_diff(const Image& a, const Image& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
    return m;
}

Peak argmax(const Image& img) {
    Peak p;
    p.value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            if (img(r, c) > p.value) p = {r, c, img(r, c)};
        }
    }
    return p;
}

Image circshift(const Image& img, int dx, int dy) {
    Image out(img.height(), img.width());
    const int h = img.height();
    const int w = img.width();
    for (int r = 0; r < h; ++r) {
        const int sr = wrap(r - dy, h);
        for (int c = 0; c < w; ++c) out(r, c) = img(sr, wrap(c - dx, w));
    }
    return out;
}

Image fftshift(const Image& img) { return circshift(img, img.width() / 2, img.height() / 2); }

Image ifftshift(const Image& img) { return circshift(img, -(img.width() / 2), -(img.height() / 2)); }

Image flip_vertical(const Image& img) {
    Image out(img.height(), img.width());
    for (int r = 0; r < img.height(); ++r) {
        auto src = img.row(img.height() - 1 - r);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.height(), img.width());
    for (int r = 0; r < img.height(); ++r) {
        auto src = img.row(r);
        std::reverse_copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

Image crop(const Image& img, int top, int left, int height, int width) {
    if (top < 0 || left < 0 || height < 0 || width < 0 || top + height > img.height() ||
        left + width > img.width()) {
        throw Error(ErrorCode::Parameter, "crop window outside image");
    }
    Image out(height, width);
    for (int r = 0; r < height; ++r) {
        auto src = img.row(top + r).subspan(static_cast<std::size_t>(left), static_cast<std::size_t>(width));
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

Image crop_center(const Image& img, int height, int width) {
    return crop(img, (img.height() - height) / 2, (img.width() - width) / 2, height, width);
}

double sample_bilinear(const Image& img, double row, double col, double outside) {
    if (!(row >= 0.0 && col >= 0.0 && row <= img.height() - 1 && col <= img.width() - 1)) return outside;
    const int r0 = static_cast<int>(row);
    const int c0 = static_cast<int>(col);
    const int r1 = std::min(r0 + 1, img.height() - 1);
    const int c1 = std::min(c0 + 1, img.width() - 1);
    const double fr = row - r0;
    const double fc = col - c0;
    const double top = img(r0, c0) * (1.0 - fc) + img(r0, c1) * fc;
    const double bot = img(r1, c0) * (1.0 - fc) + img(r1, c1) * fc;
    return top * (1.0 - fr) + bot * fr;
}

Image resize_bilinear(const Image& img, int height, int width) {
    if (height <= 0 || width <= 0) throw Error(ErrorCode::Parameter, "resize target must be positive");
    if (height == img.height() && width == img.width()) return img;
    Image out(height, width);
    const double sy = static_cast<double>(img.height()) / height;
    const double sx = static_cast<double>(img.width()) / width;
    for (int r = 0; r < height; ++r) {
        const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        for (int c = 0; c < width; ++c) {
            const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            out(r, c) = sample_bilinear(img, y, x);
        }
    }
    return out;
}

Image resize_rows(const Image& img, int height) {
    if (height <= 0) throw Error(ErrorCode::Parameter, "resize target must be positive");
    if (height == img.height()) return img;
    Image out(height, img.width());
    const double sy = static_cast<double>(img.height()) / height;
    for (int r = 0; r < height; ++r) {
        const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int r0 = static_cast<int>(y);
        const int r1 = std::min(r0 + 1, img.height() - 1);
        const double f = y - r0;
        auto a = img.row(r0);
        auto b = img.row(r1);
        auto dst = out.row(r);
        for (int c = 0; c < img.width(); ++c) dst[c] = a[c] * (1.0 - f) + b[c] * f;
    }
    return out;
}

Image scaled(const Image& img, double factor) {
    Image out = img;
    for (double& v : out.values()) v *= factor;
    return out;
}

}  // namespace ltrs
