#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ltrs {

/// Dense row-major 2D grid of doubles. Scene frames, CA observations,
/// correlation maps and autocorrelations all use this representation.
class Image {
public:
    Image() = default;
    Image(int height, int width, double fill = 0.0);
    Image(int height, int width, std::vector<double> values);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    double operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> row(int r) noexcept { return {data_.data() + index(r, 0), static_cast<std::size_t>(width_)}; }
    std::span<const double> row(int r) const noexcept {
        return {data_.data() + index(r, 0), static_cast<std::size_t>(width_)};
    }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

using Frame = Image;

double sum(const Image& img);
double mean(const Image& img);
double max_value(const Image& img);
double min_value(const Image& img);
bool all_finite(const Image& img);

/// ||a - b||_2 / ||b||_2; returns ||a||_2 when b is identically zero.
double relative_l2(const Image& a, const Image& b);
double max_abs_diff(const Image& a, const Image& b);

struct Peak {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// First maximum in row-major order.
Peak argmax(const Image& img);

/// out(r, c) = in(r - dy, c - dx) with periodic wrap: content moves by (+dx, +dy).
Image circshift(const Image& img, int dx, int dy);

/// Swap quadrants so that index (0, 0) lands on (H/2, W/2).
Image fftshift(const Image& img);
Image ifftshift(const Image& img);

Image flip_vertical(const Image& img);
Image flip_horizontal(const Image& img);

/// Central height x width window; offsets are floor((H - height) / 2).
Image crop_center(const Image& img, int height, int width);
Image crop(const Image& img, int top, int left, int height, int width);

/// Bilinear lookup with (row, col) in pixel coordinates; outside the grid returns `outside`.
double sample_bilinear(const Image& img, double row, double col, double outside = 0.0);

/// Bilinear resampling with pixel-centre alignment (edge-clamped).
Image resize_bilinear(const Image& img, int height, int width);

/// Linear resampling of the row axis only.
Image resize_rows(const Image& img, int height);

Image scaled(const Image& img, double factor);

}  // namespace ltrs
