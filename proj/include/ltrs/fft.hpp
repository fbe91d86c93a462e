#pragma once

#include "ltrs/image.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ltrs {

namespace detail {

template <class T>
struct FftwAllocator {
    using value_type = T;
    FftwAllocator() = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) noexcept {}
    T* allocate(std::size_t n);
    void deallocate(T* p, std::size_t) noexcept;
    template <class U>
    bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

}  // namespace detail

using Complex = std::complex<double>;

/// Half-plane spectrum of a real H x W grid as produced by a real-to-complex
/// transform: H rows by W/2+1 columns. The full spectrum follows from
/// Hermitian symmetry X(r, c) = conj(X(-r, -c)).
///
/// Convention shared by every module: the forward transform is unnormalized
/// with kernel exp(-2*pi*i*k*n/N); the inverse carries the 1/(H*W) factor.
class Spectrum {
public:
    Spectrum() = default;
    Spectrum(int height, int width);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int cols() const noexcept { return width_ / 2 + 1; }

    Complex& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const Complex& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

    /// Value at any column in [0, W), reconstructing the missing half by symmetry.
    Complex full(int row, int col) const noexcept;

    /// How many bins of the full spectrum a stored column stands for (1 or 2).
    int multiplicity(int col) const noexcept { return (col == 0 || 2 * col == width_) ? 1 : 2; }

    std::span<Complex> values() noexcept { return data_; }
    std::span<const Complex> values() const noexcept { return data_; }

    Complex* data() noexcept { return data_.data(); }
    const Complex* data() const noexcept { return data_.data(); }

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<Complex, detail::FftwAllocator<Complex>> data_;
};

Spectrum forward_fft(const Image& img);

/// Real inverse transform, scaled by 1/(H*W). The spectrum is assumed Hermitian.
Image inverse_fft(const Spectrum& spec);

/// Full H x W magnitude |X|, uncentered (DC at index (0, 0)).
Image magnitude(const Spectrum& spec);

}  // namespace ltrs
