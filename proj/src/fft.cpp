#include "ltrs/fft.hpp"

#include "ltrs/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <new>
#include <tuple>

namespace ltrs {

namespace detail {

template <class T>
T* FftwAllocator<T>::allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr && n != 0) throw std::bad_alloc();
    return static_cast<T*>(p);
}

template <class T>
void FftwAllocator<T>::deallocate(T* p, std::size_t) noexcept {
    fftw_free(p);
}

template struct FftwAllocator<Complex>;
template struct FftwAllocator<double>;

}  // namespace detail

namespace {

enum class Direction { Forward, Inverse };

// FFTW planning is not thread-safe while execution with the new-array API is,
// so plans are created once per shape under a lock and then shared. Plans use
// FFTW_ESTIMATE so results are bit-reproducible run to run.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int h, int w, Direction dir) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(h, w, dir);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;

        const std::size_t n_real = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
        const std::size_t n_cplx = static_cast<std::size_t>(h) * static_cast<std::size_t>(w / 2 + 1);
        double* real = fftw_alloc_real(n_real);
        fftw_complex* cplx = fftw_alloc_complex(n_cplx);
        fftw_plan plan = dir == Direction::Forward
                             ? fftw_plan_dft_r2c_2d(h, w, real, cplx, FFTW_ESTIMATE)
                             : fftw_plan_dft_c2r_2d(h, w, cplx, real, FFTW_ESTIMATE);
        fftw_free(real);
        fftw_free(cplx);
        if (plan == nullptr) throw Error(ErrorCode::UnsupportedSize, "FFTW could not plan transform");
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, Direction>, fftw_plan> plans_;
};

using AlignedReal = std::vector<double, detail::FftwAllocator<double>>;

}  // namespace

Spectrum::Spectrum(int height, int width) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) throw Error(ErrorCode::Parameter, "spectrum dimensions must be positive");
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(cols()), Complex{});
}

Complex Spectrum::full(int row, int col) const noexcept {
    if (col < cols()) return (*this)(row, col);
    const int mr = row == 0 ? 0 : height_ - row;
    return std::conj((*this)(mr, width_ - col));
}

Spectrum forward_fft(const Image& img) {
    Spectrum spec(img.height(), img.width());
    AlignedReal in(img.values().begin(), img.values().end());
    fftw_plan plan = PlanCache::instance().get(img.height(), img.width(), Direction::Forward);
    fftw_execute_dft_r2c(plan, in.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    return spec;
}

Image inverse_fft(const Spectrum& spec) {
    // c2r overwrites its input
    std::vector<Complex, detail::FftwAllocator<Complex>> scratch(spec.values().begin(), spec.values().end());
    AlignedReal out(static_cast<std::size_t>(spec.height()) * static_cast<std::size_t>(spec.width()));
    fftw_plan plan = PlanCache::instance().get(spec.height(), spec.width(), Direction::Inverse);
    fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
    const double scale = 1.0 / static_cast<double>(out.size());
    std::vector<double> values(out.size());
    std::transform(out.begin(), out.end(), values.begin(), [scale](double v) { return v * scale; });
    return Image(spec.height(), spec.width(), std::move(values));
}

Image magnitude(const Spectrum& spec) {
    Image out(spec.height(), spec.width());
    for (int r = 0; r < spec.height(); ++r) {
        for (int c = 0; c < spec.width(); ++c) out(r, c) = std::abs(spec.full(r, c));
    }
    return out;
}

}  // namespace ltrs
