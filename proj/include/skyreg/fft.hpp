#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "skyreg/raster.hpp"

namespace skyreg {

struct ComplexSpectrum {
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> data;  // row-major

    std::complex<double>& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::complex<double> at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct SpectralConfig {
    double log_offset = 1.0;      // added inside the log to bound it below
    bool highpass_enabled = true;
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Iterative radix-2 plan for one transform length. The twiddle tables are
/// immutable after construction and may be shared across threads.
class FftPlan {
public:
    explicit FftPlan(int n) : n_(n) {
        if (!is_power_of_two(n)) throw std::invalid_argument("FftPlan: size must be a power of two");
        int log_n = 0;
        while ((1 << log_n) < n_) ++log_n;
        reversed_.assign(static_cast<std::size_t>(n_), 0);
        for (int i = 1; i < n_; ++i)
            reversed_[static_cast<std::size_t>(i)] =
                (reversed_[static_cast<std::size_t>(i >> 1)] >> 1) | ((i & 1) << (log_n - 1));
        twiddles_.resize(static_cast<std::size_t>(n_ / 2));
        for (int k = 0; k < n_ / 2; ++k)
            twiddles_[static_cast<std::size_t>(k)] = std::polar(1.0, -2.0 * std::numbers::pi * k / n_);
    }

    int size() const { return n_; }

    /// In-place transform of n elements spaced `stride` apart. The forward
    /// kernel is exp(-2*pi*i*k/n); the inverse is unnormalized.
    void transform(std::complex<double>* a, std::size_t stride, bool inverse) const {
        for (int i = 0; i < n_; ++i) {
            const int j = reversed_[static_cast<std::size_t>(i)];
            if (i < j) std::swap(a[static_cast<std::size_t>(i) * stride], a[static_cast<std::size_t>(j) * stride]);
        }
        for (int len = 2; len <= n_; len <<= 1) {
            const int half = len >> 1;
            const int step = n_ / len;
            for (int base = 0; base < n_; base += len) {
                for (int k = 0; k < half; ++k) {
                    std::complex<double> w = twiddles_[static_cast<std::size_t>(k) * step];
                    if (inverse) w = std::conj(w);
                    std::complex<double>& lo = a[static_cast<std::size_t>(base + k) * stride];
                    std::complex<double>& hi = a[static_cast<std::size_t>(base + k + half) * stride];
                    const std::complex<double> v = hi * w;
                    hi = lo - v;
                    lo += v;
                }
            }
        }
    }

private:
    int n_;
    std::vector<int> reversed_;
    std::vector<std::complex<double>> twiddles_;
};

namespace detail {

inline const FftPlan& shared_plan(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<FftPlan>> cache;
    const std::scoped_lock lock(mutex);
    std::unique_ptr<FftPlan>& slot = cache[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

inline void transform_2d(ComplexSpectrum& spec, bool inverse) {
    const FftPlan& row_plan = shared_plan(spec.width);
    const FftPlan& col_plan = shared_plan(spec.height);
    for (int y = 0; y < spec.height; ++y)
        row_plan.transform(&spec.data[static_cast<std::size_t>(y) * spec.width], 1, inverse);
    for (int x = 0; x < spec.width; ++x)
        col_plan.transform(&spec.data[static_cast<std::size_t>(x)], static_cast<std::size_t>(spec.width), inverse);
}

}  // namespace detail

/// Unnormalized forward 2-D DFT. Dimensions must be powers of two.
inline ComplexSpectrum dft2(const Raster& image) {
    if (!is_power_of_two(image.width) || !is_power_of_two(image.height))
        throw std::invalid_argument("dft2: dimensions must be powers of two");
    ComplexSpectrum spec;
    spec.width = image.width;
    spec.height = image.height;
    spec.data.assign(image.data.begin(), image.data.end());
    detail::transform_2d(spec, false);
    return spec;
}

/// Inverse 2-D DFT with 1/(w*h) normalization; idft2(dft2(x)) == x.
inline ComplexSpectrum idft2(const ComplexSpectrum& spec) {
    if (!is_power_of_two(spec.width) || !is_power_of_two(spec.height))
        throw std::invalid_argument("idft2: dimensions must be powers of two");
    if (spec.data.size() != static_cast<std::size_t>(spec.width) * spec.height)
        throw std::invalid_argument("idft2: malformed spectrum");
    ComplexSpectrum out = spec;
    detail::transform_2d(out, true);
    const double norm = 1.0 / (static_cast<double>(spec.width) * spec.height);
    for (std::complex<double>& v : out.data) v *= norm;
    return out;
}

/// Quadrant swap moving the zero-frequency bin to (w/2, h/2). Self-inverse
/// for even dimensions.
inline Raster fftshift(const Raster& in) {
    if (in.width % 2 != 0 || in.height % 2 != 0)
        throw std::invalid_argument("fftshift: dimensions must be even");
    Raster out(in.width, in.height);
    const int hw = in.width / 2;
    const int hh = in.height / 2;
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            out.at(x, y) = in.at((x + hw) % in.width, (y + hh) % in.height);
    return out;
}

inline ComplexSpectrum fftshift(const ComplexSpectrum& in) {
    if (in.width % 2 != 0 || in.height % 2 != 0)
        throw std::invalid_argument("fftshift: dimensions must be even");
    ComplexSpectrum out;
    out.width = in.width;
    out.height = in.height;
    out.data.resize(in.data.size());
    const int hw = in.width / 2;
    const int hh = in.height / 2;
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            out.at(x, y) = in.at((x + hw) % in.width, (y + hh) % in.height);
    return out;
}

/// Per-bin log(log_offset + |F|). Invariant under circular shifts of the
/// spatial image.
inline Raster log_magnitude(const ComplexSpectrum& spec, const SpectralConfig& cfg = {}) {
    if (!(cfg.log_offset > 0.0)) throw std::invalid_argument("log_magnitude: log_offset must be positive");
    Raster out(spec.width, spec.height);
    for (std::size_t i = 0; i < spec.data.size(); ++i)
        out.data[i] = std::log(cfg.log_offset + std::abs(spec.data[i]));
    return out;
}

/// Raised-cosine emphasis for a centred magnitude field:
/// H = (1 - cos(pi xi) cos(pi eta)) * (2 - cos(pi xi) cos(pi eta)),
/// xi, eta in [-0.5, 0.5). Zero at DC, at most 2 anywhere.
inline Raster highpass(const Raster& mag) {
    if (mag.width % 2 != 0 || mag.height % 2 != 0)
        throw std::invalid_argument("highpass: dimensions must be even");
    Raster out(mag.width, mag.height);
    for (int y = 0; y < mag.height; ++y) {
        const double eta = static_cast<double>(y - mag.height / 2) / mag.height;
        const double cy = std::cos(std::numbers::pi * eta);
        for (int x = 0; x < mag.width; ++x) {
            const double xi = static_cast<double>(x - mag.width / 2) / mag.width;
            const double u = std::cos(std::numbers::pi * xi) * cy;
            out.at(x, y) = mag.at(x, y) * (1.0 - u) * (2.0 - u);
        }
    }
    return out;
}

}  // namespace skyreg
