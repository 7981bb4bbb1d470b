#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <span>
#include <tuple>
#include <vector>

namespace chaoslab::fft {

// Thin RAII layer over FFTW. Plans are created once per (kind, size) under a
// global mutex (FFTW's planner is not thread-safe) and executed through the
// new-array interface, which is. FFTW_ESTIMATE keeps plan choice, and hence
// rounding, identical from run to run.

template <typename T>
class AlignedBuffer {
public:
    explicit AlignedBuffer(std::size_t n) : n_(n), data_(static_cast<T*>(fftw_malloc(sizeof(T) * (n ? n : 1)))) {
        if (!data_) throw std::bad_alloc();
        std::memset(static_cast<void*>(data_), 0, sizeof(T) * n_);
    }
    AlignedBuffer(const AlignedBuffer&) = delete;
    AlignedBuffer& operator=(const AlignedBuffer&) = delete;
    AlignedBuffer(AlignedBuffer&& o) noexcept : n_(o.n_), data_(o.data_) { o.data_ = nullptr; o.n_ = 0; }
    ~AlignedBuffer() { if (data_) fftw_free(data_); }

    T* data() noexcept { return data_; }
    const T* data() const noexcept { return data_; }
    std::size_t size() const noexcept { return n_; }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }
    std::span<T> span() noexcept { return {data_, n_}; }

private:
    std::size_t n_;
    T* data_;
};

using RealBuffer = AlignedBuffer<double>;
using ComplexBuffer = AlignedBuffer<fftw_complex>;

namespace detail {

enum class PlanKind { R2C, C2R, Forward, Backward };

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

inline fftw_plan cached_plan(PlanKind kind, std::size_t n) {
    static std::map<std::pair<int, std::size_t>, fftw_plan> cache;
    std::lock_guard lock(planner_mutex());
    const auto key = std::make_pair(static_cast<int>(kind), n);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const int len = static_cast<int>(n);
    fftw_plan plan = nullptr;
    switch (kind) {
    case PlanKind::R2C: {
        RealBuffer in(n);
        ComplexBuffer out(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(len, in.data(), out.data(), FFTW_ESTIMATE);
        break;
    }
    case PlanKind::C2R: {
        ComplexBuffer in(n / 2 + 1);
        RealBuffer out(n);
        plan = fftw_plan_dft_c2r_1d(len, in.data(), out.data(), FFTW_ESTIMATE);
        break;
    }
    case PlanKind::Forward:
    case PlanKind::Backward: {
        ComplexBuffer in(n);
        ComplexBuffer out(n);
        plan = fftw_plan_dft_1d(len, in.data(), out.data(),
                                kind == PlanKind::Forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
        break;
    }
    }
    cache.emplace(key, plan);
    return plan;
}

} // namespace detail

/// out[k] = sum_j in[j] e^{-2 pi i jk/n}, k = 0..n/2. `in` is clobbered for c2r only.
inline void r2c(RealBuffer& in, ComplexBuffer& out) {
    fftw_execute_dft_r2c(detail::cached_plan(detail::PlanKind::R2C, in.size()), in.data(), out.data());
}

/// Unnormalized inverse of r2c: out[j] = sum_k in[k] e^{+2 pi i jk/n} over the Hermitian extension.
/// FFTW destroys the input array for c2r transforms.
inline void c2r(ComplexBuffer& in, RealBuffer& out) {
    fftw_execute_dft_c2r(detail::cached_plan(detail::PlanKind::C2R, out.size()), in.data(), out.data());
}

inline void forward(ComplexBuffer& in, ComplexBuffer& out) {
    fftw_execute_dft(detail::cached_plan(detail::PlanKind::Forward, in.size()), in.data(), out.data());
}

inline void backward(ComplexBuffer& in, ComplexBuffer& out) {
    fftw_execute_dft(detail::cached_plan(detail::PlanKind::Backward, in.size()), in.data(), out.data());
}

/// Convenience: unnormalized complex DFT of a std::complex vector.
inline std::vector<std::complex<double>> dft(std::span<const std::complex<double>> x, bool inverse = false) {
    const std::size_t n = x.size();
    ComplexBuffer in(n);
    ComplexBuffer out(n);
    for (std::size_t i = 0; i < n; ++i) {
        in[i][0] = x[i].real();
        in[i][1] = x[i].imag();
    }
    inverse ? backward(in, out) : forward(in, out);
    std::vector<std::complex<double>> result(n);
    for (std::size_t i = 0; i < n; ++i) result[i] = {out[i][0], out[i][1]};
    return result;
}

} // namespace chaoslab::fft
