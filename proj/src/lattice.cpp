#include "phasespace/lattice.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace phasespace {

namespace detail {

namespace {
// FFTW's planner is not thread-safe; execution with new-array is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace

struct FftPlans {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;

    explicit FftPlans(std::size_t n)
    {
        std::vector<cplx> scratch(n);
        auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
        const int size = static_cast<int>(n);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard lock(planner_mutex());
        forward = fftw_plan_dft_1d(size, data, data, FFTW_FORWARD, flags);
        inverse = fftw_plan_dft_1d(size, data, data, FFTW_BACKWARD, flags);
        if (forward == nullptr || inverse == nullptr) {
            throw std::runtime_error("FFTW planning failed for n = " + std::to_string(n));
        }
    }

    ~FftPlans()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(inverse);
    }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;
};

} // namespace detail

Lattice::Lattice(std::size_t n_points, double x_max) : n_(n_points), x_max_(x_max)
{
    if (n_points < 2 || n_points % 2 != 0) {
        throw std::invalid_argument("lattice point count must be even and >= 2, got " +
                                    std::to_string(n_points));
    }
    if (!std::isfinite(x_max) || x_max <= 0.0) {
        throw std::invalid_argument("lattice half-width must be finite and positive");
    }
    dx_ = 2.0 * x_max / static_cast<double>(n_);
    k_max_ = std::numbers::pi / dx_;

    const auto half = static_cast<long>(n_ / 2);
    const double dk = 2.0 * std::numbers::pi / (2.0 * x_max);
    x_.resize(n_);
    k_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        const auto index = static_cast<long>(j);
        x_[j] = static_cast<double>(index - half) * dx_;
        const long wrapped = index < half ? index : index - static_cast<long>(n_);
        k_[j] = static_cast<double>(wrapped) * dk;
    }
    plans_ = std::make_shared<const detail::FftPlans>(n_);
}

Lattice make_lattice(std::size_t n_points, double x_max)
{
    return Lattice(n_points, x_max);
}

void Lattice::check_length(std::size_t length) const
{
    if (length != n_) {
        throw std::invalid_argument("array length " + std::to_string(length) +
                                    " does not match lattice size " + std::to_string(n_));
    }
}

void Lattice::forward_in_place(std::span<cplx> data) const
{
    check_length(data.size());
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plans_->forward, p, p);
}

void Lattice::inverse_in_place(std::span<cplx> data) const
{
    check_length(data.size());
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plans_->inverse, p, p);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : data) {
        v *= scale;
    }
}

Field Lattice::fft_forward(std::span<const cplx> field) const
{
    Field out(field.begin(), field.end());
    forward_in_place(out);
    return out;
}

Field Lattice::fft_inverse(std::span<const cplx> spectrum) const
{
    Field out(spectrum.begin(), spectrum.end());
    inverse_in_place(out);
    return out;
}

double Lattice::norm(std::span<const cplx> field) const
{
    check_length(field.size());
    double sum = 0.0;
    for (const auto& v : field) {
        sum += std::norm(v);
    }
    return sum * dx_;
}

double Lattice::spectral_norm(std::span<const cplx> spectrum) const
{
    check_length(spectrum.size());
    double sum = 0.0;
    for (const auto& v : spectrum) {
        sum += std::norm(v);
    }
    return sum * dx_ / static_cast<double>(n_);
}

} // namespace phasespace
