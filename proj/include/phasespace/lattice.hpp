#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace phasespace {

using cplx = std::complex<double>;
using Field = std::vector<cplx>;

namespace detail {
struct FftPlans;
}

// Uniform periodic grid on [-x_max, x_max) with its conjugate wavenumber grid.
//
// Points sit at x_j = (j - n/2) dx, so x_{n-j} = -x_j exactly and the grid
// includes -x_max but not +x_max. Wavenumbers use the FFT wrap-around layout
// (0, +dk, ..., -k_max), so k_grid()[j] is the wavenumber of spectrum bin j.
//
// Transforms follow the unnormalised-forward / 1/n-inverse convention:
//   F_m = sum_j f_j exp(-i k_m x'_j),   f_j = (1/n) sum_m F_m exp(+i k_m x'_j)
// with x'_j = j dx. Parseval reads sum |f|^2 dx = (dx / n) sum |F|^2.
class Lattice {
public:
    Lattice(std::size_t n_points, double x_max);

    std::size_t size() const { return n_; }
    int dimension() const { return 1; }
    double x_max() const { return x_max_; }
    double dx() const { return dx_; }
    double dv() const { return dx_; }
    double k_max() const { return k_max_; }

    std::span<const double> x() const { return x_; }
    std::span<const double> k_grid() const { return k_; }

    Field fft_forward(std::span<const cplx> field) const;
    Field fft_inverse(std::span<const cplx> spectrum) const;

    // In-place variants used on the hot path.
    void forward_in_place(std::span<cplx> data) const;
    void inverse_in_place(std::span<cplx> data) const;

    // sum |f|^2 dx
    double norm(std::span<const cplx> field) const;
    // The same quantity evaluated from a forward spectrum.
    double spectral_norm(std::span<const cplx> spectrum) const;

    bool same_grid(const Lattice& other) const
    {
        return n_ == other.n_ && x_max_ == other.x_max_;
    }

private:
    void check_length(std::size_t length) const;

    std::size_t n_;
    double x_max_;
    double dx_;
    double k_max_;
    std::vector<double> x_;
    std::vector<double> k_;
    std::shared_ptr<const detail::FftPlans> plans_;
};

Lattice make_lattice(std::size_t n_points, double x_max);

} // namespace phasespace
