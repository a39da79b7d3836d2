#include "phasespace/diffraction_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace phasespace {

cplx exact_field(const GaussianBeam& beam, double t, double x)
{
    const cplx width2(beam.sigma * beam.sigma, t);
    return beam.amplitude * beam.sigma / std::sqrt(width2) * std::exp(-x * x / (2.0 * width2));
}

Field exact_field(const GaussianBeam& beam, double t, const Lattice& lattice)
{
    Field out;
    out.reserve(lattice.size());
    for (double x : lattice.x()) {
        out.push_back(exact_field(beam, t, x));
    }
    return out;
}

LogPsiSeries LogPsiSeries::gaussian(double sigma)
{
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("beam width must be positive");
    }
    return {{cplx{0.0, 0.0}, cplx{1.0 / (2.0 * sigma * sigma), 0.0}}};
}

std::vector<cplx> beta_coefficients(const LogPsiSeries& series)
{
    const auto& a = series.alphas;
    std::vector<cplx> beta(a.size());
    for (std::size_t q = 1; q < a.size(); ++q) {
        cplx sum{0.0, 0.0};
        for (std::size_t j = 1; j <= q; ++j) {
            const std::size_t l = q + 1 - j;
            if (l < a.size()) {
                sum += static_cast<double>(2 * j) * static_cast<double>(2 * l) * a[j] * a[l];
            }
        }
        beta[q] = 0.5 * sum;
    }
    return beta;
}

std::vector<cplx> series_derivative(const LogPsiSeries& series, const std::vector<cplx>& gammas)
{
    const auto& a = series.alphas;
    if (gammas.size() != a.size()) {
        throw std::invalid_argument("absorber coefficient count does not match series order");
    }
    const auto beta = beta_coefficients(series);
    const cplx i{0.0, 1.0};
    std::vector<cplx> d(a.size());
    for (std::size_t q = 0; q < a.size(); ++q) {
        const cplx next = q + 1 < a.size() ? a[q + 1] : cplx{};
        const double qq = static_cast<double>(q);
        d[q] = gammas[q] - i * beta[q] + 0.5 * i * (2.0 * qq + 2.0) * (2.0 * qq + 1.0) * next;
    }
    return d;
}

LogPsiSeries series_evolve(const LogPsiSeries& initial, const AbsorberCoefficients& gammas,
                           double t_final, double dt,
                           const std::function<void(double, const LogPsiSeries&)>& on_step)
{
    if (!(dt > 0.0) || !(t_final >= 0.0)) {
        throw std::invalid_argument("series_evolve needs dt > 0 and t_final >= 0");
    }
    const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
    const double h = steps == 0 ? 0.0 : t_final / static_cast<double>(steps);
    LogPsiSeries y = initial;
    const std::size_t n = y.alphas.size();

    auto shifted = [&](const LogPsiSeries& base, const std::vector<cplx>& k, double scale) {
        LogPsiSeries out = base;
        for (std::size_t q = 0; q < n; ++q) {
            out.alphas[q] += scale * k[q];
        }
        return out;
    };
    auto deriv = [&](double t, const LogPsiSeries& s) { return series_derivative(s, gammas(t, s)); };

    double t = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        const auto k1 = deriv(t, y);
        const auto k2 = deriv(t + 0.5 * h, shifted(y, k1, 0.5 * h));
        const auto k3 = deriv(t + 0.5 * h, shifted(y, k2, 0.5 * h));
        const auto k4 = deriv(t + h, shifted(y, k3, h));
        for (std::size_t q = 0; q < n; ++q) {
            y.alphas[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
            if (!std::isfinite(y.alphas[q].real()) || !std::isfinite(y.alphas[q].imag())) {
                throw std::domain_error("log-psi coefficient " + std::to_string(q) +
                                        " blew up at t = " + std::to_string(t + h));
            }
        }
        t = static_cast<double>(s + 1) * h;
        if (on_step) {
            on_step(t, y);
        }
    }
    return y;
}

AbsorberCoefficients power_law_absorber(std::size_t p_max, int p, double gamma_boundary, double x_max,
                                        bool phase_correction)
{
    if (p < 2 || static_cast<std::size_t>(p) > p_max) {
        throw std::invalid_argument("absorber order must satisfy 2 <= p <= p_max");
    }
    const double gamma_p = gamma_boundary / std::pow(x_max, 2 * p);
    const double pp = static_cast<double>(p);
    return [=](double t, const LogPsiSeries&) {
        std::vector<cplx> g(p_max + 1);
        g[static_cast<std::size_t>(p)] = gamma_p;
        if (phase_correction) {
            g[static_cast<std::size_t>(p - 1)] = cplx(0.0, -pp * (2.0 * pp - 1.0) / (2.0 * pp + 1.0) * t * gamma_p);
        }
        return g;
    };
}

} // namespace phasespace
