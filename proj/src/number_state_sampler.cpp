#include "phasespace/number_state_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace phasespace {

namespace {
constexpr double kPi = std::numbers::pi;
}

FockSpec FockSpec::with_default_radii(std::vector<unsigned> occupations)
{
    return with_radius_scale(std::move(occupations), 1.0);
}

FockSpec FockSpec::with_radius_scale(std::vector<unsigned> occupations, double r2_over_n)
{
    if (!(r2_over_n > 0.0) || !std::isfinite(r2_over_n)) {
        throw std::invalid_argument("contour radius scale must be finite and positive");
    }
    FockSpec spec{std::move(occupations), {}};
    spec.radius.resize(spec.occupations.size(), 0.0);
    for (std::size_t k = 0; k < spec.occupations.size(); ++k) {
        spec.radius[k] = std::sqrt(r2_over_n * spec.occupations[k]);
    }
    return spec;
}

void FockSpec::validate() const
{
    if (radius.size() != occupations.size()) {
        throw std::invalid_argument("FockSpec needs one radius per mode");
    }
    for (std::size_t k = 0; k < occupations.size(); ++k) {
        if (occupations[k] > 0 && (!std::isfinite(radius[k]) || radius[k] <= 0.0)) {
            throw std::invalid_argument("contour radius for occupied mode " + std::to_string(k) +
                                        " must be finite and positive");
        }
    }
}

double sample_von_mises(double kappa, Rng& rng)
{
    if (!std::isfinite(kappa) || kappa < 0.0) {
        throw std::invalid_argument("von Mises concentration must be finite and non-negative");
    }
    if (kappa < 1e-8) {
        return rng.uniform(-kPi, kPi);
    }
    if (kappa > 1e4) {
        double t = rng.normal() / std::sqrt(kappa);
        t = std::remainder(t, 2.0 * kPi);
        return t < kPi ? t : -kPi;
    }
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    for (;;) {
        const double u1 = rng.uniform();
        const double u2 = rng.uniform();
        const double u3 = rng.uniform();
        const double z = std::cos(kPi * u1);
        const double f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
            const double theta = std::acos(std::clamp(f, -1.0, 1.0));
            const double t = u3 > 0.5 ? theta : -theta;
            return t < kPi ? t : -kPi;
        }
    }
}

double log_bessel_i0(double x)
{
    if (!(x >= 0.0)) {
        throw std::invalid_argument("log_bessel_i0 needs x >= 0");
    }
    if (x < 500.0) {
        return std::log(std::cyl_bessel_i(0.0, x));
    }
    // I_0(x) e^{-x} sqrt(2 pi x) = 1 + 1/(8x) + 9/(128x^2) + 225/(3072x^3) + ...
    const double inv = 1.0 / x;
    const double series = 1.0 + inv / 8.0 + 9.0 * inv * inv / 128.0 + 225.0 * inv * inv * inv / 3072.0;
    return x - 0.5 * std::log(2.0 * kPi * x) + std::log(series);
}

double log_contour_weight_modulus(unsigned n, double r)
{
    const double r2 = r * r;
    const double value = std::lgamma(static_cast<double>(n) + 1.0) + log_bessel_i0(r2) -
                         2.0 * static_cast<double>(n) * std::log(r);
    if (!std::isfinite(value)) {
        throw std::overflow_error("contour weight modulus is not finite for n = " + std::to_string(n));
    }
    return value;
}

PhaseSample sample_fock_complex_p(const FockSpec& spec, Rng& rng)
{
    spec.validate();
    const std::size_t m = spec.mode_count();
    PhaseSample out{std::vector<cplx>(m), std::vector<cplx>(m), {1.0, 0.0}};
    double log_modulus = 0.0;
    double phase = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const unsigned n = spec.occupations[k];
        if (n == 0) {
            continue;
        }
        const double r = spec.radius[k];
        const double r2 = r * r;
        const double phi = rng.uniform(-kPi, kPi);
        const double theta = sample_von_mises(r2, rng);
        out.alpha[k] = std::polar(r, phi + 0.5 * theta);
        out.beta[k] = std::polar(r, -(phi - 0.5 * theta));
        log_modulus += log_contour_weight_modulus(n, r);
        phase += r2 * std::sin(theta) - static_cast<double>(n) * theta;
    }
    out.weight = std::polar(std::exp(log_modulus), phase);
    return out;
}

PhaseSample sample_fock_q(const FockSpec& spec, Rng& rng)
{
    const std::size_t m = spec.mode_count();
    PhaseSample out{std::vector<cplx>(m), std::vector<cplx>(m), {1.0, 0.0}};
    for (std::size_t k = 0; k < m; ++k) {
        const double modulus2 = rng.gamma(static_cast<double>(spec.occupations[k]) + 1.0);
        const double phase = rng.uniform(-kPi, kPi);
        out.alpha[k] = std::polar(std::sqrt(modulus2), phase);
        out.beta[k] = std::conj(out.alpha[k]);
    }
    return out;
}

double laguerre(unsigned n, double x)
{
    double prev = 1.0;
    if (n == 0) {
        return prev;
    }
    double cur = 1.0 - x;
    for (unsigned k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

double wigner_fock_value(unsigned n, cplx alpha)
{
    if (n > kMaxWignerFock) {
        throw std::domain_error("wigner_fock_value: n = " + std::to_string(n) +
                                " exceeds the stable Laguerre range (<= 30)");
    }
    const double a2 = std::norm(alpha);
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return 2.0 / kPi * std::exp(-2.0 * a2) * sign * laguerre(n, 4.0 * a2);
}

AsymptoticWeightCheck weight_asymptotic_check(unsigned n, std::size_t samples, Rng& rng)
{
    if (n == 0 || samples < 2) {
        throw std::invalid_argument("weight_asymptotic_check needs n > 0 and at least two samples");
    }
    const double nn = static_cast<double>(n);
    const double modulus = std::exp(log_contour_weight_modulus(n, std::sqrt(nn)));
    ComplexAccumulator truncated;
    ComplexAccumulator exact;
    for (std::size_t i = 0; i < samples; ++i) {
        const double theta = sample_von_mises(nn, rng);
        const cplx w = std::polar(1.0, nn * std::sin(theta) - nn * theta);
        truncated.add(w);
        exact.add(modulus * w);
    }
    const Estimate t = truncated.estimate();
    return {t.value.real() - 1.0, t.se_real, exact.estimate()};
}

} // namespace phasespace
