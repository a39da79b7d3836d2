#pragma once

#include "phasespace/ensemble.hpp"
#include "phasespace/rng.hpp"

#include <cstddef>
#include <vector>

namespace phasespace {

// Factorised Fock state prod_k |n_k><n_k| with per-mode contour radii.
struct FockSpec {
    std::vector<unsigned> occupations;
    std::vector<double> radius; // r_k; ignored where n_k = 0

    // r_k = sqrt(n_k), the sampling-efficient contour.
    static FockSpec with_default_radii(std::vector<unsigned> occupations);
    // r_k^2 = scale * n_k.
    static FockSpec with_radius_scale(std::vector<unsigned> occupations, double r2_over_n);

    std::size_t mode_count() const { return occupations.size(); }
    void validate() const;
};

// Best-Fisher rejection sampler for the von Mises density ~ exp(kappa cos t)
// on [-pi, pi). kappa = 0 is uniform; kappa > 1e4 uses the wrapped Gaussian
// limit of width 1/sqrt(kappa).
double sample_von_mises(double kappa, Rng& rng);

// log I_0(x) for x >= 0, finite for arbitrarily large x.
double log_bessel_i0(double x);

// log of n! I_0(r^2) / r^{2n}, the modulus of a single-mode contour weight.
double log_contour_weight_modulus(unsigned n, double r);

// Complex-P contour sample: per occupied mode phi ~ U[-pi, pi),
// theta ~ VM(0, r^2), alpha = r e^{i(phi + theta/2)}, beta = r e^{-i(phi - theta/2)}
// so that alpha beta = r^2 e^{i theta}; weight factor
// n! I_0(r^2) / r^{2n} exp(i (r^2 sin theta - n theta)). Vacuum modes sit at 0.
PhaseSample sample_fock_complex_p(const FockSpec& spec, Rng& rng);

// Q-function sample: |alpha_k|^2 ~ Gamma(n_k + 1, 1), uniform phase, weight 1.
PhaseSample sample_fock_q(const FockSpec& spec, Rng& rng);

constexpr unsigned kMaxWignerFock = 30;

// W(alpha) = (2/pi) e^{-2|alpha|^2} (-1)^n L_n(4|alpha|^2) for n <= 30.
double wigner_fock_value(unsigned n, cplx alpha);

// Laguerre polynomial L_n(x) by upward three-term recurrence.
double laguerre(unsigned n, double x);

struct AsymptoticWeightCheck {
    double deviation;          // Re<exp(i(r^2 sin t - n t))> - 1 over VM(0, n) draws
    double std_error;
    Estimate exact_weight_mean; // same draws with the full n! I_0(n)/n^n modulus
};

// Large-radius check with r^2 = n: the phase-only (asymptotic) weight has
// mean ~ 1 - 15/(72 n), the full weight has mean 1.
AsymptoticWeightCheck weight_asymptotic_check(unsigned n, std::size_t samples, Rng& rng);

} // namespace phasespace
