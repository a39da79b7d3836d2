#pragma once

#include "phasespace/lattice.hpp"

#include <functional>
#include <vector>

namespace phasespace {

// psi(0, x) = amplitude * exp(-x^2 / (2 sigma^2)).
struct GaussianBeam {
    double sigma = 1.0;
    cplx amplitude{1.0, 0.0};
};

// Free solution of d_t psi = (i/2) d_x^2 psi on the infinite line:
//   psi(t, x) = amplitude * sigma (sigma^2 + i t)^{-1/2} exp(-x^2 / (2 (sigma^2 + i t)))
cplx exact_field(const GaussianBeam& beam, double t, double x);

Field exact_field(const GaussianBeam& beam, double t, const Lattice& lattice);

// log psi = -sum_q alphas[q] x^{2q}, q = 0..p_max.
struct LogPsiSeries {
    std::vector<cplx> alphas;

    std::size_t max_order() const { return alphas.empty() ? 0 : alphas.size() - 1; }
    static LogPsiSeries gaussian(double sigma);
};

// beta_q with (1/2) (sum_q 2q alpha_q x^{2q-1})^2 = sum_q beta_q x^{2q},
// truncated to q <= p_max:
//   beta_q = (1/2) sum_{j=1..q} (2j) (2(q+1-j)) alpha_j alpha_{q+1-j}
std::vector<cplx> beta_coefficients(const LogPsiSeries& series);

// Time derivative of the coefficients under
//   d_t psi = (i/2) d_x^2 psi - gamma(t, x) psi,  gamma = sum_q gamma_q x^{2q}:
//   d alpha_q / dt = gamma_q - i beta_q + (i/2)(2q+2)(2q+1) alpha_{q+1}
// with alpha_{p_max+1} = 0.
std::vector<cplx> series_derivative(const LogPsiSeries& series, const std::vector<cplx>& gammas);

// Absorber coefficients gamma_q(t) given the current series (so a caller can
// impose a feedback condition); must return p_max + 1 values.
using AbsorberCoefficients = std::function<std::vector<cplx>(double t, const LogPsiSeries& current)>;

// Classical RK4 integration from t = 0 to t_final. `on_step`, if set, sees
// every intermediate state.
LogPsiSeries series_evolve(const LogPsiSeries& initial, const AbsorberCoefficients& gammas,
                           double t_final, double dt,
                           const std::function<void(double, const LogPsiSeries&)>& on_step = {});

// Pure x^{2p} absorber, gamma_p = Gamma_p / x_max^{2p}, optionally with the
// asymptotic imaginary x^{2(p-1)} correction -i p(2p-1)/(2p+1) t gamma_p.
AbsorberCoefficients power_law_absorber(std::size_t p_max, int p, double gamma_boundary, double x_max,
                                        bool phase_correction);

} // namespace phasespace
