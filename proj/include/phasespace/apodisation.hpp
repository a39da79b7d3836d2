#pragma once

#include "phasespace/field_state.hpp"
#include "phasespace/lattice.hpp"
#include "phasespace/rng.hpp"

#include <functional>
#include <span>
#include <vector>

namespace phasespace {

// Momentum mask: 1 for |k| < k_max/2, 0 otherwise (the tie |k| = k_max/2 is
// removed).
struct Projector {
    std::vector<double> mask;

    void apply(std::span<cplx> spectrum) const;
};

Projector build_projector(const Lattice& lattice);

struct AbsorberParams {
    int order_2p = 20;          // power of the leading x^{2p} term
    double gamma_boundary = 0.0; // Gamma_p, the absorption at x = +-x_max
    bool phase_correction = false;
};

// gamma(x) = gamma_real(x) + i v_imag(x) at time t, with
//   gamma_real = Gamma_p (x / x_max)^{2p}
//   v_imag     = -[p(2p-1)/(2p+1)] t Gamma_p x^{2(p-1)} / x_max^{2p}  (if corrected)
struct ApodisationProfile {
    int order_2p = 0;
    int p = 0;
    double gamma_boundary = 0.0;
    bool phase_correction = false;
    double t = 0.0;
    double dv = 0.0; // lattice cell volume the profile was built on
    std::vector<double> gamma_real;
    std::vector<double> v_imag;
};

ApodisationProfile build_absorber(const Lattice& lattice, const AbsorberParams& params, double t);

// Coefficient c of the x^{2(p-1)} term, gamma_{p-1} = i c; c <= 0.
double phase_correction_coefficient(int order_2p, double gamma_boundary, double x_max, double t);

// What an apodisation sub-step did, for the reservoir update.
struct ApodisationSubstep {
    double dt = 0.0;
    std::vector<Field> midpoint; // (psi_before + psi_after) / 2 per component
    std::vector<Field> noise;    // xi = integral of zeta over dt; empty if classical
};

// One implicit-midpoint sub-step of d psi = -gamma psi dt + sqrt(gamma') zeta dt:
//   psi' = [(1 - gamma dt/2) psi + sqrt(gamma') xi] / (1 + gamma dt/2)
// with complex Gaussian xi, <|xi|^2> = 2 s dt / dv, <xi xi> = 0 (quantum only).
// The stationary vacuum variance of this map is exactly s / dv for any dt.
ApodisationSubstep apply_apodisation(FieldState& state, const ApodisationProfile& profile, double dt,
                                     Rng& rng, bool quantum);

// rho_2 += 2 gamma' |psi_m|^2 dt - 2 Re(sqrt(gamma') xi conj(psi_m)), psi_m the
// sub-step midpoint. Together with apply_apodisation this conserves
// sum (|psi|^2 + rho_2) per trajectory up to rounding.
void update_reservoir(FieldState& state, const ApodisationProfile& profile,
                      const ApodisationSubstep& substep);

// Absorbed number N_r = sum rho_2 dx over all components.
double reservoir_number(const FieldState& state, const Lattice& lattice);
// N_a = sum (|psi|^2 - s/dv) dx over all components; `s_corrected = false`
// drops the vacuum offset.
double apodised_number(const FieldState& state, const Lattice& lattice, bool s_corrected);

// Sub-step callable used by the integrator's run loop: rebuilds the profile
// at the midpoint time of the step, applies it, and updates the reservoir
// when the state tracks one.
std::function<void(FieldState&, double, double, Rng&)>
make_apodisation_substep(const Lattice& lattice, AbsorberParams params, bool quantum);

} // namespace phasespace
