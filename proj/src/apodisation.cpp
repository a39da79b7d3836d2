#include "phasespace/apodisation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phasespace {

void Projector::apply(std::span<cplx> spectrum) const
{
    if (spectrum.size() != mask.size()) {
        throw std::invalid_argument("projector and spectrum sizes differ");
    }
    for (std::size_t j = 0; j < mask.size(); ++j) {
        spectrum[j] *= mask[j];
    }
}

Projector build_projector(const Lattice& lattice)
{
    const double cutoff = 0.5 * lattice.k_max();
    Projector p;
    p.mask.reserve(lattice.size());
    for (double k : lattice.k_grid()) {
        p.mask.push_back(std::abs(k) < cutoff ? 1.0 : 0.0);
    }
    return p;
}

double phase_correction_coefficient(int order_2p, double gamma_boundary, double x_max, double t)
{
    const double p = 0.5 * order_2p;
    return -(p * (2.0 * p - 1.0) / (2.0 * p + 1.0)) * t * gamma_boundary / std::pow(x_max, order_2p);
}

ApodisationProfile build_absorber(const Lattice& lattice, const AbsorberParams& params, double t)
{
    if (params.order_2p < 4 || params.order_2p % 2 != 0) {
        throw std::invalid_argument("absorber order must be even and >= 4, got " +
                                    std::to_string(params.order_2p));
    }
    if (!std::isfinite(params.gamma_boundary) || params.gamma_boundary < 0.0) {
        throw std::invalid_argument("boundary absorption must be finite and non-negative");
    }
    if (!std::isfinite(t) || t < 0.0) {
        throw std::invalid_argument("absorber time must be finite and non-negative");
    }
    ApodisationProfile prof;
    prof.order_2p = params.order_2p;
    prof.p = params.order_2p / 2;
    prof.gamma_boundary = params.gamma_boundary;
    prof.phase_correction = params.phase_correction;
    prof.t = t;
    prof.dv = lattice.dv();
    prof.gamma_real.resize(lattice.size());
    prof.v_imag.assign(lattice.size(), 0.0);

    const double xm = lattice.x_max();
    const double c = params.phase_correction
                         ? phase_correction_coefficient(params.order_2p, params.gamma_boundary, xm, t)
                         : 0.0;
    const auto x = lattice.x();
    for (std::size_t j = 0; j < x.size(); ++j) {
        prof.gamma_real[j] = params.gamma_boundary * std::pow(x[j] / xm, params.order_2p);
        if (params.phase_correction) {
            prof.v_imag[j] = c * std::pow(x[j], params.order_2p - 2);
        }
        if (!std::isfinite(prof.gamma_real[j]) || !std::isfinite(prof.v_imag[j])) {
            throw std::domain_error("absorber profile is not finite at x = " + std::to_string(x[j]));
        }
    }
    return prof;
}

ApodisationSubstep apply_apodisation(FieldState& state, const ApodisationProfile& profile, double dt,
                                     Rng& rng, bool quantum)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("apodisation step must be positive");
    }
    const std::size_t n = profile.gamma_real.size();
    if (profile.v_imag.size() != n) {
        throw std::invalid_argument("malformed apodisation profile");
    }
    const bool noisy = quantum && state.ordering.s > 0.0;
    const double quadrature_sd = noisy ? std::sqrt(state.ordering.s * dt / profile.dv) : 0.0;

    ApodisationSubstep out;
    out.dt = dt;
    out.midpoint.resize(state.components());
    if (noisy) {
        out.noise.resize(state.components());
    }
    for (std::size_t c = 0; c < state.components(); ++c) {
        auto& psi = state.psi[c];
        if (psi.size() != n) {
            throw std::invalid_argument("apodisation profile does not match field size");
        }
        auto& mid = out.midpoint[c];
        mid.resize(n);
        if (noisy) {
            out.noise[c].resize(n);
        }
        for (std::size_t j = 0; j < n; ++j) {
            const cplx g = cplx(profile.gamma_real[j], profile.v_imag[j]) * dt;
            cplx drive{0.0, 0.0};
            if (noisy) {
                const cplx xi(quadrature_sd * rng.normal(), quadrature_sd * rng.normal());
                out.noise[c][j] = xi;
                drive = std::sqrt(profile.gamma_real[j]) * xi;
            }
            const cplx before = psi[j];
            const cplx after = ((1.0 - 0.5 * g) * before + drive) / (1.0 + 0.5 * g);
            mid[j] = 0.5 * (before + after);
            psi[j] = after;
        }
    }
    return out;
}

void update_reservoir(FieldState& state, const ApodisationProfile& profile,
                      const ApodisationSubstep& substep)
{
    if (!state.tracks_reservoir()) {
        throw std::invalid_argument("state does not track a reservoir field");
    }
    const std::size_t n = profile.gamma_real.size();
    if (substep.midpoint.size() != state.components() ||
        (!substep.noise.empty() && substep.noise.size() != state.components()) ||
        state.reservoir.size() != state.components()) {
        throw std::invalid_argument("reservoir update: component count mismatch");
    }
    for (std::size_t c = 0; c < state.components(); ++c) {
        const auto& mid = substep.midpoint[c];
        auto& rho = state.reservoir[c];
        if (mid.size() != n || rho.size() != n ||
            (!substep.noise.empty() && substep.noise[c].size() != n)) {
            throw std::invalid_argument("reservoir update: noise or field shape mismatch");
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double g = profile.gamma_real[j];
            double increment = 2.0 * g * std::norm(mid[j]) * substep.dt;
            if (!substep.noise.empty()) {
                increment -= 2.0 * std::real(std::sqrt(g) * substep.noise[c][j] * std::conj(mid[j]));
            }
            rho[j] += increment;
        }
    }
}

double reservoir_number(const FieldState& state, const Lattice& lattice)
{
    double total = 0.0;
    for (const auto& rho : state.reservoir) {
        for (double v : rho) {
            total += v;
        }
    }
    return total * lattice.dx();
}

double apodised_number(const FieldState& state, const Lattice& lattice, bool s_corrected)
{
    double total = 0.0;
    for (const auto& psi : state.psi) {
        total += lattice.norm(psi);
        if (s_corrected) {
            total -= state.ordering.s * static_cast<double>(psi.size()) / lattice.dv() * lattice.dx();
        }
    }
    return total;
}

std::function<void(FieldState&, double, double, Rng&)>
make_apodisation_substep(const Lattice& lattice, AbsorberParams params, bool quantum)
{
    // Validate eagerly so configuration errors surface before any stepping.
    (void)build_absorber(lattice, params, 0.0);
    return [lattice, params, quantum](FieldState& state, double t_start, double dt, Rng& rng) {
        const auto profile = build_absorber(lattice, params, t_start + 0.5 * dt);
        const auto sub = apply_apodisation(state, profile, dt, rng, quantum);
        if (state.tracks_reservoir()) {
            update_reservoir(state, profile, sub);
        }
    };
}

} // namespace phasespace
