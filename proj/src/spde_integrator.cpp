#include "phasespace/spde_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phasespace {

ModelSpec diffraction_model(double coefficient)
{
    ModelSpec m;
    m.components = 1;
    m.linear_symbol = [coefficient](std::size_t, double k) { return cplx(0.0, -coefficient * k * k); };
    return m;
}

ModelSpec cubic_model(cplx nonlinearity, double diffraction)
{
    ModelSpec m = diffraction_model(diffraction);
    m.drift = [nonlinearity](const std::vector<Field>& psi, double, std::vector<Field>& out) {
        for (std::size_t c = 0; c < psi.size(); ++c) {
            for (std::size_t j = 0; j < psi[c].size(); ++j) {
                out[c][j] = nonlinearity * std::norm(psi[c][j]) * psi[c][j];
            }
        }
    };
    return m;
}

void IntegratorConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("integrator dt must be finite and positive");
    }
    if (midpoint_iterations < 1) {
        throw std::invalid_argument("midpoint_iterations must be >= 1");
    }
    if (store_stride < 1) {
        throw std::invalid_argument("store_stride must be >= 1");
    }
}

Propagator::Propagator(const ModelSpec& model, const Lattice& lattice, double dt, bool dealias)
    : lattice_(lattice)
{
    if (!model.linear_symbol) {
        throw std::invalid_argument("model has no linear symbol");
    }
    if (dealias) {
        projector_ = build_projector(lattice);
    }
    const auto k = lattice.k_grid();
    multipliers_.resize(model.components);
    for (std::size_t c = 0; c < model.components; ++c) {
        auto& mult = multipliers_[c];
        mult.resize(k.size());
        for (std::size_t j = 0; j < k.size(); ++j) {
            const cplx exponent = model.linear_symbol(c, k[j]) * (0.5 * dt);
            if (!std::isfinite(exponent.real()) || !std::isfinite(exponent.imag())) {
                std::ostringstream msg;
                msg << "linear symbol is not finite at k = " << k[j];
                throw std::domain_error(msg.str());
            }
            mult[j] = std::exp(exponent);
            if (projector_) {
                mult[j] *= projector_->mask[j];
            }
        }
    }
}

void Propagator::apply(std::size_t component, std::span<cplx> field) const
{
    const auto& mult = multipliers_.at(component);
    lattice_.forward_in_place(field);
    for (std::size_t j = 0; j < field.size(); ++j) {
        field[j] *= mult[j];
    }
    lattice_.inverse_in_place(field);
}

void Propagator::apply(std::vector<Field>& psi) const
{
    if (psi.size() != multipliers_.size()) {
        throw std::invalid_argument("field component count does not match the propagator");
    }
    for (std::size_t c = 0; c < psi.size(); ++c) {
        apply(c, psi[c]);
    }
}

Propagator make_propagator(const ModelSpec& model, const Lattice& lattice, double dt, bool dealias)
{
    return Propagator(model, lattice, dt, dealias);
}

NoiseArrays make_noise(const Lattice& lattice, double dt, std::size_t noise_count, Rng& rng)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("noise increment needs dt > 0");
    }
    const double sd = std::sqrt(dt / lattice.dv());
    NoiseArrays dw(noise_count, std::vector<double>(lattice.size()));
    for (auto& arr : dw) {
        for (auto& v : arr) {
            v = sd * rng.normal();
        }
    }
    return dw;
}

namespace {

double max_abs(const std::vector<Field>& psi)
{
    double m = 0.0;
    for (const auto& f : psi) {
        for (const auto& v : f) {
            const double a = std::abs(v);
            if (!(a <= m)) {
                m = a; // also propagates NaN
            }
        }
    }
    return m;
}

bool all_finite(const std::vector<Field>& psi)
{
    for (const auto& f : psi) {
        for (const auto& v : f) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

StepDiagnostics step(FieldState& state, const ModelSpec& model, const IntegratorConfig& cfg,
                     const Propagator& propagator, Rng& rng)
{
    const Lattice& lattice = propagator.lattice();
    if (state.psi.size() != model.components) {
        throw std::invalid_argument("state component count does not match the model");
    }
    for (const auto& f : state.psi) {
        if (f.size() != lattice.size()) {
            throw std::invalid_argument("state field length does not match the lattice");
        }
    }
    const double dt = cfg.dt;
    StepDiagnostics diag;

    propagator.apply(state.psi); // psi1

    const bool has_drift = static_cast<bool>(model.drift);
    const bool has_noise = model.noise_count > 0 && static_cast<bool>(model.noise);
    if (has_drift || has_noise) {
        NoiseArrays dw;
        if (has_noise) {
            dw = make_noise(lattice, dt, model.noise_count, rng);
        }
        const std::vector<Field>& psi1 = state.psi;
        std::vector<Field> mid = psi1;
        std::vector<Field> psi2 = psi1;
        std::vector<Field> a(psi1.size(), Field(lattice.size()));
        std::vector<Field> b(psi1.size(), Field(lattice.size()));
        const double t_mid = state.t + 0.5 * dt;
        for (int sweep = 0; sweep < cfg.midpoint_iterations; ++sweep) {
            for (auto& f : a) {
                std::fill(f.begin(), f.end(), cplx{});
            }
            for (auto& f : b) {
                std::fill(f.begin(), f.end(), cplx{});
            }
            if (has_drift) {
                model.drift(mid, t_mid, a);
            }
            if (has_noise) {
                model.noise(mid, dw, b);
            }
            double change = 0.0;
            for (std::size_t c = 0; c < psi1.size(); ++c) {
                for (std::size_t j = 0; j < lattice.size(); ++j) {
                    psi2[c][j] = psi1[c][j] + a[c][j] * dt + b[c][j];
                    const cplx next_mid = 0.5 * (psi1[c][j] + psi2[c][j]);
                    change = std::max(change, std::abs(next_mid - mid[c][j]));
                    mid[c][j] = next_mid;
                }
            }
            diag.midpoint_change = change;
        }
        state.psi = std::move(psi2);
    }

    propagator.apply(state.psi); // psi3
    state.t += dt;

    if (!all_finite(state.psi)) {
        std::ostringstream msg;
        msg << "non-finite field at t = " << state.t << " (max |psi| = " << max_abs(state.psi)
            << "); the step is likely unstable";
        throw InstabilityError(msg.str(), state.t, max_abs(state.psi), 0);
    }
    return diag;
}

TrajectoryRecord run(FieldState state, const ModelSpec& model, const IntegratorConfig& cfg,
                     const Lattice& lattice, const RunOptions& options, Rng& rng)
{
    cfg.validate();
    const Propagator propagator(model, lattice, cfg.dt, cfg.dealias);

    TrajectoryRecord rec;
    for (const auto& o : options.observers) {
        rec.columns.push_back(o.name);
    }
    auto observe = [&] {
        rec.times.push_back(state.t);
        std::vector<double> row;
        row.reserve(options.observers.size());
        for (const auto& o : options.observers) {
            row.push_back(o.read(state));
        }
        rec.values.push_back(std::move(row));
        if (options.keep_snapshots) {
            rec.snapshots.push_back(state);
        }
    };

    observe();
    for (std::size_t n = 0; n < cfg.n_steps; ++n) {
        const double t_start = state.t;
        try {
            const auto diag = step(state, model, cfg, propagator, rng);
            rec.max_midpoint_change = std::max(rec.max_midpoint_change, diag.midpoint_change);
            for (const auto& sub : options.substeps) {
                sub(state, t_start, cfg.dt, rng);
            }
            if (!all_finite(state.psi)) {
                throw InstabilityError("non-finite field after sub-steps", state.t, max_abs(state.psi), 0);
            }
        } catch (const InstabilityError& e) {
            std::ostringstream msg;
            msg << "step " << n << ": " << e.what();
            throw InstabilityError(msg.str(), e.t(), e.max_abs(), n);
        }
        const bool last = n + 1 == cfg.n_steps;
        if ((n + 1) % cfg.store_stride == 0 || last) {
            observe();
        }
    }
    return rec;
}

} // namespace phasespace
