#pragma once

#include "phasespace/apodisation.hpp"
#include "phasespace/field_state.hpp"
#include "phasespace/lattice.hpp"
#include "phasespace/rng.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace phasespace {

using NoiseArrays = std::vector<std::vector<double>>;

// d psi = (A[psi] + L[grad] psi) dt + B[psi] . dw   (Stratonovich)
struct ModelSpec {
    std::size_t components = 1;
    // L(ik) for component c at wavenumber k.
    std::function<cplx(std::size_t component, double k)> linear_symbol;
    // out[c][j] = A[psi]_c(x_j) at time t. Empty means A = 0.
    std::function<void(const std::vector<Field>& psi, double t, std::vector<Field>& out)> drift;
    std::size_t noise_count = 0;
    // out[c][j] = sum_i B_ci[psi](x_j) dw_i(x_j). Empty means B = 0.
    std::function<void(const std::vector<Field>& psi, const NoiseArrays& dw, std::vector<Field>& out)>
        noise;
};

// L(ik) = -i c k^2, i.e. d psi/dt = i c d^2 psi/dx^2. c = 1/2 is paraxial diffraction.
ModelSpec diffraction_model(double coefficient = 0.5);
// Diffraction plus A = g |psi|^2 psi.
ModelSpec cubic_model(cplx nonlinearity, double diffraction = 0.5);

struct IntegratorConfig {
    double dt = 0.0;
    std::size_t n_steps = 0;
    int midpoint_iterations = 4;
    bool dealias = false;
    std::size_t store_stride = 1;

    void validate() const;
};

// Half-step interaction-picture transform T = F^-1 exp(L(ik) dt/2) [P(k)] F.
class Propagator {
public:
    Propagator(const ModelSpec& model, const Lattice& lattice, double dt, bool dealias);

    void apply(std::vector<Field>& psi) const;
    void apply(std::size_t component, std::span<cplx> field) const;

    const Lattice& lattice() const { return lattice_; }
    // Spectral multiplier of component c, projector included.
    const std::vector<cplx>& multiplier(std::size_t component) const { return multipliers_.at(component); }
    const std::optional<Projector>& projector() const { return projector_; }

private:
    Lattice lattice_;
    std::vector<std::vector<cplx>> multipliers_;
    std::optional<Projector> projector_;
};

Propagator make_propagator(const ModelSpec& model, const Lattice& lattice, double dt, bool dealias);

// Independent real Gaussians of variance dt/dv at every point, one array per
// noise index: the lattice form of <dw_i(x) dw_j(x')> = dt delta(x-x') delta_ij.
NoiseArrays make_noise(const Lattice& lattice, double dt, std::size_t noise_count, Rng& rng);

// Raised when a step produces a non-finite field.
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(const std::string& what, double t, double max_abs, std::size_t step_index)
        : std::runtime_error(what), t_(t), max_abs_(max_abs), step_index_(step_index)
    {
    }
    double t() const { return t_; }
    double max_abs() const { return max_abs_; }
    std::size_t step_index() const { return step_index_; }

private:
    double t_;
    double max_abs_;
    std::size_t step_index_;
};

struct StepDiagnostics {
    // max |psi_m^(k) - psi_m^(k-1)| on the last fixed-point sweep (0 if A = B = 0).
    double midpoint_change = 0.0;
};

// One midpoint interaction-picture step:
//   psi1 = T psi0
//   psi2 = psi1 + A[psi_m] dt + B[psi_m] dw,  psi_m = (psi1 + psi2)/2
//   psi3 = T psi2
// The implicit midpoint is found by `midpoint_iterations` fixed-point sweeps
// starting from psi_m = psi1, all using the same dw.
StepDiagnostics step(FieldState& state, const ModelSpec& model, const IntegratorConfig& cfg,
                     const Propagator& propagator, Rng& rng);

struct Observer {
    std::string name;
    std::function<double(const FieldState&)> read;
};

// Extra operator-split stages applied after each step, e.g. apodisation.
// Called with the step's start time and dt.
using SubStep = std::function<void(FieldState&, double t_start, double dt, Rng&)>;

struct TrajectoryRecord {
    std::vector<std::string> columns;
    std::vector<double> times;
    std::vector<std::vector<double>> values; // values[row][column]
    std::vector<FieldState> snapshots;       // filled when requested
    double max_midpoint_change = 0.0;
};

struct RunOptions {
    std::vector<Observer> observers;
    std::vector<SubStep> substeps;
    bool keep_snapshots = false;
};

// Steps n_steps times, observing the initial state and every store_stride
// steps thereafter (and the final state).
TrajectoryRecord run(FieldState state, const ModelSpec& model, const IntegratorConfig& cfg,
                     const Lattice& lattice, const RunOptions& options, Rng& rng);

} // namespace phasespace
