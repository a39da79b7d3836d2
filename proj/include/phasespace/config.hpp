#pragma once

#include "phasespace/ensemble.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace phasespace {

enum class Experiment { fig1, fig2, fig3, fig4, fig5, fig6, sample_moments, custom };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

struct LatticeConfig {
    std::size_t points = 256;
    double x_max = 20.0;
};

struct IntegratorSettings {
    double dt = 0.005;
    double t_final = 20.0;
    int midpoint_iterations = 4;
    bool dealias = false;
    std::size_t store_stride = 1;
};

struct ModelConfig {
    std::string kind = "diffraction"; // "diffraction" | "cubic"
    double diffraction = 0.5;         // c in d_t psi = i c d_x^2 psi
    cplx nonlinearity{0.0, 0.0};      // g in A = g |psi|^2 psi (cubic only)
};

struct ApodisationConfig {
    bool enabled = false;
    int order = 20;               // power of the leading x^order term (order = 2p)
    double gamma_boundary = 10.0; // absorption at x = +-x_max
    bool phase_correction = false;
    bool quantum_noise = false;
    bool track_reservoir = true;
};

// Initial state. Field experiments use "gaussian-beam", "coherent-beam"
// (beam plus s-ordered vacuum noise) or "vacuum". Moment experiments use
// "fock", "coherent", "thermal", "squeezed", "gaussian" or "vacuum".
struct StateConfig {
    std::string kind = "gaussian-beam";
    double sigma = 1.0;
    cplx amplitude{1.0, 0.0};
    std::vector<unsigned> occupations;
    std::vector<double> radii;     // optional explicit contour radii
    double radius_scale = 1.0;     // r^2 = radius_scale * n when radii are absent
    std::vector<cplx> amplitudes;  // coherent
    std::vector<double> nbar;      // thermal
    double squeeze = 0.0;          // squeezed vacuum parameter r
    // "gaussian": mean (2M) and covariance (2M x 2M) in the run's ordering.
    std::vector<cplx> mean;
    std::vector<std::vector<cplx>> covariance;
};

struct EnsembleConfig {
    std::size_t trajectories = 1;
    std::size_t samples = 100000;
};

struct CheckConfig {
    double probe_x = 10.0;     // boundary-ripple probe position
    double probe_halfwidth = 0.5;
    double profile_time = -1.0; // <0: final time
};

struct RunConfig {
    Experiment experiment = Experiment::custom;
    std::uint64_t seed = 20240601;
    unsigned threads = 1;
    std::string out_dir = ".";
    std::string prefix;
    bool assert_checks = false;
    Ordering ordering = Ordering::positive_p();
    LatticeConfig lattice;
    IntegratorSettings integrator;
    ModelConfig model;
    ApodisationConfig apodisation;
    StateConfig state;
    EnsembleConfig ensemble;
    CheckConfig checks;

    std::size_t n_steps() const;
    bool is_field_experiment() const { return experiment != Experiment::sample_moments; }
};

// Field-by-field validation failure.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

// Returns every problem found; empty when valid.
std::vector<std::string> validate(const RunConfig& config);
void require_valid(const RunConfig& config);

// Preset for fig1..fig6. Unset fields keep their defaults.
RunConfig figure_config(Experiment figure);

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);

} // namespace phasespace
