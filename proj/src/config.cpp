#include "phasespace/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace phasespace {

using nlohmann::json;

std::string to_string(Experiment e)
{
    switch (e) {
    case Experiment::fig1: return "fig1";
    case Experiment::fig2: return "fig2";
    case Experiment::fig3: return "fig3";
    case Experiment::fig4: return "fig4";
    case Experiment::fig5: return "fig5";
    case Experiment::fig6: return "fig6";
    case Experiment::sample_moments: return "sample-moments";
    case Experiment::custom: return "custom";
    }
    return "custom";
}

Experiment parse_experiment(const std::string& name)
{
    for (auto e : {Experiment::fig1, Experiment::fig2, Experiment::fig3, Experiment::fig4, Experiment::fig5,
                   Experiment::fig6, Experiment::sample_moments, Experiment::custom}) {
        if (to_string(e) == name) {
            return e;
        }
    }
    throw std::invalid_argument("unknown experiment '" + name + "'");
}

std::size_t RunConfig::n_steps() const
{
    if (!(integrator.dt > 0.0) || !(integrator.t_final >= 0.0)) {
        return 0;
    }
    return static_cast<std::size_t>(std::llround(integrator.t_final / integrator.dt));
}

namespace {

std::string join(const std::vector<std::string>& items)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out << (i ? "; " : "") << items[i];
    }
    return out.str();
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument("invalid configuration: " + join(problems)), problems_(std::move(problems))
{
}

std::vector<std::string> validate(const RunConfig& c)
{
    std::vector<std::string> p;
    if (c.threads < 1) {
        p.push_back("threads: must be >= 1");
    }
    if (c.prefix.empty()) {
        p.push_back("prefix: must not be empty");
    }
    if (!(c.ordering.s == 0.0 || c.ordering.s == 0.5 || c.ordering.s == 1.0)) {
        p.push_back("ordering: s must be 0, 1/2 or 1");
    }
    const auto& st = c.state;
    if (c.is_field_experiment()) {
        if (c.lattice.points < 2 || c.lattice.points % 2 != 0) {
            p.push_back("lattice.points: must be even and >= 2");
        }
        if (!(c.lattice.x_max > 0.0) || !std::isfinite(c.lattice.x_max)) {
            p.push_back("lattice.x_max: must be finite and positive");
        }
        if (!(c.integrator.dt > 0.0) || !std::isfinite(c.integrator.dt)) {
            p.push_back("integrator.dt: must be finite and positive");
        }
        if (!(c.integrator.t_final >= 0.0) || !std::isfinite(c.integrator.t_final)) {
            p.push_back("integrator.t_final: must be finite and non-negative");
        } else if (c.integrator.dt > 0.0) {
            const double steps = c.integrator.t_final / c.integrator.dt;
            if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
                p.push_back("integrator.t_final: must be an integer multiple of dt");
            }
        }
        if (c.integrator.midpoint_iterations < 1) {
            p.push_back("integrator.midpoint_iterations: must be >= 1");
        }
        if (c.integrator.store_stride < 1) {
            p.push_back("integrator.store_stride: must be >= 1");
        }
        if (c.model.kind != "diffraction" && c.model.kind != "cubic") {
            p.push_back("model.kind: must be 'diffraction' or 'cubic'");
        }
        if (!std::isfinite(c.model.diffraction)) {
            p.push_back("model.diffraction: must be finite");
        }
        if (c.apodisation.enabled) {
            if (c.apodisation.order < 4 || c.apodisation.order % 2 != 0) {
                p.push_back("apodisation.order: must be even and >= 4");
            }
            if (!(c.apodisation.gamma_boundary >= 0.0) || !std::isfinite(c.apodisation.gamma_boundary)) {
                p.push_back("apodisation.gamma_boundary: must be finite and non-negative");
            }
        }
        if (st.kind != "gaussian-beam" && st.kind != "coherent-beam" && st.kind != "vacuum") {
            p.push_back("state.kind: field experiments accept gaussian-beam, coherent-beam or vacuum");
        }
        if ((st.kind == "gaussian-beam" || st.kind == "coherent-beam") && !(st.sigma > 0.0)) {
            p.push_back("state.sigma: must be positive");
        }
        if ((st.kind == "coherent-beam" || st.kind == "vacuum") && c.ordering.doubled()) {
            p.push_back("ordering: noisy field states need a Wigner or Q ordering");
        }
        if (c.apodisation.enabled && c.apodisation.quantum_noise && c.ordering.doubled()) {
            p.push_back("apodisation.quantum_noise: needs a Wigner or Q ordering");
        }
        if (st.kind == "gaussian-beam" && c.ensemble.trajectories != 1) {
            p.push_back("ensemble.trajectories: a deterministic gaussian-beam run uses exactly 1");
        }
        if (c.ensemble.trajectories < 1) {
            p.push_back("ensemble.trajectories: must be >= 1");
        }
    } else {
        if (c.ensemble.samples < 2) {
            p.push_back("ensemble.samples: must be >= 2");
        }
        if (st.kind == "fock") {
            if (st.occupations.empty()) {
                p.push_back("state.occupations: must list at least one mode");
            }
            if (!st.radii.empty() && st.radii.size() != st.occupations.size()) {
                p.push_back("state.radii: must have one entry per mode");
            }
            for (std::size_t k = 0; k < st.radii.size(); ++k) {
                if (!(st.radii[k] > 0.0)) {
                    p.push_back("state.radii[" + std::to_string(k) + "]: must be positive");
                }
            }
            if (!(st.radius_scale > 0.0)) {
                p.push_back("state.radius_scale: must be positive");
            }
        } else if (st.kind == "coherent") {
            if (st.amplitudes.empty()) {
                p.push_back("state.amplitudes: must list at least one mode");
            }
        } else if (st.kind == "thermal") {
            if (st.nbar.empty()) {
                p.push_back("state.nbar: must list at least one mode");
            }
            for (double v : st.nbar) {
                if (!(v >= 0.0)) {
                    p.push_back("state.nbar: occupations must be non-negative");
                }
            }
        } else if (st.kind == "squeezed") {
            if (!std::isfinite(st.squeeze)) {
                p.push_back("state.squeeze: must be finite");
            }
        } else if (st.kind == "gaussian") {
            const std::size_t dim = st.mean.size();
            if (dim == 0 || dim % 2 != 0) {
                p.push_back("state.mean: must have an even, non-zero length 2M");
            }
            if (st.covariance.size() != dim) {
                p.push_back("state.covariance: must have 2M rows");
            }
            for (std::size_t r = 0; r < st.covariance.size(); ++r) {
                if (st.covariance[r].size() != dim) {
                    p.push_back("state.covariance[" + std::to_string(r) + "]: must have 2M entries");
                }
            }
        } else if (st.kind != "vacuum") {
            p.push_back("state.kind: sample-moments accepts fock, coherent, thermal, squeezed, gaussian or vacuum");
        }
    }
    return p;
}

void require_valid(const RunConfig& config)
{
    auto problems = validate(config);
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
}

RunConfig figure_config(Experiment figure)
{
    RunConfig c;
    c.experiment = figure;
    c.prefix = to_string(figure);
    c.state.kind = "gaussian-beam";
    c.state.sigma = 1.0;
    c.integrator.t_final = 20.0;
    // 256 points: dx = 0.078125 on +-10 and 0.15625 on +-20.
    c.lattice.points = 256;
    switch (figure) {
    case Experiment::fig1:
        c.lattice.x_max = 10.0;
        c.integrator.dt = 0.025;
        break;
    case Experiment::fig2:
        c.lattice.x_max = 20.0;
        c.integrator.dt = 0.005;
        break;
    case Experiment::fig3:
    case Experiment::fig4:
    case Experiment::fig5:
    case Experiment::fig6:
        c.lattice.x_max = 20.0;
        c.integrator.dt = 0.005;
        c.apodisation.enabled = true;
        // Single x^20 term (p = 10) with rate 10 at the boundary.
        c.apodisation.order = 20;
        c.apodisation.gamma_boundary = 10.0;
        c.apodisation.phase_correction = figure != Experiment::fig3;
        break;
    default:
        throw std::invalid_argument("figure_config: not a figure experiment");
    }
    return c;
}

namespace {

cplx complex_from(const json& v)
{
    if (v.is_number()) {
        return {v.get<double>(), 0.0};
    }
    if (v.is_array() && v.size() == 2) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw std::invalid_argument("complex values are written as a number or [re, im]");
}

json complex_to(cplx v)
{
    return json::array({v.real(), v.imag()});
}

class Reader {
public:
    Reader(const json& j, std::string section, std::vector<std::string>& problems)
        : j_(j), section_(std::move(section)), problems_(problems)
    {
        if (!j_.is_object()) {
            problems_.push_back(where("") + "must be an object");
        }
    }

    template <class T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const std::exception& e) {
            problems_.push_back(where(key) + "wrong type (" + e.what() + ")");
        }
    }

    void get_complex(const char* key, cplx& out)
    {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key)) {
            return;
        }
        try {
            out = complex_from(j_.at(key));
        } catch (const std::exception& e) {
            problems_.push_back(where(key) + e.what());
        }
    }

    void get_complex_list(const char* key, std::vector<cplx>& out)
    {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key)) {
            return;
        }
        try {
            out.clear();
            for (const auto& v : j_.at(key)) {
                out.push_back(complex_from(v));
            }
        } catch (const std::exception& e) {
            problems_.push_back(where(key) + e.what());
        }
    }

    bool has(const char* key)
    {
        seen_.insert(key);
        return j_.is_object() && j_.contains(key);
    }

    void reject_unknown()
    {
        if (!j_.is_object()) {
            return;
        }
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) {
                problems_.push_back(where(item.key()) + "unknown key");
            }
        }
    }

private:
    std::string where(const std::string& key) const
    {
        std::string path = section_.empty() ? key : (key.empty() ? section_ : section_ + "." + key);
        return path + ": ";
    }

    const json& j_;
    std::string section_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

} // namespace

RunConfig config_from_json(const json& j)
{
    std::vector<std::string> problems;
    RunConfig c;
    std::string experiment = "custom";
    if (j.is_object() && j.contains("experiment")) {
        try {
            experiment = j.at("experiment").get<std::string>();
        } catch (const std::exception&) {
            problems.push_back("experiment: must be a string");
        }
    }
    try {
        const Experiment e = parse_experiment(experiment);
        const bool figure = e != Experiment::custom && e != Experiment::sample_moments;
        c = figure ? figure_config(e) : RunConfig{};
        c.experiment = e;
        if (!figure) {
            c.prefix = to_string(e);
        }
        if (e == Experiment::sample_moments) {
            c.state.kind = "fock";
        }
    } catch (const std::exception& ex) {
        problems.push_back(std::string("experiment: ") + ex.what());
    }

    Reader top(j, "", problems);
    top.has("experiment");
    top.get("seed", c.seed);
    top.get("threads", c.threads);
    top.get("out_dir", c.out_dir);
    top.get("prefix", c.prefix);
    top.get("assert", c.assert_checks);
    if (top.has("ordering")) {
        try {
            c.ordering = Ordering::parse(j.at("ordering").get<std::string>());
        } catch (const std::exception& e) {
            problems.push_back(std::string("ordering: ") + e.what());
        }
    }
    if (top.has("lattice")) {
        Reader r(j.at("lattice"), "lattice", problems);
        r.get("points", c.lattice.points);
        r.get("x_max", c.lattice.x_max);
        r.reject_unknown();
    }
    if (top.has("integrator")) {
        Reader r(j.at("integrator"), "integrator", problems);
        r.get("dt", c.integrator.dt);
        r.get("t_final", c.integrator.t_final);
        r.get("midpoint_iterations", c.integrator.midpoint_iterations);
        r.get("dealias", c.integrator.dealias);
        r.get("store_stride", c.integrator.store_stride);
        r.reject_unknown();
    }
    if (top.has("model")) {
        Reader r(j.at("model"), "model", problems);
        r.get("kind", c.model.kind);
        r.get("diffraction", c.model.diffraction);
        r.get_complex("nonlinearity", c.model.nonlinearity);
        r.reject_unknown();
    }
    if (top.has("apodisation")) {
        Reader r(j.at("apodisation"), "apodisation", problems);
        r.get("enabled", c.apodisation.enabled);
        r.get("order", c.apodisation.order);
        r.get("gamma_boundary", c.apodisation.gamma_boundary);
        r.get("phase_correction", c.apodisation.phase_correction);
        r.get("quantum_noise", c.apodisation.quantum_noise);
        r.get("track_reservoir", c.apodisation.track_reservoir);
        r.reject_unknown();
    }
    if (top.has("state")) {
        Reader r(j.at("state"), "state", problems);
        r.get("kind", c.state.kind);
        r.get("sigma", c.state.sigma);
        r.get_complex("amplitude", c.state.amplitude);
        r.get("occupations", c.state.occupations);
        r.get("radii", c.state.radii);
        r.get("radius_scale", c.state.radius_scale);
        r.get_complex_list("amplitudes", c.state.amplitudes);
        r.get("nbar", c.state.nbar);
        r.get("squeeze", c.state.squeeze);
        r.get_complex_list("mean", c.state.mean);
        if (r.has("covariance")) {
            try {
                c.state.covariance.clear();
                for (const auto& row : j.at("state").at("covariance")) {
                    std::vector<cplx> values;
                    for (const auto& v : row) {
                        values.push_back(complex_from(v));
                    }
                    c.state.covariance.push_back(std::move(values));
                }
            } catch (const std::exception& e) {
                problems.push_back(std::string("state.covariance: ") + e.what());
            }
        }
        r.reject_unknown();
    }
    if (top.has("ensemble")) {
        Reader r(j.at("ensemble"), "ensemble", problems);
        r.get("trajectories", c.ensemble.trajectories);
        r.get("samples", c.ensemble.samples);
        r.reject_unknown();
    }
    if (top.has("checks")) {
        Reader r(j.at("checks"), "checks", problems);
        r.get("probe_x", c.checks.probe_x);
        r.get("probe_halfwidth", c.checks.probe_halfwidth);
        r.get("profile_time", c.checks.profile_time);
        r.reject_unknown();
    }
    top.reject_unknown();

    auto more = validate(c);
    problems.insert(problems.end(), more.begin(), more.end());
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("parse error: ") + e.what()});
    }
    return config_from_json(j);
}

json to_json(const RunConfig& c)
{
    json amplitudes = json::array();
    for (auto a : c.state.amplitudes) {
        amplitudes.push_back(complex_to(a));
    }
    json mean = json::array();
    for (auto a : c.state.mean) {
        mean.push_back(complex_to(a));
    }
    json covariance = json::array();
    for (const auto& row : c.state.covariance) {
        json r = json::array();
        for (auto a : row) {
            r.push_back(complex_to(a));
        }
        covariance.push_back(r);
    }
    return json{
        {"experiment", to_string(c.experiment)},
        {"seed", c.seed},
        {"threads", c.threads},
        {"out_dir", c.out_dir},
        {"prefix", c.prefix},
        {"assert", c.assert_checks},
        {"ordering", c.ordering.name()},
        {"lattice", {{"points", c.lattice.points}, {"x_max", c.lattice.x_max}}},
        {"integrator",
         {{"dt", c.integrator.dt},
          {"t_final", c.integrator.t_final},
          {"midpoint_iterations", c.integrator.midpoint_iterations},
          {"dealias", c.integrator.dealias},
          {"store_stride", c.integrator.store_stride}}},
        {"model",
         {{"kind", c.model.kind},
          {"diffraction", c.model.diffraction},
          {"nonlinearity", complex_to(c.model.nonlinearity)}}},
        {"apodisation",
         {{"enabled", c.apodisation.enabled},
          {"order", c.apodisation.order},
          {"gamma_boundary", c.apodisation.gamma_boundary},
          {"phase_correction", c.apodisation.phase_correction},
          {"quantum_noise", c.apodisation.quantum_noise},
          {"track_reservoir", c.apodisation.track_reservoir}}},
        {"state",
         {{"kind", c.state.kind},
          {"sigma", c.state.sigma},
          {"amplitude", complex_to(c.state.amplitude)},
          {"occupations", c.state.occupations},
          {"radii", c.state.radii},
          {"radius_scale", c.state.radius_scale},
          {"amplitudes", amplitudes},
          {"nbar", c.state.nbar},
          {"squeeze", c.state.squeeze},
          {"mean", mean},
          {"covariance", covariance}}},
        {"ensemble", {{"trajectories", c.ensemble.trajectories}, {"samples", c.ensemble.samples}}},
        {"checks",
         {{"probe_x", c.checks.probe_x},
          {"probe_halfwidth", c.checks.probe_halfwidth},
          {"profile_time", c.checks.profile_time}}},
    };
}

} // namespace phasespace
