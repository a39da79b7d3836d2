#include "phasespace/harness.hpp"

#include "phasespace/apodisation.hpp"
#include "phasespace/diffraction_oracle.hpp"
#include "phasespace/gaussian_sampler.hpp"
#include "phasespace/number_state_sampler.hpp"
#include "phasespace/ordering_transform.hpp"
#include "phasespace/spde_integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#ifndef PHASESPACE_VERSION
#define PHASESPACE_VERSION "unknown"
#endif

namespace phasespace {

using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
// Kernel width of the quasi-probability density estimate in moment runs.
constexpr double kDensityBandwidth = 0.2;

Check make_check(std::string name, double value, std::string comparison, double threshold, bool passed,
                 std::string detail = {})
{
    return Check{std::move(name), value, threshold, std::move(comparison), passed, std::move(detail)};
}

Check at_most(std::string name, double value, double threshold)
{
    return make_check(std::move(name), value, "<=", threshold, std::isfinite(value) && value <= threshold);
}

// Runs fn(begin, end) over [0, count) on up to `threads` workers in
// contiguous chunks; the first exception is rethrown.
void parallel_chunks(std::size_t count, unsigned threads,
                     const std::function<void(std::size_t, std::size_t)>& fn)
{
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
    if (workers == 1) {
        fn(0, count);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (count + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(count, w * chunk);
            const std::size_t end = std::min(count, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    fn(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::size_t center_index(const Lattice& lattice)
{
    return lattice.size() / 2;
}

// ---------------------------------------------------------------- field runs

struct FieldSetup {
    Lattice lattice;
    ModelSpec model;
    IntegratorConfig integrator;
    std::optional<GaussianBeam> oracle; // deterministic free-diffraction runs only
    double oracle_time_scale = 1.0;     // exact_field time for a diffraction coefficient c is 2 c t
    double initial_intensity = 1.0;     // |psi(0, 0)|^2, the error denominator
};

FieldSetup make_setup(const RunConfig& c)
{
    FieldSetup s{make_lattice(c.lattice.points, c.lattice.x_max), {}, {}, std::nullopt, 1.0, 1.0};
    s.model = c.model.kind == "cubic" ? cubic_model(c.model.nonlinearity, c.model.diffraction)
                                      : diffraction_model(c.model.diffraction);
    s.integrator.dt = c.integrator.dt;
    s.integrator.n_steps = c.n_steps();
    s.integrator.midpoint_iterations = c.integrator.midpoint_iterations;
    s.integrator.dealias = c.integrator.dealias;
    s.integrator.store_stride = c.integrator.store_stride;
    s.integrator.validate();
    if (c.state.kind == "gaussian-beam" && c.model.kind == "diffraction") {
        s.oracle = GaussianBeam{c.state.sigma, c.state.amplitude};
        s.oracle_time_scale = 2.0 * c.model.diffraction;
    }
    s.initial_intensity = c.state.kind == "vacuum" ? 0.0 : std::norm(c.state.amplitude);
    return s;
}

Field initial_mean_field(const RunConfig& c, const Lattice& lattice)
{
    Field psi(lattice.size(), cplx{0.0, 0.0});
    if (c.state.kind == "vacuum") {
        return psi;
    }
    const GaussianBeam beam{c.state.sigma, c.state.amplitude};
    return exact_field(beam, 0.0, lattice);
}

// Caches the oracle field for the most recent time within a trajectory.
class OracleCache {
public:
    OracleCache(GaussianBeam beam, double time_scale, const Lattice& lattice)
        : beam_(beam), scale_(time_scale), lattice_(lattice)
    {
    }

    const Field& at(double t)
    {
        if (!valid_ || t != t_) {
            field_ = exact_field(beam_, scale_ * t, lattice_);
            t_ = t;
            valid_ = true;
        }
        return field_;
    }

private:
    GaussianBeam beam_;
    double scale_;
    const Lattice& lattice_;
    bool valid_ = false;
    double t_ = 0.0;
    Field field_;
};

struct ColumnSpec {
    std::string name;
    std::string unit;
};

std::vector<Observer> field_observers(const RunConfig& c, const FieldSetup& setup,
                                      std::shared_ptr<OracleCache> cache, std::vector<ColumnSpec>& cols)
{
    const Lattice& lat = setup.lattice;
    const std::size_t mid = center_index(lat);
    const double i0 = setup.initial_intensity > 0.0 ? setup.initial_intensity : 1.0;
    std::vector<Observer> obs;
    auto add = [&](std::string name, std::string unit, std::function<double(const FieldState&)> fn) {
        cols.push_back({name, std::move(unit)});
        obs.push_back({std::move(name), std::move(fn)});
    };

    add("central_intensity", "|psi|^2", [mid](const FieldState& s) { return std::norm(s.psi[0][mid]); });
    if (cache) {
        add("exact_central_intensity", "|psi|^2",
            [cache, mid](const FieldState& s) { return std::norm(cache->at(s.t)[mid]); });
        add("central_error", "fraction of I(0,0)", [cache, mid, i0](const FieldState& s) {
            return std::abs(std::norm(s.psi[0][mid]) - std::norm(cache->at(s.t)[mid])) / i0;
        });
        const double lo = c.checks.probe_x - c.checks.probe_halfwidth;
        const double hi = c.checks.probe_x + c.checks.probe_halfwidth;
        std::vector<std::size_t> probe;
        for (std::size_t j = 0; j < lat.size(); ++j) {
            const double ax = std::abs(lat.x()[j]);
            if (ax >= lo && ax <= hi) {
                probe.push_back(j);
            }
        }
        if (!probe.empty()) {
            add("probe_error", "fraction of I(0,0)", [cache, probe, i0](const FieldState& s) {
                const Field& ex = cache->at(s.t);
                double worst = 0.0;
                for (auto j : probe) {
                    worst = std::max(worst, std::abs(std::norm(s.psi[0][j]) - std::norm(ex[j])));
                }
                return worst / i0;
            });
        }
        auto slice = [cache, &lat](const FieldState& s) { return slice_error(s.psi[0], cache->at(s.t), lat, s.t); };
        add("max_dpsi_central", "|psi|", [slice](const FieldState& s) { return slice(s).max_central; });
        add("l2_dpsi_central", "|psi| length^(1/2)", [slice](const FieldState& s) { return slice(s).l2_central; });
        add("max_dpsi_full", "|psi|", [slice](const FieldState& s) { return slice(s).max_full; });
        add("l2_dpsi_full", "|psi| length^(1/2)", [slice](const FieldState& s) { return slice(s).l2_full; });
    }
    add("N_a", "particles", [&lat](const FieldState& s) { return apodised_number(s, lat, false); });
    add("N_a_corrected", "particles", [&lat](const FieldState& s) { return apodised_number(s, lat, true); });
    add("N_r", "particles", [&lat](const FieldState& s) { return s.tracks_reservoir() ? reservoir_number(s, lat) : 0.0; });
    add("N_total", "particles", [&lat](const FieldState& s) {
        return apodised_number(s, lat, true) + (s.tracks_reservoir() ? reservoir_number(s, lat) : 0.0);
    });
    if (c.integrator.dealias) {
        const Projector proj = build_projector(lat);
        add("high_k_fraction", "fraction of spectral power", [proj, &lat](const FieldState& s) {
            Field spec = lat.fft_forward(s.psi[0]);
            double high = 0.0;
            double total = 0.0;
            for (std::size_t m = 0; m < spec.size(); ++m) {
                const double p = std::norm(spec[m]);
                total += p;
                if (proj.mask[m] == 0.0) {
                    high += p;
                }
            }
            return total > 0.0 ? high / total : 0.0;
        });
    }
    return obs;
}

struct TrajectoryOutput {
    TrajectoryRecord record;
    std::optional<FieldState> profile_state;
};

ObservableRecord run_field_experiment(const RunConfig& c)
{
    const FieldSetup setup = make_setup(c);
    const Lattice& lat = setup.lattice;
    const std::size_t trajectories = c.ensemble.trajectories;
    const bool noisy = c.state.kind != "gaussian-beam";
    const bool quantum_apodisation = c.apodisation.enabled && c.apodisation.quantum_noise;

    const Field mean_field = initial_mean_field(c, lat);
    std::optional<CovarianceSpec> noise_spec;
    std::optional<NoiseFactor> noise_factor;
    if (noisy) {
        // Lattice modes a_j = psi_j sqrt(dv): a coherent state per point.
        std::vector<cplx> amps(mean_field.size());
        const double root_dv = std::sqrt(lat.dv());
        for (std::size_t j = 0; j < amps.size(); ++j) {
            amps[j] = mean_field[j] * root_dv;
        }
        noise_spec = coherent_state(amps, c.ordering);
        noise_factor = factor_covariance(*noise_spec);
    }

    double profile_time = c.checks.profile_time < 0.0 ? static_cast<double>(setup.integrator.n_steps) * c.integrator.dt
                                                      : c.checks.profile_time;
    const bool want_profile = trajectories == 1;

    std::vector<ColumnSpec> cols;
    {
        // Column layout only; the closures are rebuilt per trajectory.
        std::shared_ptr<OracleCache> probe_cache;
        if (setup.oracle) {
            probe_cache = std::make_shared<OracleCache>(*setup.oracle, setup.oracle_time_scale, lat);
        }
        (void)field_observers(c, setup, probe_cache, cols);
    }

    std::vector<TrajectoryOutput> outputs(trajectories);
    parallel_chunks(trajectories, c.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            Rng rng = Rng::stream(c.seed, j);
            FieldState state;
            state.ordering = c.ordering;
            state.t = 0.0;
            if (noisy) {
                const PhaseSample sample = sample_gaussian(*noise_spec, *noise_factor, rng);
                const double inv_root_dv = 1.0 / std::sqrt(lat.dv());
                Field psi(lat.size());
                for (std::size_t k = 0; k < psi.size(); ++k) {
                    psi[k] = sample.alpha[k] * inv_root_dv;
                }
                state.psi = {std::move(psi)};
            } else {
                state.psi = {mean_field};
            }
            if (c.apodisation.enabled && c.apodisation.track_reservoir) {
                state.enable_reservoir();
            }

            std::shared_ptr<OracleCache> cache;
            if (setup.oracle) {
                cache = std::make_shared<OracleCache>(*setup.oracle, setup.oracle_time_scale, lat);
            }
            std::vector<ColumnSpec> unused;
            RunOptions options;
            options.observers = field_observers(c, setup, cache, unused);
            if (c.apodisation.enabled) {
                AbsorberParams params{c.apodisation.order, c.apodisation.gamma_boundary,
                                      c.apodisation.phase_correction};
                options.substeps.push_back(make_apodisation_substep(lat, params, quantum_apodisation));
            }
            auto& out = outputs[j];
            if (want_profile) {
                if (profile_time <= 0.5 * c.integrator.dt) {
                    out.profile_state = state;
                } else {
                    options.substeps.push_back([&out, profile_time](FieldState& s, double, double dt, Rng&) {
                        if (std::abs(s.t - profile_time) < 0.5 * dt) {
                            out.profile_state = s;
                        }
                    });
                }
            }
            out.record = run(std::move(state), setup.model, setup.integrator, lat, options, rng);
        }
    });

    // Serial reduction in trajectory order.
    const auto& first = outputs.front().record;
    const std::size_t n_rows = first.times.size();
    const std::size_t n_obs = first.columns.size();
    const std::size_t total_col = static_cast<std::size_t>(
        std::find(first.columns.begin(), first.columns.end(), "N_total") - first.columns.begin());

    ObservableRecord rec;
    rec.columns.push_back("t");
    rec.units.push_back("time");
    for (const auto& col : cols) {
        rec.columns.push_back(col.name);
        rec.units.push_back(col.unit);
        rec.columns.push_back(col.name + "_se");
        rec.units.push_back(col.unit);
    }
    rec.columns.push_back("N_total_change");
    rec.units.push_back("particles");
    rec.columns.push_back("N_total_change_se");
    rec.units.push_back("particles");

    double max_midpoint_change = 0.0;
    for (const auto& o : outputs) {
        max_midpoint_change = std::max(max_midpoint_change, o.record.max_midpoint_change);
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        std::vector<double> row{first.times[r]};
        for (std::size_t k = 0; k <= n_obs; ++k) {
            ComplexAccumulator acc;
            for (const auto& o : outputs) {
                const auto& v = o.record.values;
                acc.add(k < n_obs ? v[r][k] : v[r][total_col] - v[0][total_col]);
            }
            const Estimate e = acc.estimate();
            row.push_back(e.value.real());
            row.push_back(e.se_real);
        }
        rec.rows.push_back(std::move(row));
    }

    // Summary and checks.
    auto col = [&](const std::string& name) { return rec.column(name); };
    auto peak = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) {
            m = std::max(m, std::abs(x));
        }
        return m;
    };
    json& sm = rec.summary;
    sm["trajectories"] = trajectories;
    sm["steps"] = setup.integrator.n_steps;
    sm["dx"] = lat.dx();
    sm["max_midpoint_change"] = max_midpoint_change;
    const auto n_total = col("N_total");
    const auto change = col("N_total_change");
    const auto change_se = col("N_total_change_se");
    const double n0 = n_total.front();
    double max_rel_drift = 0.0;
    for (double x : change) {
        max_rel_drift = std::max(max_rel_drift, n0 != 0.0 ? std::abs(x) / std::abs(n0) : std::abs(x));
    }
    sm["initial_number"] = n0;
    sm["max_relative_number_drift"] = max_rel_drift;
    if (setup.oracle) {
        sm["peak_central_error"] = peak(col("central_error"));
        sm["final_max_dpsi_central"] = col("max_dpsi_central").back();
        sm["final_l2_dpsi_central"] = col("l2_dpsi_central").back();
        sm["final_max_dpsi_full"] = col("max_dpsi_full").back();
        if (std::find(rec.columns.begin(), rec.columns.end(), "probe_error") != rec.columns.end()) {
            sm["peak_probe_error"] = peak(col("probe_error"));
        }
    }

    switch (c.experiment) {
    case Experiment::fig2:
        if (sm.contains("peak_probe_error")) {
            const double v = sm["peak_probe_error"];
            rec.checks.push_back(make_check("boundary intensity error near |x| = probe_x", v, "in", 1e-2,
                                            v >= 1e-2 && v <= 1e-1, "accepted range [1e-2, 1e-1]"));
        }
        break;
    case Experiment::fig3:
        rec.checks.push_back(at_most("peak central intensity error", sm["peak_central_error"], 3e-4));
        break;
    case Experiment::fig4:
        rec.checks.push_back(at_most("peak central intensity error", sm["peak_central_error"], 5e-5));
        break;
    case Experiment::fig5:
        rec.checks.push_back(at_most("max |dpsi| over |x| < x_max/2 at profile time", sm["final_max_dpsi_central"],
                                     2e-3));
        break;
    case Experiment::fig6:
        rec.checks.push_back(at_most("relative drift of N_a + N_r", max_rel_drift, 1e-6));
        break;
    default:
        break;
    }
    if (c.experiment == Experiment::custom && c.apodisation.enabled && c.apodisation.track_reservoir) {
        if (trajectories > 1) {
            // Per-trajectory conservation: the mean change must vanish within
            // 3 SE, with a floor for accumulated rounding.
            const double scale = std::max(1.0, peak(col("N_a")));
            const double v = std::abs(change.back());
            const double tol = 3.0 * change_se.back() + 1e-10 * scale;
            rec.checks.push_back(make_check("mean change of N_a + N_r at final time", v, "<=", tol, v <= tol,
                                            "3 SE plus rounding floor"));
        } else {
            rec.checks.push_back(at_most("relative drift of N_a + N_r", max_rel_drift, 1e-6));
        }
    }

    if (want_profile && outputs.front().profile_state) {
        const FieldState& ps = *outputs.front().profile_state;
        json prof;
        std::vector<std::string> pcols{"x", "re_psi", "im_psi", "intensity"};
        std::vector<std::string> punits{"length", "psi", "psi", "|psi|^2"};
        std::optional<Field> ex;
        if (setup.oracle) {
            ex = exact_field(*setup.oracle, setup.oracle_time_scale * ps.t, lat);
            for (const char* n : {"re_exact", "im_exact", "exact_intensity", "abs_dpsi"}) {
                pcols.push_back(n);
            }
            for (const char* u : {"psi", "psi", "|psi|^2", "|psi|"}) {
                punits.push_back(u);
            }
        }
        json rows = json::array();
        for (std::size_t j = 0; j < lat.size(); ++j) {
            const cplx v = ps.psi[0][j];
            std::vector<double> r{lat.x()[j], v.real(), v.imag(), std::norm(v)};
            if (ex) {
                const cplx e = (*ex)[j];
                r.insert(r.end(), {e.real(), e.imag(), std::norm(e), std::abs(v - e)});
            }
            rows.push_back(r);
        }
        prof["time"] = ps.t;
        prof["columns"] = pcols;
        prof["units"] = punits;
        prof["rows"] = rows;
        sm["profile"] = prof;
    }
    return rec;
}

// --------------------------------------------------------------- moment runs

struct MomentRow {
    std::string ordering;
    std::string method;
    std::string quantity;
    std::size_t mode;
    Estimate estimate;
    double exact;
    double ess;
};

WeightedEnsemble generate(Ordering ordering, std::size_t modes, std::size_t samples, unsigned threads,
                          const std::function<PhaseSample(std::size_t)>& draw)
{
    std::vector<PhaseSample> buffer(samples);
    parallel_chunks(samples, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            buffer[j] = draw(j);
        }
    });
    WeightedEnsemble ens(ordering, modes);
    ens.reserve(samples);
    for (auto& s : buffer) {
        ens.add(std::move(s));
    }
    return ens;
}

// Ordering-corrected <a^+ a> and <a^+2 a^2> from an s-ordered ensemble:
//   <|a|^2>_s = n + s,   <|a|^4>_s = <a^+2 a^2> + 4 s n + 2 s^2.
void append_moments(std::vector<MomentRow>& rows, const WeightedEnsemble& ens, const std::string& method,
                    const std::vector<double>& exact_n, const std::vector<double>& exact_g2, unsigned threads)
{
    const double s = ens.ordering().s;
    const std::string name = ens.ordering().name();
    const double ess = effective_sample_size(ens);
    rows.push_back({name, method, "weight", 0, weighted_mean(ens, [](const PhaseSample&) { return cplx{1.0, 0.0}; }, threads),
                    1.0, ess});
    for (std::size_t k = 0; k < ens.mode_count(); ++k) {
        Estimate n = weighted_mean(ens, [k](const PhaseSample& p) { return p.beta[k] * p.alpha[k]; }, threads);
        n.value -= s;
        rows.push_back({name, method, "n", k, n, exact_n[k], ess});
        Estimate g2 = weighted_mean(
            ens,
            [k, s](const PhaseSample& p) {
                const cplx ba = p.beta[k] * p.alpha[k];
                return ba * ba - 4.0 * s * ba;
            },
            threads);
        g2.value += 2.0 * s * s;
        rows.push_back({name, method, "g2", k, g2, exact_g2[k], ess});
    }
}

// s-ordered quasi-probability of |n> at the origin: (1/(pi s)) ((s-1)/s)^n.
double fock_density_at_origin(unsigned n, double s)
{
    return std::pow((s - 1.0) / s, static_cast<double>(n)) / (std::numbers::pi * s);
}

// E[x_a x_b x_c x_d] for jointly Gaussian x with the given mean and covariance.
cplx isserlis4(const Eigen::VectorXcd& m, const Eigen::MatrixXcd& c, std::array<Eigen::Index, 4> idx)
{
    const auto [a, b, d, e] = idx;
    return m(a) * m(b) * m(d) * m(e) + c(a, b) * m(d) * m(e) + c(a, d) * m(b) * m(e) + c(a, e) * m(b) * m(d) +
           c(b, d) * m(a) * m(e) + c(b, e) * m(a) * m(d) + c(d, e) * m(a) * m(b) + c(a, b) * c(d, e) +
           c(a, d) * c(b, e) + c(a, e) * c(b, d);
}

CovarianceSpec shift_ordering(const CovarianceSpec& spec, Ordering target)
{
    CovarianceSpec out = spec;
    out.ordering = target;
    const auto m = static_cast<Eigen::Index>(spec.mode_count());
    const double ds = target.s - spec.ordering.s;
    for (Eigen::Index k = 0; k < m; ++k) {
        out.sigma(k, m + k) += ds;
        out.sigma(m + k, k) += ds;
    }
    return out;
}

CovarianceSpec gaussian_spec(const RunConfig& c)
{
    const auto& st = c.state;
    if (st.kind == "coherent") {
        return coherent_state(st.amplitudes, c.ordering);
    }
    if (st.kind == "thermal") {
        return thermal_state(st.nbar, c.ordering);
    }
    if (st.kind == "squeezed") {
        return squeezed_vacuum(st.squeeze, c.ordering);
    }
    const auto dim = static_cast<Eigen::Index>(st.mean.size());
    CovarianceSpec spec{c.ordering, Eigen::VectorXcd(dim), Eigen::MatrixXcd(dim, dim)};
    for (Eigen::Index i = 0; i < dim; ++i) {
        spec.mean(i) = st.mean[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < dim; ++j) {
            spec.sigma(i, j) = st.covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return spec;
}

ObservableRecord run_moment_experiment(const RunConfig& c)
{
    const auto& st = c.state;
    const std::size_t samples = c.ensemble.samples;
    std::vector<MomentRow> rows;
    ObservableRecord rec;
    json& sm = rec.summary;
    sm["samples"] = samples;

    if (st.kind == "fock" || st.kind == "vacuum") {
        const std::vector<unsigned> occ = st.kind == "vacuum" ? std::vector<unsigned>{0} : st.occupations;
        FockSpec spec = st.radii.empty() ? FockSpec::with_radius_scale(occ, st.radius_scale)
                                         : FockSpec{occ, st.radii};
        spec.validate();
        const std::size_t m = occ.size();
        std::vector<double> exact_n(m), exact_g2(m);
        for (std::size_t k = 0; k < m; ++k) {
            exact_n[k] = occ[k];
            exact_g2[k] = static_cast<double>(occ[k]) * (static_cast<double>(occ[k]) - 1.0);
        }
        // Independent seed families for the P draws and each conversion.
        const std::uint64_t seed_p = mix_seed(c.seed ^ 0x5050u);
        const auto p_ens = generate(Ordering::positive_p(), m, samples, c.threads, [&](std::size_t j) {
            Rng rng = Rng::stream(seed_p, j);
            return sample_fock_complex_p(spec, rng);
        });
        append_moments(rows, p_ens, "complex-p contour", exact_n, exact_g2, c.threads);
        const auto w_ens = convolve_ensemble(p_ens, 0.5, mix_seed(c.seed ^ 0x5757u));
        append_moments(rows, w_ens, "convolved from P", exact_n, exact_g2, c.threads);
        const auto q_ens = convolve_ensemble(p_ens, 1.0, mix_seed(c.seed ^ 0x5151u));
        append_moments(rows, q_ens, "convolved from P", exact_n, exact_g2, c.threads);
        const std::uint64_t seed_q = mix_seed(c.seed ^ 0x5171u);
        const auto q_direct = generate(Ordering::husimi_q(), m, samples, c.threads, [&](std::size_t j) {
            Rng rng = Rng::stream(seed_q, j);
            return sample_fock_q(spec, rng);
        });
        append_moments(rows, q_direct, "direct gamma", exact_n, exact_g2, c.threads);

        if (m == 1 && occ[0] <= kMaxWignerFock) {
            const std::vector<cplx> origin{cplx{0.0, 0.0}};
            const double h2 = kDensityBandwidth * kDensityBandwidth;
            const DensityEstimate d = wigner_density_estimate(w_ens, origin, kDensityBandwidth);
            const double smoothed = fock_density_at_origin(occ[0], 0.5 + h2);
            const double unsmoothed = wigner_fock_value(occ[0], origin[0]);
            rows.push_back({"wigner", "kernel density at origin", "density0", 0,
                            Estimate{{d.value, d.imag_residual}, d.std_error, d.imag_std_error}, smoothed,
                            effective_sample_size(w_ens)});
            sm["wigner_origin"] = {{"estimate", d.value},
                                   {"std_error", d.std_error},
                                   {"bandwidth", d.bandwidth},
                                   {"smoothed_exact", smoothed},
                                   {"exact", unsmoothed}};
            const double tol = 3.0 * d.std_error;
            rec.checks.push_back(make_check("Wigner density at origin matches smoothed Laguerre value",
                                            std::abs(d.value - smoothed), "<=", tol,
                                            std::abs(d.value - smoothed) <= tol));
            if (occ[0] % 2 == 1) {
                rec.checks.push_back(make_check("Wigner density at origin is negative", d.value, "<", 0.0,
                                                d.value < 0.0));
            }
        }
    } else {
        const CovarianceSpec base = gaussian_spec(c);
        const std::size_t m = base.mode_count();
        const auto mm = static_cast<Eigen::Index>(m);
        const CovarianceSpec normal = shift_ordering(base, Ordering::positive_p());
        std::vector<double> exact_n(m), exact_g2(m);
        for (std::size_t k = 0; k < m; ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            exact_n[k] = (normal.mean(mm + i) * normal.mean(i) + normal.sigma(mm + i, i)).real();
            exact_g2[k] = isserlis4(normal.mean, normal.sigma, {mm + i, mm + i, i, i}).real();
        }
        std::uint64_t family = 0;
        for (Ordering ord : {Ordering::positive_p(), Ordering::wigner(), Ordering::husimi_q()}) {
            const CovarianceSpec spec = shift_ordering(base, ord);
            NoiseFactor factor;
            try {
                factor = factor_covariance(spec);
            } catch (const std::domain_error& e) {
                sm["skipped"].push_back({{"ordering", ord.name()}, {"reason", e.what()}});
                ++family;
                continue;
            }
            const std::uint64_t seed = mix_seed(c.seed + 0x9e37u * ++family);
            const auto ens = generate(ord, m, samples, c.threads, [&](std::size_t j) {
                Rng rng = Rng::stream(seed, j);
                return sample_gaussian(spec, factor, rng);
            });
            append_moments(rows, ens, "gaussian factor", exact_n, exact_g2, c.threads);
        }
    }

    rec.label_columns = {"ordering", "method", "quantity"};
    rec.columns = {"mode", "estimate_re", "estimate_im", "se_re", "se_im", "exact", "sigmas", "ess"};
    rec.units = {"index", "", "", "", "", "", "SE", "samples"};
    for (const auto& r : rows) {
        const double dev = std::abs(r.estimate.value.real() - r.exact);
        const double sigmas = r.estimate.se_real > 0.0 ? dev / r.estimate.se_real : (dev == 0.0 ? 0.0 : kNan);
        rec.labels.push_back({r.ordering, r.method, r.quantity});
        rec.rows.push_back({static_cast<double>(r.mode), r.estimate.value.real(), r.estimate.value.imag(),
                            r.estimate.se_real, r.estimate.se_imag, r.exact, sigmas, r.ess});
        if (r.quantity == "weight" || r.quantity == "n") {
            // Rounding floor for zero-variance cases such as a coherent state in P.
            const double tol = 3.0 * r.estimate.se_real + 1e-12 * std::max(1.0, std::abs(r.exact));
            std::ostringstream name;
            name << r.quantity << "[" << r.ordering << ", " << r.method << ", mode " << r.mode << "] within 3 SE";
            rec.checks.push_back(make_check(name.str(), dev, "<=", tol, dev <= tol));
        }
    }
    return rec;
}

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    }
    return out + "\"";
}

std::string header_cell(const std::string& name, const std::string& unit)
{
    return unit.empty() ? name : name + "[" + unit + "]";
}

void write_table(std::ostream& out, const std::vector<std::string>& label_cols, const std::vector<std::string>& cols,
                 const std::vector<std::string>& units, const std::vector<std::vector<std::string>>& labels,
                 const std::vector<std::vector<double>>& rows)
{
    out << std::setprecision(17);
    bool first = true;
    for (const auto& l : label_cols) {
        out << (first ? "" : ",") << csv_escape(l);
        first = false;
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out << (first ? "" : ",") << csv_escape(header_cell(cols[k], k < units.size() ? units[k] : ""));
        first = false;
    }
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        first = true;
        if (r < labels.size()) {
            for (const auto& l : labels[r]) {
                out << (first ? "" : ",") << csv_escape(l);
                first = false;
            }
        }
        for (double v : rows[r]) {
            out << (first ? "" : ",") << v;
            first = false;
        }
        out << '\n';
    }
}

} // namespace

bool ObservableRecord::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::size_t ObservableRecord::column_index(const std::string& name) const
{
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw std::out_of_range("no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> ObservableRecord::column(const std::string& name) const
{
    const std::size_t k = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r[k]);
    }
    return out;
}

SliceError slice_error(std::span<const cplx> field, std::span<const cplx> reference, const Lattice& lattice, double t)
{
    if (field.size() != lattice.size() || reference.size() != lattice.size()) {
        throw std::invalid_argument("slice_error: field does not match the lattice");
    }
    SliceError e;
    e.t = t;
    const double half = 0.5 * lattice.x_max();
    double sum_c = 0.0;
    double sum_f = 0.0;
    for (std::size_t j = 0; j < field.size(); ++j) {
        const double d = std::abs(field[j] - reference[j]);
        e.max_full = std::max(e.max_full, d);
        sum_f += d * d;
        if (std::abs(lattice.x()[j]) < half) {
            e.max_central = std::max(e.max_central, d);
            sum_c += d * d;
        }
    }
    e.l2_central = std::sqrt(sum_c * lattice.dx());
    e.l2_full = std::sqrt(sum_f * lattice.dx());
    return e;
}

std::vector<SliceError> compare_against_oracle(const std::vector<double>& times, const std::vector<Field>& fields,
                                               const Lattice& lattice, const std::function<Field(double)>& oracle)
{
    if (times.size() != fields.size()) {
        throw std::invalid_argument("compare_against_oracle: one time per stored field is required");
    }
    std::vector<SliceError> out;
    out.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const Field ref = oracle(times[i]);
        if (ref.size() != lattice.size()) {
            throw std::invalid_argument("compare_against_oracle: oracle grid does not match the lattice");
        }
        out.push_back(slice_error(fields[i], ref, lattice, times[i]));
    }
    return out;
}

ObservableRecord run_experiment(const RunConfig& config)
{
    require_valid(config);
    return config.is_field_experiment() ? run_field_experiment(config) : run_moment_experiment(config);
}

std::vector<std::string> write_outputs(const ObservableRecord& record, const RunConfig& config,
                                       double wall_time_seconds)
{
    namespace fs = std::filesystem;
    const fs::path dir(config.out_dir);
    fs::create_directories(dir);
    std::vector<std::string> written;

    auto open = [&](const fs::path& p) {
        std::ofstream out(p);
        if (!out) {
            throw std::runtime_error("cannot write '" + p.string() + "'");
        }
        written.push_back(p.string());
        return out;
    };

    {
        auto out = open(dir / (config.prefix + ".csv"));
        write_table(out, record.label_columns, record.columns, record.units, record.labels, record.rows);
    }

    json summary = record.summary;
    if (summary.contains("profile")) {
        const json& prof = summary["profile"];
        std::vector<std::vector<double>> rows = prof["rows"].get<std::vector<std::vector<double>>>();
        auto out = open(dir / (config.prefix + "_profile.csv"));
        write_table(out, {}, prof["columns"].get<std::vector<std::string>>(),
                    prof["units"].get<std::vector<std::string>>(), {}, rows);
        summary["profile"] = {{"time", prof["time"]}, {"file", config.prefix + "_profile.csv"}};
    }

    json checks = json::array();
    for (const auto& c : record.checks) {
        checks.push_back({{"name", c.name},
                          {"value", c.value},
                          {"comparison", c.comparison},
                          {"threshold", c.threshold},
                          {"passed", c.passed},
                          {"detail", c.detail}});
    }
    json columns = json::array();
    for (const auto& l : record.label_columns) {
        columns.push_back({{"name", l}, {"unit", "label"}});
    }
    for (std::size_t k = 0; k < record.columns.size(); ++k) {
        columns.push_back({{"name", record.columns[k]}, {"unit", k < record.units.size() ? record.units[k] : ""}});
    }
    json meta{{"version", version_string()},
              {"experiment", to_string(config.experiment)},
              {"seed", config.seed},
              {"threads", config.threads},
              {"wall_time_seconds", wall_time_seconds},
              {"config", to_json(config)},
              {"columns", columns},
              {"summary", summary},
              {"checks", checks},
              {"all_passed", record.all_passed()}};
    {
        auto out = open(dir / (config.prefix + ".meta.json"));
        out << std::setw(2) << meta << '\n';
    }
    return written;
}

Check figure_series_check(const std::vector<std::pair<Experiment, ObservableRecord>>& records)
{
    std::vector<double> errors;
    std::ostringstream detail;
    for (Experiment e : {Experiment::fig1, Experiment::fig2, Experiment::fig3, Experiment::fig4}) {
        const auto it = std::find_if(records.begin(), records.end(), [e](const auto& r) { return r.first == e; });
        if (it == records.end() || !it->second.summary.contains("peak_central_error")) {
            return make_check("peak central error decreases fig1 > fig2 > fig3 > fig4", kNan, ">", 0.0, false,
                              "missing " + to_string(e));
        }
        errors.push_back(it->second.summary["peak_central_error"].get<double>());
        detail << (errors.size() > 1 ? " > " : "") << to_string(e) << "=" << errors.back();
    }
    bool ok = true;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < errors.size(); ++i) {
        ok = ok && errors[i - 1] > errors[i];
        margin = std::min(margin, errors[i - 1] / errors[i]);
    }
    return make_check("peak central error decreases fig1 > fig2 > fig3 > fig4", margin, ">", 1.0, ok, detail.str());
}

std::string version_string()
{
    return PHASESPACE_VERSION;
}

} // namespace phasespace
