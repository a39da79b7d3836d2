#include "phasespace/config.hpp"
#include "phasespace/harness.hpp"
#include "phasespace/spde_integrator.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace phasespace;

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kBadInput = 2, kRuntimeFailure = 3 };

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;
    bool assert_checks = false;
};

void apply_flags(RunConfig& c, const CommonFlags& f)
{
    if (f.seed) {
        c.seed = *f.seed;
    }
    if (f.out_dir) {
        c.out_dir = *f.out_dir;
    }
    if (f.threads) {
        c.threads = *f.threads;
    }
    c.assert_checks = c.assert_checks || f.assert_checks;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) {
        out.push_back(item);
    }
    return out;
}

double to_double(const std::string& s)
{
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return v;
}

// fock:3[,1...] | coherent:re[:im][,re[:im]...] | thermal:nbar[,...] | squeezed:r | vacuum
StateConfig parse_state_spec(const std::string& spec)
{
    StateConfig st;
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    st.kind = kind;
    if (kind == "vacuum") {
        if (!args.empty()) {
            throw std::invalid_argument("vacuum takes no arguments");
        }
        return st;
    }
    if (args.empty()) {
        throw std::invalid_argument("state '" + kind + "' needs arguments");
    }
    const auto items = split(args, ',');
    if (kind == "fock") {
        for (const auto& i : items) {
            const double n = to_double(i);
            if (n < 0.0 || n != std::floor(n)) {
                throw std::invalid_argument("fock occupations are non-negative integers");
            }
            st.occupations.push_back(static_cast<unsigned>(n));
        }
    } else if (kind == "coherent") {
        for (const auto& i : items) {
            const auto parts = split(i, ':');
            if (parts.empty() || parts.size() > 2) {
                throw std::invalid_argument("coherent amplitudes are re[:im]");
            }
            st.amplitudes.emplace_back(to_double(parts[0]), parts.size() == 2 ? to_double(parts[1]) : 0.0);
        }
    } else if (kind == "thermal") {
        for (const auto& i : items) {
            st.nbar.push_back(to_double(i));
        }
    } else if (kind == "squeezed") {
        if (items.size() != 1) {
            throw std::invalid_argument("squeezed takes one parameter r");
        }
        st.squeeze = to_double(items[0]);
    } else {
        throw std::invalid_argument("unknown state kind '" + kind + "'");
    }
    return st;
}

void print_record(const RunConfig& c, const ObservableRecord& rec, const std::vector<std::string>& files,
                  double seconds)
{
    std::cout << to_string(c.experiment) << ": " << rec.rows.size() << " rows in " << seconds << " s\n";
    for (const auto& f : files) {
        std::cout << "  wrote " << f << '\n';
    }
    for (const auto& chk : rec.checks) {
        std::cout << "  [" << (chk.passed ? "PASS" : "FAIL") << "] " << chk.name << ": " << chk.value << ' '
                  << chk.comparison << ' ' << chk.threshold;
        if (!chk.detail.empty()) {
            std::cout << " (" << chk.detail << ')';
        }
        std::cout << '\n';
    }
}

// Runs one configuration end to end; returns whether all checks passed.
bool execute(const RunConfig& c)
{
    const auto start = std::chrono::steady_clock::now();
    const ObservableRecord rec = run_experiment(c);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto files = write_outputs(rec, c, seconds);
    print_record(c, rec, files, seconds);
    return rec.all_passed();
}

int guarded(const std::function<int()>& body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error:\n";
        for (const auto& p : e.problems()) {
            std::cerr << "  " << p << '\n';
        }
        return kBadInput;
    } catch (const InstabilityError& e) {
        std::cerr << "instability at step " << e.step_index() << " (t = " << e.t() << "): " << e.what() << '\n';
        return kRuntimeFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Phase-space stochastic field simulations"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    CommonFlags flags;
    app.add_option("--seed", flags.seed, "64-bit RNG seed (overrides the config)");
    app.add_option("--out-dir", flags.out_dir, "output directory (overrides the config)");
    app.add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--assert", flags.assert_checks, "exit with status 1 if any check fails");

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run a configuration file");
    run_cmd->add_option("config-file", config_path, "JSON configuration")->required();

    std::string figure;
    auto* fig_cmd = app.add_subcommand("figures", "reproduce a figure experiment");
    fig_cmd->add_option("figure", figure, "fig1..fig6 or all")
        ->required()
        ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "all"}));

    std::string state_spec;
    std::size_t samples = 100000;
    std::optional<std::vector<double>> radii;
    auto* mom_cmd = app.add_subcommand("moments", "sample a state and tabulate moments in P, W and Q");
    mom_cmd->add_option("state-spec", state_spec,
                        "fock:n[,n...] | coherent:re[:im][,...] | thermal:nbar[,...] | squeezed:r | vacuum")
        ->required();
    mom_cmd->add_option("--samples", samples, "ensemble size")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
    mom_cmd->add_option("--radii", radii, "explicit contour radii for fock states");

    CLI11_PARSE(app, argc, argv);

    return guarded([&]() -> int {
        bool passed = true;
        bool assert_checks = flags.assert_checks;
        if (*run_cmd) {
            RunConfig c = load_config(config_path);
            apply_flags(c, flags);
            assert_checks = c.assert_checks;
            passed = execute(c);
        } else if (*fig_cmd) {
            std::vector<Experiment> list;
            if (figure == "all") {
                list = {Experiment::fig1, Experiment::fig2, Experiment::fig3,
                        Experiment::fig4, Experiment::fig5, Experiment::fig6};
            } else {
                list = {parse_experiment(figure)};
            }
            std::vector<std::pair<Experiment, ObservableRecord>> records;
            for (Experiment e : list) {
                RunConfig c = figure_config(e);
                apply_flags(c, flags);
                require_valid(c);
                const auto start = std::chrono::steady_clock::now();
                ObservableRecord rec = run_experiment(c);
                const double seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                print_record(c, rec, write_outputs(rec, c, seconds), seconds);
                passed = passed && rec.all_passed();
                records.emplace_back(e, std::move(rec));
            }
            if (figure == "all") {
                const Check series = figure_series_check(records);
                std::cout << "[" << (series.passed ? "PASS" : "FAIL") << "] " << series.name << ": "
                          << series.detail << '\n';
                passed = passed && series.passed;
            }
        } else if (*mom_cmd) {
            RunConfig c;
            c.experiment = Experiment::sample_moments;
            c.prefix = "moments";
            c.state = parse_state_spec(state_spec);
            if (radii) {
                c.state.radii = *radii;
            }
            c.ensemble.samples = samples;
            apply_flags(c, flags);
            passed = execute(c);
        }
        return assert_checks && !passed ? kCheckFailed : kOk;
    });
}
