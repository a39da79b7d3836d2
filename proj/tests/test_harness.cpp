#include "phasespace/diffraction_oracle.hpp"
#include "phasespace/harness.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace phasespace;
namespace fs = std::filesystem;

namespace {

RunConfig small_vacuum_run(unsigned threads)
{
    RunConfig c;
    c.experiment = Experiment::custom;
    c.prefix = "vac";
    c.seed = 3;
    c.threads = threads;
    c.ordering = Ordering::wigner();
    c.lattice = {32, 10.0};
    c.integrator.dt = 0.01;
    c.integrator.t_final = 0.2;
    c.integrator.store_stride = 5;
    c.apodisation.enabled = true;
    c.apodisation.quantum_noise = true;
    c.state.kind = "vacuum";
    c.ensemble.trajectories = 24;
    return c;
}

RunConfig small_beam_run()
{
    RunConfig c = figure_config(Experiment::fig1);
    c.experiment = Experiment::custom;
    c.prefix = "beam";
    c.lattice.points = 128;
    c.integrator.t_final = 2.0;
    c.integrator.store_stride = 10;
    return c;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("slice_error")
{
    const Lattice lat(16, 4.0);
    Field a(16, cplx{1.0, 0.0});
    const auto zero = slice_error(a, a, lat, 1.5);
    CHECK(zero.t == 1.5);
    CHECK(zero.max_full == 0.0);
    CHECK(zero.l2_full == 0.0);
    Field b = a;
    b[0] += 0.5;         // x = -4, outside the central window
    b[8] += cplx(0, 0.1); // x = 0
    const auto e = slice_error(b, a, lat);
    CHECK(e.max_full == doctest::Approx(0.5));
    CHECK(e.max_central == doctest::Approx(0.1));
    CHECK(e.l2_full == doctest::Approx(std::sqrt((0.25 + 0.01) * lat.dx())));
    CHECK(e.l2_central == doctest::Approx(std::sqrt(0.01 * lat.dx())));
    CHECK_THROWS(slice_error(Field(8), a, lat));
}

TEST_CASE("compare_against_oracle")
{
    const Lattice lat(64, 8.0);
    const GaussianBeam beam{};
    std::vector<double> times{0.0, 1.0};
    std::vector<Field> fields{exact_field(beam, 0.0, lat), exact_field(beam, 1.0, lat)};
    const auto errs = compare_against_oracle(times, fields, lat, [&](double t) { return exact_field(beam, t, lat); });
    REQUIRE(errs.size() == 2);
    CHECK(errs[1].max_full == 0.0);
    CHECK_THROWS(compare_against_oracle({0.0}, fields, lat, [&](double t) { return exact_field(beam, t, lat); }));
    CHECK_THROWS(compare_against_oracle(times, fields, lat, [](double) { return Field(3); }));
}

TEST_CASE("invalid configuration is rejected before running")
{
    RunConfig c = small_vacuum_run(1);
    c.lattice.points = 31;
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("deterministic beam run tracks the oracle")
{
    const auto rec = run_experiment(small_beam_run());
    CHECK(rec.rows.size() == 9);
    CHECK(rec.column("t").back() == doctest::Approx(2.0));
    CHECK(rec.summary["peak_central_error"].get<double>() < 1e-3);
    CHECK(rec.summary["max_relative_number_drift"].get<double>() < 1e-12);
    CHECK(rec.summary.contains("profile"));
    const auto i0 = rec.column("central_intensity");
    const auto ex = rec.column("exact_central_intensity");
    CHECK(i0.front() == doctest::Approx(1.0));
    CHECK(i0.back() == doctest::Approx(ex.back()).epsilon(1e-3));
}

TEST_CASE("ensemble runs do not depend on the thread count and are reproducible")
{
    const auto one = run_experiment(small_vacuum_run(1));
    const auto four = run_experiment(small_vacuum_run(4));
    const auto again = run_experiment(small_vacuum_run(1));
    REQUIRE(one.rows.size() == four.rows.size());
    for (std::size_t r = 0; r < one.rows.size(); ++r) {
        for (std::size_t k = 0; k < one.rows[r].size(); ++k) {
            CHECK(std::abs(one.rows[r][k] - four.rows[r][k]) <= 1e-12 * std::max(1.0, std::abs(one.rows[r][k])));
            CHECK(one.rows[r][k] == again.rows[r][k]);
        }
    }
    CHECK(one.all_passed());
    CHECK(one.column_index("N_total_change_se") == one.columns.size() - 1);
    CHECK_THROWS(one.column("nope"));
}

TEST_CASE("small moment run")
{
    RunConfig c;
    c.experiment = Experiment::sample_moments;
    c.prefix = "m";
    c.seed = 5;
    c.threads = 2;
    c.state.kind = "fock";
    c.state.occupations = {1};
    c.ensemble.samples = 20000;
    const auto rec = run_experiment(c);
    CHECK(rec.all_passed());
    CHECK(rec.label_columns.size() == 3);
    CHECK(rec.labels.size() == rec.rows.size());
    bool saw_density = false;
    for (std::size_t r = 0; r < rec.rows.size(); ++r) {
        if (rec.labels[r][2] == "density0") {
            saw_density = true;
            CHECK(rec.rows[r][1] < 0.0);
        }
    }
    CHECK(saw_density);

    c.state.kind = "squeezed";
    c.state.squeeze = 0.5;
    const auto sq = run_experiment(c);
    CHECK(sq.all_passed());
    // Squeezed vacuum has no Wigner or Q factor obstruction; P via the doubled space.
    CHECK_FALSE(sq.summary.contains("skipped"));
}

TEST_CASE("write_outputs produces CSV, sidecar and profile")
{
    RunConfig c = small_beam_run();
    const fs::path dir = fs::temp_directory_path() / "phasespace_test_outputs";
    fs::remove_all(dir);
    c.out_dir = dir.string();
    const auto rec = run_experiment(c);
    const auto paths = write_outputs(rec, c, 0.25);
    CHECK(paths.size() == 3);
    const std::string csv = slurp(dir / "beam.csv");
    CHECK(csv.rfind("t[time],central_intensity[|psi|^2],central_intensity_se", 0) == 0);
    const auto meta = nlohmann::json::parse(slurp(dir / "beam.meta.json"));
    for (const char* key : {"version", "experiment", "seed", "threads", "wall_time_seconds", "config", "columns",
                            "summary", "checks", "all_passed"}) {
        CHECK(meta.contains(key));
    }
    CHECK(meta["columns"].size() == rec.columns.size());
    CHECK(meta["summary"]["profile"]["file"] == "beam_profile.csv");
    CHECK(fs::exists(dir / "beam_profile.csv"));

    // Identical configuration gives a byte-identical table.
    const auto rec2 = run_experiment(c);
    c.prefix = "beam2";
    (void)write_outputs(rec2, c, 0.0);
    CHECK(slurp(dir / "beam.csv") == slurp(dir / "beam2.csv"));
    fs::remove_all(dir);
}

TEST_CASE("figure series check")
{
    std::vector<std::pair<Experiment, ObservableRecord>> recs;
    double err = 1e-1;
    for (auto e : {Experiment::fig1, Experiment::fig2, Experiment::fig3, Experiment::fig4}) {
        ObservableRecord r;
        r.summary["peak_central_error"] = err;
        err /= 10.0;
        recs.emplace_back(e, r);
    }
    CHECK(figure_series_check(recs).passed);
    recs[3].second.summary["peak_central_error"] = 1.0;
    CHECK_FALSE(figure_series_check(recs).passed);
    recs.pop_back();
    CHECK_FALSE(figure_series_check(recs).passed);
}
