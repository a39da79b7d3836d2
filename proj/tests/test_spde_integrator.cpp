#include "phasespace/apodisation.hpp"
#include "phasespace/spde_integrator.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace phasespace;

namespace {

FieldState uniform_state(const Lattice& lat, cplx value)
{
    FieldState s;
    s.psi = {Field(lat.size(), value)};
    return s;
}

ModelSpec no_linear()
{
    ModelSpec m;
    m.linear_symbol = [](std::size_t, double) { return cplx{}; };
    return m;
}

ModelSpec logistic()
{
    ModelSpec m = no_linear();
    m.drift = [](const std::vector<Field>& psi, double, std::vector<Field>& out) {
        for (std::size_t j = 0; j < psi[0].size(); ++j) {
            out[0][j] = psi[0][j] * (1.0 - psi[0][j]);
        }
    };
    return m;
}

double logistic_error(double dt)
{
    const Lattice lat(4, 1.0);
    const ModelSpec m = logistic();
    IntegratorConfig cfg{dt, static_cast<std::size_t>(std::llround(1.0 / dt)), 6, false, 1};
    const Propagator prop(m, lat, dt, false);
    FieldState s = uniform_state(lat, 0.5);
    Rng rng(1);
    for (std::size_t n = 0; n < cfg.n_steps; ++n) {
        step(s, m, cfg, prop, rng);
    }
    const double exact = 1.0 / (1.0 + std::exp(-1.0));
    return std::abs(s.psi[0][0] - exact);
}

Field random_field(std::size_t n, Rng& rng)
{
    Field f(n);
    for (auto& v : f) {
        v = {rng.normal(), rng.normal()};
    }
    return f;
}

} // namespace

TEST_CASE("zero linear symbol gives the identity transform")
{
    const Lattice lat(64, 5.0);
    Rng rng(1);
    const Field f = random_field(64, rng);
    std::vector<Field> psi{f};
    make_propagator(no_linear(), lat, 0.1, false).apply(psi);
    for (std::size_t j = 0; j < 64; ++j) {
        REQUIRE(std::abs(psi[0][j] - f[j]) < 1e-12);
    }
}

TEST_CASE("diffraction half-step phase on a plane wave")
{
    const Lattice lat(64, 5.0);
    const double dt = 0.1;
    const std::size_t bin = 3;
    const double k1 = lat.k_grid()[bin];
    Field f(64);
    for (std::size_t j = 0; j < 64; ++j) {
        f[j] = std::exp(cplx{0.0, k1 * lat.x()[j]});
    }
    std::vector<Field> psi{f};
    make_propagator(diffraction_model(0.5), lat, dt, false).apply(psi);
    const cplx factor = std::exp(cplx{0.0, -k1 * k1 * dt / 4.0});
    for (std::size_t j = 0; j < 64; ++j) {
        REQUIRE(std::abs(psi[0][j] - factor * f[j]) < 1e-12);
    }
}

TEST_CASE("constant damping symbol decays uniformly")
{
    const Lattice lat(32, 2.0);
    ModelSpec m;
    m.linear_symbol = [](std::size_t, double) { return cplx{-0.8, 0.0}; };
    std::vector<Field> psi{Field(32, cplx{1.0, 1.0})};
    make_propagator(m, lat, 0.5, false).apply(psi);
    for (const auto& v : psi[0]) {
        REQUIRE(std::abs(v - cplx{1.0, 1.0} * std::exp(-0.2)) < 1e-14);
    }
}

TEST_CASE("non-finite symbols are rejected")
{
    ModelSpec m;
    m.linear_symbol = [](std::size_t, double k) { return cplx{1.0 / (k * 0.0), 0.0}; };
    CHECK_THROWS_AS(make_propagator(m, Lattice(8, 1.0), 0.1, false), std::domain_error);
}

TEST_CASE("pure linear steps equal exact spectral propagation")
{
    const Lattice lat(128, 10.0);
    const double dt = 0.05;
    const std::size_t steps = 20;
    Rng rng(2);
    const Field f = random_field(128, rng);
    const ModelSpec m = diffraction_model(0.5);
    IntegratorConfig cfg{dt, steps, 4, false, 1};
    const Propagator prop(m, lat, dt, false);
    FieldState s;
    s.psi = {f};
    for (std::size_t n = 0; n < steps; ++n) {
        step(s, m, cfg, prop, rng);
    }
    Field spec = lat.fft_forward(f);
    for (std::size_t j = 0; j < spec.size(); ++j) {
        const double k = lat.k_grid()[j];
        spec[j] *= std::exp(cplx{0.0, -0.5 * k * k * dt * steps});
    }
    const Field exact = lat.fft_inverse(spec);
    double worst = 0.0;
    for (std::size_t j = 0; j < 128; ++j) {
        worst = std::max(worst, std::abs(s.psi[0][j] - exact[j]));
    }
    CHECK(worst < 1e-12);
    CHECK(s.t == doctest::Approx(1.0));
}

TEST_CASE("unitary evolution conserves the norm over 1000 steps")
{
    const Lattice lat(256, 20.0);
    Rng rng(3);
    FieldState s;
    s.psi = {random_field(256, rng)};
    const double n0 = lat.norm(s.psi[0]);
    const ModelSpec m = diffraction_model(0.5);
    IntegratorConfig cfg{0.005, 1000, 4, false, 1};
    const Propagator prop(m, lat, cfg.dt, false);
    for (std::size_t n = 0; n < cfg.n_steps; ++n) {
        step(s, m, cfg, prop, rng);
    }
    CHECK(std::abs(lat.norm(s.psi[0]) - n0) / n0 < 1e-10);
}

TEST_CASE("midpoint scheme is second order on a logistic drift")
{
    const double e1 = logistic_error(0.1);
    const double e2 = logistic_error(0.05);
    const double e3 = logistic_error(0.025);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("fixed-point sweeps converge at the figure step sizes")
{
    const Lattice lat(4, 1.0);
    for (double dt : {0.005, 0.025}) {
        const ModelSpec m = logistic();
        IntegratorConfig cfg{dt, 1, 4, false, 1};
        const Propagator prop(m, lat, dt, false);
        FieldState s = uniform_state(lat, 0.5);
        Rng rng(1);
        CHECK(step(s, m, cfg, prop, rng).midpoint_change < 1e-10);
    }
    // Cubic drift on a Gaussian.
    const Lattice grid(256, 20.0);
    const ModelSpec cubic = cubic_model(cplx{0.0, 1.0});
    IntegratorConfig cfg{0.005, 1, 4, true, 1};
    const Propagator prop(cubic, grid, cfg.dt, true);
    FieldState s;
    s.psi = {Field(256)};
    for (std::size_t j = 0; j < 256; ++j) {
        s.psi[0][j] = std::exp(-0.5 * grid.x()[j] * grid.x()[j]);
    }
    // A unit-strength cubic term contracts by at most rho = (3/2) dt max|psi|^2
    // per sweep, starting from a first change of at most dt max|psi|^3 / 2.
    Rng rng(1);
    FieldState s4 = s;
    const double first = 0.5 * cfg.dt;
    const double rho = 1.5 * cfg.dt;
    CHECK(step(s4, cubic, cfg, prop, rng).midpoint_change <= first * rho * rho * rho);
    cfg.midpoint_iterations = 5;
    CHECK(step(s, cubic, cfg, prop, rng).midpoint_change < 1e-10);
}

TEST_CASE("lattice noise has variance dt/dv and no cross-correlation")
{
    const Lattice lat(100, 2.5); // dv = 0.05
    const double dt = 0.01;
    Rng rng(4);
    double s2 = 0.0, s4 = 0.0, cross = 0.0, cross2 = 0.0;
    std::size_t count = 0, pairs = 0;
    for (int rep = 0; rep < 5000; ++rep) {
        const auto dw = make_noise(lat, dt, 2, rng);
        for (std::size_t j = 0; j < lat.size(); ++j) {
            for (std::size_t i = 0; i < 2; ++i) {
                const double v = dw[i][j] * dw[i][j];
                s2 += v;
                s4 += v * v;
                ++count;
            }
            const double c = dw[0][j] * dw[1][(j + 1) % lat.size()];
            cross += c;
            cross2 += c * c;
            ++pairs;
        }
    }
    const double var = s2 / count;
    CHECK(var == doctest::Approx(dt / lat.dv()).epsilon(0.01));
    const double cm = cross / pairs;
    CHECK(std::abs(cm) < 3.0 * std::sqrt((cross2 / pairs - cm * cm) / pairs));

    Rng a(9), b(9);
    CHECK(make_noise(lat, dt, 1, a) == make_noise(lat, dt, 1, b));
}

TEST_CASE("Stratonovich multiplicative noise: <psi> = psi0 exp((-g + e^2/2) t)")
{
    // Two-point lattice with dv = 1 so each point is an independent scalar SDE.
    const Lattice lat(2, 1.0);
    const double g = 0.5, eps = 1.0, t_final = 1.0, dt = 0.01;
    ModelSpec m = no_linear();
    m.drift = [g](const std::vector<Field>& psi, double, std::vector<Field>& out) {
        for (std::size_t j = 0; j < psi[0].size(); ++j) {
            out[0][j] = -g * psi[0][j];
        }
    };
    m.noise_count = 1;
    m.noise = [eps](const std::vector<Field>& psi, const NoiseArrays& dw, std::vector<Field>& out) {
        for (std::size_t j = 0; j < psi[0].size(); ++j) {
            out[0][j] = eps * psi[0][j] * dw[0][j];
        }
    };
    IntegratorConfig cfg{dt, static_cast<std::size_t>(t_final / dt), 4, false, 1};
    const Propagator prop(m, lat, dt, false);
    double s = 0.0, s2 = 0.0;
    const std::size_t trajectories = 20000;
    for (std::size_t tr = 0; tr < trajectories; ++tr) {
        Rng rng = Rng::stream(77, tr);
        FieldState st = uniform_state(lat, 1.0);
        for (std::size_t n = 0; n < cfg.n_steps; ++n) {
            step(st, m, cfg, prop, rng);
        }
        for (const auto& v : st.psi[0]) {
            s += v.real();
            s2 += v.real() * v.real();
        }
    }
    const double count = 2.0 * trajectories;
    const double mean = s / count;
    const double se = std::sqrt((s2 / count - mean * mean) / count);
    const double strat = std::exp((-g + 0.5 * eps * eps) * t_final);
    const double ito = std::exp(-g * t_final);
    CHECK(std::abs(mean - strat) < 3.0 * se + 0.01 * strat);
    CHECK(std::abs(mean - ito) > 10.0 * se);
}

TEST_CASE("additive noise: <|psi|^2> grows as |b|^2 t / dv")
{
    const Lattice lat(50, 5.0); // dv = 0.2
    const cplx b{0.3, 0.4};
    ModelSpec m = no_linear();
    m.noise_count = 1;
    m.noise = [b](const std::vector<Field>&, const NoiseArrays& dw, std::vector<Field>& out) {
        for (std::size_t j = 0; j < dw[0].size(); ++j) {
            out[0][j] = b * dw[0][j];
        }
    };
    IntegratorConfig cfg{0.01, 100, 1, false, 1};
    const Propagator prop(m, lat, cfg.dt, false);
    double s = 0.0, s2 = 0.0;
    std::size_t count = 0;
    for (std::size_t tr = 0; tr < 400; ++tr) {
        Rng rng = Rng::stream(5, tr);
        FieldState st = uniform_state(lat, 0.0);
        for (std::size_t n = 0; n < cfg.n_steps; ++n) {
            step(st, m, cfg, prop, rng);
        }
        for (const auto& v : st.psi[0]) {
            s += std::norm(v);
            s2 += std::norm(v) * std::norm(v);
            ++count;
        }
    }
    const double mean = s / count;
    const double se = std::sqrt((s2 / count - mean * mean) / count);
    CHECK(std::abs(mean - std::norm(b) * 1.0 / lat.dv()) < 3.0 * se);
}

TEST_CASE("de-aliased cubic run keeps the upper half of the spectrum empty")
{
    const Lattice lat(128, 10.0);
    const ModelSpec m = cubic_model(cplx{0.0, 1.0});
    IntegratorConfig cfg{0.01, 50, 4, true, 1};
    const Propagator prop(m, lat, cfg.dt, true);
    const Projector proj = build_projector(lat);
    for (std::size_t j = 0; j < lat.size(); ++j) {
        if (proj.mask[j] == 0.0) {
            REQUIRE(prop.multiplier(0)[j] == cplx{0.0, 0.0});
        }
    }
    FieldState s;
    s.psi = {Field(lat.size())};
    for (std::size_t j = 0; j < lat.size(); ++j) {
        s.psi[0][j] = 2.0 / std::cosh(lat.x()[j]);
    }
    Rng rng(6);
    for (std::size_t n = 0; n < cfg.n_steps; ++n) {
        step(s, m, cfg, prop, rng);
        const Field spec = lat.fft_forward(s.psi[0]);
        double high = 0.0, total = 0.0;
        for (std::size_t j = 0; j < spec.size(); ++j) {
            total = std::max(total, std::abs(spec[j]));
            if (proj.mask[j] == 0.0) {
                high = std::max(high, std::abs(spec[j]));
            }
        }
        // Zero up to the rounding of one inverse/forward transform pair.
        REQUIRE(high <= 1e-14 * total);
    }
}

TEST_CASE("run: observation schedule, determinism and error reporting")
{
    const Lattice lat(32, 4.0);
    const ModelSpec m = diffraction_model(0.5);
    RunOptions opts;
    opts.observers.push_back({"norm", [&lat](const FieldState& s) { return lat.norm(s.psi[0]); }});
    FieldState s0;
    s0.psi = {Field(32)};
    for (std::size_t j = 0; j < 32; ++j) {
        s0.psi[0][j] = std::exp(-lat.x()[j] * lat.x()[j]);
    }
    Rng rng(1);
    const auto none = run(s0, m, IntegratorConfig{0.1, 0, 4, false, 1}, lat, opts, rng);
    CHECK(none.times.size() == 1);
    CHECK(none.values[0][0] == doctest::Approx(lat.norm(s0.psi[0])));

    const auto strided = run(s0, m, IntegratorConfig{0.1, 10, 4, false, 3}, lat, opts, rng);
    REQUIRE(strided.times.size() == 5);
    const double expected[] = {0.0, 0.3, 0.6, 0.9, 1.0};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(strided.times[i] == doctest::Approx(expected[i]));
    }

    ModelSpec noisy = m;
    noisy.noise_count = 1;
    noisy.noise = [](const std::vector<Field>& psi, const NoiseArrays& dw, std::vector<Field>& out) {
        for (std::size_t j = 0; j < psi[0].size(); ++j) {
            out[0][j] = 0.1 * dw[0][j];
        }
    };
    Rng a(5), b(5);
    const auto ra = run(s0, noisy, IntegratorConfig{0.1, 20, 4, false, 1}, lat, opts, a);
    const auto rb = run(s0, noisy, IntegratorConfig{0.1, 20, 4, false, 1}, lat, opts, b);
    CHECK(ra.values == rb.values);

    ModelSpec blowup = no_linear();
    blowup.drift = [](const std::vector<Field>& psi, double, std::vector<Field>& out) {
        for (std::size_t j = 0; j < psi[0].size(); ++j) {
            out[0][j] = 1e3 * psi[0][j] * psi[0][j] * psi[0][j];
        }
    };
    FieldState big;
    big.psi = {Field(32, cplx{10.0, 0.0})};
    try {
        (void)run(big, blowup, IntegratorConfig{0.1, 100, 4, false, 1}, lat, opts, rng);
        FAIL("expected an instability");
    } catch (const InstabilityError& e) {
        CHECK(std::string(e.what()).find("step ") == 0);
        CHECK(e.step_index() < 100);
    }
}

TEST_CASE("integrator configuration validation")
{
    CHECK_THROWS(IntegratorConfig{0.0, 1, 4, false, 1}.validate());
    CHECK_THROWS(IntegratorConfig{0.1, 1, 0, false, 1}.validate());
    CHECK_THROWS(IntegratorConfig{0.1, 1, 4, false, 0}.validate());
    CHECK_NOTHROW(IntegratorConfig{0.1, 0, 4, false, 1}.validate());
}
