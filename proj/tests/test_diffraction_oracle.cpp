#include "phasespace/diffraction_oracle.hpp"
#include "phasespace/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace phasespace;

namespace {

// Coefficients of (1/2) (sum_q 2 q a_q y^{2q-1})^2 by direct polynomial
// multiplication in powers of y, read off at even powers y^{2q}.
std::vector<cplx> brute_force_beta(const std::vector<cplx>& a)
{
    const std::size_t pmax = a.size() - 1;
    std::vector<cplx> deriv(2 * pmax, cplx{}); // coefficient of y^m
    for (std::size_t q = 1; q <= pmax; ++q) {
        deriv[2 * q - 1] = static_cast<double>(2 * q) * a[q];
    }
    std::vector<cplx> square(4 * pmax, cplx{});
    for (std::size_t i = 0; i < deriv.size(); ++i) {
        for (std::size_t j = 0; j < deriv.size(); ++j) {
            square[i + j] += deriv[i] * deriv[j];
        }
    }
    std::vector<cplx> beta(pmax + 1, cplx{});
    for (std::size_t q = 1; q <= pmax; ++q) {
        beta[q] = 0.5 * square[2 * q];
    }
    return beta;
}

constexpr int kP = 5;
constexpr double kGamma = 10.0;
constexpr double kXmax = 20.0;

double gamma_p() { return kGamma / std::pow(kXmax, 2 * kP); }

LogPsiSeries initial_series()
{
    auto s = LogPsiSeries::gaussian(1.0);
    s.alphas.resize(kP + 1);
    return s;
}

// gamma_{p-1} = -i p(2p-1) gamma_p (t - i sigma^2)/(2p+1): the value that
// cancels the x^{2(p-1)} drive once alpha_p has reached its limit.
AbsorberCoefficients full_form_absorber()
{
    const double gp = gamma_p();
    return [gp](double t, const LogPsiSeries&) {
        std::vector<cplx> g(kP + 1);
        g[kP] = gp;
        g[kP - 1] = cplx(0.0, -kP * (2.0 * kP - 1.0)) * gp * cplx(t, -1.0) / (2.0 * kP + 1.0);
        return g;
    };
}

} // namespace

TEST_CASE("exact field initial condition and central intensity")
{
    const GaussianBeam beam{1.0, 1.0};
    for (double x : {0.0, 0.5, 2.0}) {
        CHECK(std::abs(exact_field(beam, 0.0, x) - std::exp(-0.5 * x * x)) < 1e-15);
    }
    CHECK(std::norm(exact_field(beam, 20.0, 0.0)) == doctest::Approx(0.049938).epsilon(1e-5));
    CHECK(std::norm(exact_field(beam, 20.0, 0.0)) == doctest::Approx(1.0 / std::sqrt(401.0)).epsilon(1e-14));
    const GaussianBeam wide{2.0, cplx{0.0, 3.0}};
    for (double t : {0.0, 1.0, 7.0}) {
        CHECK(std::norm(exact_field(wide, t, 0.0)) == doctest::Approx(9.0 * 4.0 / std::sqrt(16.0 + t * t)));
    }
}

TEST_CASE("exact field satisfies the paraxial equation")
{
    const GaussianBeam beam{1.3, 1.0};
    const double h = 1e-3;
    for (double t : {0.5, 3.0, 20.0}) {
        for (double x : {0.0, 0.7, 2.5}) {
            const cplx dt = (exact_field(beam, t + h, x) - exact_field(beam, t - h, x)) / (2 * h);
            const cplx dxx = (exact_field(beam, t, x + h) - 2.0 * exact_field(beam, t, x) + exact_field(beam, t, x - h)) /
                             (h * h);
            const cplx residual = dt - cplx(0.0, 0.5) * dxx;
            CHECK(std::abs(residual) < 1e-6 * std::max(1.0, std::abs(dt)));
        }
    }
}

TEST_CASE("lattice overload matches the pointwise oracle")
{
    const Lattice lat(64, 8.0);
    const GaussianBeam beam{};
    const Field f = exact_field(beam, 2.0, lat);
    for (std::size_t j = 0; j < 64; ++j) {
        CHECK(f[j] == exact_field(beam, 2.0, lat.x()[j]));
    }
}

TEST_CASE("beta coefficients: listed low orders")
{
    const cplx a1{0.4, 0.1}, a2{-0.2, 0.3}, a3{0.05, -0.07};
    const auto b1 = beta_coefficients({{cplx{}, a1}});
    CHECK(std::abs(b1[1] - 2.0 * a1 * a1) < 1e-15);
    const auto b = beta_coefficients({{cplx{}, a1, a2, a3}});
    CHECK(std::abs(b[2] - 8.0 * a1 * a2) < 1e-15);
    CHECK(std::abs(b[3] - (12.0 * a1 * a3 + 8.0 * a2 * a2)) < 1e-15);
    CHECK(b[0] == cplx{});
}

TEST_CASE("beta coefficients match brute-force polynomial squaring")
{
    Rng rng(1);
    for (std::size_t pmax = 1; pmax <= 6; ++pmax) {
        std::vector<cplx> a(pmax + 1);
        for (auto& v : a) {
            v = {rng.normal(), rng.normal()};
        }
        const auto fast = beta_coefficients({a});
        const auto slow = brute_force_beta(a);
        for (std::size_t q = 0; q <= pmax; ++q) {
            REQUIRE(std::abs(fast[q] - slow[q]) < 1e-12 * (1.0 + std::abs(slow[q])));
        }
    }
}

TEST_CASE("free series evolution reproduces the Gaussian closed form")
{
    const double sigma = 1.0;
    auto s0 = LogPsiSeries::gaussian(sigma);
    s0.alphas.resize(4);
    const auto zero = [](double, const LogPsiSeries& s) { return std::vector<cplx>(s.alphas.size()); };
    double worst = 0.0;
    (void)series_evolve(s0, zero, 20.0, 1e-3, [&](double t, const LogPsiSeries& s) {
        const cplx w(sigma * sigma, t);
        worst = std::max(worst, std::abs(s.alphas[1] - 1.0 / (2.0 * w)));
        worst = std::max(worst, std::abs(s.alphas[0] - 0.5 * std::log(w / (sigma * sigma))));
        worst = std::max({worst, std::abs(s.alphas[2]), std::abs(s.alphas[3])});
    });
    CHECK(worst < 1e-8);
}

TEST_CASE("with the cancelling correction alpha_p/(t - i sigma^2) -> gamma_p/(2p+1)")
{
    const auto y = series_evolve(initial_series(), full_form_absorber(), 100.0, 1e-3);
    const cplx ratio = y.alphas[kP] / cplx(100.0, -1.0) / (gamma_p() / (2.0 * kP + 1.0));
    CHECK(std::abs(ratio - 1.0) < 0.01);
}

TEST_CASE("the cancelling correction keeps alpha_{p-1} unexcited")
{
    double worst = 0.0;
    (void)series_evolve(initial_series(), full_form_absorber(), 100.0, 1e-3, [&](double t, const LogPsiSeries& s) {
        if (t >= 5.0) {
            worst = std::max(worst, std::abs(s.alphas[kP - 1]) / std::abs(s.alphas[kP]));
        }
    });
    CHECK(worst < 1e-3);

    // The feedback form gamma_{p-1} = -i p(2p-1) alpha_p imposes the
    // cancellation condition exactly.
    const double gp = gamma_p();
    const AbsorberCoefficients feedback = [gp](double, const LogPsiSeries& s) {
        std::vector<cplx> g(kP + 1);
        g[kP] = gp;
        g[kP - 1] = cplx(0.0, -kP * (2.0 * kP - 1.0)) * s.alphas[kP];
        return g;
    };
    const auto y = series_evolve(initial_series(), feedback, 100.0, 1e-3);
    CHECK(std::abs(y.alphas[kP - 1]) <= 1e-12 * std::abs(y.alphas[kP]));
}

TEST_CASE("asymptotic correction versus none")
{
    const auto asym = series_evolve(initial_series(), power_law_absorber(kP, kP, kGamma, kXmax, true), 100.0, 1e-3);
    const auto none = series_evolve(initial_series(), power_law_absorber(kP, kP, kGamma, kXmax, false), 100.0, 1e-3);
    const double norm = gamma_p() / (2.0 * kP + 1.0);
    const double err_asym = std::abs(asym.alphas[kP] / cplx(100.0, -1.0) / norm - 1.0);
    const double err_none = std::abs(none.alphas[kP] / cplx(100.0, -1.0) / norm - 1.0);
    CHECK(err_asym < 0.05);
    CHECK(err_asym < err_none);
    // The asymptotic form omits the -i sigma^2 part, leaving a bounded but
    // O(1) ratio |alpha_{p-1}|/|alpha_p|.
    CHECK(std::abs(asym.alphas[kP - 1]) / std::abs(asym.alphas[kP]) < 10.0);
}

TEST_CASE("power-law absorber coefficients")
{
    const auto g = power_law_absorber(kP, kP, kGamma, kXmax, true);
    const auto v = g(20.0, initial_series());
    REQUIRE(v.size() == kP + 1);
    CHECK(v[kP].real() == doctest::Approx(gamma_p()));
    CHECK(v[kP - 1].imag() == doctest::Approx(-45.0 / 11.0 * 20.0 * gamma_p()));
    CHECK(v[kP - 1].real() == 0.0);
    CHECK_THROWS(power_law_absorber(3, 5, 1.0, 1.0, false));
    CHECK_THROWS(series_evolve(initial_series(), g, 1.0, 0.0));
}
