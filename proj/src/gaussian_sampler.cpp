#include "phasespace/gaussian_sampler.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace phasespace {

namespace {

void validate(const CovarianceSpec& spec)
{
    const auto n = spec.mean.size();
    if (n == 0 || n % 2 != 0) {
        throw std::invalid_argument("covariance mean must have even, non-zero length 2M");
    }
    if (spec.sigma.rows() != n || spec.sigma.cols() != n) {
        throw std::invalid_argument("covariance matrix must be 2M x 2M");
    }
    if (!spec.sigma.allFinite() || !spec.mean.allFinite()) {
        throw std::invalid_argument("covariance spec contains non-finite entries");
    }
    const double scale = std::max(1.0, spec.sigma.cwiseAbs().maxCoeff());
    const double asym = (spec.sigma - spec.sigma.transpose()).cwiseAbs().maxCoeff();
    if (asym > kFactorTolerance * scale) {
        throw std::invalid_argument("covariance matrix is not symmetric (max |sigma - sigma^T| = " +
                                    std::to_string(asym) + ")");
    }
    if (!spec.ordering.doubled()) {
        const auto m = n / 2;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (std::abs(spec.mean(m + j) - std::conj(spec.mean(j))) > kFactorTolerance * scale) {
                throw std::invalid_argument("classical ordering requires mean_{M+j} = conj(mean_j)");
            }
        }
    }
}

double residual(const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& sigma)
{
    return (b * b.transpose() - sigma).cwiseAbs().maxCoeff();
}

// Classical orderings: alpha = x + i y with real quadratures q = (x, y).
// alpha_ext = T q, T = [[I, iI], [I, -iI]], so the real covariance of q is
// C = T^{-1} sigma T^{-T}. Factor C = R R^T and set B = T R.
NoiseFactor factor_quadrature(const CovarianceSpec& spec, double scale)
{
    const auto n = spec.sigma.rows();
    const auto m = n / 2;
    const cplx i{0.0, 1.0};
    Eigen::MatrixXcd tinv = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < m; ++j) {
        tinv(j, j) = 0.5;
        tinv(j, m + j) = 0.5;
        tinv(m + j, j) = -0.5 * i;
        tinv(m + j, m + j) = 0.5 * i;
    }
    const Eigen::MatrixXcd c = tinv * spec.sigma * tinv.transpose();
    const double imag = c.imag().cwiseAbs().maxCoeff();
    if (imag > kFactorTolerance * scale) {
        throw std::domain_error(
            "no admissible factorization: quadrature covariance is not real (max |Im C| = " +
            std::to_string(imag) + ")");
    }
    const Eigen::MatrixXd cr = 0.5 * (c.real() + c.real().transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cr);
    if (eig.info() != Eigen::Success) {
        throw std::domain_error("no admissible factorization: eigen-decomposition failed");
    }
    const Eigen::VectorXd lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -kFactorTolerance * scale) {
        throw std::domain_error(
            "no admissible factorization: quadrature covariance is not positive semidefinite "
            "(min eigenvalue " +
            std::to_string(lambda.minCoeff()) + ")");
    }
    const Eigen::MatrixXd r = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();

    NoiseFactor f{Eigen::MatrixXcd(n, n)};
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            f.b(j, k) = cplx(r(j, k), r(m + j, k));
            f.b(m + j, k) = cplx(r(j, k), -r(m + j, k));
        }
    }
    return f;
}

// Doubled phase space: Takagi factorization sigma = U D U^T. With
// sigma = P + iQ, the real symmetric matrix [[P, Q], [Q, -P]] has eigenpairs
// (+d, (x; y)) whose u = x + i y satisfy sigma conj(u) = d u.
NoiseFactor factor_takagi(const CovarianceSpec& spec, double scale)
{
    const auto n = spec.sigma.rows();
    const Eigen::MatrixXd p = spec.sigma.real();
    const Eigen::MatrixXd q = spec.sigma.imag();
    Eigen::MatrixXd h(2 * n, 2 * n);
    h << p, q, q, -p;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    if (eig.info() != Eigen::Success) {
        throw std::domain_error("no admissible factorization: Takagi eigen-decomposition failed");
    }
    NoiseFactor f{Eigen::MatrixXcd::Zero(n, n)};
    Eigen::Index column = 0;
    // Eigenvalues ascend; the top n are the non-negative Takagi values.
    for (Eigen::Index e = 2 * n - 1; e >= n; --e) {
        const double d = eig.eigenvalues()(e);
        if (d <= kFactorTolerance * scale * 1e-3) {
            break;
        }
        const auto v = eig.eigenvectors().col(e);
        for (Eigen::Index row = 0; row < n; ++row) {
            f.b(row, column) = std::sqrt(d) * cplx(v(row), v(n + row));
        }
        ++column;
    }
    return f;
}

} // namespace

NoiseFactor factor_covariance(const CovarianceSpec& spec)
{
    validate(spec);
    const double scale = std::max(1.0, spec.sigma.cwiseAbs().maxCoeff());
    NoiseFactor f = spec.ordering.doubled() ? factor_takagi(spec, scale) : factor_quadrature(spec, scale);
    const double res = residual(f.b, spec.sigma);
    if (res > kFactorTolerance * scale) {
        throw std::domain_error("no admissible factorization: residual |B B^T - sigma| = " +
                                std::to_string(res));
    }
    return f;
}

PhaseSample sample_gaussian(const CovarianceSpec& spec, const NoiseFactor& factor, Rng& rng)
{
    const auto n = spec.mean.size();
    if (factor.b.rows() != n || factor.b.cols() != n) {
        throw std::invalid_argument("noise factor does not match covariance spec dimensions");
    }
    Eigen::VectorXd w(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        w(k) = rng.normal();
    }
    const Eigen::VectorXcd ext = spec.mean + factor.b * w;
    const auto m = n / 2;
    PhaseSample out;
    out.alpha.resize(static_cast<std::size_t>(m));
    out.beta.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        out.alpha[static_cast<std::size_t>(j)] = ext(j);
        out.beta[static_cast<std::size_t>(j)] =
            spec.ordering.doubled() ? ext(m + j) : std::conj(ext(j));
    }
    return out;
}

PhaseSample randomize_phase(PhaseSample sample, Rng& rng)
{
    const double phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const cplx rot = std::polar(1.0, phi);
    for (auto& a : sample.alpha) {
        a *= rot;
    }
    for (auto& b : sample.beta) {
        b *= std::conj(rot);
    }
    return sample;
}

namespace {

CovarianceSpec diagonal_state(std::span<const cplx> amplitudes, std::span<const double> nbar,
                              Ordering ordering)
{
    const auto m = static_cast<Eigen::Index>(amplitudes.size());
    CovarianceSpec spec{ordering, Eigen::VectorXcd(2 * m), Eigen::MatrixXcd::Zero(2 * m, 2 * m)};
    for (Eigen::Index j = 0; j < m; ++j) {
        spec.mean(j) = amplitudes[static_cast<std::size_t>(j)];
        spec.mean(m + j) = std::conj(amplitudes[static_cast<std::size_t>(j)]);
        const double occ = (nbar.empty() ? 0.0 : nbar[static_cast<std::size_t>(j)]) + ordering.s;
        spec.sigma(j, m + j) = occ;
        spec.sigma(m + j, j) = occ;
    }
    return spec;
}

} // namespace

CovarianceSpec coherent_state(std::span<const cplx> amplitudes, Ordering ordering)
{
    return diagonal_state(amplitudes, {}, ordering);
}

CovarianceSpec thermal_state(std::span<const double> nbar, Ordering ordering)
{
    for (double v : nbar) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("thermal occupation must be finite and non-negative");
        }
    }
    const std::vector<cplx> zero(nbar.size());
    return diagonal_state(zero, nbar, ordering);
}

CovarianceSpec squeezed_vacuum(double r, Ordering ordering)
{
    const double c = std::cosh(r);
    const double s = std::sinh(r);
    CovarianceSpec spec{ordering, Eigen::VectorXcd::Zero(2), Eigen::MatrixXcd(2, 2)};
    spec.sigma(0, 0) = -c * s;
    spec.sigma(1, 1) = -c * s;
    spec.sigma(0, 1) = s * s + ordering.s;
    spec.sigma(1, 0) = s * s + ordering.s;
    return spec;
}

} // namespace phasespace
