#pragma once

#include "phasespace/ensemble.hpp"
#include "phasespace/rng.hpp"

#include <Eigen/Dense>

#include <span>

namespace phasespace {

// Gaussian state in extended coordinates (alpha_1..alpha_M, alpha_1^+..alpha_M^+):
//   <{a_i a_j}_s> = mean_i mean_j + sigma_ij.
struct CovarianceSpec {
    Ordering ordering;
    Eigen::VectorXcd mean;  // length 2M
    Eigen::MatrixXcd sigma; // 2M x 2M, symmetric

    std::size_t mode_count() const { return static_cast<std::size_t>(mean.size() / 2); }
};

// Square root B of sigma with B B^T = sigma. For classical orderings row M+j
// is the complex conjugate of row j, so real noise produces beta = conj(alpha).
struct NoiseFactor {
    Eigen::MatrixXcd b;
};

constexpr double kFactorTolerance = 1e-10;

NoiseFactor factor_covariance(const CovarianceSpec& spec);

// alpha = mean + B w with w ~ N(0, I_2M); weight 1.
PhaseSample sample_gaussian(const CovarianceSpec& spec, const NoiseFactor& factor, Rng& rng);

// Rotates every alpha by e^{i phi} and beta by e^{-i phi}, phi ~ U[-pi, pi).
PhaseSample randomize_phase(PhaseSample sample, Rng& rng);

// Coherent state with the given amplitudes: sigma_{j,M+j} = s.
CovarianceSpec coherent_state(std::span<const cplx> amplitudes, Ordering ordering);
// Thermal state: sigma_{j,M+j} = nbar_j + s.
CovarianceSpec thermal_state(std::span<const double> nbar, Ordering ordering);
// Single-mode squeezed vacuum, a -> a cosh r - a^+ sinh r.
CovarianceSpec squeezed_vacuum(double r, Ordering ordering);

} // namespace phasespace
