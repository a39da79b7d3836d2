#pragma once

#include "phasespace/ensemble.hpp"
#include "phasespace/rng.hpp"

#include <span>

namespace phasespace {

// Per-mode quantities of a P -> s convolution step.
struct ConvolutionParams {
    cplx alpha_plus;   // (alpha0 + conj(beta0)) / 2
    cplx alpha_minus;  // (alpha0 - conj(beta0)) / 2
    cplx displacement; // Delta, each quadrature N(0, s/2)
    double delta;      // -i (Delta conj(alpha_minus) - conj(Delta) alpha_minus), real
};

ConvolutionParams convolution_params(cplx alpha0, cplx beta0, cplx displacement);

// Maps one doubled-space sample to a classical s_target sample:
// alpha = alpha_plus + Delta, beta = conj(alpha),
// weight = weight_P * prod_k exp((|alpha_minus|^2 - i delta) / s_target).
PhaseSample convolve_sample(const PhaseSample& p_sample, const Ordering& source, double s_target,
                            Rng& rng);

// Converts every sample; trajectory j uses Rng::stream(seed, j).
WeightedEnsemble convolve_ensemble(const WeightedEnsemble& p_ensemble, double s_target,
                                   std::uint64_t seed);

struct DensityEstimate {
    double value;          // real part of the weighted kernel estimate
    double std_error;
    double imag_residual;  // imaginary part, ~0 in expectation
    double imag_std_error;
    double bandwidth;
};

// Weighted kernel-density estimate of the quasi-probability at `probe` with
// the product kernel prod_k exp(-|alpha_k - probe_k|^2 / h^2) / (pi h^2).
// This kernel smooths each quadrature with variance h^2/2, i.e. it shifts
// the ordering parameter of the estimated function by h^2.
DensityEstimate wigner_density_estimate(const WeightedEnsemble& ens, std::span<const cplx> probe,
                                        double bandwidth);

} // namespace phasespace
