#include "phasespace/ordering_transform.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace phasespace {

ConvolutionParams convolution_params(cplx alpha0, cplx beta0, cplx displacement)
{
    ConvolutionParams c;
    c.alpha_plus = 0.5 * (alpha0 + std::conj(beta0));
    c.alpha_minus = 0.5 * (alpha0 - std::conj(beta0));
    c.displacement = displacement;
    // Delta a_-^* - Delta^* a_-^ = 2 i Im(Delta a_-^*)
    c.delta = 2.0 * std::imag(displacement * std::conj(c.alpha_minus));
    return c;
}

PhaseSample convolve_sample(const PhaseSample& p_sample, const Ordering& source, double s_target,
                            Rng& rng)
{
    if (!(s_target > 0.0) || !std::isfinite(s_target)) {
        throw std::invalid_argument("convolution target ordering must have s > 0");
    }
    if (!source.doubled()) {
        throw std::invalid_argument("convolution input must come from a doubled (P) phase space");
    }
    const std::size_t m = p_sample.mode_count();
    const double width = std::sqrt(0.5 * s_target);
    PhaseSample out{std::vector<cplx>(m), std::vector<cplx>(m), p_sample.weight};
    cplx exponent{0.0, 0.0};
    for (std::size_t k = 0; k < m; ++k) {
        const double dx = width * rng.normal();
        const double dy = width * rng.normal();
        const auto c = convolution_params(p_sample.alpha[k], p_sample.beta[k], {dx, dy});
        out.alpha[k] = c.alpha_plus + c.displacement;
        out.beta[k] = std::conj(out.alpha[k]);
        exponent += cplx(std::norm(c.alpha_minus), -c.delta) / s_target;
    }
    out.weight *= std::exp(exponent);
    return out;
}

WeightedEnsemble convolve_ensemble(const WeightedEnsemble& p_ensemble, double s_target,
                                   std::uint64_t seed)
{
    WeightedEnsemble out(Ordering{s_target}, p_ensemble.mode_count());
    out.reserve(p_ensemble.size());
    for (std::size_t j = 0; j < p_ensemble.size(); ++j) {
        Rng rng = Rng::stream(seed, j);
        out.add(convolve_sample(p_ensemble[j], p_ensemble.ordering(), s_target, rng));
    }
    return out;
}

DensityEstimate wigner_density_estimate(const WeightedEnsemble& ens, std::span<const cplx> probe,
                                        double bandwidth)
{
    if (ens.empty()) {
        throw std::invalid_argument("density estimate of an empty ensemble");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw std::invalid_argument("kernel bandwidth must be finite and positive");
    }
    if (probe.size() != ens.mode_count()) {
        throw std::invalid_argument("probe point must have one amplitude per mode");
    }
    const double h2 = bandwidth * bandwidth;
    const double norm = 1.0 / (std::numbers::pi * h2);
    const std::vector<cplx> at(probe.begin(), probe.end());
    const Estimate e = weighted_mean(ens, [&](const PhaseSample& p) {
        double kernel = 1.0;
        for (std::size_t k = 0; k < at.size(); ++k) {
            kernel *= norm * std::exp(-std::norm(p.alpha[k] - at[k]) / h2);
        }
        return cplx{kernel, 0.0};
    });
    return {e.value.real(), e.se_real, e.value.imag(), e.se_imag, bandwidth};
}

} // namespace phasespace
