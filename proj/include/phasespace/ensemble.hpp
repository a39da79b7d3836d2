#pragma once

#include "phasespace/lattice.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace phasespace {

// Operator-ordering parameter of a phase-space representation.
// s = 0 is the (doubled) positive/complex-P space, s = 1/2 Wigner, s = 1 Q.
struct Ordering {
    double s = 0.0;

    bool doubled() const { return s == 0.0; }

    static Ordering positive_p() { return {0.0}; }
    static Ordering wigner() { return {0.5}; }
    static Ordering husimi_q() { return {1.0}; }

    // Accepts "positive-p"/"p", "wigner"/"w", "q"/"husimi".
    static Ordering parse(const std::string& name);
    std::string name() const;

    friend bool operator==(const Ordering&, const Ordering&) = default;
};

// One trajectory: mode amplitudes alpha, conjugate amplitudes beta, weight.
struct PhaseSample {
    std::vector<cplx> alpha;
    std::vector<cplx> beta;
    cplx weight{1.0, 0.0};

    std::size_t mode_count() const { return alpha.size(); }
};

class WeightedEnsemble {
public:
    WeightedEnsemble(Ordering ordering, std::size_t mode_count);

    // Throws if the sample does not match the mode count, has a non-finite
    // weight, or breaks beta = conj(alpha) in a non-doubled ordering.
    void add(PhaseSample sample);
    void reserve(std::size_t n) { samples_.reserve(n); }

    const Ordering& ordering() const { return ordering_; }
    std::size_t mode_count() const { return mode_count_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const std::vector<PhaseSample>& samples() const { return samples_; }
    const PhaseSample& operator[](std::size_t i) const { return samples_[i]; }

private:
    Ordering ordering_;
    std::size_t mode_count_;
    std::vector<PhaseSample> samples_;
};

// Monte Carlo estimate with independent standard errors for the real and
// imaginary parts.
struct Estimate {
    cplx value;
    double se_real = 0.0;
    double se_imag = 0.0;

    // |value.real() - target| measured in units of se_real. Zero SE with an
    // exact match counts as 0.
    double sigmas_from(double target) const;
};

// Neumaier-compensated sum; results are insensitive to summation order at
// the 1e-15 relative level.
class CompensatedSum {
public:
    void add(double v);
    void merge(const CompensatedSum& other);
    double value() const { return sum_ + correction_; }

private:
    double sum_ = 0.0;
    double correction_ = 0.0;
};

// Running mean/variance of complex values with compensated sums.
class ComplexAccumulator {
public:
    void add(cplx v);
    void merge(const ComplexAccumulator& other);
    std::size_t count() const { return n_; }
    Estimate estimate() const;

private:
    std::size_t n_ = 0;
    CompensatedSum re_, im_, re2_, im2_;
};

using MomentFn = std::function<cplx(const PhaseSample&)>;

// (1/S) sum_j weight_j f(sample_j) and its naive iid standard error.
// With threads > 1 the ensemble is split into contiguous chunks whose
// compensated partial sums are merged in chunk order.
Estimate weighted_mean(const WeightedEnsemble& ens, const MomentFn& f, unsigned threads = 1);

// Ordering-corrected occupation per mode: Re<weight beta_k alpha_k> - s.
std::vector<Estimate> moment_estimate_number(const WeightedEnsemble& ens);

// |sum w|^2 / sum |w|^2.
double effective_sample_size(const WeightedEnsemble& ens);

// One row per sample: alpha_k re/im, beta_k re/im, weight re/im.
void write_ensemble_csv(std::ostream& out, const WeightedEnsemble& ens);

} // namespace phasespace
