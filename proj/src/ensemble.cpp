#include "phasespace/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace phasespace {

Ordering Ordering::parse(const std::string& name)
{
    if (name == "positive-p" || name == "p" || name == "P" || name == "complex-p") {
        return positive_p();
    }
    if (name == "wigner" || name == "w" || name == "W") {
        return wigner();
    }
    if (name == "q" || name == "Q" || name == "husimi") {
        return husimi_q();
    }
    throw std::invalid_argument("unknown ordering '" + name + "'");
}

std::string Ordering::name() const
{
    if (s == 0.0) {
        return "positive-p";
    }
    if (s == 0.5) {
        return "wigner";
    }
    if (s == 1.0) {
        return "q";
    }
    return "s=" + std::to_string(s);
}

WeightedEnsemble::WeightedEnsemble(Ordering ordering, std::size_t mode_count)
    : ordering_(ordering), mode_count_(mode_count)
{
    if (!std::isfinite(ordering.s) || ordering.s < 0.0) {
        throw std::invalid_argument("ordering parameter s must be finite and non-negative");
    }
}

void WeightedEnsemble::add(PhaseSample sample)
{
    if (sample.alpha.size() != mode_count_ || sample.beta.size() != mode_count_) {
        throw std::invalid_argument("sample mode count does not match ensemble");
    }
    if (!std::isfinite(sample.weight.real()) || !std::isfinite(sample.weight.imag())) {
        throw std::invalid_argument("sample weight is not finite");
    }
    if (!ordering_.doubled()) {
        for (std::size_t k = 0; k < mode_count_; ++k) {
            if (sample.beta[k] != std::conj(sample.alpha[k])) {
                throw std::invalid_argument("beta != conj(alpha) in a classical phase space");
            }
        }
    }
    samples_.push_back(std::move(sample));
}

double Estimate::sigmas_from(double target) const
{
    const double diff = std::abs(value.real() - target);
    if (se_real == 0.0) {
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return diff / se_real;
}

void CompensatedSum::add(double v)
{
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
        correction_ += (sum_ - t) + v;
    } else {
        correction_ += (v - t) + sum_;
    }
    sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& other)
{
    add(other.sum_);
    add(other.correction_);
}

void ComplexAccumulator::add(cplx v)
{
    ++n_;
    re_.add(v.real());
    im_.add(v.imag());
    re2_.add(v.real() * v.real());
    im2_.add(v.imag() * v.imag());
}

void ComplexAccumulator::merge(const ComplexAccumulator& other)
{
    n_ += other.n_;
    re_.merge(other.re_);
    im_.merge(other.im_);
    re2_.merge(other.re2_);
    im2_.merge(other.im2_);
}

Estimate ComplexAccumulator::estimate() const
{
    if (n_ == 0) {
        throw std::invalid_argument("estimate of an empty accumulator");
    }
    const double n = static_cast<double>(n_);
    const double mr = re_.value() / n;
    const double mi = im_.value() / n;
    Estimate e{{mr, mi}};
    if (n_ > 1) {
        const double vr = std::max(0.0, (re2_.value() - n * mr * mr) / (n - 1.0));
        const double vi = std::max(0.0, (im2_.value() - n * mi * mi) / (n - 1.0));
        e.se_real = std::sqrt(vr / n);
        e.se_imag = std::sqrt(vi / n);
    }
    return e;
}

namespace {

ComplexAccumulator accumulate_range(const WeightedEnsemble& ens, const MomentFn& f,
                                    std::size_t begin, std::size_t end)
{
    ComplexAccumulator acc;
    for (std::size_t i = begin; i < end; ++i) {
        const auto& sample = ens[i];
        const cplx value = f(sample);
        if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
            throw std::domain_error("moment function is not finite on sample " + std::to_string(i));
        }
        acc.add(sample.weight * value);
    }
    return acc;
}

} // namespace

Estimate weighted_mean(const WeightedEnsemble& ens, const MomentFn& f, unsigned threads)
{
    if (ens.empty()) {
        throw std::invalid_argument("weighted_mean of an empty ensemble");
    }
    const std::size_t n = ens.size();
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
    if (workers == 1) {
        return accumulate_range(ens, f, 0, n).estimate();
    }

    std::vector<ComplexAccumulator> partial(workers);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    partial[w] = accumulate_range(ens, f, w * n / workers, (w + 1) * n / workers);
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
    ComplexAccumulator total;
    for (const auto& p : partial) {
        total.merge(p);
    }
    return total.estimate();
}

std::vector<Estimate> moment_estimate_number(const WeightedEnsemble& ens)
{
    std::vector<Estimate> out;
    out.reserve(ens.mode_count());
    for (std::size_t k = 0; k < ens.mode_count(); ++k) {
        Estimate e = weighted_mean(ens, [k](const PhaseSample& p) { return p.beta[k] * p.alpha[k]; });
        e.value = {e.value.real() - ens.ordering().s, e.value.imag()};
        out.push_back(e);
    }
    return out;
}

double effective_sample_size(const WeightedEnsemble& ens)
{
    CompensatedSum re, im, mod2;
    for (const auto& p : ens.samples()) {
        re.add(p.weight.real());
        im.add(p.weight.imag());
        mod2.add(std::norm(p.weight));
    }
    if (mod2.value() == 0.0) {
        return 0.0;
    }
    return (re.value() * re.value() + im.value() * im.value()) / mod2.value();
}

void write_ensemble_csv(std::ostream& out, const WeightedEnsemble& ens)
{
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(17);
    for (std::size_t k = 0; k < ens.mode_count(); ++k) {
        out << "alpha" << k << "_re,alpha" << k << "_im,beta" << k << "_re,beta" << k << "_im,";
    }
    out << "weight_re,weight_im\n";
    for (const auto& p : ens.samples()) {
        for (std::size_t k = 0; k < ens.mode_count(); ++k) {
            out << p.alpha[k].real() << ',' << p.alpha[k].imag() << ',' << p.beta[k].real() << ','
                << p.beta[k].imag() << ',';
        }
        out << p.weight.real() << ',' << p.weight.imag() << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

} // namespace phasespace
