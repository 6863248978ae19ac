#include "ehlink/processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ehlink/errors.hpp"

namespace ehlink {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& xs) {
    double m = -kInf;
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

// Adaptive Simpson with Richardson acceptance. The integrands handed in are
// smooth and bounded by construction, so plain recursion is adequate.
template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm,
                   double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double eps) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, eps, 52);
}

}  // namespace

ProcessSpec::ProcessSpec(Kind kind, double a, double b,
                         std::vector<double> samples)
    : kind_(kind), a_(a), b_(b), samples_(std::move(samples)) {
    switch (kind_) {
        case Kind::Constant:
            mean_ = a_;
            break;
        case Kind::Exponential:
            mean_ = a_;
            break;
        case Kind::Weibull:
            mean_ = b_ * std::tgamma(1.0 + 1.0 / a_);
            break;
        case Kind::Empirical:
            mean_ = std::accumulate(samples_.begin(), samples_.end(), 0.0) /
                    static_cast<double>(samples_.size());
            break;
    }
}

ProcessSpec ProcessSpec::constant(double value) {
    if (!(value > 0.0)) throw ParameterError("constant process needs value > 0");
    return ProcessSpec(Kind::Constant, value, 0.0, {});
}

ProcessSpec ProcessSpec::exponential(double mean) {
    if (!(mean > 0.0) || !std::isfinite(mean))
        throw ParameterError("exponential process needs finite mean > 0");
    return ProcessSpec(Kind::Exponential, mean, 0.0, {});
}

ProcessSpec ProcessSpec::weibull(double shape, double scale) {
    if (!(shape > 0.0) || !std::isfinite(shape) || !(scale > 0.0) ||
        !std::isfinite(scale))
        throw ParameterError("weibull process needs finite shape, scale > 0");
    return ProcessSpec(Kind::Weibull, shape, scale, {});
}

ProcessSpec ProcessSpec::empirical(std::vector<double> samples) {
    if (samples.empty()) throw ParameterError("empirical process needs samples");
    for (double x : samples) {
        if (!std::isfinite(x) || x < 0.0)
            throw ParameterError("empirical samples must be finite and >= 0");
    }
    std::sort(samples.begin(), samples.end());
    return ProcessSpec(Kind::Empirical, 0.0, 0.0, std::move(samples));
}

double ProcessSpec::mean() const { return mean_; }

double ProcessSpec::min_support() const {
    switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::Exponential: return 0.0;
        case Kind::Weibull: return 0.0;
        case Kind::Empirical: return samples_.front();
    }
    return 0.0;
}

double ProcessSpec::max_support() const {
    switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::Exponential: return kInf;
        case Kind::Weibull: return kInf;
        case Kind::Empirical: return samples_.back();
    }
    return kInf;
}

double ProcessSpec::mgf_domain_edge() const {
    switch (kind_) {
        case Kind::Constant:
            return std::isfinite(a_) ? kInf : 0.0;
        case Kind::Exponential:
            return 1.0 / a_;
        case Kind::Weibull:
            if (a_ > 1.0) return kInf;
            if (a_ == 1.0) return 1.0 / b_;
            return 0.0;
        case Kind::Empirical:
            return kInf;
    }
    return kInf;
}

double ProcessSpec::log_mgf(double s) const {
    if (s == 0.0) return 0.0;
    switch (kind_) {
        case Kind::Constant:
            if (std::isfinite(a_)) return s * a_;
            if (s > 0.0)
                throw DivergenceError("log_mgf diverges: unbounded constant", 0.0);
            return -kInf;
        case Kind::Exponential:
            if (s >= 1.0 / a_)
                throw DivergenceError("log_mgf diverges for exponential process",
                                      1.0 / a_);
            return -std::log1p(-a_ * s);
        case Kind::Weibull: {
            // Substituting y = (x / scale)^shape turns E[exp(s X)] into
            // integral_0^inf exp(s*scale*y^(1/shape) - y) dy, which removes the
            // density singularity at 0 for shape < 1 and keeps the integrand
            // smooth. Work relative to the peak of the log integrand so that
            // strongly tilted cases neither overflow nor lose precision.
            const double k = a_, scale = b_;
            const auto log_integrand = [&](double y) {
                return (y > 0.0) ? s * scale * std::pow(y, 1.0 / k) - y : 0.0;
            };
            double y_peak = 0.0, log_peak = 0.0;
            if (s > 0.0 && k > 1.0) {
                y_peak = std::pow(s * scale / k, k / (k - 1.0));
                log_peak = log_integrand(y_peak);
            }
            // Mass of the untilted distribution beyond y = 27.63 is below
            // 1e-12; extend the cut until the tilted integrand has decayed by
            // e^-45 relative to its peak. Failure to decay means the
            // expectation is infinite.
            double cut = std::max(-std::log(1e-12), 2.0 * y_peak + 10.0);
            while (log_integrand(cut) > log_peak - 45.0) {
                cut *= 2.0;
                if (cut > 1e9) {
                    throw DivergenceError(
                        "log_mgf diverges: weibull integrand does not decay",
                        mgf_domain_edge());
                }
            }
            const auto f = [&](double y) {
                return std::exp(log_integrand(y) - log_peak);
            };
            double integral;
            if (y_peak > 0.0 && y_peak < cut) {
                integral = adaptive_simpson(f, 0.0, y_peak, 1e-13) +
                           adaptive_simpson(f, y_peak, cut, 1e-13);
            } else {
                integral = adaptive_simpson(f, 0.0, cut, 1e-13);
            }
            return log_peak + std::log(integral);
        }
        case Kind::Empirical: {
            std::vector<double> tilted(samples_.size());
            for (std::size_t i = 0; i < samples_.size(); ++i)
                tilted[i] = s * samples_[i];
            return log_sum_exp(tilted) -
                   std::log(static_cast<double>(samples_.size()));
        }
    }
    return 0.0;
}

double ProcessSpec::quantile(double p) const {
    if (!(p >= 0.0) || !(p < 1.0))
        throw ParameterError("quantile needs p in [0, 1)");
    switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::Exponential: return -a_ * std::log1p(-p);
        case Kind::Weibull: return b_ * std::pow(-std::log1p(-p), 1.0 / a_);
        case Kind::Empirical: {
            const auto n = samples_.size();
            auto idx = static_cast<std::size_t>(p * static_cast<double>(n));
            return samples_[std::min(idx, n - 1)];
        }
    }
    return 0.0;
}

double ProcessSpec::from_uniform(double u) const {
    switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::Exponential: return -a_ * std::log(u);
        case Kind::Weibull: return b_ * std::pow(-std::log(u), 1.0 / a_);
        case Kind::Empirical: {
            const auto n = samples_.size();
            auto idx = static_cast<std::size_t>(u * static_cast<double>(n));
            return samples_[std::min(idx, n - 1)];
        }
    }
    return 0.0;
}

}  // namespace ehlink
