#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ehlink/rng.hpp"

namespace ehlink {

/// Description of an i.i.d. non-negative per-frame quantity (harvested
/// energy packets or energy demand). Frames are synchronous and the draw in
/// one frame is independent of every other frame.
///
/// Supported families:
///   constant(v)        degenerate at v; v = +infinity models a consumer
///                      that drains whatever is available every frame
///   exponential(m)     exponential with mean m
///   weibull(k, s)      shape k, scale s (k = 1 recovers exponential(s))
///   empirical(xs)      uniform resampling from a measured trace
class ProcessSpec {
  public:
    enum class Kind { Constant, Exponential, Weibull, Empirical };

    static ProcessSpec constant(double value);
    static ProcessSpec exponential(double mean);
    static ProcessSpec weibull(double shape, double scale);
    static ProcessSpec empirical(std::vector<double> samples);

    Kind kind() const { return kind_; }

    double mean() const;
    double min_support() const;
    double max_support() const;

    /// ln E[exp(s X)]. Exponential and constant families use closed forms;
    /// Weibull is evaluated by adaptive quadrature on a tilted integrand;
    /// empirical uses the plug-in estimate over the stored trace.
    /// Throws DivergenceError when the expectation is infinite.
    double log_mgf(double s) const;

    /// Supremum of arguments for which log_mgf converges (+inf if all do).
    double mgf_domain_edge() const;

    /// Inverse CDF. For the empirical family this is the order-statistic
    /// step function.
    double quantile(double p) const;

    /// Draws one value from the uniform variate u in (0, 1).
    double from_uniform(double u) const;

    // Family parameters (meaning depends on kind; see factories).
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    const std::vector<double>& samples() const { return samples_; }

    bool operator==(const ProcessSpec& other) const = default;

  private:
    ProcessSpec(Kind kind, double a, double b, std::vector<double> samples);

    Kind kind_;
    double a_ = 0.0;  // constant value / exponential mean / weibull shape
    double b_ = 0.0;  // weibull scale
    std::vector<double> samples_;  // empirical trace, sorted ascending
    double mean_ = 0.0;
};

/// Deterministic sample stream: one engine draw per sample, inverse-CDF
/// transform. Identical (spec, seed) pairs give bitwise identical sequences,
/// and the index measures how many samples have been produced.
class SampleStream {
  public:
    SampleStream(ProcessSpec spec, std::uint64_t seed)
        : spec_(std::move(spec)), engine_(seed) {}

    double next() {
        ++index_;
        return spec_.from_uniform(uniform_open(engine_));
    }

    std::vector<double> take(std::size_t n) {
        std::vector<double> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(next());
        return out;
    }

    const ProcessSpec& spec() const { return spec_; }
    std::uint64_t index() const { return index_; }

  private:
    ProcessSpec spec_;
    std::mt19937_64 engine_;
    std::uint64_t index_ = 0;
};

}  // namespace ehlink
