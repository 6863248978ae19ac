#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ehlink/outage.hpp"
#include "ehlink/processes.hpp"

namespace ehlink {

/// Block-fading channel observed over frames of `symbols_per_frame` uses.
/// The fading power is constant within a frame and i.i.d. across frames;
/// AWGN is the degenerate case with fading power pinned to 1.
struct ChannelSpec {
    enum class Fading { Awgn, Rayleigh };
    Fading fading = Fading::Awgn;
    double fading_variance = 1.0;  // mean fading power (Rayleigh)
    double noise_variance = 1.0;   // noise power per symbol
    int symbols_per_frame = 100;

    /// Energy that yields unit average SNR: symbols * noise power.
    double snr_scale() const { return symbols_per_frame * noise_variance; }

    bool operator==(const ChannelSpec&) const = default;
};

/// Bits decodable in one frame when `consumed_energy` is spread over the
/// frame under fading power `fading_power`.
double instantaneous_capacity(const ChannelSpec& channel, double fading_power,
                              double consumed_energy);

/// Transmission rate schedule g: consumed energy -> bits per frame.
/// Monotone non-decreasing with g(0) = 0.
class RatePolicy {
  public:
    enum class Kind { Shannon, FixedRate, Tabulated };

    /// Rate equal to the unit-fading instantaneous capacity.
    static RatePolicy shannon(const ChannelSpec& channel);
    /// Constant rate whenever any energy is consumed.
    static RatePolicy fixed_rate(double rate);
    /// Piecewise-linear schedule through (energy, rate) knots; clamps to the
    /// last knot beyond the grid.
    static RatePolicy tabulated(std::vector<double> energy,
                                std::vector<double> rate);
    /// Tabulates the per-frame-throughput-optimal rate for `channel` on a
    /// uniform energy grid over [0, energy_cap].
    static RatePolicy optimized_for(const ChannelSpec& channel,
                                    double energy_cap, int knots = 2001);

    double rate(double energy) const;
    Kind kind() const { return kind_; }

  private:
    RatePolicy(Kind kind, double a, double b)
        : kind_(kind), param_a_(a), param_b_(b) {}
    Kind kind_;
    double param_a_ = 0.0;  // shannon: symbols per frame; fixed: rate
    double param_b_ = 0.0;  // shannon: snr scale
    std::vector<double> knots_energy_;
    std::vector<double> knots_rate_;
};

/// Fading power required to decode at the scheduled rate when `energy` is
/// consumed: below this threshold the frame is lost. Zero energy carries a
/// zero rate and never fails.
double kappa(const ChannelSpec& channel, const RatePolicy& policy,
             double energy);

/// Probability the fading power clears the threshold. Rayleigh integrates
/// the exponential fading tail; AWGN compares against 1 with a relative
/// tie tolerance so schedules built from the capacity expression itself
/// do not fail on rounding.
double success_prob(const ChannelSpec& channel, double kappa_threshold);

/// Best fixed rate for one frame at a given consumed energy.
struct RateChoice {
    double rate = 0.0;
    double success = 1.0;
    double expected_bits = 0.0;
};

RateChoice optimize_rate(const ChannelSpec& channel, double energy);

/// Histograms of the energy available in a frame (battery plus the frame's
/// arrival), conditioned on the demand-met streak at the frame's start.
/// Streaks deeper than `alpha` are folded into state `alpha`, matching the
/// truncated chain. Bin counts are raw frame tallies; values at or beyond
/// `upper` land in the last bin so mass is conserved.
class ConditionalEnergyDensity {
  public:
    ConditionalEnergyDensity(std::size_t alpha, double upper, std::size_t bins,
                             std::uint64_t min_visits);

    void record(std::size_t state, double available_energy);
    void merge(const ConditionalEnergyDensity& other);

    std::size_t alpha() const { return counts_.size() - 1; }
    double upper() const { return upper_; }
    double bin_width() const { return width_; }
    std::uint64_t visits(std::size_t state) const { return visits_[state]; }
    std::uint64_t total_frames() const { return total_; }
    /// A state is usable once it has enough visits for a stable histogram.
    bool available(std::size_t state) const;

    /// Integral of f against the conditional density on [0, cut), splitting
    /// the straddled bin proportionally. `cut` may be +infinity.
    double integrate_below(std::size_t state, double cut,
                           const std::function<double(double)>& f) const;
    /// Conditional mass on [cut, infinity).
    double tail_mass(std::size_t state, double cut) const;

    /// Cumulative integral of f and cumulative mass at every bin boundary
    /// (bins + 1 points). Lets callers evaluate many cuts in O(1) each.
    struct PrefixProfile {
        std::vector<double> cum_integral;
        std::vector<double> cum_mass;
        double width = 0.0;
        double at(double cut) const;
        double mass_at(double cut) const;
    };
    PrefixProfile prefix_profile(std::size_t state,
                                 const std::function<double(double)>& f) const;

  private:
    double upper_;
    double width_;
    std::uint64_t min_visits_;
    std::uint64_t total_ = 0;
    std::vector<std::vector<std::uint64_t>> counts_;
    std::vector<std::uint64_t> visits_;
};

/// Runs a long stationary battery path and collects per-streak-state
/// histograms of available energy. `n_frames` counts recorded frames; each
/// simulation shard additionally discards `burn_in` frames up front.
ConditionalEnergyDensity estimate_conditional_densities(
    const ProcessSpec& arrival, const ProcessSpec& demand, std::size_t alpha,
    std::uint64_t n_frames, std::uint64_t burn_in, std::uint64_t seed,
    double bin_width = 0.0, unsigned n_threads = 0);

/// Stationary mean bits per frame, split by streak state.
struct ServiceRateResult {
    double s_avg = 0.0;
    std::vector<double> per_state;      // shortfall-branch contributions
    double success_branch = 0.0;        // full-demand branch contribution
    std::vector<std::size_t> skipped_states;  // unavailable histograms
};

/// Averages the scheduled rate times success probability over the stationary
/// mix of streak states. States above `alpha_limit` (or without a usable
/// histogram) are dropped, which makes the result a lower bound that grows
/// toward the full value as `alpha_limit` rises. Stochastic demand is
/// handled by averaging over `demand_draws` sampled demands.
ServiceRateResult avg_service_rate(const OutageChain& chain,
                                   const ConditionalEnergyDensity& density,
                                   const ChannelSpec& channel,
                                   const RatePolicy& policy,
                                   const ProcessSpec& demand,
                                   std::size_t alpha_limit = SIZE_MAX,
                                   std::uint64_t demand_draws = 10000,
                                   std::uint64_t seed = 0x5eedf00d);

}  // namespace ehlink
