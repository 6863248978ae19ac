#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ehlink/channel.hpp"
#include "ehlink/processes.hpp"

namespace ehlink {

/// How the transmitter picks its rate from the consumed energy.
struct PolicyConfig {
    enum class Kind { Shannon, FixedRate, Optimized };
    Kind kind = Kind::Shannon;
    double rate = 2.0;  // FixedRate only
    int knots = 2001;   // Optimized only

    /// Builds the concrete schedule; `energy_cap` bounds the tabulation of
    /// an optimized policy (the largest energy a frame can consume).
    RatePolicy build(const ChannelSpec& channel, double energy_cap) const;

    bool operator==(const PolicyConfig&) const = default;
};

/// One experiment: the harvest and demand processes (demand given directly
/// or derived from a target decay rate), the channel, the rate schedule,
/// QoS exponents, truncation depth, Monte Carlo sizes, and seeds.
struct ExperimentConfig {
    ProcessSpec arrival = ProcessSpec::exponential(1.0);
    std::optional<ProcessSpec> demand;  // exactly one of demand / mu_target
    std::optional<double> mu_target;
    ChannelSpec channel;
    PolicyConfig policy;
    std::vector<double> theta = {0.1};
    std::size_t alpha = 200;
    std::uint64_t frames = 10'000'000;
    std::uint64_t paths = 1'000'000;
    std::uint64_t burn_in = 100'000;
    std::uint64_t seed = 1;

    /// The demand process to run with: the configured one, or the constant
    /// demand that realizes the target decay rate.
    ProcessSpec resolved_demand() const;

    std::string to_json_text() const;
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    void save(const std::string& path) const;

    bool operator==(const ExperimentConfig& other) const;
};

}  // namespace ehlink
