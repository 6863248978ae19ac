#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ehlink/channel.hpp"
#include "ehlink/processes.hpp"

namespace ehlink {

/// Long-run Monte Carlo counterparts of every analytic quantity: stored
/// energy tails, shortfall frequencies, served-bit rates, block moment
/// capacity estimates, and data-buffer tail exponents. All estimators
/// shard work over a fixed logical grid with partitioned seed streams, so
/// results depend on the seed but never on the worker count.

/// Empirical tail Pr{stored energy >= threshold} after each frame.
struct TailCurve {
    std::vector<double> thresholds;
    std::vector<double> prob;
    std::vector<std::uint64_t> exceedances;
    std::vector<bool> reliable;  // at least 100 exceedances
    std::uint64_t frames = 0;
};

TailCurve mc_overflow_tail(const ProcessSpec& arrival,
                           const ProcessSpec& demand, double capacity,
                           std::vector<double> thresholds,
                           std::uint64_t n_frames, std::uint64_t burn_in,
                           std::uint64_t seed, unsigned n_threads = 0);

/// Long-run fraction of frames whose demand is not met in full.
struct OutageRateEstimate {
    double frequency = 0.0;
    double std_err = 0.0;
    std::uint64_t outage_frames = 0;
    std::uint64_t frames = 0;
};

OutageRateEstimate mc_outage_rate(const ProcessSpec& arrival,
                                  const ProcessSpec& demand,
                                  std::uint64_t n_frames,
                                  std::uint64_t burn_in, std::uint64_t seed,
                                  unsigned n_threads = 0);

/// Long-run mean of successfully served bits per frame, with fading drawn
/// fresh each frame and success decided by comparing the scheduled rate
/// against the frame's instantaneous capacity.
struct ServiceRateEstimate {
    double s_avg = 0.0;
    double std_err = 0.0;  // i.i.d.-frame approximation
    std::uint64_t frames = 0;
};

ServiceRateEstimate mc_service_rate(const ProcessSpec& arrival,
                                    const ProcessSpec& demand,
                                    const ChannelSpec& channel,
                                    const RatePolicy& policy,
                                    std::uint64_t n_frames,
                                    std::uint64_t burn_in, std::uint64_t seed,
                                    unsigned n_threads = 0);

/// Block moment estimate of the effective capacity: many independent
/// service paths of `block_frames` frames each, combined through
/// -log(mean exp(-theta * served)) / (block_frames * theta * symbols).
struct BlockCapacityEstimate {
    double effective_capacity = 0.0;  // bits per channel use
    std::uint64_t block_frames = 0;
    std::uint64_t n_paths = 0;
};

BlockCapacityEstimate mc_effective_capacity_block(
    const ProcessSpec& arrival, const ProcessSpec& demand,
    const ChannelSpec& channel, const RatePolicy& policy, double theta,
    std::uint64_t block_frames, std::uint64_t n_paths, std::uint64_t burn_in,
    std::uint64_t seed, unsigned n_threads = 0);

/// Data backlog fed at a constant rate and drained by the served bits.
struct DataBuffer {
    double level = 0.0;
    double capacity = std::numeric_limits<double>::infinity();
    double arrival_rate = 0.0;  // bits per frame

    void step(double served_bits) {
        level = level + arrival_rate - served_bits;
        if (level < 0.0) level = 0.0;
        if (level > capacity) level = capacity;
    }
};

/// Least-squares decay rate of the buffer-occupancy tail. The exponent is
/// +infinity when the backlog never reaches the tail region at all.
struct BufferTailEstimate {
    double exponent = 0.0;
    double data_rate = 0.0;
    double mean_service = 0.0;
    std::vector<double> thresholds;
    std::vector<double> prob;
    std::vector<std::uint64_t> exceedances;
    std::uint64_t frames = 0;
};

/// Runs independent buffer paths over the simulated service process and
/// fits -ln Pr{level >= d} against d over the tail region with at least
/// 100 exceedances per point. A data rate at or above the measured mean
/// service rate has no stationary tail and raises InstabilityError.
BufferTailEstimate buffer_tail_exponent(
    const ProcessSpec& arrival, const ProcessSpec& demand,
    const ChannelSpec& channel, const RatePolicy& policy, double data_rate,
    std::uint64_t n_frames, std::uint64_t burn_in, std::uint64_t seed,
    unsigned n_threads = 0);

}  // namespace ehlink
