#include "ehlink/harness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "ehlink/battery.hpp"
#include "ehlink/errors.hpp"
#include "ehlink/rng.hpp"

namespace ehlink {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr unsigned kShards = 16;

unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : std::min(hw, 8u);
}

template <class ShardFn>
void run_sharded(unsigned n_threads, ShardFn&& shard_fn) {
    const unsigned workers = std::min(resolve_threads(n_threads), kShards);
    if (workers <= 1) {
        for (unsigned s = 0; s < kShards; ++s) shard_fn(s);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (unsigned s = w; s < kShards; s += workers) shard_fn(s);
        });
    }
    for (auto& t : pool) t.join();
}

std::uint64_t shard_quota(std::uint64_t total, unsigned shard) {
    return total / kShards + (shard < total % kShards ? 1 : 0);
}

/// Per-frame fading power draw; AWGN pins it to 1.
class FadingStream {
  public:
    FadingStream(const ChannelSpec& channel, std::uint64_t seed)
        : rayleigh_(channel.fading == ChannelSpec::Fading::Rayleigh),
          variance_(channel.fading_variance),
          engine_(seed) {}

    double next() {
        if (!rayleigh_) return 1.0;
        return -variance_ * std::log(uniform_open(engine_));
    }

  private:
    bool rayleigh_;
    double variance_;
    std::mt19937_64 engine_;
};

/// Bits served in one frame: the scheduled rate if the channel carries it.
/// Ties count as success, with a relative tolerance so schedules built
/// from the capacity expression itself survive rounding.
double served_bits(const ChannelSpec& channel, const RatePolicy& policy,
                   double consumed, double fading_power) {
    const double r = policy.rate(consumed);
    if (r <= 0.0) return 0.0;
    const double cap = instantaneous_capacity(channel, fading_power, consumed);
    return r <= cap * (1.0 + 1e-12) + 1e-12 ? r : 0.0;
}

}  // namespace

TailCurve mc_overflow_tail(const ProcessSpec& arrival,
                           const ProcessSpec& demand, double capacity,
                           std::vector<double> thresholds,
                           std::uint64_t n_frames, std::uint64_t burn_in,
                           std::uint64_t seed, unsigned n_threads) {
    if (n_frames == 0) throw ParameterError("need at least one frame");
    if (thresholds.empty()) throw ParameterError("need at least one threshold");
    std::sort(thresholds.begin(), thresholds.end());
    for (double t : thresholds)
        if (!(t >= 0.0) || !std::isfinite(t))
            throw ParameterError("thresholds must be finite and >= 0");

    std::vector<std::vector<std::uint64_t>> counts(
        kShards, std::vector<std::uint64_t>(thresholds.size(), 0));

    run_sharded(n_threads, [&](unsigned shard) {
        const std::uint64_t quota = shard_quota(n_frames, shard);
        if (quota == 0) return;
        auto& local = counts[shard];
        std::uint64_t index = 0;
        for_each_frame(arrival, demand, 0.0, capacity, burn_in + quota,
                       derive_seed(seed, shard), [&](const FrameOutcome& out) {
                           if (index++ < burn_in) return;
                           const double e = out.state.energy;
                           for (std::size_t k = 0; k < thresholds.size();
                                ++k) {
                               if (e < thresholds[k]) break;  // sorted
                               ++local[k];
                           }
                       });
    });

    TailCurve curve;
    curve.thresholds = thresholds;
    curve.frames = n_frames;
    curve.prob.resize(thresholds.size());
    curve.exceedances.assign(thresholds.size(), 0);
    curve.reliable.resize(thresholds.size());
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        for (unsigned s = 0; s < kShards; ++s)
            curve.exceedances[k] += counts[s][k];
        curve.prob[k] = static_cast<double>(curve.exceedances[k]) /
                        static_cast<double>(n_frames);
        curve.reliable[k] = curve.exceedances[k] >= 100;
    }
    return curve;
}

OutageRateEstimate mc_outage_rate(const ProcessSpec& arrival,
                                  const ProcessSpec& demand,
                                  std::uint64_t n_frames,
                                  std::uint64_t burn_in, std::uint64_t seed,
                                  unsigned n_threads) {
    if (n_frames == 0) throw ParameterError("need at least one frame");
    std::vector<std::uint64_t> outages(kShards, 0);

    run_sharded(n_threads, [&](unsigned shard) {
        const std::uint64_t quota = shard_quota(n_frames, shard);
        if (quota == 0) return;
        std::uint64_t index = 0, local = 0;
        for_each_frame(arrival, demand, 0.0, kInf, burn_in + quota,
                       derive_seed(seed, shard), [&](const FrameOutcome& out) {
                           if (index++ < burn_in) return;
                           if (out.shortfall) ++local;
                       });
        outages[shard] = local;
    });

    OutageRateEstimate est;
    est.frames = n_frames;
    for (unsigned s = 0; s < kShards; ++s) est.outage_frames += outages[s];
    est.frequency = static_cast<double>(est.outage_frames) /
                    static_cast<double>(n_frames);
    est.std_err = std::sqrt(est.frequency * (1.0 - est.frequency) /
                            static_cast<double>(n_frames));
    return est;
}

ServiceRateEstimate mc_service_rate(const ProcessSpec& arrival,
                                    const ProcessSpec& demand,
                                    const ChannelSpec& channel,
                                    const RatePolicy& policy,
                                    std::uint64_t n_frames,
                                    std::uint64_t burn_in, std::uint64_t seed,
                                    unsigned n_threads) {
    if (n_frames == 0) throw ParameterError("need at least one frame");
    std::vector<double> sums(kShards, 0.0), squares(kShards, 0.0);

    run_sharded(n_threads, [&](unsigned shard) {
        const std::uint64_t quota = shard_quota(n_frames, shard);
        if (quota == 0) return;
        const std::uint64_t shard_seed = derive_seed(seed, shard);
        FadingStream fading(channel, derive_seed(shard_seed, 2));
        std::uint64_t index = 0;
        double sum = 0.0, sq = 0.0;
        for_each_frame(arrival, demand, 0.0, kInf, burn_in + quota, shard_seed,
                       [&](const FrameOutcome& out) {
                           // Advance fading identically during burn-in so the
                           // recorded stretch is seed-deterministic.
                           const double h = fading.next();
                           if (index++ < burn_in) return;
                           const double bits =
                               served_bits(channel, policy, out.consumed, h);
                           sum += bits;
                           sq += bits * bits;
                       });
        sums[shard] = sum;
        squares[shard] = sq;
    });

    ServiceRateEstimate est;
    est.frames = n_frames;
    double sum = 0.0, sq = 0.0;
    for (unsigned s = 0; s < kShards; ++s) {
        sum += sums[s];
        sq += squares[s];
    }
    const double n = static_cast<double>(n_frames);
    est.s_avg = sum / n;
    const double var = std::max(0.0, sq / n - est.s_avg * est.s_avg);
    est.std_err = std::sqrt(var / n);
    return est;
}

BlockCapacityEstimate mc_effective_capacity_block(
    const ProcessSpec& arrival, const ProcessSpec& demand,
    const ChannelSpec& channel, const RatePolicy& policy, double theta,
    std::uint64_t block_frames, std::uint64_t n_paths, std::uint64_t burn_in,
    std::uint64_t seed, unsigned n_threads) {
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw ParameterError("qos exponent must be positive and finite");
    if (block_frames == 0 || n_paths == 0)
        throw ParameterError("need at least one frame and one path");

    // One exponent-scaled total per path; combined in log space afterwards.
    std::vector<double> log_weights(n_paths, 0.0);

    run_sharded(n_threads, [&](unsigned shard) {
        const std::uint64_t lo = n_paths * shard / kShards;
        const std::uint64_t hi = n_paths * (shard + 1) / kShards;
        for (std::uint64_t path = lo; path < hi; ++path) {
            const std::uint64_t path_seed = derive_seed(seed, 1000 + path);
            FadingStream fading(channel, derive_seed(path_seed, 2));
            std::uint64_t index = 0;
            double served = 0.0;
            for_each_frame(arrival, demand, 0.0, kInf,
                           burn_in + block_frames, path_seed,
                           [&](const FrameOutcome& out) {
                               const double h = fading.next();
                               if (index++ < burn_in) return;
                               served += served_bits(channel, policy,
                                                     out.consumed, h);
                           });
            log_weights[path] = -theta * served;
        }
    });

    double peak = log_weights[0];
    for (double w : log_weights) peak = std::max(peak, w);
    double acc = 0.0;
    for (double w : log_weights) acc += std::exp(w - peak);
    const double log_mean = peak + std::log(acc) -
                            std::log(static_cast<double>(n_paths));

    BlockCapacityEstimate est;
    est.block_frames = block_frames;
    est.n_paths = n_paths;
    est.effective_capacity =
        -log_mean / (static_cast<double>(block_frames) * theta *
                     channel.symbols_per_frame);
    return est;
}

BufferTailEstimate buffer_tail_exponent(
    const ProcessSpec& arrival, const ProcessSpec& demand,
    const ChannelSpec& channel, const RatePolicy& policy, double data_rate,
    std::uint64_t n_frames, std::uint64_t burn_in, std::uint64_t seed,
    unsigned n_threads) {
    if (!(data_rate > 0.0) || !std::isfinite(data_rate))
        throw ParameterError("data rate must be positive and finite");
    if (n_frames == 0) throw ParameterError("need at least one frame");

    const double width = std::max(0.25, data_rate / 8.0);
    constexpr std::size_t kBins = 8192;

    std::vector<std::vector<std::uint64_t>> hist(
        kShards, std::vector<std::uint64_t>(kBins, 0));
    std::vector<double> served_sum(kShards, 0.0);

    run_sharded(n_threads, [&](unsigned shard) {
        const std::uint64_t quota = shard_quota(n_frames, shard);
        if (quota == 0) return;
        const std::uint64_t shard_seed = derive_seed(seed, shard);
        FadingStream fading(channel, derive_seed(shard_seed, 2));
        DataBuffer buffer;
        buffer.arrival_rate = data_rate;
        auto& local = hist[shard];
        std::uint64_t index = 0;
        double sum = 0.0;
        for_each_frame(arrival, demand, 0.0, kInf, burn_in + quota, shard_seed,
                       [&](const FrameOutcome& out) {
                           const double h = fading.next();
                           const double bits =
                               served_bits(channel, policy, out.consumed, h);
                           buffer.step(bits);
                           if (index++ < burn_in) return;
                           sum += bits;
                           auto bin = static_cast<std::size_t>(buffer.level /
                                                               width);
                           if (bin >= kBins) bin = kBins - 1;
                           ++local[bin];
                       });
        served_sum[shard] = sum;
    });

    std::vector<std::uint64_t> total(kBins, 0);
    double sum = 0.0;
    for (unsigned s = 0; s < kShards; ++s) {
        sum += served_sum[s];
        for (std::size_t b = 0; b < kBins; ++b) total[b] += hist[s][b];
    }

    BufferTailEstimate est;
    est.frames = n_frames;
    est.data_rate = data_rate;
    est.mean_service = sum / static_cast<double>(n_frames);
    if (data_rate >= est.mean_service)
        throw InstabilityError(
            "data rate " + std::to_string(data_rate) +
            " is not below the mean service rate " +
            std::to_string(est.mean_service) + ": backlog grows without bound");

    // Suffix counts give Pr{level >= bin edge}; fit the tail region only.
    std::vector<std::uint64_t> suffix(kBins + 1, 0);
    for (std::size_t b = kBins; b-- > 0;) suffix[b] = suffix[b + 1] + total[b];
    const double n = static_cast<double>(n_frames);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t points = 0;
    for (std::size_t b = 1; b < kBins; ++b) {
        if (suffix[b] < 100) break;
        const double p = static_cast<double>(suffix[b]) / n;
        if (p > 0.2) continue;
        const double x = width * static_cast<double>(b);
        const double y = -std::log(p);
        est.thresholds.push_back(x);
        est.prob.push_back(p);
        est.exceedances.push_back(suffix[b]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++points;
    }
    if (points < 2) {
        est.exponent = kInf;  // backlog never reaches the tail region
        return est;
    }
    const double pn = static_cast<double>(points);
    est.exponent = (pn * sxy - sx * sy) / (pn * sxx - sx * sx);
    return est;
}

}  // namespace ehlink
