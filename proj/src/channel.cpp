#include "ehlink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "ehlink/battery.hpp"
#include "ehlink/errors.hpp"
#include "ehlink/rng.hpp"

namespace ehlink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_channel(const ChannelSpec& channel) {
    if (!(channel.noise_variance > 0.0) ||
        !std::isfinite(channel.noise_variance))
        throw ParameterError("channel noise variance must be positive");
    if (channel.symbols_per_frame <= 0)
        throw ParameterError("channel needs a positive symbol count");
    if (channel.fading == ChannelSpec::Fading::Rayleigh &&
        (!(channel.fading_variance > 0.0) ||
         !std::isfinite(channel.fading_variance)))
        throw ParameterError("rayleigh fading variance must be positive");
}

unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return std::min(hw, 8u);
}

/// Maximizes a unimodal function on [0, hi]: geometric coarse scan to
/// bracket the peak, then golden-section refinement.
template <typename F>
double golden_max(F&& f, double hi, double tol) {
    constexpr int kScan = 64;
    double best_x = 0.0, best_f = f(0.0);
    std::vector<double> xs(kScan);
    for (int j = 0; j < kScan; ++j) xs[j] = hi * std::ldexp(1.0, -j);
    std::sort(xs.begin(), xs.end());
    int best_j = -1;
    for (int j = 0; j < kScan; ++j) {
        const double fj = f(xs[j]);
        if (fj > best_f) {
            best_f = fj;
            best_x = xs[j];
            best_j = j;
        }
    }
    double lo_b = best_j <= 0 ? 0.0 : xs[best_j - 1];
    double hi_b = (best_j < 0 || best_j == kScan - 1) ? hi : xs[best_j + 1];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo_b, b = hi_b;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    return fm >= best_f ? mid : best_x;
}

}  // namespace

double instantaneous_capacity(const ChannelSpec& channel, double fading_power,
                              double consumed_energy) {
    check_channel(channel);
    if (!(fading_power >= 0.0) || !(consumed_energy >= 0.0))
        throw ParameterError("fading power and energy must be non-negative");
    const double n = channel.symbols_per_frame;
    return n * std::log2(1.0 + fading_power * consumed_energy /
                                   channel.snr_scale());
}

RatePolicy RatePolicy::shannon(const ChannelSpec& channel) {
    check_channel(channel);
    return RatePolicy(Kind::Shannon, channel.symbols_per_frame,
                      channel.snr_scale());
}

RatePolicy RatePolicy::fixed_rate(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw ParameterError("fixed rate must be positive and finite");
    return RatePolicy(Kind::FixedRate, rate, 0.0);
}

RatePolicy RatePolicy::tabulated(std::vector<double> energy,
                                 std::vector<double> rate) {
    if (energy.size() != rate.size() || energy.size() < 2)
        throw ParameterError("tabulated policy needs matching knot lists");
    if (energy.front() != 0.0 || rate.front() != 0.0)
        throw ParameterError("tabulated policy must start at (0, 0)");
    for (std::size_t i = 0; i < energy.size(); ++i) {
        if (!std::isfinite(energy[i]) || !std::isfinite(rate[i]) ||
            rate[i] < 0.0)
            throw ParameterError("tabulated knots must be finite, rates >= 0");
        if (i > 0 && energy[i] <= energy[i - 1])
            throw ParameterError("tabulated energies must strictly increase");
        if (i > 0 && rate[i] < rate[i - 1])
            throw ParameterError("tabulated rates must be non-decreasing");
    }
    RatePolicy p(Kind::Tabulated, 0.0, 0.0);
    p.knots_energy_ = std::move(energy);
    p.knots_rate_ = std::move(rate);
    return p;
}

RatePolicy RatePolicy::optimized_for(const ChannelSpec& channel,
                                     double energy_cap, int knots) {
    check_channel(channel);
    if (!(energy_cap > 0.0) || !std::isfinite(energy_cap))
        throw ParameterError("optimized policy needs a finite energy cap");
    if (knots < 2) throw ParameterError("optimized policy needs >= 2 knots");
    std::vector<double> e(knots), r(knots);
    for (int i = 0; i < knots; ++i) {
        e[i] = energy_cap * i / (knots - 1);
        r[i] = i == 0 ? 0.0 : optimize_rate(channel, e[i]).rate;
    }
    // The per-frame objective shifts continuously with energy, so enforce
    // monotonicity against search jitter instead of rejecting it.
    for (int i = 1; i < knots; ++i) r[i] = std::max(r[i], r[i - 1]);
    return tabulated(std::move(e), std::move(r));
}

double RatePolicy::rate(double energy) const {
    if (std::isnan(energy)) throw ParameterError("rate of NaN energy");
    if (energy <= 0.0) return 0.0;
    switch (kind_) {
        case Kind::Shannon:
            return param_a_ * std::log2(1.0 + energy / param_b_);
        case Kind::FixedRate:
            return param_a_;
        case Kind::Tabulated: {
            if (energy >= knots_energy_.back()) return knots_rate_.back();
            auto it = std::upper_bound(knots_energy_.begin(),
                                       knots_energy_.end(), energy);
            const auto i = static_cast<std::size_t>(
                std::distance(knots_energy_.begin(), it));
            const double x0 = knots_energy_[i - 1], x1 = knots_energy_[i];
            const double y0 = knots_rate_[i - 1], y1 = knots_rate_[i];
            return y0 + (y1 - y0) * (energy - x0) / (x1 - x0);
        }
    }
    return 0.0;
}

double kappa(const ChannelSpec& channel, const RatePolicy& policy,
             double energy) {
    check_channel(channel);
    if (!(energy >= 0.0)) throw ParameterError("kappa needs energy >= 0");
    const double r = policy.rate(energy);
    if (r <= 0.0) return 0.0;
    if (energy == 0.0)
        throw ParameterError("positive rate scheduled at zero energy");
    return std::expm1(r * std::numbers::ln2 / channel.symbols_per_frame) *
           channel.snr_scale() / energy;
}

double success_prob(const ChannelSpec& channel, double kappa_threshold) {
    check_channel(channel);
    if (!(kappa_threshold >= 0.0))
        throw ParameterError("success_prob needs kappa >= 0");
    if (kappa_threshold == 0.0) return 1.0;
    if (channel.fading == ChannelSpec::Fading::Awgn)
        return kappa_threshold <= 1.0 + 1e-9 ? 1.0 : 0.0;
    return std::exp(-kappa_threshold / channel.fading_variance);
}

RateChoice optimize_rate(const ChannelSpec& channel, double energy) {
    check_channel(channel);
    if (!(energy >= 0.0) || !std::isfinite(energy))
        throw ParameterError("optimize_rate needs finite energy >= 0");
    if (energy == 0.0) return {0.0, 1.0, 0.0};
    if (channel.fading == ChannelSpec::Fading::Awgn) {
        const double r = instantaneous_capacity(channel, 1.0, energy);
        return {r, 1.0, r};
    }
    const double n = channel.symbols_per_frame;
    const double scale = channel.snr_scale() / energy;
    const double var = channel.fading_variance;
    auto bits = [&](double r) {
        const double k = std::expm1(r * std::numbers::ln2 / n) * scale;
        return r * std::exp(-k / var);
    };
    const double hi = 20.0 * n;
    const double r_star = golden_max(bits, hi, 1e-7 * n);
    RateChoice choice;
    choice.rate = r_star;
    const double k = std::expm1(r_star * std::numbers::ln2 / n) * scale;
    choice.success = std::exp(-k / var);
    choice.expected_bits = r_star * choice.success;
    return choice;
}

ConditionalEnergyDensity::ConditionalEnergyDensity(std::size_t alpha,
                                                   double upper,
                                                   std::size_t bins,
                                                   std::uint64_t min_visits)
    : upper_(upper), min_visits_(min_visits) {
    if (!(upper > 0.0) || !std::isfinite(upper))
        throw ParameterError("density upper edge must be finite and positive");
    if (bins == 0) throw ParameterError("density needs at least one bin");
    width_ = upper / static_cast<double>(bins);
    counts_.assign(alpha + 1, std::vector<std::uint64_t>(bins, 0));
    visits_.assign(alpha + 1, 0);
}

void ConditionalEnergyDensity::record(std::size_t state,
                                      double available_energy) {
    auto& row = counts_[state];
    auto bin = static_cast<std::size_t>(available_energy / width_);
    if (bin >= row.size()) bin = row.size() - 1;
    ++row[bin];
    ++visits_[state];
    ++total_;
}

void ConditionalEnergyDensity::merge(const ConditionalEnergyDensity& other) {
    if (other.counts_.size() != counts_.size() ||
        other.counts_[0].size() != counts_[0].size() ||
        other.upper_ != upper_)
        throw ParameterError("cannot merge densities with different shapes");
    for (std::size_t m = 0; m < counts_.size(); ++m) {
        visits_[m] += other.visits_[m];
        for (std::size_t b = 0; b < counts_[m].size(); ++b)
            counts_[m][b] += other.counts_[m][b];
    }
    total_ += other.total_;
}

bool ConditionalEnergyDensity::available(std::size_t state) const {
    return state < visits_.size() && visits_[state] >= min_visits_;
}

double ConditionalEnergyDensity::integrate_below(
    std::size_t state, double cut,
    const std::function<double(double)>& f) const {
    if (!available(state))
        throw UnreachableStateError("state histogram has too few visits");
    if (!(cut >= 0.0)) throw ParameterError("integration cut must be >= 0");
    if (cut == 0.0) return 0.0;
    const auto& row = counts_[state];
    const double denom = static_cast<double>(visits_[state]);
    double acc = 0.0;
    for (std::size_t b = 0; b < row.size(); ++b) {
        if (row[b] == 0) continue;
        const double lo = width_ * static_cast<double>(b);
        const double hi = lo + width_;
        const double mass = static_cast<double>(row[b]) / denom;
        if (cut >= hi || b == row.size() - 1) {
            // Last bin also holds clamped overshoot; its midpoint stands in.
            if (cut <= lo) break;
            if (cut >= hi) {
                acc += f(lo + 0.5 * width_) * mass;
            } else {
                const double frac = (cut - lo) / width_;
                acc += f(lo + 0.5 * width_) * mass * frac;
            }
        } else if (cut > lo) {
            // Straddled bin: evaluate at the bin midpoint and scale by the
            // covered fraction, so cumulative-profile lookups reproduce this
            // integral exactly.
            const double frac = (cut - lo) / width_;
            acc += f(lo + 0.5 * width_) * mass * frac;
            break;
        } else {
            break;
        }
    }
    return acc;
}

double ConditionalEnergyDensity::tail_mass(std::size_t state,
                                           double cut) const {
    const double below =
        integrate_below(state, cut, [](double) { return 1.0; });
    return std::clamp(1.0 - below, 0.0, 1.0);
}

double ConditionalEnergyDensity::PrefixProfile::at(double cut) const {
    if (!(cut >= 0.0)) return 0.0;
    const double pos = cut / width;
    const auto n = cum_integral.size() - 1;
    if (pos >= static_cast<double>(n)) return cum_integral.back();
    const auto b = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(b);
    return cum_integral[b] + frac * (cum_integral[b + 1] - cum_integral[b]);
}

double ConditionalEnergyDensity::PrefixProfile::mass_at(double cut) const {
    if (!(cut >= 0.0)) return 0.0;
    const double pos = cut / width;
    const auto n = cum_mass.size() - 1;
    if (pos >= static_cast<double>(n)) return cum_mass.back();
    const auto b = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(b);
    return cum_mass[b] + frac * (cum_mass[b + 1] - cum_mass[b]);
}

ConditionalEnergyDensity::PrefixProfile ConditionalEnergyDensity::prefix_profile(
    std::size_t state, const std::function<double(double)>& f) const {
    if (!available(state))
        throw UnreachableStateError("state histogram has too few visits");
    const auto& row = counts_[state];
    const double denom = static_cast<double>(visits_[state]);
    PrefixProfile prof;
    prof.width = width_;
    prof.cum_integral.assign(row.size() + 1, 0.0);
    prof.cum_mass.assign(row.size() + 1, 0.0);
    for (std::size_t b = 0; b < row.size(); ++b) {
        const double mass = static_cast<double>(row[b]) / denom;
        const double mid = width_ * (static_cast<double>(b) + 0.5);
        prof.cum_integral[b + 1] = prof.cum_integral[b] + f(mid) * mass;
        prof.cum_mass[b + 1] = prof.cum_mass[b] + mass;
    }
    return prof;
}

ConditionalEnergyDensity estimate_conditional_densities(
    const ProcessSpec& arrival, const ProcessSpec& demand, std::size_t alpha,
    std::uint64_t n_frames, std::uint64_t burn_in, std::uint64_t seed,
    double bin_width, unsigned n_threads) {
    if (n_frames == 0) throw ParameterError("need at least one frame");
    const double p_hi = demand.max_support();
    const double arrival_span = arrival.max_support() < kInf
                                    ? arrival.max_support()
                                    : arrival.quantile(0.9999);
    const double upper =
        (std::isfinite(p_hi) ? p_hi : 0.0) + std::max(arrival_span, 1e-12);
    // Default resolution: fine enough that midpoint quadrature of steep
    // exponential weights (service moments) stays below estimator noise.
    double width = bin_width;
    if (!(width > 0.0))
        width = (std::isfinite(p_hi) && p_hi > 0.0 ? p_hi : upper) / 2000.0;
    auto bins = static_cast<std::size_t>(std::ceil(upper / width));
    bins = std::clamp<std::size_t>(bins, 1, 200000);

    constexpr unsigned kShards = 8;
    const std::uint64_t min_visits = 50;
    std::vector<ConditionalEnergyDensity> parts;
    parts.reserve(kShards);
    for (unsigned s = 0; s < kShards; ++s)
        parts.emplace_back(alpha, upper, bins, min_visits);

    auto run_shard = [&](unsigned shard) {
        const std::uint64_t quota =
            n_frames / kShards + (shard < n_frames % kShards ? 1 : 0);
        if (quota == 0) return;
        auto& dens = parts[shard];
        std::uint64_t index = 0;
        std::size_t prev_streak = 0;
        for_each_frame(arrival, demand, 0.0, kInf, burn_in + quota,
                       derive_seed(seed, 100 + shard),
                       [&](const FrameOutcome& out) {
                           if (index >= burn_in)
                               dens.record(std::min(prev_streak, alpha),
                                           out.available);
                           prev_streak = out.state.streak;
                           ++index;
                       });
    };

    const unsigned workers = std::min(resolve_threads(n_threads), kShards);
    if (workers <= 1) {
        for (unsigned s = 0; s < kShards; ++s) run_shard(s);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (unsigned s = w; s < kShards; s += workers) run_shard(s);
            });
        for (auto& t : pool) t.join();
    }
    for (unsigned s = 1; s < kShards; ++s) parts[0].merge(parts[s]);
    return std::move(parts[0]);
}

ServiceRateResult avg_service_rate(const OutageChain& chain,
                                   const ConditionalEnergyDensity& density,
                                   const ChannelSpec& channel,
                                   const RatePolicy& policy,
                                   const ProcessSpec& demand,
                                   std::size_t alpha_limit,
                                   std::uint64_t demand_draws,
                                   std::uint64_t seed) {
    check_channel(channel);
    if (chain.pi.size() != chain.alpha + 1)
        throw ParameterError("chain/steady-state size mismatch");
    auto bits = [&](double e) {
        return policy.rate(e) * success_prob(channel, kappa(channel, policy, e));
    };
    const std::size_t m_cap = std::min(chain.alpha, alpha_limit);
    ServiceRateResult res;
    res.per_state.assign(chain.alpha + 1, 0.0);

    const bool constant_demand =
        demand.kind() == ProcessSpec::Kind::Constant;
    const double p_const = constant_demand ? demand.mean() : 0.0;

    if (constant_demand) {
        for (std::size_t m = 0; m <= m_cap; ++m) {
            const double w = chain.pi[m];
            if (w <= 0.0) continue;
            const std::size_t h = std::min(m, density.alpha());
            if (!density.available(h)) {
                res.skipped_states.push_back(m);
                continue;
            }
            res.per_state[m] =
                w * density.integrate_below(
                        h, std::isfinite(p_const) ? p_const : kInf, bits);
        }
        const double met_mass = 1.0 - chain.pi0;
        if (std::isfinite(p_const) && met_mass > 0.0)
            res.success_branch = met_mass * bits(p_const);
    } else {
        // Average over sampled demands using per-state prefix profiles.
        std::vector<ConditionalEnergyDensity::PrefixProfile> prof(
            m_cap + 1);
        std::vector<bool> have(m_cap + 1, false);
        for (std::size_t m = 0; m <= m_cap; ++m) {
            if (chain.pi[m] <= 0.0) continue;
            const std::size_t h = std::min(m, density.alpha());
            if (!density.available(h)) {
                res.skipped_states.push_back(m);
                continue;
            }
            prof[m] = density.prefix_profile(h, bits);
            have[m] = true;
        }
        if (demand_draws == 0)
            throw ParameterError("stochastic demand needs draws");
        SampleStream draws(demand, derive_seed(seed, 777));
        for (std::uint64_t j = 0; j < demand_draws; ++j) {
            const double p = draws.next();
            const double met_bits = std::isfinite(p) ? bits(p) : 0.0;
            for (std::size_t m = 0; m <= m_cap; ++m) {
                if (!have[m]) continue;
                res.per_state[m] += chain.pi[m] * prof[m].at(p);
                if (std::isfinite(p))
                    res.success_branch +=
                        chain.pi[m] * met_bits *
                        std::max(0.0, 1.0 - prof[m].mass_at(p));
            }
        }
        const double inv = 1.0 / static_cast<double>(demand_draws);
        for (auto& v : res.per_state) v *= inv;
        res.success_branch *= inv;
    }

    res.s_avg = res.success_branch;
    for (double v : res.per_state) res.s_avg += v;
    return res;
}

}  // namespace ehlink
