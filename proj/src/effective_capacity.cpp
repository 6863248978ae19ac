#include "ehlink/effective_capacity.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ehlink/errors.hpp"
#include "ehlink/rng.hpp"

namespace ehlink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// exp(-theta * bits-served) averaged over the fading draw at a given
/// consumed energy: success serves the scheduled rate, failure serves 0.
double frame_moment(double theta, const ChannelSpec& channel,
                    const RatePolicy& policy, double energy) {
    const double succ = success_prob(channel, kappa(channel, policy, energy));
    return succ * std::exp(-theta * policy.rate(energy)) + (1.0 - succ);
}

void check_theta(double theta) {
    if (std::isnan(theta) || theta < 0.0)
        throw ParameterError("qos exponent must be >= 0");
}

/// Deepest state with a usable histogram at or below `want`.
std::size_t usable_state(const ConditionalEnergyDensity& density,
                         std::size_t want) {
    std::size_t h = std::min(want, density.alpha());
    while (h > 0 && !density.available(h)) --h;
    if (!density.available(h))
        throw UnreachableStateError("no state histogram has enough visits");
    return h;
}

}  // namespace

double phi0(double theta, const OutageChain& chain,
            const ConditionalEnergyDensity& density,
            const ChannelSpec& channel, const RatePolicy& policy,
            const ProcessSpec& demand, std::uint64_t demand_draws,
            std::uint64_t seed) {
    check_theta(theta);
    if (chain.pi.size() != chain.alpha + 1)
        throw ParameterError("chain/steady-state size mismatch");
    auto moment = [&](double e) {
        return frame_moment(theta, channel, policy, e);
    };
    double num = 0.0, den = 0.0;
    if (demand.kind() == ProcessSpec::Kind::Constant) {
        const double p = demand.mean();
        for (std::size_t m = 0; m <= chain.alpha; ++m) {
            const double w = chain.pi[m];
            if (w <= 0.0) continue;
            const std::size_t h = std::min(m, density.alpha());
            if (!density.available(h)) continue;
            if (!std::isfinite(p)) {
                num += w * density.integrate_below(h, kInf, moment);
                den += w;
            } else {
                num += w * density.integrate_below(h, p, moment);
                den += w * (1.0 - density.tail_mass(h, p));
            }
        }
    } else {
        std::vector<ConditionalEnergyDensity::PrefixProfile> prof;
        std::vector<double> weight;
        for (std::size_t m = 0; m <= chain.alpha; ++m) {
            const double w = chain.pi[m];
            if (w <= 0.0) continue;
            const std::size_t h = std::min(m, density.alpha());
            if (!density.available(h)) continue;
            prof.push_back(density.prefix_profile(h, moment));
            weight.push_back(w);
        }
        if (demand_draws == 0)
            throw ParameterError("stochastic demand needs draws");
        SampleStream draws(demand, derive_seed(seed, 0));
        for (std::uint64_t t = 0; t < demand_draws; ++t) {
            const double p = draws.next();
            for (std::size_t i = 0; i < prof.size(); ++i) {
                num += weight[i] * prof[i].at(p);
                den += weight[i] * prof[i].mass_at(p);
            }
        }
    }
    if (!(den > 0.0))
        throw DegenerateChainError(
            "no shortfall mass observed: chain never resets");
    return num / den;
}

double phij(double theta, std::size_t j, const OutageChain& chain,
            const ConditionalEnergyDensity& density,
            const ChannelSpec& channel, const RatePolicy& policy,
            const ProcessSpec& demand, std::uint64_t demand_draws,
            std::uint64_t seed) {
    check_theta(theta);
    if (j == 0) throw ParameterError("streak index must be >= 1");
    const double q_j = j - 1 < chain.q.size() ? chain.q[j - 1] : 0.0;
    if (!(q_j > 0.0))
        throw UnreachableStateError("streak state is never extended");
    if (demand.kind() == ProcessSpec::Kind::Constant) {
        const double p = demand.mean();
        if (!std::isfinite(p))
            throw UnreachableStateError("unbounded demand is never met");
        // State independent: the met-branch energy is exactly p, and the
        // renewal structure makes the tail mass cancel against q_j.
        return frame_moment(theta, channel, policy, p);
    }
    const std::size_t h = usable_state(density, j - 1);
    if (demand_draws == 0) throw ParameterError("stochastic demand needs draws");
    SampleStream draws(demand, derive_seed(seed, j));
    double num = 0.0, den = 0.0;
    for (std::uint64_t t = 0; t < demand_draws; ++t) {
        const double p = draws.next();
        if (!std::isfinite(p)) continue;
        const double tail = density.tail_mass(h, p);
        num += frame_moment(theta, channel, policy, p) * tail;
        den += tail;
    }
    if (!(den > 0.0))
        throw UnreachableStateError("sampled demands never met from state");
    return num / den;
}

std::vector<double> char_poly(std::size_t alpha, const std::vector<double>& q,
                              double phi0_val,
                              const std::vector<double>& phij_vals) {
    if (alpha == 0) throw ParameterError("truncation order must be >= 1");
    if (!(phi0_val >= 0.0) || !std::isfinite(phi0_val))
        throw ParameterError("phi0 must be finite and >= 0");
    if (phij_vals.size() + 1 < alpha)
        throw ParameterError("need phi values for streaks 1..alpha-1");
    auto ratio = [&](std::size_t n) {
        const double v = n - 1 < q.size() ? q[n - 1] : 0.0;
        if (!(v >= 0.0) || !(v <= 1.0))
            throw ParameterError("survival ratios must lie in [0, 1]");
        return v;
    };
    std::vector<double> coeffs(alpha + 1, 0.0);
    coeffs[0] = 1.0;
    double prefix = 1.0;  // prod_{j<n} q_j phi_j
    double total = 0.0;
    for (std::size_t n = 1; n <= alpha; ++n) {
        const double b_n = phi0_val * (1.0 - ratio(n)) * prefix;
        coeffs[n] = -b_n;
        total += b_n;
        if (n < alpha) {
            const double ph = phij_vals[n - 1];
            if (!(ph >= 0.0) || !std::isfinite(ph))
                throw ParameterError("phi values must be finite and >= 0");
            prefix *= ratio(n) * ph;
            if (prefix == 0.0) break;
        }
    }
    if (!(total > 0.0))
        throw DegenerateChainError("all polynomial weights vanish");
    return coeffs;
}

namespace {

double horner(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (double c : coeffs) acc = acc * x + c;
    return acc;
}

}  // namespace

double positive_root(const std::vector<double>& coeffs) {
    if (coeffs.size() < 2 || coeffs[0] != 1.0)
        throw ParameterError("expected a monic polynomial of degree >= 1");
    double max_b = 0.0;
    for (std::size_t i = 1; i < coeffs.size(); ++i) {
        if (coeffs[i] > 0.0)
            throw ParameterError("trailing coefficients must be <= 0");
        max_b = std::max(max_b, -coeffs[i]);
    }
    // Factor out roots at zero: they never carry the positive root.
    std::vector<double> poly(coeffs);
    while (poly.size() > 1 && poly.back() == 0.0) poly.pop_back();
    if (poly.size() < 2)
        throw BracketError("polynomial has no positive root: no sign change");
    double lo = 0.0, hi = 1.0 + max_b;
    double f_lo = poly.back();
    double f_hi = horner(poly, hi);
    if (!(f_lo < 0.0) || !(f_hi > 0.0))
        throw BracketError("dominant-root bracket failed to enclose a root");
    for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = horner(poly, mid);
        if (fm < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    return std::abs(f_lo) <= f_hi ? lo : hi;
}

double spectral_radius_companion(const std::vector<double>& coeffs) {
    if (coeffs.size() < 2 || coeffs[0] != 1.0)
        throw ParameterError("expected a monic polynomial of degree >= 1");
    const auto n = static_cast<Eigen::Index>(coeffs.size()) - 1;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        comp(0, k) = -coeffs[static_cast<std::size_t>(k) + 1];
        if (k + 1 < n) comp(k + 1, k) = 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(comp, false);
    if (solver.info() != Eigen::Success)
        throw NumericsError("companion eigen-solve failed");
    double radius = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
        radius = std::max(radius, std::abs(solver.eigenvalues()[k]));
    return radius;
}

EffCapSolution effective_capacity(double theta, std::size_t alpha,
                                  const OutageChain& chain,
                                  const ConditionalEnergyDensity& density,
                                  const ChannelSpec& channel,
                                  const RatePolicy& policy,
                                  const ProcessSpec& demand,
                                  std::uint64_t demand_draws,
                                  std::uint64_t seed) {
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw ParameterError("qos exponent must be positive and finite");
    if (alpha == 0) throw ParameterError("truncation order must be >= 1");
    const double n_symbols = channel.symbols_per_frame;

    EffCapSolution sol;
    if (chain.pi0 == 0.0) {
        // Demand is met every frame: a single recurring state whose frame
        // moment is the root itself.
        double moment;
        if (demand.kind() == ProcessSpec::Kind::Constant) {
            moment = frame_moment(theta, channel, policy, demand.mean());
        } else {
            SampleStream draws(demand, derive_seed(seed, 0));
            double acc = 0.0;
            for (std::uint64_t t = 0; t < std::max<std::uint64_t>(demand_draws, 1);
                 ++t)
                acc += frame_moment(theta, channel, policy, draws.next());
            moment = acc / static_cast<double>(std::max<std::uint64_t>(demand_draws, 1));
        }
        sol.chi_star = moment;
        sol.effective_capacity = -std::log(moment) / (n_symbols * theta);
        sol.alpha = 1;
        sol.phi0_value = std::numeric_limits<double>::quiet_NaN();
        sol.trace.emplace_back(1, sol.effective_capacity);
        return sol;
    }

    const double phi0_val = phi0(theta, chain, density, channel, policy,
                                 demand, demand_draws, seed);

    std::vector<std::size_t> ladder;
    for (std::size_t a : {std::size_t{10}, std::size_t{25}, std::size_t{50},
                          std::size_t{100}, std::size_t{200}})
        if (a < alpha) ladder.push_back(a);
    ladder.push_back(alpha);

    std::vector<double> phis(alpha > 1 ? alpha - 1 : 0, 1.0);
    double last = 1.0;
    for (std::size_t j = 1; j + 1 <= alpha; ++j) {
        const double q_j = j - 1 < chain.q.size() ? chain.q[j - 1] : 0.0;
        if (!(q_j > 0.0)) break;  // later products vanish anyway
        last = phij(theta, j, chain, density, channel, policy, demand,
                    demand_draws, seed);
        phis[j - 1] = last;
        if (demand.kind() == ProcessSpec::Kind::Constant) {
            // State independent: one evaluation serves every streak.
            std::fill(phis.begin() + static_cast<std::ptrdiff_t>(j), phis.end(),
                      last);
            break;
        }
    }

    for (std::size_t a : ladder) {
        const auto coeffs = char_poly(a, chain.q, phi0_val, phis);
        const double chi = positive_root(coeffs);
        const double ce = -std::log(chi) / (n_symbols * theta);
        sol.trace.emplace_back(a, ce);
        sol.chi_star = chi;
        sol.effective_capacity = ce;
        sol.alpha = a;
    }
    sol.phi0_value = phi0_val;
    return sol;
}

}  // namespace ehlink
