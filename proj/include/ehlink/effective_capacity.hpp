#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ehlink/channel.hpp"
#include "ehlink/outage.hpp"
#include "ehlink/processes.hpp"

namespace ehlink {

/// Per-frame service moment values for the streak chain, the polynomial
/// whose unique positive root gives the service spectral radius, and the
/// resulting effective capacity (maximum constant arrival rate whose buffer
/// tail decays at least as fast as exp(-theta * level)).
///
/// All operations take the QoS exponent theta > 0 and apply the required
/// negative sign internally, so every exponentiated quantity is <= 1 and
/// no overflow guard is needed.

/// Mean of exp(-theta * service) over shortfall frames (the transition into
/// streak state 0), averaged across the stationary state mix and demand.
/// Numerator and denominator share the same sampled mass, so theta = 0
/// yields exactly 1.
double phi0(double theta, const OutageChain& chain,
            const ConditionalEnergyDensity& density,
            const ChannelSpec& channel, const RatePolicy& policy,
            const ProcessSpec& demand, std::uint64_t demand_draws = 4000,
            std::uint64_t seed = 0xec0ffee);

/// Mean of exp(-theta * service) over frames that extend a streak of length
/// j - 1 by meeting the demand in full. Constant demand makes this state
/// independent and exact; stochastic demand integrates the state-(j-1)
/// energy tail and reuses the deepest well-sampled histogram for states
/// beyond it.
double phij(double theta, std::size_t j, const OutageChain& chain,
            const ConditionalEnergyDensity& density,
            const ChannelSpec& channel, const RatePolicy& policy,
            const ProcessSpec& demand, std::uint64_t demand_draws = 4000,
            std::uint64_t seed = 0xec0ffee);

/// Monic degree-alpha polynomial in descending-power coefficient order:
/// chi^alpha - sum_n b_n chi^(alpha-n) with
/// b_n = phi0 * (1 - q_n) * prod_{j<n} q_j phi_j >= 0.
/// A ratio list shorter than alpha continues with zeros (exhausted pool).
std::vector<double> char_poly(std::size_t alpha, const std::vector<double>& q,
                              double phi0_val,
                              const std::vector<double>& phij_vals);

/// Unique positive root of a monic polynomial whose other coefficients are
/// all <= 0; every other root is dominated by it in magnitude, so the
/// bracket (0, 1 + max b_n] always contains it.
double positive_root(const std::vector<double>& coeffs);

/// Largest eigenvalue magnitude of the companion matrix — an independent
/// check that positive_root found the dominant root.
double spectral_radius_companion(const std::vector<double>& coeffs);

struct EffCapSolution {
    double chi_star = 0.0;
    double effective_capacity = 0.0;  // bits per channel use
    std::size_t alpha = 0;
    double phi0_value = 0.0;  // NaN in the shortfall-free degenerate case
    /// (truncation order, effective capacity) pairs, non-increasing.
    std::vector<std::pair<std::size_t, double>> trace;
};

/// Solves the truncated root problem on a ladder of truncation orders
/// ({10, 25, 50, 100, 200} capped at alpha) and reports the largest one.
/// Each finite truncation upper-bounds the limit value. A chain that never
/// reaches the shortfall state (pi0 = 0) degenerates to a single state
/// whose service moment directly gives the root.
EffCapSolution effective_capacity(double theta, std::size_t alpha,
                                  const OutageChain& chain,
                                  const ConditionalEnergyDensity& density,
                                  const ChannelSpec& channel,
                                  const RatePolicy& policy,
                                  const ProcessSpec& demand,
                                  std::uint64_t demand_draws = 4000,
                                  std::uint64_t seed = 0xec0ffee);

}  // namespace ehlink
