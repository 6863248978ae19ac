#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "ehlink/battery.hpp"
#include "ehlink/channel.hpp"
#include "ehlink/effective_capacity.hpp"
#include "ehlink/errors.hpp"
#include "ehlink/harness.hpp"
#include "ehlink/outage.hpp"
#include "ehlink/overflow.hpp"
#include "ehlink/processes.hpp"
#include "ehlink/rng.hpp"

using namespace ehlink;

namespace {

constexpr double kLambda5dB = 316.22776601683796;

struct Setup {
    ProcessSpec arrival;
    ProcessSpec demand;
    OutageChain chain;
    ConditionalEnergyDensity density;
};

Setup make_setup(double lambda, double frac, std::size_t alpha,
                 std::uint64_t paths, std::uint64_t frames,
                 std::uint64_t seed) {
    const auto arrival = ProcessSpec::exponential(lambda);
    const double mu = frac / lambda;
    const auto demand =
        ProcessSpec::constant(min_constant_demand(arrival, mu));
    auto chain = build_outage_chain(arrival, demand, alpha, paths, seed);
    auto density = estimate_conditional_densities(
        arrival, demand, alpha, frames, 50'000, derive_seed(seed, 0xD));
    return Setup{arrival, demand, std::move(chain), std::move(density)};
}

}  // namespace

TEST_SUITE("effective_capacity") {

TEST_CASE("zero QoS exponent gives exactly unit moments") {
    const auto s = make_setup(2.0, 0.5, 40, 100'000, 400'000, 5);
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    CHECK(phi0(0.0, s.chain, s.density, ch, pol, s.demand) == 1.0);
    for (std::size_t j : {1, 2, 5, 20})
        CHECK(phij(0.0, j, s.chain, s.density, ch, pol, s.demand) == 1.0);
}

TEST_CASE("moment bounds: positive and at most one") {
    const auto s = make_setup(2.0, 0.5, 40, 100'000, 400'000, 5);
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    for (double theta : {0.01, 0.1, 1.0}) {
        const double f0 = phi0(theta, s.chain, s.density, ch, pol, s.demand);
        CHECK(f0 > 0.0);
        CHECK(f0 <= 1.0);
        const double f3 =
            phij(theta, 3, s.chain, s.density, ch, pol, s.demand);
        CHECK(f3 > 0.0);
        CHECK(f3 <= 1.0);
    }
}

TEST_CASE("shortfall moment matches a direct conditional simulation") {
    const auto arrival = ProcessSpec::exponential(2.0);
    const auto demand =
        ProcessSpec::constant(min_constant_demand(arrival, 0.25));
    const auto chain = build_outage_chain(arrival, demand, 60, 300'000, 12);
    const auto density = estimate_conditional_densities(
        arrival, demand, 60, 2'000'000, 50'000, derive_seed(12, 0xD));
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    const double theta = 0.1;

    // Oracle: average exp(-theta * served bits) over shortfall frames of an
    // independent path. The capacity-tracking schedule always succeeds.
    double sum = 0.0;
    std::uint64_t count = 0, skip = 50'000;
    for_each_frame(arrival, demand, 0.0,
                   std::numeric_limits<double>::infinity(), 2'000'000, 999,
                   [&](const FrameOutcome& f) {
                       if (skip > 0) { --skip; return; }
                       if (!f.shortfall) return;
                       sum += std::exp(-theta * pol.rate(f.consumed));
                       ++count;
                   });
    const double oracle = sum / static_cast<double>(count);
    const double val = phi0(theta, chain, density, ch, pol, demand);
    CHECK(val == doctest::Approx(oracle).epsilon(0.01));
}

TEST_CASE("streak-extension moment for constant demand is closed form") {
    const auto s = make_setup(2.0, 0.5, 40, 100'000, 400'000, 5);
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    const double theta = 0.2;
    const double p = s.demand.mean();
    // Met frames serve the full demand; the schedule tracks capacity, so
    // the moment is exp(-theta * g(p)) exactly, independent of the state.
    const double expect = std::exp(-theta * pol.rate(p));
    for (std::size_t j : {1, 4, 17}) {
        CHECK(phij(theta, j, s.chain, s.density, ch, pol, s.demand) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("streak-extension moment rejects unreachable states") {
    const auto s = make_setup(2.0, 0.5, 40, 100'000, 400'000, 5);
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    CHECK_THROWS_AS(
        (void)phij(0.1, 0, s.chain, s.density, ch, pol, s.demand),
        ParameterError);
    // Far beyond the estimated ratio list the chain has no mass.
    CHECK_THROWS_AS(
        (void)phij(0.1, 5000, s.chain, s.density, ch, pol, s.demand),
        UnreachableStateError);
}

TEST_CASE("characteristic polynomial on a hand example") {
    const std::vector<double> q = {0.5, 0.5, 0.5};
    const std::vector<double> phis = {0.8, 0.8};
    const auto coeffs = char_poly(3, q, 0.9, phis);
    REQUIRE(coeffs.size() == 4);
    CHECK(coeffs[0] == 1.0);
    CHECK(coeffs[1] == doctest::Approx(-0.45).epsilon(1e-15));
    CHECK(coeffs[2] == doctest::Approx(-0.18).epsilon(1e-15));
    CHECK(coeffs[3] == doctest::Approx(-0.072).epsilon(1e-15));
    const double root = positive_root(coeffs);
    // Verify it solves the polynomial.
    const double z = root * root * root - 0.45 * root * root - 0.18 * root -
                     0.072;
    CHECK(std::abs(z) < 1e-12);
    CHECK(root == doctest::Approx(spectral_radius_companion(coeffs))
                      .epsilon(1e-10));
}

TEST_CASE("bisection root equals the companion spectral radius") {
    std::mt19937_64 gen(2026);
    std::uniform_real_distribution<double> mag(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t deg = 2 + gen() % 49;
        std::vector<double> coeffs(deg + 1, 0.0);
        coeffs[0] = 1.0;
        double sum = 0.0;
        for (std::size_t n = 1; n <= deg; ++n) {
            const double b = (gen() % 3 == 0) ? 0.0 : mag(gen);
            coeffs[n] = -b;
            sum += b;
        }
        if (sum == 0.0) coeffs[deg] = -0.25;
        const double root = positive_root(coeffs);
        const double rho = spectral_radius_companion(coeffs);
        CHECK(std::abs(root - rho) <= 1e-9 * std::max(1.0, rho));
    }
}

TEST_CASE("pure power polynomial has an explicit root") {
    // z^4 = b  ->  root b^(1/4)
    const std::vector<double> coeffs = {1.0, 0.0, 0.0, 0.0, -0.0625};
    CHECK(positive_root(coeffs) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(positive_root({1.0, 0.0, 0.0}), BracketError);
    CHECK_THROWS_AS(positive_root({1.0, 0.5, -0.2}), ParameterError);
}

TEST_CASE("effective capacity: sane value, monotone trace") {
    const auto s = make_setup(kLambda5dB, 0.5, 150, 200'000, 2'000'000, 8);
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    const auto sol =
        effective_capacity(0.1, 150, s.chain, s.density, ch, pol, s.demand);
    CHECK(sol.chi_star > 0.0);
    CHECK(sol.chi_star < 1.0);
    CHECK(sol.effective_capacity > 0.0);
    CHECK(sol.alpha == 150);
    REQUIRE(sol.trace.size() >= 2);
    for (std::size_t k = 0; k + 1 < sol.trace.size(); ++k) {
        CHECK(sol.trace[k + 1].first > sol.trace[k].first);
        CHECK(sol.trace[k + 1].second <= sol.trace[k].second + 1e-12);
    }
    CHECK(sol.trace.back().second == sol.effective_capacity);
    // QoS throughput never beats the unconstrained mean rate.
    const double s_avg =
        avg_service_rate(s.chain, s.density, ch, pol, s.demand).s_avg;
    CHECK(sol.effective_capacity <=
          s_avg / ch.symbols_per_frame + 1e-9);
}

TEST_CASE("effective capacity is non-increasing in the QoS exponent") {
    const auto s = make_setup(kLambda5dB, 0.5, 150, 200'000, 2'000'000, 8);
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    double last = std::numeric_limits<double>::infinity();
    for (double theta : {0.01, 0.05, 0.09, 0.10, 0.11, 0.5}) {
        const double ce =
            effective_capacity(theta, 150, s.chain, s.density, ch, pol,
                               s.demand)
                .effective_capacity;
        CHECK(ce <= last + 1e-12);
        last = ce;
    }
}

TEST_CASE("vanishing QoS exponent recovers the mean service rate") {
    // Fast-mixing configuration: the truncated tail carries no mass, so the
    // small-theta limit is clean.
    const auto s = make_setup(kLambda5dB, 0.9, 200, 200'000, 2'000'000, 8);
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    const double s_avg =
        avg_service_rate(s.chain, s.density, ch, pol, s.demand).s_avg;
    const double ce =
        effective_capacity(1e-5, 200, s.chain, s.density, ch, pol, s.demand)
            .effective_capacity;
    CHECK(ce == doctest::Approx(s_avg / ch.symbols_per_frame).epsilon(5e-3));
}

TEST_CASE("greedy regime: the root is the shortfall moment itself") {
    const auto arrival = ProcessSpec::exponential(2.0);
    const auto demand =
        ProcessSpec::constant(std::numeric_limits<double>::infinity());
    const auto chain = build_outage_chain(arrival, demand, 50, 20'000, 3);
    const auto density = estimate_conditional_densities(
        arrival, demand, 50, 400'000, 10'000, derive_seed(3, 0xD));
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    const double theta = 0.1;
    const auto sol = effective_capacity(theta, 50, chain, density, ch, pol,
                                        demand);
    const double f0 = phi0(theta, chain, density, ch, pol, demand);
    CHECK(sol.chi_star == doctest::Approx(f0).epsilon(1e-12));
    CHECK(sol.effective_capacity ==
          doctest::Approx(-std::log(f0) / (100.0 * theta)).epsilon(1e-12));
}

TEST_CASE("block moment estimator confirms the analytic value") {
    // Low-rate-variance configurations keep the per-path weights tight, so
    // a 10^4-path block mean resolves the moment.
    const ChannelSpec ch = [] {
        ChannelSpec c;
        c.fading = ChannelSpec::Fading::Rayleigh;
        return c;
    }();
    const auto pol = RatePolicy::fixed_rate(2.0);
    const double theta = 0.01;
    for (double frac : {0.5, 0.8}) {
        const auto s = make_setup(kLambda5dB, frac, 150, 200'000, 2'000'000,
                                  14);
        const auto sol = effective_capacity(theta, 150, s.chain, s.density,
                                            ch, pol, s.demand);
        const auto block = mc_effective_capacity_block(
            s.arrival, s.demand, ch, pol, theta, 10'000, 10'000, 500,
            derive_seed(14, 0xB));
        CHECK(std::abs(block.effective_capacity - sol.effective_capacity) <
              0.05 * sol.effective_capacity);
    }
}

TEST_CASE("input validation") {
    const auto s = make_setup(2.0, 0.5, 40, 100'000, 400'000, 5);
    const ChannelSpec ch;
    const auto pol = RatePolicy::shannon(ch);
    CHECK_THROWS_AS((void)effective_capacity(-0.1, 40, s.chain, s.density,
                                             ch, pol, s.demand),
                    ParameterError);
    CHECK_THROWS_AS((void)effective_capacity(0.0, 40, s.chain, s.density,
                                             ch, pol, s.demand),
                    ParameterError);
    CHECK_THROWS_AS((void)effective_capacity(0.1, 0, s.chain, s.density, ch,
                                             pol, s.demand),
                    ParameterError);
    CHECK_THROWS_AS((void)phi0(-1.0, s.chain, s.density, ch, pol, s.demand),
                    ParameterError);
    CHECK_THROWS_AS(char_poly(2, {0.5, 1.5}, 1.0, {1.0}), ParameterError);
    CHECK_THROWS_AS(char_poly(2, {0.5, 0.5}, -1.0, {1.0}), ParameterError);
}

}  // TEST_SUITE
