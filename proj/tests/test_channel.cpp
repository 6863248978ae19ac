#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "ehlink/channel.hpp"
#include "ehlink/errors.hpp"
#include "ehlink/harness.hpp"
#include "ehlink/outage.hpp"
#include "ehlink/overflow.hpp"
#include "ehlink/processes.hpp"
#include "ehlink/rng.hpp"

using namespace ehlink;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

ChannelSpec awgn() { return ChannelSpec{}; }

ChannelSpec rayleigh() {
    ChannelSpec ch;
    ch.fading = ChannelSpec::Fading::Rayleigh;
    return ch;
}
}  // namespace

TEST_SUITE("channel") {

TEST_CASE("instantaneous capacity closed form") {
    const auto ch = awgn();
    // 100 symbols, unit noise: energy 100 gives SNR 1 -> 100 * log2(2).
    CHECK(instantaneous_capacity(ch, 1.0, 100.0) ==
          doctest::Approx(100.0).epsilon(1e-15));
    CHECK(instantaneous_capacity(ch, 4.0, 25.0) ==
          doctest::Approx(100.0).epsilon(1e-15));
    CHECK(instantaneous_capacity(ch, 1.0, 0.0) == 0.0);
}

TEST_CASE("capacity-tracking schedule pins the fading threshold at one") {
    const auto ch = awgn();
    const auto pol = RatePolicy::shannon(ch);
    for (double e : {1.0, 10.0, 438.3, 5000.0}) {
        CHECK(pol.rate(e) ==
              doctest::Approx(instantaneous_capacity(ch, 1.0, e))
                  .epsilon(1e-14));
        CHECK(kappa(ch, pol, e) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(success_prob(ch, kappa(ch, pol, e)) == 1.0);
    }
    CHECK(kappa(ch, pol, 0.0) == 0.0);
    CHECK(success_prob(ch, 0.0) == 1.0);
}

TEST_CASE("threshold inverts the rate expression") {
    const auto ch = awgn();
    const auto pol = RatePolicy::fixed_rate(2.0);
    // kappa = (2^(r/N) - 1) * N * sigma^2 / e
    const double e = 438.3;
    const double expect = (std::pow(2.0, 0.02) - 1.0) * 100.0 / e;
    CHECK(kappa(ch, pol, e) == doctest::Approx(expect).epsilon(1e-12));
    // AWGN success is a hard threshold against unit fading power.
    CHECK(success_prob(ch, 0.999999) == 1.0);
    CHECK(success_prob(ch, 1.0000001) == 0.0);
    // Rayleigh success integrates the exponential tail.
    CHECK(success_prob(rayleigh(), 0.5) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    // No energy means no transmission attempt, so nothing to decode.
    CHECK(kappa(ch, pol, 0.0) == 0.0);
}

TEST_CASE("rayleigh rate optimization beats a fine grid search") {
    const auto ch = rayleigh();
    for (double e : {20.0, 100.0, 316.0, 1000.0}) {
        const RateChoice best = optimize_rate(ch, e);
        double grid_best = 0.0;
        for (int i = 1; i <= 40000; ++i) {
            const double r = 0.025 * i;
            const double k = (std::exp2(r / 100.0) - 1.0) * 100.0 / e;
            const double v = r * std::exp(-k);
            if (v > grid_best) grid_best = v;
        }
        CHECK(best.expected_bits >= grid_best - 1e-2);
        CHECK(best.expected_bits <= grid_best + 1e-2);
        CHECK(best.success == doctest::Approx(
                  std::exp(-kappa(ch, RatePolicy::fixed_rate(best.rate), e)))
                  .epsilon(1e-9));
    }
    // Zero energy: nothing to send.
    const RateChoice none = optimize_rate(ch, 0.0);
    CHECK(none.rate == 0.0);
    CHECK(none.expected_bits == 0.0);
}

TEST_CASE("awgn rate optimization is the capacity itself") {
    const auto ch = awgn();
    for (double e : {10.0, 100.0, 500.0}) {
        const RateChoice best = optimize_rate(ch, e);
        CHECK(best.rate ==
              doctest::Approx(instantaneous_capacity(ch, 1.0, e))
                  .epsilon(1e-12));
        CHECK(best.success == 1.0);
    }
}

TEST_CASE("tabulated schedule interpolates and clamps") {
    const auto pol = RatePolicy::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 1.5});
    CHECK(pol.rate(0.0) == 0.0);
    CHECK(pol.rate(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pol.rate(1.5) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(pol.rate(3.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK_THROWS_AS(RatePolicy::tabulated({0.5, 1.0}, {0.0, 1.0}),
                    ParameterError);
    CHECK_THROWS_AS(RatePolicy::tabulated({0.0, 1.0}, {0.5, 1.0}),
                    ParameterError);
    CHECK_THROWS_AS(RatePolicy::tabulated({0.0, 0.0}, {0.0, 1.0}),
                    ParameterError);
    CHECK_THROWS_AS(RatePolicy::tabulated({0.0, 1.0}, {1.0, 0.5}),
                    ParameterError);
}

TEST_CASE("tabulated optimal schedule tracks the pointwise optimum") {
    const auto ch = rayleigh();
    const auto pol = RatePolicy::optimized_for(ch, 1000.0);
    for (double e : {50.0, 200.0, 640.0, 990.0}) {
        const RateChoice best = optimize_rate(ch, e);
        const double r = pol.rate(e);
        const double k = kappa(ch, pol, e);
        CHECK(r * std::exp(-k) >= 0.999 * best.expected_bits);
    }
    // Monotone non-decreasing in energy.
    double last = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = pol.rate(10.0 * i);
        CHECK(r >= last - 1e-12);
        last = r;
    }
}

TEST_CASE("conditional density conserves mass and splits bins exactly") {
    ConditionalEnergyDensity d(2, 10.0, 10, 5);
    for (int i = 0; i < 100; ++i)
        d.record(0, 0.05 + 0.1 * static_cast<double>(i));  // uniform [0,10)
    CHECK(d.visits(0) == 100);
    CHECK(d.available(0));
    CHECK_FALSE(d.available(1));
    const auto one = [](double) { return 1.0; };
    CHECK(d.integrate_below(0, kInf, one) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.integrate_below(0, 5.0, one) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.tail_mass(0, 5.0) == doctest::Approx(0.5).epsilon(1e-12));
    // Straddled-bin split: cut 0.25 takes a quarter of the first bin... the
    // first bin holds mass 0.1 on [0,1).
    CHECK(d.integrate_below(0, 0.25, one) ==
          doctest::Approx(0.025).epsilon(1e-12));
    // Values beyond the upper edge land in the last bin, and the histogram
    // opens up once it has the minimum number of visits.
    for (int i = 0; i < 5; ++i) d.record(1, 99.0);
    CHECK(d.available(1));
    CHECK(d.tail_mass(1, 9.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("prefix profile agrees with direct integration") {
    ConditionalEnergyDensity d(1, 8.0, 16, 1);
    SampleStream s(ProcessSpec::exponential(2.0), 9);
    for (int i = 0; i < 5000; ++i) d.record(0, s.next());
    const auto f = [](double x) { return x * x; };
    const auto prof = d.prefix_profile(0, f);
    for (double cut : {0.3, 1.0, 2.5, 4.75, 7.9, 8.0, 20.0, kInf}) {
        CHECK(prof.at(cut) ==
              doctest::Approx(d.integrate_below(0, cut, f)).epsilon(1e-10));
        CHECK(prof.mass_at(cut) ==
              doctest::Approx(1.0 - d.tail_mass(0, cut)).epsilon(1e-10));
    }
}

TEST_CASE("estimated conditional densities are proper distributions") {
    const auto arrival = ProcessSpec::exponential(2.0);
    const auto demand = ProcessSpec::constant(
        min_constant_demand(arrival, 0.25));
    const auto d = estimate_conditional_densities(arrival, demand, 30,
                                                  400'000, 10'000, 21);
    const auto one = [](double) { return 1.0; };
    for (std::size_t m = 0; m <= 10; ++m) {
        REQUIRE(d.available(m));
        CHECK(d.integrate_below(m, kInf, one) ==
              doctest::Approx(1.0).epsilon(1e-9));
    }
    // State 0 is every post-shortfall frame: available energy is the frame's
    // arrival alone, so its conditional mean is E[u].
    const auto ident = [](double x) { return x; };
    CHECK(d.integrate_below(0, kInf, ident) ==
          doctest::Approx(2.0).epsilon(0.05));
    // Deeper streaks accumulate battery, so the mean grows with the state.
    const double m1 = d.integrate_below(1, kInf, ident);
    const double m5 = d.integrate_below(5, kInf, ident);
    CHECK(m5 > m1);
}

TEST_CASE("analytic service rate matches a long simulation") {
    const double lambda = 316.22776601683796;  // 5 dB
    const auto arrival = ProcessSpec::exponential(lambda);
    const double mu = 0.5 / lambda;
    const auto demand =
        ProcessSpec::constant(min_constant_demand(arrival, mu));
    const auto chain = build_outage_chain(arrival, demand, 150, 300'000, 31);
    const auto density = estimate_conditional_densities(
        arrival, demand, 150, 3'000'000, 100'000, derive_seed(31, 0xD));

    for (bool ray : {false, true}) {
        const ChannelSpec ch = ray ? rayleigh() : awgn();
        const RatePolicy pol = ray
            ? RatePolicy::optimized_for(ch, demand.mean())
            : RatePolicy::shannon(ch);
        const auto analytic =
            avg_service_rate(chain, density, ch, pol, demand);
        const auto sim =
            mc_service_rate(arrival, demand, ch, pol, 3'000'000, 100'000,
                            derive_seed(31, 0x51));
        CHECK(std::abs(analytic.s_avg - sim.s_avg) <
              0.02 * sim.s_avg);
        CHECK(analytic.s_avg > 0.0);
    }
}

TEST_CASE("state-limited service rate is a growing lower bound") {
    const auto arrival = ProcessSpec::exponential(2.0);
    const auto demand = ProcessSpec::constant(
        min_constant_demand(arrival, 0.25));
    const auto chain = build_outage_chain(arrival, demand, 60, 200'000, 17);
    const auto density = estimate_conditional_densities(
        arrival, demand, 60, 500'000, 10'000, derive_seed(17, 0xD));
    const auto ch = awgn();
    const auto pol = RatePolicy::shannon(ch);
    const double full =
        avg_service_rate(chain, density, ch, pol, demand).s_avg;
    double last = 0.0;
    for (std::size_t lim : {2, 5, 10, 25, 60}) {
        const double v =
            avg_service_rate(chain, density, ch, pol, demand, lim).s_avg;
        CHECK(v >= last - 1e-12);
        CHECK(v <= full + 1e-12);
        last = v;
    }
    CHECK(last == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("stochastic demand service rate stays near simulation") {
    const auto arrival = ProcessSpec::exponential(2.0);
    const auto demand = ProcessSpec::exponential(2.6);
    const auto chain = build_outage_chain(arrival, demand, 60, 300'000, 23);
    const auto density = estimate_conditional_densities(
        arrival, demand, 60, 2'000'000, 50'000, derive_seed(23, 0xD));
    const auto ch = awgn();
    const auto pol = RatePolicy::shannon(ch);
    const auto analytic = avg_service_rate(chain, density, ch, pol, demand);
    const auto sim = mc_service_rate(arrival, demand, ch, pol, 2'000'000,
                                     50'000, derive_seed(23, 0x51));
    CHECK(std::abs(analytic.s_avg - sim.s_avg) < 0.03 * sim.s_avg);
}

TEST_CASE("channel validation") {
    ChannelSpec bad = awgn();
    bad.symbols_per_frame = 0;
    CHECK_THROWS_AS(RatePolicy::shannon(bad), ParameterError);
    ChannelSpec badnoise = awgn();
    badnoise.noise_variance = -1.0;
    CHECK_THROWS_AS(RatePolicy::shannon(badnoise), ParameterError);
    CHECK_THROWS_AS(RatePolicy::fixed_rate(-2.0), ParameterError);
    CHECK_THROWS_AS(RatePolicy::optimized_for(rayleigh(), 0.0),
                    ParameterError);
}

}  // TEST_SUITE
