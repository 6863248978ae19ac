#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"

#include "ehlink/battery.hpp"
#include "ehlink/processes.hpp"

using namespace ehlink;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE("battery") {

TEST_CASE("step matches the clamped one-sided recursion bit for bit") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> val(0.0, 10.0);
    for (double cap : {kInf, 8.0, 2.5}) {
        BatteryState s{0.0, cap, 0};
        for (int i = 0; i < 20000; ++i) {
            const double u = val(gen), p = val(gen);
            const FrameOutcome out = step(s, u, p);
            const double unclamped = std::fmax(0.0, s.energy + u - p);
            const double expected = std::fmin(unclamped, cap);
            CHECK(out.state.energy == expected);  // bitwise
            s = out.state;
        }
    }
}

TEST_CASE("a tie between available and demanded energy counts as met") {
    BatteryState s{1.5, kInf, 3};
    const FrameOutcome out = step(s, 2.5, 4.0);  // available exactly 4.0
    CHECK_FALSE(out.shortfall);
    CHECK(out.consumed == 4.0);
    CHECK(out.state.energy == 0.0);
    CHECK(out.state.streak == 4);
}

TEST_CASE("a shortfall consumes everything and resets the streak") {
    BatteryState s{1.0, kInf, 9};
    const FrameOutcome out = step(s, 2.0, 3.5);
    CHECK(out.shortfall);
    CHECK(out.available == 3.0);
    CHECK(out.consumed == 3.0);
    CHECK(out.state.energy == 0.0);  // exact zero, not a small residue
    CHECK(out.state.streak == 0);
    CHECK(out.overflow == 0.0);
}

TEST_CASE("met frames extend the streak") {
    BatteryState s{5.0, kInf, 0};
    const FrameOutcome out = step(s, 1.0, 2.0);
    CHECK_FALSE(out.shortfall);
    CHECK(out.state.streak == 1);
    CHECK(out.state.energy == 4.0);
}

TEST_CASE("overflow accounts for every unit above capacity") {
    BatteryState s{7.0, 8.0, 2};
    const FrameOutcome out = step(s, 5.0, 1.0);
    // left = 7 + 5 - 1 = 11, clamp to 8, overflow 3
    CHECK(out.state.energy == 8.0);
    CHECK(out.overflow == 3.0);
    CHECK_FALSE(out.shortfall);
}

TEST_CASE("energy conservation holds frame by frame") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> val(0.0, 5.0);
    BatteryState s{0.0, 6.0, 0};
    for (int i = 0; i < 50000; ++i) {
        const double u = val(gen), p = val(gen);
        const FrameOutcome out = step(s, u, p);
        CHECK(out.state.energy >= 0.0);
        CHECK(out.state.energy <= 6.0);
        CHECK(out.consumed >= 0.0);
        CHECK(out.consumed <= out.available);
        CHECK(out.consumed <= out.demanded);
        CHECK(out.overflow >= 0.0);
        // balance: prior energy + harvest = consumed + stored + overflow
        const double in = s.energy + u;
        const double accounted = out.consumed + out.state.energy +
                                 out.overflow;
        CHECK(std::abs(in - accounted) < 1e-9 * std::max(1.0, in));
        s = out.state;
    }
}

TEST_CASE("for_each_frame is reproducible and matches simulate_path") {
    const auto arrival = ProcessSpec::exponential(2.0);
    const auto demand = ProcessSpec::constant(2.5);
    const auto path = simulate_path(arrival, demand, 0.0, kInf, 500, 4242);
    REQUIRE(path.size() == 500);
    std::size_t i = 0;
    bool same = true;
    for_each_frame(arrival, demand, 0.0, kInf, 500, 4242,
                   [&](const FrameOutcome& f) {
                       same = same && (f.state.energy == path[i].state.energy)
                              && (f.harvested == path[i].harvested)
                              && (f.consumed == path[i].consumed);
                       ++i;
                   });
    CHECK(same);
    CHECK(i == 500);
}

TEST_CASE("simulate_path decimation keeps every k-th frame") {
    const auto arrival = ProcessSpec::exponential(1.0);
    const auto demand = ProcessSpec::constant(1.2);
    const auto full = simulate_path(arrival, demand, 0.0, kInf, 100, 5);
    const auto thin = simulate_path(arrival, demand, 0.0, kInf, 100, 5, 10);
    REQUIRE(thin.size() == 10);
    for (std::size_t k = 0; k < thin.size(); ++k) {
        CHECK(thin[k].state.energy == full[k * 10].state.energy);
    }
}

TEST_CASE("greedy regime: infinite demand consumes exactly the arrival") {
    const auto arrival = ProcessSpec::exponential(2.0);
    const auto demand = ProcessSpec::constant(kInf);
    for_each_frame(arrival, demand, 0.0, kInf, 1000, 77,
                   [](const FrameOutcome& f) {
                       CHECK(f.shortfall);
                       CHECK(f.consumed == f.harvested);
                       CHECK(f.state.energy == 0.0);
                       CHECK(f.state.streak == 0);
                   });
}

}  // TEST_SUITE
