#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ehlink/processes.hpp"

namespace ehlink {

/// Battery level together with the bookkeeping the recovery analysis needs:
/// `streak` counts consecutive frames whose demand was met in full since the
/// last shortfall.
struct BatteryState {
    double energy = 0.0;
    double capacity = std::numeric_limits<double>::infinity();
    std::uint64_t streak = 0;
};

/// Everything observable about one frame transition.
struct FrameOutcome {
    double harvested = 0.0;   // u, energy arriving this frame
    double demanded = 0.0;    // p, energy the transmitter asks for
    double available = 0.0;   // battery before the frame plus the arrival
    double consumed = 0.0;    // energy actually drawn
    double overflow = 0.0;    // energy lost to the capacity clamp
    bool shortfall = false;   // demand could not be met in full
    BatteryState state;       // battery after the frame
};

/// Advances the battery by one frame. The arrival is credited before the
/// draw; if the available energy covers the demand (ties count as covered)
/// the full demand is consumed, otherwise everything available is consumed
/// and the frame is a shortfall. Whatever remains is clamped to capacity and
/// the excess is reported as overflow.
inline FrameOutcome step(const BatteryState& s, double harvested,
                         double demanded) {
    FrameOutcome out;
    out.harvested = harvested;
    out.demanded = demanded;
    out.available = s.energy + harvested;
    out.state.capacity = s.capacity;
    if (out.available >= demanded) {
        out.consumed = demanded;
        out.shortfall = false;
        const double left = out.available - demanded;
        out.overflow = left > s.capacity ? left - s.capacity : 0.0;
        out.state.energy = left > s.capacity ? s.capacity : left;
        out.state.streak = s.streak + 1;
    } else {
        out.consumed = out.available;
        out.shortfall = true;
        out.overflow = 0.0;
        out.state.energy = 0.0;
        out.state.streak = 0;
    }
    return out;
}

/// Streams `frames` transitions to `visit(const FrameOutcome&)`, drawing
/// arrivals and demands from seeded streams. Seeds for the two streams are
/// derived from `seed` so one argument pins the whole path.
template <class Visitor>
void for_each_frame(const ProcessSpec& arrival, const ProcessSpec& demand,
                    double initial_energy, double capacity,
                    std::uint64_t frames, std::uint64_t seed, Visitor&& visit) {
    SampleStream u(arrival, derive_seed(seed, 0));
    SampleStream p(demand, derive_seed(seed, 1));
    BatteryState state{initial_energy, capacity, 0};
    for (std::uint64_t i = 0; i < frames; ++i) {
        const FrameOutcome out = step(state, u.next(), p.next());
        visit(out);
        state = out.state;
    }
}

/// Materialized path for inspection and trace dumps. `keep_every` decimates
/// the stored trace (1 keeps everything); the simulation itself always runs
/// frame by frame.
std::vector<FrameOutcome> simulate_path(const ProcessSpec& arrival,
                                        const ProcessSpec& demand,
                                        double initial_energy, double capacity,
                                        std::uint64_t frames,
                                        std::uint64_t seed,
                                        std::uint64_t keep_every = 1);

}  // namespace ehlink
