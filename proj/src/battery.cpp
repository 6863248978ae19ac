#include "ehlink/battery.hpp"

#include "ehlink/errors.hpp"

namespace ehlink {

std::vector<FrameOutcome> simulate_path(const ProcessSpec& arrival,
                                        const ProcessSpec& demand,
                                        double initial_energy, double capacity,
                                        std::uint64_t frames,
                                        std::uint64_t seed,
                                        std::uint64_t keep_every) {
    if (initial_energy < 0.0 || !(capacity >= 0.0))
        throw ParameterError("battery path needs energy >= 0 and capacity >= 0");
    if (keep_every == 0) throw ParameterError("keep_every must be >= 1");
    std::vector<FrameOutcome> trace;
    trace.reserve(frames / keep_every + 1);
    std::uint64_t i = 0;
    for_each_frame(arrival, demand, initial_energy, capacity, frames, seed,
                   [&](const FrameOutcome& out) {
                       if (i % keep_every == 0) trace.push_back(out);
                       ++i;
                   });
    return trace;
}

}  // namespace ehlink
