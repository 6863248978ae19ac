#pragma once

#include <stdexcept>
#include <string>

namespace ehlink {

/// Invalid argument supplied to a constructor or analysis routine.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A log moment generating function was evaluated outside its domain of
/// convergence. `domain_edge` is the supremum of valid arguments (may be 0
/// when no positive argument converges at all).
struct DivergenceError : std::runtime_error {
    double domain_edge;
    DivergenceError(const std::string& what, double edge)
        : std::runtime_error(what), domain_edge(edge) {}
};

/// The long-run drift condition required by an analysis does not hold
/// (e.g. mean harvest is not below mean demand).
struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A root search exhausted its bracket without a sign change. `f_at_edge`
/// is the function value at the furthest point probed.
struct NoRootError : std::runtime_error {
    double f_at_edge;
    NoRootError(const std::string& what, double f_edge)
        : std::runtime_error(what), f_at_edge(f_edge) {}
};

/// Root bracketing failed inside a bounded interval.
struct BracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The recovery-chain input is degenerate for the requested operation
/// (e.g. a geometric tail closure with ratio 1).
struct DegenerateChainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A per-state quantity was requested for a state the chain cannot reach.
struct UnreachableStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The simulated queue grows without bound under the requested load.
struct InstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A dense linear-algebra routine reported failure.
struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Experiment configuration file is malformed or inconsistent.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One or more analytic-versus-simulation cross-checks failed.
struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ehlink
