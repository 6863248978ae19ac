#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ehlink/processes.hpp"

namespace ehlink {

/// Monte Carlo estimate of the streak-extension probabilities q_m: the
/// conditional probability that the cumulative harvest covers the cumulative
/// demand for m consecutive frames, given it did so for m-1. Estimated by
/// filtering one pool of sampled paths prefix by prefix, so later ratios
/// condition on exactly the surviving paths.
struct SurvivalEstimate {
    std::vector<double> q;        // q_1 .. q_M (1-based index m stored at m-1)
    std::vector<double> std_err;  // binomial standard error per ratio
    std::vector<std::uint64_t> survivors;  // paths alive after each prefix
    std::uint64_t n_paths = 0;
    /// Set when the surviving pool hit zero at this depth (1-based); the last
    /// recorded ratio is an exact 0 and deeper ratios are unreachable.
    std::optional<std::size_t> exhausted_at;
};

SurvivalEstimate estimate_survival(const ProcessSpec& arrival,
                                   const ProcessSpec& demand,
                                   std::size_t m_max, std::uint64_t n_paths,
                                   std::uint64_t seed, unsigned n_threads = 0);

/// Stationary distribution of the streak chain truncated at depth alpha.
/// The tail beyond alpha is closed geometrically with ratio q_{alpha+1}
/// (the truncated chain loops state alpha onto itself), which reproduces the
/// closed-form denominator bound. `pi0` is that closure value; it upper
/// bounds the untruncated shortfall probability whenever the ratios are
/// non-decreasing. `pi0_truncated` is the plain denominator sum cut at alpha,
/// kept as a convergence diagnostic.
struct SteadyState {
    std::size_t alpha = 0;
    std::vector<double> pi;  // size alpha + 1
    double pi0 = 1.0;
    double pi0_truncated = 1.0;
};

SteadyState steady_state(const std::vector<double>& q, std::size_t alpha);

/// Column-stochastic transition matrix of the truncated streak chain:
/// column m sends q_{m+1} to state m+1 (or back onto alpha for the last
/// column) and the rest to state 0.
Eigen::MatrixXd transition_matrix(const std::vector<double>& q,
                                  std::size_t alpha);

/// Estimated chain bundled with its stationary solution.
struct OutageChain {
    std::vector<double> q;
    std::vector<double> q_std_err;
    std::size_t alpha = 0;
    std::vector<double> pi;
    double pi0 = 1.0;            // geometric-closure value at alpha
    double pi0_truncated = 1.0;  // plain sum over every estimated ratio
    std::uint64_t n_paths = 0;
    std::optional<std::size_t> exhausted_at;
};

/// Estimates ratios to depth alpha+1 and solves the truncated chain.
OutageChain build_outage_chain(const ProcessSpec& arrival,
                               const ProcessSpec& demand, std::size_t alpha,
                               std::uint64_t n_paths, std::uint64_t seed,
                               unsigned n_threads = 0);

}  // namespace ehlink
