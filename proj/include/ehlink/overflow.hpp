#pragma once

#include "ehlink/processes.hpp"

namespace ehlink {

/// Result of the stored-energy decay-rate balance solve.
struct DecayRateSolution {
    double mu_star = 0.0;    // positive balance root
    double residual = 0.0;   // balance function value at mu_star
    double bracket_lo = 0.0; // final bracket handed to the refiner
    double bracket_hi = 0.0;
};

/// Solves the balance  log_mgf_arrival(mu) + log_mgf_demand(-mu) = 0  for the
/// unique positive root. Requires mean(arrival) < mean(demand); throws
/// StabilityError otherwise and NoRootError when the balance stays negative
/// across the arrival MGF domain (e.g. two constants).
DecayRateSolution solve_decay_rate(const ProcessSpec& arrival,
                                   const ProcessSpec& demand);

/// Large-buffer tail approximation Pr{stored energy >= e_th} ~ exp(-mu e_th).
double overflow_prob_approx(double mu, double e_th);

/// Smallest constant demand that sustains stored-energy decay rate mu:
/// log_mgf_arrival(mu) / mu.
double min_constant_demand(const ProcessSpec& arrival, double mu);

/// Largest constant arrival rate a given demand process can absorb at decay
/// rate mu: -log_mgf_demand(-mu) / mu.
double max_constant_arrival(const ProcessSpec& demand, double mu);

}  // namespace ehlink
