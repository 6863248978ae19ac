#include "ehlink/overflow.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ehlink/errors.hpp"

namespace ehlink {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bisection with a secant polish on a bracketed sign change. f(lo) < 0 and
// f(hi) > 0 on entry. Converges the bracket to machine width, then takes the
// secant point inside the final bracket for the return value.
template <class F>
double refine_root(const F& f, double lo, double hi, double flo, double fhi) {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    const double denom = fhi - flo;
    if (denom > 0.0) {
        const double sec = lo - flo * (hi - lo) / denom;
        if (sec > lo && sec < hi) return sec;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

DecayRateSolution solve_decay_rate(const ProcessSpec& arrival,
                                   const ProcessSpec& demand) {
    if (!(arrival.mean() < demand.mean())) {
        throw StabilityError(
            "decay-rate balance needs mean(arrival) < mean(demand); got " +
            std::to_string(arrival.mean()) + " vs " +
            std::to_string(demand.mean()));
    }

    const auto balance = [&](double mu) {
        return arrival.log_mgf(mu) + demand.log_mgf(-mu);
    };

    const double edge = arrival.mgf_domain_edge();
    if (!(edge > 0.0))
        throw DivergenceError("arrival log_mgf has no positive domain", edge);

    // Walk the bracket outward until the balance turns positive. With a
    // finite MGF domain the arrival side blows up at the edge, so probing
    // geometrically close to it always finds the sign change when one exists.
    double lo = 1e-8;
    double flo = balance(lo);
    if (flo >= 0.0) {
        // Exotic but possible with a tiny mean gap: shrink until negative.
        while (flo >= 0.0 && lo > 1e-300) {
            lo *= 1e-2;
            flo = balance(lo);
        }
        if (flo >= 0.0)
            throw BracketError("balance not negative near zero; degenerate gap");
    }

    double hi = lo, fhi = 0.0;
    bool bracketed = false;
    if (std::isfinite(edge)) {
        for (double frac = 0.5; frac > 1e-13; frac *= 0.5) {
            const double cand = edge * (1.0 - frac);
            if (cand <= lo) continue;
            const double fc = balance(cand);
            if (fc > 0.0) {
                hi = cand;
                fhi = fc;
                bracketed = true;
                break;
            }
            lo = cand;
            flo = fc;
        }
        if (!bracketed)
            throw NoRootError("balance stays negative up to the MGF edge", flo);
    } else {
        hi = std::max(2.0 * lo, 1e-4);
        fhi = balance(hi);
        int doublings = 0;
        while (fhi <= 0.0 && doublings < 80) {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = balance(hi);
            ++doublings;
        }
        if (fhi <= 0.0)
            throw NoRootError("balance stays negative over the probed range",
                              fhi);
        bracketed = true;
    }

    DecayRateSolution sol;
    sol.bracket_lo = lo;
    sol.bracket_hi = hi;
    sol.mu_star = refine_root(balance, lo, hi, flo, fhi);
    sol.residual = balance(sol.mu_star);
    return sol;
}

double overflow_prob_approx(double mu, double e_th) {
    if (!(mu > 0.0) || e_th < 0.0)
        throw ParameterError("overflow approximation needs mu > 0, e_th >= 0");
    return std::exp(-mu * e_th);
}

double min_constant_demand(const ProcessSpec& arrival, double mu) {
    if (!(mu > 0.0)) throw ParameterError("min_constant_demand needs mu > 0");
    return arrival.log_mgf(mu) / mu;
}

double max_constant_arrival(const ProcessSpec& demand, double mu) {
    if (!(mu > 0.0)) throw ParameterError("max_constant_arrival needs mu > 0");
    return -demand.log_mgf(-mu) / mu;
}

}  // namespace ehlink
