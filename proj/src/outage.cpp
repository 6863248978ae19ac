#include "ehlink/outage.hpp"

#include <cmath>
#include <thread>

#include "ehlink/errors.hpp"

namespace ehlink {
namespace {

// Work is split over a fixed logical shard grid so results depend only on
// the seed, never on how many worker threads execute the shards.
constexpr unsigned kShards = 32;

unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : std::min(hw, 8u);
}

template <class ShardFn>
void run_sharded(unsigned n_threads, ShardFn&& shard_fn) {
    const unsigned workers = std::min(resolve_threads(n_threads), kShards);
    if (workers <= 1) {
        for (unsigned s = 0; s < kShards; ++s) shard_fn(s);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (unsigned s = w; s < kShards; s += workers) shard_fn(s);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

SurvivalEstimate estimate_survival(const ProcessSpec& arrival,
                                   const ProcessSpec& demand,
                                   std::size_t m_max, std::uint64_t n_paths,
                                   std::uint64_t seed, unsigned n_threads) {
    if (m_max == 0) throw ParameterError("estimate_survival needs m_max >= 1");
    if (n_paths == 0) throw ParameterError("estimate_survival needs paths");

    std::vector<std::vector<std::uint64_t>> alive(
        kShards, std::vector<std::uint64_t>(m_max + 1, 0));

    run_sharded(n_threads, [&](unsigned shard) {
        const std::uint64_t lo = n_paths * shard / kShards;
        const std::uint64_t hi = n_paths * (shard + 1) / kShards;
        SampleStream u(arrival, derive_seed(seed, 2 * shard));
        SampleStream p(demand, derive_seed(seed, 2 * shard + 1));
        auto& counts = alive[shard];
        for (std::uint64_t path = lo; path < hi; ++path) {
            double balance = 0.0;
            for (std::size_t m = 1; m <= m_max; ++m) {
                balance += u.next() - p.next();
                if (balance < 0.0) break;
                ++counts[m];
            }
        }
    });

    std::vector<std::uint64_t> total(m_max + 1, 0);
    total[0] = n_paths;
    for (unsigned s = 0; s < kShards; ++s)
        for (std::size_t m = 1; m <= m_max; ++m) total[m] += alive[s][m];

    SurvivalEstimate est;
    est.n_paths = n_paths;
    for (std::size_t m = 1; m <= m_max; ++m) {
        const std::uint64_t prev = total[m - 1];
        if (prev == 0) break;  // exhausted one level earlier
        const double qm =
            static_cast<double>(total[m]) / static_cast<double>(prev);
        est.q.push_back(qm);
        est.std_err.push_back(
            std::sqrt(qm * (1.0 - qm) / static_cast<double>(prev)));
        est.survivors.push_back(total[m]);
        if (total[m] == 0) {
            est.exhausted_at = m;
            break;
        }
    }
    return est;
}

SteadyState steady_state(const std::vector<double>& q, std::size_t alpha) {
    for (double qi : q) {
        if (!(qi >= 0.0) || !(qi <= 1.0))
            throw ParameterError("survival ratios must lie in [0, 1]");
    }
    // The closure needs q_{alpha+1}. A ratio list that ended in an exact zero
    // is exhausted: every deeper ratio is zero too, so truncating earlier is
    // exact rather than an approximation.
    std::size_t a = alpha;
    if (q.size() < alpha + 1) {
        if (!q.empty() && q.back() == 0.0) {
            a = q.size() - 1;
        } else {
            throw ParameterError(
                "steady_state needs ratios up to alpha+1 (or an exhausted list)");
        }
    }

    SteadyState st;
    st.alpha = a;
    if (a == 0) {
        st.pi = {1.0};
        st.pi0 = 1.0;
        st.pi0_truncated = 1.0;
        return st;
    }

    const double q_next = q[a];  // ratio q_{alpha+1}
    if (q_next >= 1.0)
        throw DegenerateChainError(
            "geometric tail closure undefined: q_{alpha+1} = 1");

    std::vector<double> prod(a + 1, 1.0);  // prod[m] = q_1 * ... * q_m
    for (std::size_t m = 1; m <= a; ++m) prod[m] = prod[m - 1] * q[m - 1];

    double denom = 1.0, denom_plain = 1.0;
    for (std::size_t m = 1; m < a; ++m) denom += prod[m];
    denom += prod[a] / (1.0 - q_next);
    for (std::size_t m = 1; m <= a; ++m) denom_plain += prod[m];

    st.pi0 = 1.0 / denom;
    st.pi0_truncated = 1.0 / denom_plain;
    st.pi.resize(a + 1);
    for (std::size_t m = 0; m < a; ++m) st.pi[m] = st.pi0 * prod[m];
    st.pi[a] = st.pi0 * prod[a] / (1.0 - q_next);
    return st;
}

Eigen::MatrixXd transition_matrix(const std::vector<double>& q,
                                  std::size_t alpha) {
    const auto ratio = [&](std::size_t m) -> double {  // q_{m+1}, 0-based m
        if (m < q.size()) return q[m];
        if (!q.empty() && q.back() == 0.0) return 0.0;
        throw ParameterError("transition_matrix needs ratios up to alpha+1");
    };
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(alpha + 1, alpha + 1);
    for (std::size_t m = 0; m < alpha; ++m) {
        M(0, m) = 1.0 - ratio(m);
        M(m + 1, m) = ratio(m);
    }
    M(0, alpha) = 1.0 - ratio(alpha);
    M(alpha, alpha) = ratio(alpha);
    return M;
}

OutageChain build_outage_chain(const ProcessSpec& arrival,
                               const ProcessSpec& demand, std::size_t alpha,
                               std::uint64_t n_paths, std::uint64_t seed,
                               unsigned n_threads) {
    SurvivalEstimate est =
        estimate_survival(arrival, demand, alpha + 1, n_paths, seed, n_threads);

    // Sample-granularity guard: when only a handful of paths are still alive
    // the deepest ratios can come out as exactly 1, and the geometric closure
    // needs a sub-unit continuation ratio. Back the closure point off to the
    // deepest level whose ratio is resolved below 1; if even the first level
    // never saw a shortfall the chain is degenerate.
    std::size_t a = std::min(alpha, est.q.size() - 1);
    while (a > 0 && est.q[a] >= 1.0) --a;
    if (est.q[a] >= 1.0)
        throw DegenerateChainError(
            "every sampled path survived: demand never exceeds arrivals");
    SteadyState st = steady_state(est.q, a);

    OutageChain chain;
    chain.q = std::move(est.q);
    chain.q_std_err = std::move(est.std_err);
    chain.alpha = st.alpha;
    chain.pi = std::move(st.pi);
    chain.pi0 = st.pi0;
    chain.n_paths = est.n_paths;
    chain.exhausted_at = est.exhausted_at;

    // Plain denominator sum over every estimated ratio, as the convergence
    // diagnostic against the geometric closure at alpha.
    double prod = 1.0, denom = 1.0;
    for (double qi : chain.q) {
        prod *= qi;
        denom += prod;
    }
    chain.pi0_truncated = 1.0 / denom;
    return chain;
}

}  // namespace ehlink
