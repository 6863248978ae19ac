#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ehlink/battery.hpp"
#include "ehlink/channel.hpp"
#include "ehlink/config.hpp"
#include "ehlink/csv.hpp"
#include "ehlink/effective_capacity.hpp"
#include "ehlink/errors.hpp"
#include "ehlink/harness.hpp"
#include "ehlink/outage.hpp"
#include "ehlink/overflow.hpp"
#include "ehlink/processes.hpp"
#include "ehlink/rng.hpp"

namespace {

using namespace ehlink;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitValidation = 4;

struct Common {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> alpha;
    std::optional<std::uint64_t> frames;
    bool quiet = false;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
    auto* opt = sub->add_option("--config", c.config_path,
                                "experiment config file (JSON)");
    if (config_required) opt->required();
    sub->add_option("--out", c.out_dir, "output directory for CSV files");
    sub->add_option("--seed", c.seed, "override the config seed");
    sub->add_option("--alpha", c.alpha, "override the truncation order");
    sub->add_option("--frames", c.frames, "override the Monte Carlo frames");
    sub->add_flag("--quiet", c.quiet, "suppress progress output");
}

ExperimentConfig load_config(const Common& c) {
    ExperimentConfig cfg = ExperimentConfig::load(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (c.alpha) cfg.alpha = *c.alpha;
    if (c.frames) cfg.frames = *c.frames;
    return cfg;
}

std::ofstream open_out(const Common& c, const std::string& name) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    const auto path = fs::path(c.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path.string());
    return out;
}

void note(const Common& c, const std::string& line) {
    if (!c.quiet) std::cout << line << "\n";
}

/// Decay rate implied by the config: the explicit target, or the rate
/// solved from the configured processes (NaN when neither applies).
double implied_mu(const ExperimentConfig& cfg, const ProcessSpec& demand) {
    if (cfg.mu_target) return *cfg.mu_target;
    try {
        return solve_decay_rate(cfg.arrival, demand).mu_star;
    } catch (const std::exception&) {
        return kNaN;
    }
}

/// Largest energy one frame can consume: the demand bound when finite,
/// otherwise a far quantile of whichever process is unbounded.
double policy_energy_cap(const ExperimentConfig& cfg,
                         const ProcessSpec& demand) {
    const double p_hi = demand.max_support();
    if (std::isfinite(p_hi) && p_hi > 0.0) return p_hi;
    double cap = 0.0;
    cap = std::max(cap, cfg.arrival.quantile(1.0 - 1e-6));
    if (std::isfinite(p_hi)) cap = std::max(cap, p_hi);
    if (!(cap > 0.0)) throw ConfigError("cannot bound the consumed energy");
    return cap;
}

std::string channel_name(const ChannelSpec& channel) {
    return channel.fading == ChannelSpec::Fading::Rayleigh ? "rayleigh"
                                                           : "awgn";
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void cmd_decay_rate(const Common& c) {
    const ExperimentConfig cfg = load_config(c);
    const ProcessSpec demand = cfg.resolved_demand();
    const DecayRateSolution sol = solve_decay_rate(cfg.arrival, demand);
    const double p_star = min_constant_demand(cfg.arrival, sol.mu_star);
    const double u_star = max_constant_arrival(demand, sol.mu_star);

    auto out = open_out(c, "decay_rate.csv");
    CsvWriter csv(out);
    csv.header({"mu_star", "residual", "p_star", "u_star", "mean_arrival",
                "mean_demand"});
    csv.cell(sol.mu_star)
        .cell(sol.residual)
        .cell(p_star)
        .cell(u_star)
        .cell(cfg.arrival.mean())
        .cell(demand.mean());
    csv.endrow();

    // Calibration table: demand/arrival levels across a decay-rate grid.
    auto table = open_out(c, "decay_rate_table.csv");
    CsvWriter tab(table);
    tab.header({"mu", "p_star", "u_star"});
    const double edge = cfg.arrival.mgf_domain_edge();
    for (int k = 1; k <= 24; ++k) {
        double mu = sol.mu_star * (0.125 * k);
        if (mu >= edge) break;
        tab.cell(mu)
            .cell(min_constant_demand(cfg.arrival, mu))
            .cell(max_constant_arrival(demand, mu));
        tab.endrow();
    }

    note(c, "mu_star = " + std::to_string(sol.mu_star));
    note(c, "p_star = " + std::to_string(p_star) +
                " (minimum constant demand at mu_star)");
    note(c, "u_star = " + std::to_string(u_star) +
                " (maximum constant arrival at mu_star)");
}

void cmd_outage(const Common& c) {
    const ExperimentConfig cfg = load_config(c);
    const ProcessSpec demand = cfg.resolved_demand();
    const OutageChain chain = build_outage_chain(cfg.arrival, demand,
                                                 cfg.alpha, cfg.paths,
                                                 cfg.seed);
    const double mu = implied_mu(cfg, demand);

    auto out = open_out(c, "outage.csv");
    CsvWriter csv(out);
    csv.header({"mu", "p_mean", "alpha", "pi0", "pi0_truncated", "n_paths",
                "exhausted_at"});
    csv.cell(mu)
        .cell(demand.mean())
        .cell(chain.alpha)
        .cell(chain.pi0)
        .cell(chain.pi0_truncated)
        .cell(chain.n_paths)
        .cell(chain.exhausted_at ? static_cast<double>(*chain.exhausted_at)
                                 : kNaN);
    csv.endrow();

    auto states = open_out(c, "outage_states.csv");
    CsvWriter st(states);
    st.header({"m", "q", "q_std_err", "pi"});
    for (std::size_t m = 0; m <= chain.alpha; ++m) {
        st.cell(m)
            .cell(m < chain.q.size() ? chain.q[m] : 0.0)
            .cell(m < chain.q_std_err.size() ? chain.q_std_err[m] : 0.0)
            .cell(chain.pi[m]);
        st.endrow();
    }
    note(c, "pi0 = " + std::to_string(chain.pi0) +
                " (tail-closed), plain truncated sum = " +
                std::to_string(chain.pi0_truncated));
}

void cmd_service_rate(const Common& c) {
    const ExperimentConfig cfg = load_config(c);
    const ProcessSpec demand = cfg.resolved_demand();
    const RatePolicy policy =
        cfg.policy.build(cfg.channel, policy_energy_cap(cfg, demand));

    const OutageChain chain = build_outage_chain(cfg.arrival, demand,
                                                 cfg.alpha, cfg.paths,
                                                 cfg.seed);
    const auto density = estimate_conditional_densities(
        cfg.arrival, demand, cfg.alpha, cfg.frames, cfg.burn_in,
        derive_seed(cfg.seed, 0xD));
    const ServiceRateResult analytic = avg_service_rate(
        chain, density, cfg.channel, policy, demand);
    const ServiceRateEstimate sim = mc_service_rate(
        cfg.arrival, demand, cfg.channel, policy, cfg.frames, cfg.burn_in,
        derive_seed(cfg.seed, 0x5));

    const std::vector<std::size_t> limits = {5, 10, 25, 50, 100, cfg.alpha};
    auto out = open_out(c, "service_rate.csv");
    CsvWriter csv(out);
    std::vector<std::string> head = {"mu", "channel", "s_avg_analytic",
                                     "s_avg_simulated", "sim_std_err"};
    for (std::size_t lim : limits)
        head.push_back("lower_bound_alpha_" + std::to_string(lim));
    csv.header(head);
    csv.cell(implied_mu(cfg, demand))
        .cell(channel_name(cfg.channel))
        .cell(analytic.s_avg)
        .cell(sim.s_avg)
        .cell(sim.std_err);
    for (std::size_t lim : limits)
        csv.cell(
            avg_service_rate(chain, density, cfg.channel, policy, demand, lim)
                .s_avg);
    csv.endrow();

    note(c, "s_avg analytic = " + std::to_string(analytic.s_avg) +
                ", simulated = " + std::to_string(sim.s_avg));
}

void cmd_effective_capacity(const Common& c) {
    const ExperimentConfig cfg = load_config(c);
    const ProcessSpec demand = cfg.resolved_demand();
    const RatePolicy policy =
        cfg.policy.build(cfg.channel, policy_energy_cap(cfg, demand));
    const OutageChain chain = build_outage_chain(cfg.arrival, demand,
                                                 cfg.alpha, cfg.paths,
                                                 cfg.seed);
    const auto density = estimate_conditional_densities(
        cfg.arrival, demand, cfg.alpha, cfg.frames, cfg.burn_in,
        derive_seed(cfg.seed, 0xD));
    const double mu = implied_mu(cfg, demand);

    auto out = open_out(c, "effective_capacity.csv");
    CsvWriter csv(out);
    csv.header({"theta", "mu", "alpha", "chi_star", "c_e"});
    auto trace_out = open_out(c, "effective_capacity_trace.csv");
    CsvWriter trace(trace_out);
    trace.header({"theta", "alpha", "c_e"});

    for (double theta : cfg.theta) {
        const EffCapSolution sol =
            effective_capacity(theta, cfg.alpha, chain, density, cfg.channel,
                               policy, demand);
        csv.cell(theta)
            .cell(mu)
            .cell(sol.alpha)
            .cell(sol.chi_star)
            .cell(sol.effective_capacity);
        csv.endrow();
        for (const auto& [a, ce] : sol.trace) {
            trace.cell(theta).cell(a).cell(ce);
            trace.endrow();
        }
        note(c, "theta = " + std::to_string(theta) +
                    ": C_E = " + std::to_string(sol.effective_capacity) +
                    " bits/use");
    }
}

void cmd_simulate(const Common& c) {
    const ExperimentConfig cfg = load_config(c);
    const ProcessSpec demand = cfg.resolved_demand();
    // A trace dump is meant for eyeballing; cap the default row count.
    const std::uint64_t frames =
        c.frames ? *c.frames : std::min<std::uint64_t>(cfg.frames, 10000);
    const auto path = simulate_path(cfg.arrival, demand, 0.0, kInf, frames,
                                    cfg.seed);

    auto out = open_out(c, "simulate.csv");
    CsvWriter csv(out);
    csv.header({"i", "u", "p", "p_c", "e", "w", "outage", "overflow"});
    for (std::size_t i = 0; i < path.size(); ++i) {
        const FrameOutcome& f = path[i];
        csv.cell(i)
            .cell(f.harvested)
            .cell(f.demanded)
            .cell(f.consumed)
            .cell(f.state.energy)
            .cell(f.state.streak)
            .cell(f.shortfall)
            .cell(f.overflow);
        csv.endrow();
    }
    note(c, "wrote " + std::to_string(path.size()) + " frames");
}

struct CheckRow {
    std::string name;
    std::string kind;  // "rel" or "ratio"
    double analytic = kNaN;
    double empirical = kNaN;
    double std_err = kNaN;
    double tolerance = kNaN;
    bool pass = false;
};

void cmd_validate(const Common& c) {
    const ExperimentConfig cfg = load_config(c);
    const ProcessSpec demand = cfg.resolved_demand();
    const RatePolicy policy =
        cfg.policy.build(cfg.channel, policy_energy_cap(cfg, demand));
    std::vector<CheckRow> rows;

    auto rel_check = [&](const std::string& name, double analytic,
                         double empirical, double std_err, double tol) {
        CheckRow r{name, "rel", analytic, empirical, std_err, tol, false};
        r.pass = std::abs(empirical - analytic) <=
                 tol * std::max(std::abs(analytic), 1e-300);
        rows.push_back(r);
    };

    // Decay-rate inversion against an explicit target.
    if (cfg.mu_target && std::isfinite(demand.mean())) {
        const DecayRateSolution sol = solve_decay_rate(cfg.arrival, demand);
        rel_check("decay_rate_inversion", *cfg.mu_target, sol.mu_star, 0.0,
                  1e-6);
    }

    const double mu = implied_mu(cfg, demand);

    // Stored-energy tail against its exponential approximation.
    if (std::isfinite(mu) && mu > 0.0) {
        const std::vector<double> ths = {3.0 / mu, 6.0 / mu};
        const std::uint64_t burn =
            std::max<std::uint64_t>(cfg.burn_in,
                                    static_cast<std::uint64_t>(50.0 / mu));
        const TailCurve tail =
            mc_overflow_tail(cfg.arrival, demand, kInf, ths, cfg.frames, burn,
                             derive_seed(cfg.seed, 0x7));
        // The tail is prefactor * exp(-mu * x); comparing log-tail slopes
        // between the two thresholds cancels the prefactor.
        if (tail.reliable[0] && tail.reliable[1] && tail.prob[1] > 0.0) {
            const double slope = std::log(tail.prob[0] / tail.prob[1]) /
                                 (ths[1] - ths[0]);
            rel_check("overflow_decay_rate", mu, slope, kNaN, 0.15);
        }
    }

    // Shortfall probability: chain steady state against frame counting.
    const OutageChain chain = build_outage_chain(cfg.arrival, demand,
                                                 cfg.alpha, cfg.paths,
                                                 cfg.seed);
    const OutageRateEstimate freq =
        mc_outage_rate(cfg.arrival, demand, cfg.frames, cfg.burn_in,
                       derive_seed(cfg.seed, 0x5));
    rel_check("pi0", chain.pi0, freq.frequency, freq.std_err, 0.05);

    // Mean served bits per frame.
    const auto density = estimate_conditional_densities(
        cfg.arrival, demand, cfg.alpha, cfg.frames, cfg.burn_in,
        derive_seed(cfg.seed, 0xD));
    const ServiceRateResult s_analytic =
        avg_service_rate(chain, density, cfg.channel, policy, demand);
    const ServiceRateEstimate s_sim = mc_service_rate(
        cfg.arrival, demand, cfg.channel, policy, cfg.frames, cfg.burn_in,
        derive_seed(cfg.seed, 0x51));
    rel_check("s_avg", s_analytic.s_avg, s_sim.s_avg, s_sim.std_err, 0.02);

    // Effective capacity against the block moment estimate, when the
    // per-path weight spread is narrow enough for a plain mean to resolve.
    const double theta = cfg.theta.front();
    const double var_s =
        std::max(0.0, s_sim.std_err * s_sim.std_err *
                          static_cast<double>(s_sim.frames));
    const std::uint64_t t_block = 10000;
    const std::uint64_t n_block = std::min<std::uint64_t>(cfg.paths, 10000);
    const double log_spread =
        theta * std::sqrt(var_s * static_cast<double>(t_block));
    if (log_spread <= std::log(static_cast<double>(n_block))) {
        const EffCapSolution sol = effective_capacity(
            theta, cfg.alpha, chain, density, cfg.channel, policy, demand);
        const BlockCapacityEstimate block = mc_effective_capacity_block(
            cfg.arrival, demand, cfg.channel, policy, theta, t_block, n_block,
            cfg.burn_in, derive_seed(cfg.seed, 0xB));
        rel_check("effective_capacity", sol.effective_capacity,
                  block.effective_capacity, kNaN, 0.05);
    } else {
        note(c, "effective-capacity block check skipped: per-path weights "
                "span too many orders of magnitude for " +
                    std::to_string(n_block) + " paths");
    }

    auto out = open_out(c, "validate.csv");
    CsvWriter csv(out);
    csv.header({"check", "kind", "analytic", "empirical", "std_err",
                "tolerance", "pass"});
    std::size_t passed = 0;
    for (const CheckRow& r : rows) {
        csv.cell(r.name)
            .cell(r.kind)
            .cell(r.analytic)
            .cell(r.empirical)
            .cell(r.std_err)
            .cell(r.tolerance)
            .cell(r.pass);
        csv.endrow();
        passed += r.pass ? 1 : 0;
        note(c, (r.pass ? "pass  " : "FAIL  ") + r.name + ": analytic " +
                    std::to_string(r.analytic) + " vs empirical " +
                    std::to_string(r.empirical));
    }
    auto summary = open_out(c, "validate_summary.csv");
    CsvWriter sum(summary);
    sum.header({"checks", "passed", "failed"});
    sum.cell(rows.size()).cell(passed).cell(rows.size() - passed);
    sum.endrow();

    if (passed != rows.size())
        throw ValidationFailure(std::to_string(rows.size() - passed) +
                                " validation check(s) failed");
}

// ---------------------------------------------------------------------------
// Canonical dataset recipes: each bakes in one named parameter combination
// (arrival scale, channel, schedule, QoS grid) so the same CSV can be
// regenerated bit-for-bit from just a name and a seed.
// ---------------------------------------------------------------------------

struct RecipeScale {
    std::uint64_t frames;
    std::uint64_t paths;
    std::uint64_t burn_in;
    std::uint64_t seed;
};

RecipeScale recipe_scale(const Common& c) {
    RecipeScale s;
    s.frames = c.frames ? *c.frames : 10'000'000;
    s.paths = std::min<std::uint64_t>(
        1'000'000, std::max<std::uint64_t>(10'000, s.frames / 10));
    s.burn_in = std::min<std::uint64_t>(100'000, s.frames / 10 + 1);
    s.seed = c.seed ? *c.seed : 1;
    return s;
}

double lambda_from_db(double db) { return 100.0 * std::pow(10.0, db / 10.0); }

/// Constant demand that realizes decay rate mu for Exponential(lambda)
/// arrivals; unbounded at or past the divergence edge.
ProcessSpec demand_for_mu(double lambda, double mu) {
    if (mu >= 1.0 / lambda) return ProcessSpec::constant(kInf);
    return ProcessSpec::constant(min_constant_demand(
        ProcessSpec::exponential(lambda), mu));
}

const std::vector<double>& sweep_fractions() {
    static const std::vector<double> f = {0.1,  0.2,  0.3,  0.4,  0.5,
                                          0.6,  0.7,  0.8,  0.9,  0.95,
                                          0.99, 1.05, 1.2};
    return f;
}

std::size_t chain_alpha_for(double frac, const Common& c) {
    if (c.alpha) return *c.alpha;
    // Near criticality the streak chain mixes slowly; close the tail only
    // where the survival ratios have settled.
    return frac < 0.5 ? 1000 : 200;
}

void recipe_fig3a(const Common& c) {
    const RecipeScale s = recipe_scale(c);
    const ProcessSpec arrival = ProcessSpec::weibull(5.0, 2.0);
    const double mu = 0.0184;
    const ProcessSpec demand =
        ProcessSpec::constant(min_constant_demand(arrival, mu));
    std::vector<double> ths;
    for (int k = 1; k <= 10; ++k) ths.push_back(50.0 * k);
    const std::uint64_t frames = c.frames ? *c.frames : 100'000'000;
    const std::uint64_t burn =
        std::max<std::uint64_t>(100'000,
                                static_cast<std::uint64_t>(50.0 / mu));

    const TailCurve inf_tail = mc_overflow_tail(arrival, demand, kInf, ths,
                                                frames, burn, s.seed);
    const TailCurve fin_tail = mc_overflow_tail(arrival, demand, 500.0, ths,
                                                frames, burn, s.seed);

    auto out = open_out(c, "fig3a.csv");
    CsvWriter csv(out);
    csv.header({"e_th", "analytic", "empirical_infinite", "empirical_finite",
                "reliable_infinite", "reliable_finite"});
    for (std::size_t k = 0; k < ths.size(); ++k) {
        csv.cell(ths[k])
            .cell(overflow_prob_approx(mu, ths[k]))
            .cell(inf_tail.prob[k])
            .cell(fin_tail.prob[k])
            .cell(inf_tail.reliable[k])
            .cell(fin_tail.reliable[k]);
        csv.endrow();
    }
    note(c, "wrote fig3a.csv (" + std::to_string(frames) +
                " frames per battery)");
}

void recipe_fig3b(const Common& c) {
    const RecipeScale s = recipe_scale(c);
    auto out = open_out(c, "fig3b.csv");
    CsvWriter csv(out);
    csv.header({"lambda_db", "mu", "p", "pi0_analytic", "pi0_truncated",
                "pi0_simulated", "sim_std_err"});
    for (double db : {5.0, 4.0, 3.0}) {
        const double lambda = lambda_from_db(db);
        const ProcessSpec arrival = ProcessSpec::exponential(lambda);
        for (double frac : sweep_fractions()) {
            const double mu = frac / lambda;
            const ProcessSpec demand = demand_for_mu(lambda, mu);
            const OutageChain chain = build_outage_chain(
                arrival, demand, chain_alpha_for(frac, c), s.paths, s.seed);
            const OutageRateEstimate sim =
                mc_outage_rate(arrival, demand, s.frames, s.burn_in,
                               derive_seed(s.seed, 0x5));
            csv.cell(db)
                .cell(mu)
                .cell(demand.mean())
                .cell(chain.pi0)
                .cell(chain.pi0_truncated)
                .cell(sim.frequency)
                .cell(sim.std_err);
            csv.endrow();
        }
        note(c, "fig3b: finished " + std::to_string(db) + " dB");
    }
}

void recipe_service_sweep(const Common& c, const std::string& file,
                          ChannelSpec::Fading fading) {
    const RecipeScale s = recipe_scale(c);
    ChannelSpec channel;
    channel.fading = fading;
    auto out = open_out(c, file);
    CsvWriter csv(out);
    csv.header({"lambda_db", "mu", "p", "s_avg_analytic", "s_avg_simulated",
                "sim_std_err"});
    for (double db : {5.0, 4.0, 3.0}) {
        const double lambda = lambda_from_db(db);
        const ProcessSpec arrival = ProcessSpec::exponential(lambda);
        for (double frac : sweep_fractions()) {
            const double mu = frac / lambda;
            const ProcessSpec demand = demand_for_mu(lambda, mu);
            const RatePolicy policy =
                fading == ChannelSpec::Fading::Awgn
                    ? RatePolicy::shannon(channel)
                    : RatePolicy::optimized_for(
                          channel,
                          std::isfinite(demand.mean())
                              ? demand.mean()
                              : arrival.quantile(1.0 - 1e-6));
            const std::size_t alpha = c.alpha ? *c.alpha : 100;
            const OutageChain chain = build_outage_chain(arrival, demand,
                                                         alpha, s.paths,
                                                         s.seed);
            const auto density = estimate_conditional_densities(
                arrival, demand, alpha, s.frames, s.burn_in,
                derive_seed(s.seed, 0xD));
            const ServiceRateResult analytic = avg_service_rate(
                chain, density, channel, policy, demand);
            const ServiceRateEstimate sim = mc_service_rate(
                arrival, demand, channel, policy, s.frames, s.burn_in,
                derive_seed(s.seed, 0x51));
            csv.cell(db)
                .cell(mu)
                .cell(demand.mean())
                .cell(analytic.s_avg)
                .cell(sim.s_avg)
                .cell(sim.std_err);
            csv.endrow();
        }
        note(c, file + ": finished " + std::to_string(db) + " dB");
    }
}

void recipe_capacity_sweep(const Common& c, const std::string& file,
                           ChannelSpec::Fading fading,
                           const std::vector<double>& thetas,
                           const std::vector<double>& dbs) {
    const RecipeScale s = recipe_scale(c);
    ChannelSpec channel;
    channel.fading = fading;
    auto out = open_out(c, file);
    CsvWriter csv(out);
    csv.header({"lambda_db", "theta", "mu", "alpha", "chi_star", "c_e"});
    for (double db : dbs) {
        const double lambda = lambda_from_db(db);
        const ProcessSpec arrival = ProcessSpec::exponential(lambda);
        for (double frac : sweep_fractions()) {
            const double mu = frac / lambda;
            const ProcessSpec demand = demand_for_mu(lambda, mu);
            const RatePolicy policy =
                fading == ChannelSpec::Fading::Awgn
                    ? RatePolicy::shannon(channel)
                    : RatePolicy::optimized_for(
                          channel,
                          std::isfinite(demand.mean())
                              ? demand.mean()
                              : arrival.quantile(1.0 - 1e-6));
            const std::size_t alpha = c.alpha ? *c.alpha : 200;
            const OutageChain chain = build_outage_chain(arrival, demand,
                                                         alpha, s.paths,
                                                         s.seed);
            const auto density = estimate_conditional_densities(
                arrival, demand, alpha, s.frames, s.burn_in,
                derive_seed(s.seed, 0xD));
            for (double theta : thetas) {
                const EffCapSolution sol =
                    effective_capacity(theta, alpha, chain, density, channel,
                                       policy, demand);
                csv.cell(db)
                    .cell(theta)
                    .cell(mu)
                    .cell(sol.alpha)
                    .cell(sol.chi_star)
                    .cell(sol.effective_capacity);
                csv.endrow();
            }
        }
        note(c, file + ": finished " + std::to_string(db) + " dB");
    }
}

void cmd_reproduce(const Common& c, const std::string& recipe) {
    if (recipe == "fig3a") return recipe_fig3a(c);
    if (recipe == "fig3b") return recipe_fig3b(c);
    if (recipe == "fig4a")
        return recipe_service_sweep(c, "fig4a.csv", ChannelSpec::Fading::Awgn);
    if (recipe == "fig4b")
        return recipe_service_sweep(c, "fig4b.csv",
                                    ChannelSpec::Fading::Rayleigh);
    if (recipe == "fig5a")
        return recipe_capacity_sweep(c, "fig5a.csv", ChannelSpec::Fading::Awgn,
                                     {0.1}, {5.0, 4.0, 3.0});
    if (recipe == "fig5b")
        return recipe_capacity_sweep(c, "fig5b.csv",
                                     ChannelSpec::Fading::Rayleigh, {0.1},
                                     {5.0, 4.0, 3.0});
    if (recipe == "fig6a")
        return recipe_capacity_sweep(c, "fig6a.csv", ChannelSpec::Fading::Awgn,
                                     {0.09, 0.10, 0.11}, {5.0});
    if (recipe == "fig6b")
        return recipe_capacity_sweep(c, "fig6b.csv",
                                     ChannelSpec::Fading::Rayleigh,
                                     {0.09, 0.10, 0.11}, {5.0});
    throw ConfigError("unknown reproduce recipe: " + recipe);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-harvesting link analysis toolkit"};
    app.require_subcommand(1);

    Common c_decay, c_outage, c_service, c_capacity, c_simulate, c_validate,
        c_reproduce;
    std::string recipe;

    add_common(app.add_subcommand("decay-rate",
                                  "solve the stored-energy tail decay rate"),
               c_decay, true);
    add_common(app.add_subcommand("outage",
                                  "steady state of the demand-met streak chain"),
               c_outage, true);
    add_common(app.add_subcommand("service-rate",
                                  "mean served bits per frame"),
               c_service, true);
    add_common(app.add_subcommand("effective-capacity",
                                  "QoS-constrained throughput"),
               c_capacity, true);
    add_common(app.add_subcommand("simulate", "dump a battery frame trace"),
               c_simulate, true);
    add_common(app.add_subcommand("validate",
                                  "cross-check analytics against simulation"),
               c_validate, true);
    auto* rep = app.add_subcommand("reproduce",
                                   "rebuild a named canonical dataset");
    rep->add_option("recipe", recipe, "one of fig3a fig3b fig4a fig4b fig5a fig5b fig6a fig6b")
        ->required();
    add_common(rep, c_reproduce, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand("decay-rate")) cmd_decay_rate(c_decay);
        if (app.got_subcommand("outage")) cmd_outage(c_outage);
        if (app.got_subcommand("service-rate")) cmd_service_rate(c_service);
        if (app.got_subcommand("effective-capacity"))
            cmd_effective_capacity(c_capacity);
        if (app.got_subcommand("simulate")) cmd_simulate(c_simulate);
        if (app.got_subcommand("validate")) cmd_validate(c_validate);
        if (app.got_subcommand("reproduce")) cmd_reproduce(c_reproduce, recipe);
    } catch (const ValidationFailure& e) {
        std::cerr << "validation failed: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
