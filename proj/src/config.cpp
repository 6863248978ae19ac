#include "ehlink/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "ehlink/errors.hpp"
#include "ehlink/overflow.hpp"

namespace ehlink {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

double require_number(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_number())
        throw ConfigError("field '" + field + "' must be a number");
    return j[field].get<double>();
}

/// Finite numbers serialize as numbers; an unbounded constant as "inf".
json encode_maybe_inf(double v) {
    if (std::isfinite(v)) return v;
    return "inf";
}

double decode_maybe_inf(const json& j, const std::string& field) {
    if (!j.contains(field))
        throw ConfigError("field '" + field + "' is missing");
    if (j[field].is_number()) return j[field].get<double>();
    if (j[field].is_string() && j[field].get<std::string>() == "inf")
        return kInf;
    throw ConfigError("field '" + field + "' must be a number or \"inf\"");
}

json process_to_json(const ProcessSpec& p) {
    json j;
    switch (p.kind()) {
        case ProcessSpec::Kind::Constant:
            j["type"] = "constant";
            j["value"] = encode_maybe_inf(p.param_a());
            break;
        case ProcessSpec::Kind::Exponential:
            j["type"] = "exponential";
            j["mean"] = p.param_a();
            break;
        case ProcessSpec::Kind::Weibull:
            j["type"] = "weibull";
            j["shape"] = p.param_a();
            j["scale"] = p.param_b();
            break;
        case ProcessSpec::Kind::Empirical:
            j["type"] = "empirical";
            j["samples"] = p.samples();
            break;
    }
    return j;
}

ProcessSpec process_from_json(const json& j, const std::string& who) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw ConfigError("field '" + who + ".type' must name a process");
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "constant")
            return ProcessSpec::constant(decode_maybe_inf(j, "value"));
        if (type == "exponential")
            return ProcessSpec::exponential(require_number(j, "mean"));
        if (type == "weibull")
            return ProcessSpec::weibull(require_number(j, "shape"),
                                        require_number(j, "scale"));
        if (type == "empirical") {
            if (!j.contains("samples") || !j["samples"].is_array())
                throw ConfigError("field '" + who +
                                  ".samples' must be an array");
            return ProcessSpec::empirical(
                j["samples"].get<std::vector<double>>());
        }
    } catch (const ParameterError& e) {
        throw ConfigError("field '" + who + "': " + e.what());
    }
    throw ConfigError("field '" + who + ".type' unknown: " + type);
}

json channel_to_json(const ChannelSpec& c) {
    json j;
    j["fading"] =
        c.fading == ChannelSpec::Fading::Rayleigh ? "rayleigh" : "awgn";
    j["fading_variance"] = c.fading_variance;
    j["noise_variance"] = c.noise_variance;
    j["symbols_per_frame"] = c.symbols_per_frame;
    return j;
}

ChannelSpec channel_from_json(const json& j) {
    ChannelSpec c;
    if (j.contains("fading")) {
        const std::string f = j["fading"].get<std::string>();
        if (f == "awgn")
            c.fading = ChannelSpec::Fading::Awgn;
        else if (f == "rayleigh")
            c.fading = ChannelSpec::Fading::Rayleigh;
        else
            throw ConfigError("field 'channel.fading' unknown: " + f);
    }
    if (j.contains("fading_variance"))
        c.fading_variance = require_number(j, "fading_variance");
    if (j.contains("noise_variance"))
        c.noise_variance = require_number(j, "noise_variance");
    if (j.contains("symbols_per_frame")) {
        if (!j["symbols_per_frame"].is_number_integer())
            throw ConfigError("field 'channel.symbols_per_frame' must be an integer");
        c.symbols_per_frame = j["symbols_per_frame"].get<int>();
    }
    if (c.symbols_per_frame <= 0)
        throw ConfigError("field 'channel.symbols_per_frame' must be positive");
    if (!(c.noise_variance > 0.0))
        throw ConfigError("field 'channel.noise_variance' must be positive");
    if (!(c.fading_variance > 0.0))
        throw ConfigError("field 'channel.fading_variance' must be positive");
    return c;
}

json policy_to_json(const PolicyConfig& p) {
    json j;
    switch (p.kind) {
        case PolicyConfig::Kind::Shannon:
            j["kind"] = "shannon";
            break;
        case PolicyConfig::Kind::FixedRate:
            j["kind"] = "fixed";
            j["rate"] = p.rate;
            break;
        case PolicyConfig::Kind::Optimized:
            j["kind"] = "optimized";
            j["knots"] = p.knots;
            break;
    }
    return j;
}

PolicyConfig policy_from_json(const json& j) {
    PolicyConfig p;
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ConfigError("field 'policy.kind' must name a schedule");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "shannon") {
        p.kind = PolicyConfig::Kind::Shannon;
    } else if (kind == "fixed") {
        p.kind = PolicyConfig::Kind::FixedRate;
        p.rate = require_number(j, "rate");
        if (!(p.rate > 0.0))
            throw ConfigError("field 'policy.rate' must be positive");
    } else if (kind == "optimized") {
        p.kind = PolicyConfig::Kind::Optimized;
        if (j.contains("knots")) {
            if (!j["knots"].is_number_integer())
                throw ConfigError("field 'policy.knots' must be an integer");
            p.knots = j["knots"].get<int>();
            if (p.knots < 2)
                throw ConfigError("field 'policy.knots' must be >= 2");
        }
    } else {
        throw ConfigError("field 'policy.kind' unknown: " + kind);
    }
    return p;
}

}  // namespace

RatePolicy PolicyConfig::build(const ChannelSpec& channel,
                               double energy_cap) const {
    switch (kind) {
        case Kind::Shannon:
            return RatePolicy::shannon(channel);
        case Kind::FixedRate:
            return RatePolicy::fixed_rate(rate);
        case Kind::Optimized:
            return RatePolicy::optimized_for(channel, energy_cap, knots);
    }
    throw ConfigError("unknown policy kind");
}

ProcessSpec ExperimentConfig::resolved_demand() const {
    if (demand.has_value()) return *demand;
    if (!mu_target.has_value())
        throw ConfigError("one of 'demand' or 'mu_target' is required");
    // At or past the arrival's moment-divergence edge the calibrated
    // constant demand is unbounded: energy is consumed as it arrives.
    if (*mu_target >= arrival.mgf_domain_edge())
        return ProcessSpec::constant(kInf);
    return ProcessSpec::constant(min_constant_demand(arrival, *mu_target));
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["arrival"] = process_to_json(arrival);
    if (demand.has_value()) j["demand"] = process_to_json(*demand);
    if (mu_target.has_value()) j["mu_target"] = *mu_target;
    j["channel"] = channel_to_json(channel);
    j["policy"] = policy_to_json(policy);
    j["theta"] = theta;
    j["alpha"] = alpha;
    j["frames"] = frames;
    j["paths"] = paths;
    j["burn_in"] = burn_in;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");

    ExperimentConfig cfg;
    if (!j.contains("arrival"))
        throw ConfigError("field 'arrival' is required");
    cfg.arrival = process_from_json(j["arrival"], "arrival");

    const bool has_demand = j.contains("demand");
    const bool has_mu = j.contains("mu_target");
    if (has_demand == has_mu)
        throw ConfigError(
            "exactly one of 'demand' and 'mu_target' must be present");
    if (has_demand) cfg.demand = process_from_json(j["demand"], "demand");
    if (has_mu) {
        cfg.mu_target = require_number(j, "mu_target");
        if (!(*cfg.mu_target > 0.0))
            throw ConfigError("field 'mu_target' must be positive");
    }

    if (j.contains("channel")) cfg.channel = channel_from_json(j["channel"]);
    if (j.contains("policy")) cfg.policy = policy_from_json(j["policy"]);
    if (j.contains("theta")) {
        if (!j["theta"].is_array() || j["theta"].empty())
            throw ConfigError("field 'theta' must be a non-empty array");
        cfg.theta = j["theta"].get<std::vector<double>>();
        for (double t : cfg.theta)
            if (!(t > 0.0) || !std::isfinite(t))
                throw ConfigError("field 'theta' entries must be positive");
    }
    if (j.contains("alpha")) {
        cfg.alpha = j["alpha"].get<std::size_t>();
        if (cfg.alpha == 0) throw ConfigError("field 'alpha' must be >= 1");
    }
    if (j.contains("frames")) cfg.frames = j["frames"].get<std::uint64_t>();
    if (j.contains("paths")) cfg.paths = j["paths"].get<std::uint64_t>();
    if (j.contains("burn_in")) cfg.burn_in = j["burn_in"].get<std::uint64_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (cfg.frames == 0) throw ConfigError("field 'frames' must be >= 1");
    if (cfg.paths == 0) throw ConfigError("field 'paths' must be >= 1");
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

void ExperimentConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << to_json_text();
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
    return arrival == other.arrival && demand == other.demand &&
           mu_target == other.mu_target && channel == other.channel &&
           policy == other.policy && theta == other.theta &&
           alpha == other.alpha && frames == other.frames &&
           paths == other.paths && burn_in == other.burn_in &&
           seed == other.seed;
}

}  // namespace ehlink
