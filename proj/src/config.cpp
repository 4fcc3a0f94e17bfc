#include "causalmatch/config.hpp"

#include "causalmatch/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace causalmatch {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) parts.push_back(trim(part));
    return parts;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigInvalid(key + " must be a boolean, found '" + value + "'");
}

Vector parse_vector(const std::string& value) {
    if (trim(value).empty()) return Vector{};
    const auto parts = split(value, ',');
    Vector v(static_cast<Eigen::Index>(parts.size()));
    for (size_t i = 0; i < parts.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = parse_double(parts[i]);
    }
    return v;
}

std::string vector_text(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace

DesignSpec parse_design(const std::string& token) {
    DesignSpec spec;
    spec.name = token;

    if (token == "unmatched") {
        spec.kind = DesignSpec::Kind::kUnmatched;
        return spec;
    }
    if (token == "psm") {
        spec.kind = DesignSpec::Kind::kPsm;
        return spec;
    }

    std::string rest = token;
    if (rest.rfind("cem-", 0) != 0) {
        throw ConfigInvalid("unknown design '" + token + "'");
    }
    rest = rest.substr(4);
    spec.kind = DesignSpec::Kind::kCem;
    if (rest.size() >= 5 && rest.substr(rest.size() - 5) == "-1to1") {
        spec.mode = CemMode::kOneToOne;
        rest = rest.substr(0, rest.size() - 5);
    }
    if (rest == "auto") {
        spec.coarsening = CoarseningSpec::auto_sturges();
    } else if (rest == "g3") {
        spec.coarsening = CoarseningSpec::fixed_k(3);
    } else if (rest.size() > 1 && rest[0] == 'k') {
        spec.coarsening = CoarseningSpec::fixed_k(static_cast<int>(parse_long(rest.substr(1))));
    } else {
        throw ConfigInvalid("unknown design '" + token + "'");
    }
    return spec;
}

SimulationConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigInvalid("line " + std::to_string(line_number) + " is not key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigInvalid("empty key on line " + std::to_string(line_number));
        }
        if (!entries.emplace(key, value).second) {
            throw ConfigInvalid("duplicate key '" + key + "'");
        }
    }

    SimulationConfig config;
    ScenarioConfig& sc = config.scenario;
    RunSettings& run = config.run;

    const std::set<std::string> known{
        "scenario_id",       "p",
        "n",                 "alpha0",
        "alpha1",            "beta0",
        "beta1",             "beta2",
        "theta",             "interaction_subset",
        "covariate_scale",   "nonlinear_treatment",
        "nonlinear_outcome", "error_sd",
        "replications",      "seed",
        "designs",           "models",
        "caliper_multiplier", "coefficient_pairs",
        "pair_k",            "oracle_draws",
        "oracle_draws_full", "replications_full"};
    for (const auto& [key, value] : entries) {
        if (!known.count(key)) throw ConfigInvalid("unknown key '" + key + "'");
    }

    const auto get = [&](const char* key) -> const std::string* {
        const auto pos = entries.find(key);
        return pos == entries.end() ? nullptr : &pos->second;
    };

    try {
        if (const auto* v = get("scenario_id")) sc.scenario_id = *v;
        if (const auto* v = get("p")) sc.p = static_cast<int>(parse_long(*v));
        if (const auto* v = get("n")) sc.n = static_cast<int>(parse_long(*v));
        if (const auto* v = get("alpha0")) sc.alpha0 = parse_double(*v);
        if (const auto* v = get("alpha1")) sc.alpha1 = parse_vector(*v);
        if (const auto* v = get("beta0")) sc.beta0 = parse_double(*v);
        if (const auto* v = get("beta1")) sc.beta1 = parse_double(*v);
        if (const auto* v = get("beta2")) sc.beta2 = parse_vector(*v);
        if (const auto* v = get("theta")) sc.theta = parse_vector(*v);
        if (const auto* v = get("interaction_subset")) {
            for (const auto& part : split(*v, ',')) {
                if (part.empty()) continue;
                sc.interaction_subset.push_back(static_cast<int>(parse_long(part)) - 1);
            }
        }
        if (const auto* v = get("covariate_scale")) sc.covariate_scale = parse_double(*v);
        if (const auto* v = get("nonlinear_treatment")) {
            sc.nonlinear_treatment = parse_bool(*v, "nonlinear_treatment");
        }
        if (const auto* v = get("nonlinear_outcome")) {
            sc.nonlinear_outcome = parse_bool(*v, "nonlinear_outcome");
        }
        if (const auto* v = get("error_sd")) sc.error_sd = parse_double(*v);
        if (const auto* v = get("replications")) sc.replications = static_cast<int>(parse_long(*v));
        if (const auto* v = get("seed")) sc.seed = static_cast<std::uint64_t>(parse_long(*v));

        if (const auto* v = get("designs")) {
            for (const auto& token : split(*v, ',')) {
                if (!token.empty()) run.designs.push_back(parse_design(token));
            }
        }
        if (const auto* v = get("models")) {
            for (const auto& token : split(*v, ',')) {
                if (token.empty()) continue;
                if (token != "mw" && token != "mwx" && token != "interaction" &&
                    token != "interaction-omit") {
                    throw ConfigInvalid("unknown model '" + token + "'");
                }
                run.models.push_back(token);
            }
        }
        if (const auto* v = get("caliper_multiplier")) run.caliper_multiplier = parse_double(*v);
        if (const auto* v = get("coefficient_pairs")) {
            run.coefficient_pairs = static_cast<int>(parse_long(*v));
        }
        if (const auto* v = get("pair_k")) run.pair_k = parse_double(*v);
        if (const auto* v = get("oracle_draws")) run.oracle_draws = parse_long(*v);
        if (const auto* v = get("oracle_draws_full")) run.oracle_draws_full = parse_long(*v);
        if (const auto* v = get("replications_full")) {
            run.replications_full = static_cast<int>(parse_long(*v));
        }
    } catch (const SchemaError& e) {
        throw ConfigInvalid(e.what());
    }

    if (run.designs.empty()) throw ConfigInvalid("designs must list at least one design");
    if (run.models.empty()) throw ConfigInvalid("models must list at least one model");
    if (!(run.caliper_multiplier > 0.0)) {
        throw ConfigInvalid("caliper_multiplier must be positive");
    }
    if (run.coefficient_pairs < 0) throw ConfigInvalid("coefficient_pairs must be nonnegative");
    if (run.coefficient_pairs > 0) {
        if (sc.alpha1.size() != 0 || sc.beta2.size() != 0) {
            throw ConfigInvalid("alpha1/beta2 are generated when coefficient_pairs > 0");
        }
        if (sc.theta.size() != 0) {
            throw ConfigInvalid("coefficient-pair sweeps need a homogeneous effect (empty theta)");
        }
        if (!(run.pair_k > 0.0)) throw ConfigInvalid("pair_k must be positive");
        // Shape checks only; the generated pairs replace these.
        ScenarioConfig probe = sc;
        probe.alpha1 = Vector::Ones(sc.p) / std::sqrt(static_cast<double>(sc.p));
        probe.beta2 = probe.alpha1;
        validate_config(probe);
    } else {
        validate_config(sc);
    }
    if (run.oracle_draws < 1 || run.oracle_draws_full < 1) {
        throw ConfigInvalid("oracle draw counts must be positive");
    }
    if (run.replications_full < 1) throw ConfigInvalid("replications_full must be positive");

    const long interaction_models =
        std::count(run.models.begin(), run.models.end(), "interaction") +
        std::count(run.models.begin(), run.models.end(), "interaction-omit");
    if (interaction_models > 0 && sc.interaction_subset.empty()) {
        throw ConfigInvalid("interaction models need a non-empty interaction_subset");
    }
    if (interaction_models > 1) {
        throw ConfigInvalid("at most one interaction model per run");
    }
    return config;
}

SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigInvalid("cannot open config '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const SimulationConfig& config) {
    const ScenarioConfig& sc = config.scenario;
    const RunSettings& run = config.run;

    std::string designs;
    for (size_t i = 0; i < run.designs.size(); ++i) {
        if (i) designs += ",";
        designs += run.designs[i].name;
    }
    std::string models;
    for (size_t i = 0; i < run.models.size(); ++i) {
        if (i) models += ",";
        models += run.models[i];
    }
    std::string subset;
    for (size_t i = 0; i < sc.interaction_subset.size(); ++i) {
        if (i) subset += ",";
        subset += std::to_string(sc.interaction_subset[i] + 1);
    }

    std::string out;
    const auto emit = [&](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += "\n";
    };
    emit("scenario_id", sc.scenario_id);
    emit("p", std::to_string(sc.p));
    emit("n", std::to_string(sc.n));
    emit("alpha0", format_double(sc.alpha0));
    emit("alpha1", vector_text(sc.alpha1));
    emit("beta0", format_double(sc.beta0));
    emit("beta1", format_double(sc.beta1));
    emit("beta2", vector_text(sc.beta2));
    emit("theta", vector_text(sc.theta));
    emit("interaction_subset", subset);
    emit("covariate_scale", format_double(sc.covariate_scale));
    emit("nonlinear_treatment", sc.nonlinear_treatment ? "true" : "false");
    emit("nonlinear_outcome", sc.nonlinear_outcome ? "true" : "false");
    emit("error_sd", format_double(sc.error_sd));
    emit("replications", std::to_string(sc.replications));
    emit("seed", std::to_string(sc.seed));
    emit("designs", designs);
    emit("models", models);
    emit("caliper_multiplier", format_double(run.caliper_multiplier));
    emit("coefficient_pairs", std::to_string(run.coefficient_pairs));
    emit("pair_k", format_double(run.pair_k));
    emit("oracle_draws", std::to_string(run.oracle_draws));
    emit("oracle_draws_full", std::to_string(run.oracle_draws_full));
    emit("replications_full", std::to_string(run.replications_full));
    return out;
}

std::uint64_t config_hash(const SimulationConfig& config) {
    const std::string text = serialize_config(config);
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

}  // namespace causalmatch
