#ifndef CSBP_CONFIG_HPP
#define CSBP_CONFIG_HPP

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csbp/mechanism.hpp"
#include "csbp/path_io.hpp"
#include "csbp/simulate.hpp"

namespace csbp {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Experiment description: sections [triplet] (or a closed-form tag),
/// [dsbp], and [run]. Unknown keys are rejected.
struct ExperimentConfig {
    // [run]
    std::string process = "dsbp";  // dsbp | cp | levy | csbp
    double x0 = 1.0;
    double horizon = 1.0;
    double step = 1e-3;
    std::size_t n_paths = 10;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out_dir = "out";
    std::string experiment_id = "experiment";
    // [triplet]
    std::string tag;  // empty = raw triplet; else quadratic|logistic|linear|constant|bd
    double tag_c = 1.0;
    double tag_q = 0.0;
    double tag_b = 0.0;
    double tag_d = 0.0;
    LevyTriplet triplet;
    // [dsbp]
    DsbpSpec dsbp{1.0, {{2, 1.0}}, 0.0};
};

namespace cfg_detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline nlohmann::json parse_list(const std::string& key, const std::string& value) {
    try {
        nlohmann::json j = nlohmann::json::parse(value);
        if (!j.is_array()) throw ConfigError(key + ": expected a list of pairs");
        return j;
    } catch (const nlohmann::json::parse_error&) {
        throw ConfigError(key + ": cannot parse list " + value);
    }
}

inline double num(const std::string& key, const std::string& value) {
    try {
        return io_detail::parse_double(value);
    } catch (const FormatError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

}  // namespace cfg_detail

inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.dsbp = {};  // start empty; defaults shown by print_config are re-parsed
    bool dsbp_seen = false;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = cfg_detail::trim(line);
        if (t.empty() || t.front() == '#' || t.front() == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = t.substr(1, t.size() - 2);
            if (section != "run" && section != "triplet" && section != "dsbp")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = cfg_detail::trim(t.substr(0, eq));
        std::string value = cfg_detail::trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);

        if (section == "run") {
            if (key == "process") cfg.process = value;
            else if (key == "x0") cfg.x0 = cfg_detail::num(key, value);
            else if (key == "horizon") cfg.horizon = cfg_detail::num(key, value);
            else if (key == "step") cfg.step = cfg_detail::num(key, value);
            else if (key == "n_paths") cfg.n_paths = static_cast<std::size_t>(cfg_detail::num(key, value));
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(cfg_detail::num(key, value));
            else if (key == "threads") cfg.threads = static_cast<unsigned>(cfg_detail::num(key, value));
            else if (key == "out_dir") cfg.out_dir = value;
            else if (key == "experiment_id") cfg.experiment_id = value;
            else throw ConfigError("unknown key in [run]: " + key);
        } else if (section == "triplet") {
            if (key == "tag") cfg.tag = value;
            else if (key == "c") cfg.tag_c = cfg_detail::num(key, value);
            else if (key == "q") cfg.tag_q = cfg_detail::num(key, value);
            else if (key == "b") cfg.tag_b = cfg_detail::num(key, value);
            else if (key == "d") cfg.tag_d = cfg_detail::num(key, value);
            else if (key == "drift") cfg.triplet.drift = cfg_detail::num(key, value);
            else if (key == "sigma") cfg.triplet.sigma = cfg_detail::num(key, value);
            else if (key == "killing") {
                const double q = cfg_detail::num(key, value);
                if (q < 0.0) throw ConfigError("killing: must be nonnegative");
                if (q > 0.0)
                    cfg.triplet.atoms.push_back(
                        {std::numeric_limits<double>::infinity(), q});
            } else if (key == "atoms") {
                for (const auto& pair : cfg_detail::parse_list(key, value)) {
                    if (!pair.is_array() || pair.size() != 2)
                        throw ConfigError("atoms: each entry must be [size, rate]");
                    cfg.triplet.atoms.push_back(
                        {pair[0].get<double>(), pair[1].get<double>()});
                }
            } else {
                throw ConfigError("unknown key in [triplet]: " + key);
            }
        } else if (section == "dsbp") {
            dsbp_seen = true;
            if (key == "mu0") cfg.dsbp.mu0 = cfg_detail::num(key, value);
            else if (key == "mu_inf") cfg.dsbp.mu_inf = cfg_detail::num(key, value);
            else if (key == "births") {
                for (const auto& pair : cfg_detail::parse_list(key, value)) {
                    if (!pair.is_array() || pair.size() != 2)
                        throw ConfigError("births: each entry must be [k, rate]");
                    const double kd = pair[0].get<double>();
                    const auto k = static_cast<std::uint64_t>(kd);
                    if (k == 1)
                        throw ConfigError("births: mu_1 must be 0 (an individual replaced "
                                          "by exactly one is no event)");
                    if (k == 0) throw ConfigError("births: use mu0 for the death rate");
                    cfg.dsbp.births.emplace_back(k, pair[1].get<double>());
                }
            } else {
                throw ConfigError("unknown key in [dsbp]: " + key);
            }
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        }
    }
    if (!dsbp_seen) cfg.dsbp = ExperimentConfig{}.dsbp;  // keep documented default

    if (cfg.process != "dsbp" && cfg.process != "cp" && cfg.process != "levy" &&
        cfg.process != "csbp")
        throw ConfigError("process: must be one of dsbp, cp, levy, csbp");
    if (!(cfg.horizon > 0.0)) throw ConfigError("horizon: must be positive");
    if (!(cfg.step > 0.0)) throw ConfigError("step: must be positive");
    if (cfg.x0 < 0.0) throw ConfigError("x0: must be nonnegative");
    if (cfg.n_paths == 0) throw ConfigError("n_paths: must be positive");
    try {
        if (cfg.process == "dsbp" || cfg.process == "cp") cfg.dsbp.check();
        if (cfg.process == "levy" || cfg.process == "csbp") cfg.triplet.check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

/// Canonical rendering with every default explicit; reparsing it reproduces
/// the config, and its digest identifies the experiment.
inline std::string print_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[run]\n";
    out << "process = " << cfg.process << '\n';
    out << "x0 = " << io_detail::fmt(cfg.x0) << '\n';
    out << "horizon = " << io_detail::fmt(cfg.horizon) << '\n';
    out << "step = " << io_detail::fmt(cfg.step) << '\n';
    out << "n_paths = " << cfg.n_paths << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "threads = " << cfg.threads << '\n';
    out << "out_dir = " << cfg.out_dir << '\n';
    out << "experiment_id = " << cfg.experiment_id << '\n';
    out << "\n[triplet]\n";
    if (!cfg.tag.empty()) {
        out << "tag = " << cfg.tag << '\n';
        out << "c = " << io_detail::fmt(cfg.tag_c) << '\n';
        out << "q = " << io_detail::fmt(cfg.tag_q) << '\n';
        out << "b = " << io_detail::fmt(cfg.tag_b) << '\n';
        out << "d = " << io_detail::fmt(cfg.tag_d) << '\n';
    }
    out << "drift = " << io_detail::fmt(cfg.triplet.drift) << '\n';
    out << "sigma = " << io_detail::fmt(cfg.triplet.sigma) << '\n';
    out << "atoms = [";
    bool first = true;
    double killing = 0.0;
    for (const LevyTriplet::Atom& at : cfg.triplet.atoms) {
        if (std::isinf(at.size)) {
            killing += at.rate;
            continue;
        }
        if (!first) out << ',';
        out << '[' << io_detail::fmt(at.size) << ',' << io_detail::fmt(at.rate) << ']';
        first = false;
    }
    out << "]\n";
    out << "killing = " << io_detail::fmt(killing) << '\n';
    out << "\n[dsbp]\n";
    out << "mu0 = " << io_detail::fmt(cfg.dsbp.mu0) << '\n';
    out << "births = [";
    first = true;
    for (const auto& [k, mu] : cfg.dsbp.births) {
        if (!first) out << ',';
        out << '[' << k << ',' << io_detail::fmt(mu) << ']';
        first = false;
    }
    out << "]\n";
    out << "mu_inf = " << io_detail::fmt(cfg.dsbp.mu_inf) << '\n';
    return out.str();
}

inline std::string config_digest(const ExperimentConfig& cfg) {
    return fnv1a_digest(print_config(cfg));
}

/// Mechanism described by the [triplet] section: a closed-form tag when
/// given, else the raw triplet.
inline Mechanism mechanism_from_config(const ExperimentConfig& cfg) {
    if (cfg.tag.empty()) return cfg.triplet;
    if (cfg.tag == "quadratic") return QuadraticMech{cfg.tag_c};
    if (cfg.tag == "logistic") return LogisticMech{};
    if (cfg.tag == "linear") return LinearMech{cfg.tag_c};
    if (cfg.tag == "constant") return ConstantMech{cfg.tag_q};
    if (cfg.tag == "bd") return BirthDeathMech{cfg.tag_b, cfg.tag_d};
    throw ConfigError("tag: unknown mechanism tag " + cfg.tag);
}

}  // namespace csbp

#endif  // CSBP_CONFIG_HPP
