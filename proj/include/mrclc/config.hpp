#pragma once

// Dotted-key overrides for scenario and controller fields, plus the
// flat key=value config-file reader.  Precedence (implemented by the
// CLI): command-line --set flags override file values, which override
// registry defaults.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>

#include "scenarios.hpp"

namespace mrclc {

struct UnknownKey : std::invalid_argument {
    explicit UnknownKey(const std::string& what) : std::invalid_argument(what) {}
};

struct ParseError : std::invalid_argument {
    explicit ParseError(const std::string& what) : std::invalid_argument(what) {}
};

namespace detail {

inline double parse_number(const std::string& key, const std::string& text) {
    const char* b = text.data();
    const char* e = text.data() + text.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
    double v = 0.0;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw ParseError("value for '" + key + "' is not a number: '" + text + "'");
    return v;
}

struct OverrideEntry {
    const char* key;
    std::function<void(Scenario&, double)> apply;
};

// The feedback gains and Q are deliberately not overridable: run()
// revalidates the Lyapunov pair, so only keys that leave P consistent
// are exposed here.
inline const std::vector<OverrideEntry>& override_table() {
    static const std::vector<OverrideEntry> table = {
        {"controller.gamma", [](Scenario& s, double v) { s.controller.gamma = v; }},
        {"controller.k_w", [](Scenario& s, double v) { s.controller.k_w = v; }},
        {"controller.c_w", [](Scenario& s, double v) { s.controller.c_w = v; }},
        {"controller.tau_d", [](Scenario& s, double v) { s.controller.tau_d = v; }},
        {"controller.omega", [](Scenario& s, double v) { s.controller.omega = v; }},
        {"controller.zeta", [](Scenario& s, double v) { s.controller.zeta = v; }},
        {"controller.sigma_eval_period",
         [](Scenario& s, double v) { s.controller.sigma_eval_period = v; }},
        {"controller.recompute_period",
         [](Scenario& s, double v) { s.controller.recompute_period = v; }},
        {"controller.stack_capacity",
         [](Scenario& s, double v) { s.controller.stack_capacity = std::size_t(v); }},
        {"controller.stack_warmup",
         [](Scenario& s, double v) { s.controller.stack_warmup = v; }},
        {"scenario.duration", [](Scenario& s, double v) { s.duration = v; }},
        {"scenario.h", [](Scenario& s, double v) { s.h = v; }},
        {"scenario.output_period", [](Scenario& s, double v) { s.output_period = v; }},
        {"scenario.tail_start", [](Scenario& s, double v) { s.tail_start = v; }},
        {"scenario.noise_amplitude", [](Scenario& s, double v) { s.noise_amplitude = v; }},
        {"scenario.noise_seed",
         [](Scenario& s, double v) { s.noise_seed = (unsigned long long)(v); }},
        {"scenario.true_derivative",
         [](Scenario& s, double v) { s.use_true_error_derivative = v != 0.0; }},
        {"scenario.record_stack", [](Scenario& s, double v) { s.record_stack_data = v != 0.0; }},
    };
    return table;
}

}  // namespace detail

inline std::string valid_override_keys() {
    std::string keys;
    for (const auto& en : detail::override_table())
        keys += (keys.empty() ? "" : ", ") + std::string(en.key);
    return keys;
}

// Applies one dotted-key override.  Unknown keys are rejected with the
// full list of valid keys.
inline void apply_override(Scenario& sc, const std::string& key, const std::string& value) {
    for (const auto& en : detail::override_table())
        if (key == en.key) {
            en.apply(sc, detail::parse_number(key, value));
            return;
        }
    throw UnknownKey("unknown key '" + key + "' (valid keys: " + valid_override_keys() + ")");
}

// Flat config file: one `key = value` per line, '#' comments, blank
// lines ignored.  Returned in file order so later CLI flags can still
// override.
inline std::vector<std::pair<std::string, std::string>> load_config_file(
    const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string stripped = line;
        if (auto pos = stripped.find('#'); pos != std::string::npos) stripped.resize(pos);
        const auto notspace = [](char c) { return c != ' ' && c != '\t' && c != '\r'; };
        const auto b = std::find_if(stripped.begin(), stripped.end(), notspace);
        const auto e = std::find_if(stripped.rbegin(), stripped.rend(), notspace).base();
        if (b >= e) continue;
        stripped = std::string(b, e);
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError("config " + path + ":" + std::to_string(lineno) +
                             ": expected 'key = value', got '" + line + "'");
        std::string key = stripped.substr(0, eq);
        std::string val = stripped.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        entries.emplace_back(key, val);
    }
    return entries;
}

}  // namespace mrclc
