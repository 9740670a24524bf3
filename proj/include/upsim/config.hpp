#pragma once

// INI-style scenario configuration.
//
//   [section]
//   key = value      # comment
//
// Values are SI numbers; a ratio may be written as a/b (e.g. 230/12).
// grid.schedule is a comma-separated list of time:flag breakpoints,
// e.g. "0:1, 0.25:0". Unknown sections or keys are rejected.

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "upsim/errors.hpp"
#include "upsim/switchsim.hpp"

namespace upsim {

struct AnalysisSettings {
    int max_order = 13;
    int cycles = 5;

    void validate() const {
        if (max_order < 1) throw ArgumentError("analysis.max_order must be at least 1");
        if (cycles < 1) throw ArgumentError("analysis.cycles must be at least 1");
    }
};

struct Config {
    Scenario scenario;
    AnalysisSettings analysis;
};

namespace detail {

inline std::string_view strip(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool parse_plain_number(std::string_view s, double& out) {
    s = strip(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Number or a/b quotient.
inline bool parse_number(std::string_view s, double& out) {
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return parse_plain_number(s, out);
    double num = 0.0, den = 0.0;
    if (!parse_plain_number(s.substr(0, slash), num) || !parse_plain_number(s.substr(slash + 1), den)) return false;
    if (den == 0.0) return false;
    out = num / den;
    return true;
}

inline std::vector<std::pair<double, bool>> parse_schedule(std::string_view text, int line, const std::string& key) {
    std::vector<std::pair<double, bool>> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto item = strip(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        const auto colon = item.find(':');
        double t = 0.0, flag = 0.0;
        if (colon == std::string_view::npos || !parse_number(item.substr(0, colon), t) ||
            !parse_number(item.substr(colon + 1), flag) || (flag != 0.0 && flag != 1.0))
            throw ConfigError(line, key, "expected time:0|1 entries, got '" + std::string(item) + "'");
        out.emplace_back(t, flag == 1.0);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError(line, key, "schedule is empty");
    return out;
}

struct KeyBinding {
    std::function<void(Config&, std::string_view, int, const std::string&)> assign;
    std::function<std::string(Config)> render;
    const char* unit;
    const char* doc;
};

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

template <class Get>
KeyBinding real_key(Get get, const char* unit, const char* doc) {
    return {[get](Config& c, std::string_view v, int line, const std::string& key) {
                double x = 0.0;
                if (!parse_number(v, x)) throw ConfigError(line, key, "not a number: '" + std::string(v) + "'");
                get(c) = x;
            },
            [get](Config c) { return format_number(get(c)); }, unit, doc};
}

template <class Get>
KeyBinding int_key(Get get, const char* doc) {
    return {[get](Config& c, std::string_view v, int line, const std::string& key) {
                double x = 0.0;
                if (!parse_number(v, x) || x != static_cast<double>(static_cast<int>(x)))
                    throw ConfigError(line, key, "not an integer: '" + std::string(v) + "'");
                get(c) = static_cast<int>(x);
            },
            [get](Config c) { return std::to_string(get(c)); }, "-", doc};
}

/// Ordered table of "section.key" bindings; also drives default rendering.
inline const std::vector<std::pair<std::string, KeyBinding>>& key_table() {
    static const std::vector<std::pair<std::string, KeyBinding>> table = [] {
        std::vector<std::pair<std::string, KeyBinding>> t;
        auto add = [&t](std::string name, KeyBinding b) { t.emplace_back(std::move(name), std::move(b)); };
        add("grid.v_rms", real_key([](Config& c) -> double& { return c.scenario.grid.v_rms; }, "V", "mains RMS voltage"));
        add("grid.f0", real_key([](Config& c) -> double& { return c.scenario.grid.f0; }, "Hz", "mains frequency"));
        add("grid.schedule",
            {[](Config& c, std::string_view v, int line, const std::string& key) {
                 c.scenario.grid.schedule = parse_schedule(v, line, key);
             },
             [](Config c) {
                 std::string s;
                 for (const auto& [t_k, a] : c.scenario.grid.schedule) {
                     if (!s.empty()) s += ", ";
                     s += format_number(t_k) + (a ? ":1" : ":0");
                 }
                 return s;
             },
             "s:flag", "grid availability breakpoints"});
        add("rectifier.tx1_ratio",
            real_key([](Config& c) -> double& { return c.scenario.tx1_ratio; }, "-", "Tx1 primary:secondary turns"));
        add("rectifier.l_r",
            real_key([](Config& c) -> double& { return c.scenario.rectifier.l_r; }, "H", "rectifier filter inductor"));
        add("rectifier.c_r",
            real_key([](Config& c) -> double& { return c.scenario.rectifier.c_r; }, "F", "rectifier filter capacitor"));
        add("boost.l_c", real_key([](Config& c) -> double& { return c.scenario.boost.l_c; }, "H", "boost inductor"));
        add("boost.c_c",
            real_key([](Config& c) -> double& { return c.scenario.boost.c_c; }, "F", "boost output capacitor"));
        add("boost.r_c", real_key([](Config& c) -> double& { return c.scenario.boost.r_c; }, "ohm", "boost load"));
        add("battery.v", real_key([](Config& c) -> double& { return c.scenario.battery.v; }, "V", "battery EMF"));
        add("battery.r_int", real_key([](Config& c) -> double& { return c.scenario.battery.r_int; }, "ohm",
                                      "battery internal resistance (0 = ideal)"));
        add("inverter.tx2_ratio", real_key([](Config& c) -> double& { return c.scenario.tx2_ratio; }, "-",
                                           "Tx2 secondary:half-primary turns"));
        add("inverter.r_on",
            real_key([](Config& c) -> double& { return c.scenario.inverter.r_on; }, "ohm", "leg on-resistance"));
        add("inverter.r_s",
            real_key([](Config& c) -> double& { return c.scenario.inverter.r_s; }, "ohm", "snubber resistor"));
        add("inverter.c_s",
            real_key([](Config& c) -> double& { return c.scenario.inverter.c_s; }, "F", "snubber capacitor"));
        add("filter.l_o",
            real_key([](Config& c) -> double& { return c.scenario.output_filter.l_o; }, "H", "output inductor"));
        add("filter.c_o",
            real_key([](Config& c) -> double& { return c.scenario.output_filter.c_o; }, "F", "output capacitor"));
        add("load.r", real_key([](Config& c) -> double& { return c.scenario.load.r; }, "ohm", "load resistance"));
        add("load.l", real_key([](Config& c) -> double& { return c.scenario.load.l; }, "H", "load inductance"));
        add("pwm.f_boost",
            real_key([](Config& c) -> double& { return c.scenario.pwm.f_boost; }, "Hz", "boost switching frequency"));
        add("pwm.duty_boost",
            real_key([](Config& c) -> double& { return c.scenario.pwm.duty_boost; }, "-", "boost duty ratio"));
        add("pwm.f_inv",
            real_key([](Config& c) -> double& { return c.scenario.pwm.f_inv; }, "Hz", "inverter switching frequency"));
        add("pwm.duty_inv",
            real_key([](Config& c) -> double& { return c.scenario.pwm.duty_inv; }, "-", "inverter duty ratio"));
        add("pwm.dead_time", real_key([](Config& c) -> double& { return c.scenario.pwm.dead_time; }, "s",
                                      "inverter complementary dead time"));
        add("devices.boost_switch_r_on", real_key([](Config& c) -> double& { return c.scenario.devices.boost_switch_r_on; },
                                                  "ohm", "boost switch on-resistance"));
        add("devices.diode_r_on", real_key([](Config& c) -> double& { return c.scenario.devices.diode_r_on; }, "ohm",
                                           "diode on-resistance"));
        add("devices.relay_r_on", real_key([](Config& c) -> double& { return c.scenario.devices.relay_r_on; }, "ohm",
                                           "relay contact resistance"));
        add("devices.r_off", real_key([](Config& c) -> double& { return c.scenario.devices.r_off; }, "ohm",
                                      "off-state resistance of every switch and diode"));
        add("supervisory.transfer_time", real_key([](Config& c) -> double& { return c.scenario.supervisory.transfer_time; },
                                                  "s", "changeover relay travel time"));
        add("supervisory.v_ref", real_key([](Config& c) -> double& { return c.scenario.supervisory.v_ref; }, "V",
                                          "charge comparator reference"));
        add("supervisory.v_sat", real_key([](Config& c) -> double& { return c.scenario.supervisory.v_sat; }, "V",
                                          "comparator saturation voltage"));
        add("supervisory.hysteresis", real_key([](Config& c) -> double& { return c.scenario.supervisory.hysteresis; },
                                               "V", "comparator half-band (0 = none)"));
        add("relay_driver.r_r1",
            real_key([](Config& c) -> double& { return c.scenario.relay_driver.r_r1; }, "ohm", "driver resistor R_r1"));
        add("relay_driver.r_r2",
            real_key([](Config& c) -> double& { return c.scenario.relay_driver.r_r2; }, "ohm", "driver resistor R_r2"));
        add("relay_driver.c_sr",
            real_key([](Config& c) -> double& { return c.scenario.relay_driver.c_sr; }, "F", "driver capacitor"));
        add("relay_driver.v_dd",
            real_key([](Config& c) -> double& { return c.scenario.relay_driver.v_dd; }, "V", "driver supply"));
        add("sim.t_end", real_key([](Config& c) -> double& { return c.scenario.sim.t_end; }, "s", "simulated time"));
        add("sim.dt", real_key([](Config& c) -> double& { return c.scenario.sim.dt; }, "s", "solver step"));
        add("sim.output_dt", real_key([](Config& c) -> double& { return c.scenario.sim.output_dt; }, "s",
                                      "waveform sample interval (multiple of sim.dt)"));
        add("analysis.max_order",
            int_key([](Config& c) -> int& { return c.analysis.max_order; }, "highest harmonic order"));
        add("analysis.cycles",
            int_key([](Config& c) -> int& { return c.analysis.cycles; }, "fundamental cycles per analysis window"));
        return t;
    }();
    return table;
}

inline const KeyBinding* find_key(const std::string& name) {
    for (const auto& [k, b] : key_table())
        if (k == name) return &b;
    return nullptr;
}

}  // namespace detail

/// Parses configuration text on top of the defaults. Syntax problems raise
/// ConfigError with the line and key; out-of-range values raise ArgumentError
/// naming the field.
inline Config parse_config(std::istream& in) {
    Config cfg;
    std::set<std::string> sections;
    for (const auto& [k, b] : detail::key_table()) sections.insert(k.substr(0, k.find('.')));

    std::string section;
    std::set<std::string> seen;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text = raw;
        if (const auto hash = text.find_first_of("#;"); hash != std::string_view::npos) text = text.substr(0, hash);
        text = detail::strip(text);
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') throw ConfigError(line, std::string(text), "unterminated section header");
            section = std::string(detail::strip(text.substr(1, text.size() - 2)));
            if (!sections.count(section)) throw ConfigError(line, section, "unknown section");
            continue;
        }
        const auto eq = text.find('=');
        const std::string key(detail::strip(text.substr(0, eq)));
        if (eq == std::string_view::npos) throw ConfigError(line, key, "expected key = value");
        if (section.empty()) throw ConfigError(line, key, "key outside any section");
        const std::string full = section + "." + key;
        const auto* binding = detail::find_key(full);
        if (!binding) throw ConfigError(line, full, "unknown key");
        if (!seen.insert(full).second) throw ConfigError(line, full, "duplicate key");
        binding->assign(cfg, detail::strip(text.substr(eq + 1)), line, full);
    }
    cfg.scenario.validate();
    cfg.analysis.validate();
    return cfg;
}

inline Config parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, path, "cannot open configuration file");
    return parse_config(in);
}

/// Applies one "section.key=value" assignment and revalidates.
inline void apply_override(Config& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    const std::string key(detail::strip(assignment.substr(0, eq)));
    if (eq == std::string_view::npos) throw ConfigError(0, key, "override must look like section.key=value");
    const auto* binding = detail::find_key(key);
    if (!binding) throw ConfigError(0, key, "unknown key");
    binding->assign(cfg, detail::strip(assignment.substr(eq + 1)), 0, key);
    cfg.scenario.validate();
    cfg.analysis.validate();
}

/// Renders a complete configuration with units, parseable by parse_config.
inline std::string render_config(const Config& cfg = {}) {
    std::ostringstream out;
    std::string section;
    for (const auto& [name, b] : detail::key_table()) {
        const auto dot = name.find('.');
        const std::string sec = name.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) out << '\n';
            out << '[' << sec << "]\n";
            section = sec;
        }
        out << name.substr(dot + 1) << " = " << b.render(cfg) << "  # [" << b.unit << "] " << b.doc << '\n';
    }
    return out.str();
}

}  // namespace upsim
