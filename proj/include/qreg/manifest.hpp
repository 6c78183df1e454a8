#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qreg/register_model.hpp"

namespace qreg {

/// All validation problems of a run description at once, not just the first.
class ManifestError : public std::runtime_error {
public:
    explicit ManifestError(std::vector<std::string> errors)
        : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& e) {
        std::string s = "invalid manifest (" + std::to_string(e.size()) + " problem" +
                        (e.size() == 1 ? "" : "s") + "):";
        for (const auto& m : e) s += "\n  - " + m;
        return s;
    }
    std::vector<std::string> errors_;
};

enum class Command { Spectrum, Strength, Evolve, TcScan, JcScan };

inline std::string command_name(Command c) {
    switch (c) {
        case Command::Spectrum: return "spectrum";
        case Command::Strength: return "strength";
        case Command::Evolve: return "evolve";
        case Command::TcScan: return "tc-scan";
        case Command::JcScan: return "jc-scan";
    }
    return "?";
}

enum class TimeGridKind { Auto, Linear, Geometric };

/// Complete description of one run. Everything downstream (data files
/// included) is a pure function of this struct.
struct RunManifest {
    Command command = Command::Evolve;
    RegisterConfig reg;
    int realizations = 1;
    int threads = 1;
    std::string out_dir = "out";
    std::optional<std::uint32_t> initial_state;  // empty = pick automatically
    TimeGridKind time_grid = TimeGridKind::Auto;
    double time_min = 0.0;  // used by linear/geometric grids
    double time_max = 0.0;
    int time_count = 240;
    std::optional<double> bin_width;  // strength histogram; empty = automatic
    bool store_components = false;
    int top_components = 10;
    double j_min = 0.01;  // jc-scan grid
    double j_max = 0.12;
    int j_count = 12;
    std::vector<int> sizes = {8, 10, 12};  // tc-scan register sizes

    bool operator==(const RunManifest&) const = default;
};

namespace detail {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
    T v{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) return std::nullopt;
    return v;
}

// from_chars for double is reliable in libstdc++; strtod would accept locale
// forms we don't want.
inline std::optional<double> parse_double(const std::string& s) {
    return parse_number<double>(s);
}

inline std::string topology_to_text(const Topology& t) {
    switch (t.kind) {
        case TopologyKind::Chain: return "chain";
        case TopologyKind::Ring: return "ring";
        case TopologyKind::Grid:
            return "grid:" + std::to_string(t.grid_w) + "x" + std::to_string(t.grid_h);
        case TopologyKind::Explicit: {
            std::string s = "explicit:";
            for (std::size_t k = 0; k < t.explicit_edges.size(); ++k) {
                if (k) s += ",";
                s += std::to_string(t.explicit_edges[k].first) + "-" +
                     std::to_string(t.explicit_edges[k].second);
            }
            return s;
        }
    }
    return "?";
}

inline std::optional<Topology> topology_from_text(const std::string& s,
                                                  std::string& err) {
    if (s == "chain") return Topology::chain();
    if (s == "ring") return Topology::ring();
    if (s.starts_with("grid:")) {
        const std::string body = s.substr(5);
        const auto x = body.find('x');
        if (x == std::string::npos) {
            err = "grid form is grid:WxH";
            return std::nullopt;
        }
        auto w = parse_number<int>(body.substr(0, x));
        auto h = parse_number<int>(body.substr(x + 1));
        if (!w || !h) {
            err = "grid form is grid:WxH with integer W, H";
            return std::nullopt;
        }
        return Topology::grid(*w, *h);
    }
    if (s.starts_with("explicit:")) {
        std::vector<std::pair<int, int>> edges;
        std::stringstream body(s.substr(9));
        std::string item;
        while (std::getline(body, item, ',')) {
            const auto dash = item.find('-');
            if (dash == std::string::npos) {
                err = "explicit edge form is i-j";
                return std::nullopt;
            }
            auto a = parse_number<int>(trim(item.substr(0, dash)));
            auto b = parse_number<int>(trim(item.substr(dash + 1)));
            if (!a || !b) {
                err = "explicit edge form is i-j with integer sites";
                return std::nullopt;
            }
            edges.emplace_back(*a, *b);
        }
        if (edges.empty()) {
            err = "explicit topology lists at least one edge";
            return std::nullopt;
        }
        return Topology::edges(std::move(edges));
    }
    err = "expected chain, ring, grid:WxH, or explicit:i-j,...";
    return std::nullopt;
}

}  // namespace detail

/// Canonical text form: every key written explicitly, fixed order, 17
/// significant digits. parse_manifest_text of this text reproduces the
/// struct exactly, and re-serializing is a fixed point.
inline std::string manifest_to_text(const RunManifest& m) {
    using detail::g17;
    std::string s;
    auto kv = [&](std::string_view k, const std::string& v) {
        s += std::string(k) + " = " + v + "\n";
    };
    kv("command", command_name(m.command));
    kv("n", std::to_string(m.reg.n));
    kv("topology", detail::topology_to_text(m.reg.topology));
    kv("delta0", g17(m.reg.delta0));
    kv("j_scale", g17(m.reg.j_scale));
    kv("j_law", m.reg.j_law == CouplingLaw::Uniform     ? "uniform"
              : m.reg.j_law == CouplingLaw::RandomSign ? "random-sign"
                                                        : "fixed");
    kv("master_seed", std::to_string(m.reg.master_seed));
    kv("size_cap", std::to_string(m.reg.size_cap));
    kv("realizations", std::to_string(m.realizations));
    kv("threads", std::to_string(m.threads));
    kv("out_dir", m.out_dir);
    kv("initial_state",
       m.initial_state ? std::to_string(*m.initial_state) : "auto");
    kv("time_grid", m.time_grid == TimeGridKind::Auto     ? "auto"
                    : m.time_grid == TimeGridKind::Linear ? "linear"
                                                          : "geometric");
    kv("time_min", g17(m.time_min));
    kv("time_max", g17(m.time_max));
    kv("time_count", std::to_string(m.time_count));
    kv("bin_width", m.bin_width ? g17(*m.bin_width) : "auto");
    kv("store_components", m.store_components ? "true" : "false");
    kv("top_components", std::to_string(m.top_components));
    kv("j_min", g17(m.j_min));
    kv("j_max", g17(m.j_max));
    kv("j_count", std::to_string(m.j_count));
    std::string sz;
    for (std::size_t i = 0; i < m.sizes.size(); ++i) {
        if (i) sz += ",";
        sz += std::to_string(m.sizes[i]);
    }
    kv("sizes", sz);
    return s;
}

/// Parse `key = value` lines ('#' starts a comment, blank lines ignored).
/// Strict: unknown keys are errors, every problem is reported, and the one
/// required key (command) is named if absent.
inline RunManifest parse_manifest_text(const std::string& text) {
    using detail::parse_number;
    RunManifest m;
    std::vector<std::string> errors;
    std::map<std::string, std::string> seen;

    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) +
                             ": expected key = value, got \"" + stripped + "\"");
            continue;
        }
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            errors.push_back("line " + std::to_string(lineno) +
                             ": empty key or value");
            continue;
        }
        if (!seen.emplace(key, value).second) {
            errors.push_back("line " + std::to_string(lineno) + ": duplicate key \"" +
                             key + "\"");
            continue;
        }
    }

    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = seen.find(key);
        if (it == seen.end()) return std::nullopt;
        std::string v = it->second;
        seen.erase(it);
        return v;
    };
    auto bad = [&](const char* key, const std::string& value, const std::string& why) {
        errors.push_back(std::string("key \"") + key + "\": bad value \"" + value +
                         "\" (" + why + ")");
    };
    auto take_int = [&](const char* key, int& dst) {
        if (auto v = take(key)) {
            if (auto p = parse_number<int>(*v)) dst = *p;
            else bad(key, *v, "expected integer");
        }
    };
    auto take_double = [&](const char* key, double& dst) {
        if (auto v = take(key)) {
            if (auto p = detail::parse_double(*v)) dst = *p;
            else bad(key, *v, "expected number");
        }
    };
    auto take_bool = [&](const char* key, bool& dst) {
        if (auto v = take(key)) {
            if (*v == "true") dst = true;
            else if (*v == "false") dst = false;
            else bad(key, *v, "expected true or false");
        }
    };

    if (auto v = take("command")) {
        if (*v == "spectrum") m.command = Command::Spectrum;
        else if (*v == "strength") m.command = Command::Strength;
        else if (*v == "evolve") m.command = Command::Evolve;
        else if (*v == "tc-scan") m.command = Command::TcScan;
        else if (*v == "jc-scan") m.command = Command::JcScan;
        else bad("command", *v, "expected spectrum, strength, evolve, tc-scan, or jc-scan");
    } else {
        errors.push_back("missing required key \"command\"");
    }

    take_int("n", m.reg.n);
    if (auto v = take("topology")) {
        std::string why;
        if (auto t = detail::topology_from_text(*v, why)) m.reg.topology = *t;
        else bad("topology", *v, why);
    }
    take_double("delta0", m.reg.delta0);
    take_double("j_scale", m.reg.j_scale);
    if (auto v = take("j_law")) {
        if (*v == "uniform") m.reg.j_law = CouplingLaw::Uniform;
        else if (*v == "random-sign") m.reg.j_law = CouplingLaw::RandomSign;
        else if (*v == "fixed") m.reg.j_law = CouplingLaw::Fixed;
        else bad("j_law", *v, "expected uniform, random-sign, or fixed");
    }
    if (auto v = take("master_seed")) {
        if (auto p = parse_number<std::uint64_t>(*v)) m.reg.master_seed = *p;
        else bad("master_seed", *v, "expected unsigned 64-bit integer");
    }
    take_int("size_cap", m.reg.size_cap);
    take_int("realizations", m.realizations);
    take_int("threads", m.threads);
    if (auto v = take("out_dir")) m.out_dir = *v;
    if (auto v = take("initial_state")) {
        if (*v == "auto") m.initial_state.reset();
        else if (auto p = parse_number<std::uint32_t>(*v)) m.initial_state = *p;
        else bad("initial_state", *v, "expected auto or basis-state bits");
    }
    if (auto v = take("time_grid")) {
        if (*v == "auto") m.time_grid = TimeGridKind::Auto;
        else if (*v == "linear") m.time_grid = TimeGridKind::Linear;
        else if (*v == "geometric") m.time_grid = TimeGridKind::Geometric;
        else bad("time_grid", *v, "expected auto, linear, or geometric");
    }
    take_double("time_min", m.time_min);
    take_double("time_max", m.time_max);
    take_int("time_count", m.time_count);
    if (auto v = take("bin_width")) {
        if (*v == "auto") m.bin_width.reset();
        else if (auto p = detail::parse_double(*v)) m.bin_width = *p;
        else bad("bin_width", *v, "expected auto or a number");
    }
    take_bool("store_components", m.store_components);
    take_int("top_components", m.top_components);
    take_double("j_min", m.j_min);
    take_double("j_max", m.j_max);
    take_int("j_count", m.j_count);
    if (auto v = take("sizes")) {
        std::vector<int> sizes;
        std::stringstream body(*v);
        std::string item;
        bool ok = true;
        while (std::getline(body, item, ',')) {
            if (auto p = parse_number<int>(detail::trim(item))) sizes.push_back(*p);
            else { ok = false; break; }
        }
        if (ok && !sizes.empty()) m.sizes = std::move(sizes);
        else bad("sizes", *v, "expected comma-separated integers");
    }

    for (const auto& [key, value] : seen)
        errors.push_back("unknown key \"" + key + "\"");

    // cross-field validation — run even when parsing stumbled, so the caller
    // sees every problem in one pass
    for (const auto& e : validate(m.reg)) errors.push_back(e);
    if (m.realizations < 1) errors.push_back("realizations must be >= 1");
    if (m.threads < 1) errors.push_back("threads must be >= 1");
    if (m.time_count < 2) errors.push_back("time_count must be >= 2");
    if (m.time_grid != TimeGridKind::Auto) {
        if (!(m.time_max > m.time_min))
            errors.push_back("time_max must exceed time_min for an explicit grid");
        if (m.time_grid == TimeGridKind::Geometric && !(m.time_min > 0.0))
            errors.push_back("geometric time grid needs time_min > 0");
    }
    if (m.bin_width && !(*m.bin_width > 0.0))
        errors.push_back("bin_width must be > 0");
    if (m.top_components < 1) errors.push_back("top_components must be >= 1");
    if (m.command == Command::JcScan) {
        if (!(m.j_max > m.j_min) || !(m.j_min > 0.0))
            errors.push_back("jc-scan needs 0 < j_min < j_max");
        if (m.j_count < 2) errors.push_back("j_count must be >= 2");
    }
    if (m.command == Command::TcScan) {
        for (int n : m.sizes)
            if (n < 2 || n > m.reg.size_cap)
                errors.push_back("tc-scan size " + std::to_string(n) +
                                 " outside [2, size_cap=" +
                                 std::to_string(m.reg.size_cap) + "]");
        if (m.reg.topology.kind == TopologyKind::Grid ||
            m.reg.topology.kind == TopologyKind::Explicit)
            errors.push_back("tc-scan varies n, so topology must be chain or ring");
        if (m.initial_state)
            errors.push_back(
                "tc-scan picks initial states automatically; initial_state must be auto");
    }
    if (m.initial_state && m.reg.n >= 2 && m.reg.n < 31 &&
        *m.initial_state >= (1u << m.reg.n))
        errors.push_back("initial_state " + std::to_string(*m.initial_state) +
                         " is outside the " + std::to_string(m.reg.n) + "-qubit basis");
    if (m.out_dir.empty()) errors.push_back("out_dir must be nonempty");

    if (!errors.empty()) throw ManifestError(std::move(errors));
    return m;
}

inline RunManifest parse_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ManifestError({"cannot read manifest file \"" + path + "\""});
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_manifest_text(buf.str());
}

}  // namespace qreg
