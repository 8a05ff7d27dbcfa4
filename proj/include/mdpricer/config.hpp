#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mdpricer/counterfactual.hpp"
#include "mdpricer/domain.hpp"
#include "mdpricer/errors.hpp"

namespace mdpricer {

// Minimal INI reader: [section] headers, key = value lines, blank lines, and
// full-line comments starting with '#' or ';'. Order is preserved so loaders
// can reject unknown keys with a line number.
struct IniFile {
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
    };
    struct Section {
        std::string name;
        std::vector<Entry> entries;
    };
    std::vector<Section> sections;
    std::string origin;  // path or label, used in error messages

    static IniFile parse(std::istream& in, const std::string& origin) {
        IniFile file;
        file.origin = origin;
        file.sections.push_back({"", {}});
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
                file.sections.push_back({trim(trimmed.substr(1, trimmed.size() - 2)), {}});
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            Entry e;
            e.key = trim(trimmed.substr(0, eq));
            e.value = trim(trimmed.substr(eq + 1));
            e.line = lineno;
            if (e.key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            file.sections.back().entries.push_back(std::move(e));
        }
        return file;
    }

    static IniFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        return parse(in, path);
    }

    const Section* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }
};

inline double parse_double(const std::string& value, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse '" + value + "' as a number");
    }
}

inline std::int64_t parse_int(const std::string& value, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse '" + value + "' as an integer");
    }
}

// Evenly spaced discount grid, endpoints rounded to tidy decimals.
inline std::vector<Discount> make_grid(double lo, double hi, double step) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && std::isfinite(step)) || step <= 0.0 || lo > hi)
        throw ConfigError("grid bounds must satisfy 0 < lo <= hi with a positive step");
    std::vector<Discount> grid;
    for (int k = 0;; ++k) {
        const double raw = lo + static_cast<double>(k) * step;
        if (raw > hi + 1e-9) break;
        grid.push_back(static_cast<double>(std::llround(raw * 1e9)) / 1e9);
    }
    validate_grid(grid);
    return grid;
}

struct EngineConfig {
    double forgetting = 0.95;
    double ridge = 0.5;
    double grid_min = 0.30;
    double grid_max = 1.00;
    double grid_step = 0.05;
    Discount default_lower_bound = 0.30;
    Discount default_upper_bound = 1.00;
    Money default_waste_weight = 0.0;
    double forecaster_decay = 0.8;
    int discount_window = 28;
    double normal_floor = 0.5;
    double curve_cap_multiple = 50.0;
    int parallelism = 1;
    std::uint64_t seed = 0;

    std::vector<Discount> grid() const { return make_grid(grid_min, grid_max, grid_step); }

    void validate() const {
        if (!(std::isfinite(forgetting) && forgetting > 0.0 && forgetting <= 1.0))
            throw ConfigError("forgetting must lie in (0, 1]");
        if (!(std::isfinite(ridge) && ridge > 0.0)) throw ConfigError("ridge must be > 0");
        validate_grid(grid());
        require_discount(default_lower_bound, "default lower bound");
        require_discount(default_upper_bound, "default upper bound");
        if (default_lower_bound > default_upper_bound)
            throw ConfigError("default lower bound exceeds default upper bound");
        if (!(std::isfinite(default_waste_weight) && default_waste_weight >= 0.0))
            throw ConfigError("default waste weight must be >= 0");
        if (!(std::isfinite(forecaster_decay) && forecaster_decay > 0.0 && forecaster_decay <= 1.0))
            throw ConfigError("forecaster decay must lie in (0, 1]");
        if (discount_window < 1) throw ConfigError("discount window must be >= 1");
        if (!(std::isfinite(normal_floor) && normal_floor >= 0.0))
            throw ConfigError("normal floor must be >= 0");
        if (!(std::isfinite(curve_cap_multiple) && curve_cap_multiple > 1.0))
            throw ConfigError("curve cap multiple must be > 1");
        if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    }
};

// Loads [engine] from an INI file. Every key must be known and the file must
// declare version = 1; typos fail loudly rather than silently defaulting.
inline EngineConfig load_engine_config(const IniFile& file) {
    EngineConfig cfg;
    const IniFile::Section* section = file.find("engine");
    if (!section) throw ConfigError(file.origin + ": missing [engine] section");
    bool versioned = false;
    for (const auto& e : section->entries) {
        const std::string where = file.origin + ":" + std::to_string(e.line);
        if (e.key == "version") {
            if (parse_int(e.value, where) != 1)
                throw ConfigError(where + ": unsupported config version '" + e.value + "'");
            versioned = true;
        } else if (e.key == "forgetting") {
            cfg.forgetting = parse_double(e.value, where);
        } else if (e.key == "ridge") {
            cfg.ridge = parse_double(e.value, where);
        } else if (e.key == "grid_min") {
            cfg.grid_min = parse_double(e.value, where);
        } else if (e.key == "grid_max") {
            cfg.grid_max = parse_double(e.value, where);
        } else if (e.key == "grid_step") {
            cfg.grid_step = parse_double(e.value, where);
        } else if (e.key == "default_lower_bound") {
            cfg.default_lower_bound = parse_double(e.value, where);
        } else if (e.key == "default_upper_bound") {
            cfg.default_upper_bound = parse_double(e.value, where);
        } else if (e.key == "default_waste_weight") {
            cfg.default_waste_weight = parse_double(e.value, where);
        } else if (e.key == "forecaster_decay") {
            cfg.forecaster_decay = parse_double(e.value, where);
        } else if (e.key == "discount_window") {
            cfg.discount_window = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "normal_floor") {
            cfg.normal_floor = parse_double(e.value, where);
        } else if (e.key == "curve_cap_multiple") {
            cfg.curve_cap_multiple = parse_double(e.value, where);
        } else if (e.key == "parallelism") {
            cfg.parallelism = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(e.value, where));
        } else {
            throw ConfigError(where + ": unknown key '" + e.key + "' in [engine]");
        }
    }
    if (!versioned) throw ConfigError(file.origin + ": [engine] must declare version = 1");
    for (const auto& s : file.sections) {
        if (s.name.empty() && !s.entries.empty())
            throw ConfigError(file.origin + ": keys outside any section");
        if (!s.name.empty() && s.name != "engine" && s.name != "market")
            throw ConfigError(file.origin + ": unknown section [" + s.name + "]");
    }
    cfg.validate();
    return cfg;
}

inline EngineConfig load_engine_config_file(const std::string& path) {
    return load_engine_config(IniFile::parse_file(path));
}

}  // namespace mdpricer
