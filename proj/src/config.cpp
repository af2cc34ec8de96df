#include "optospring/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "optospring/constants.hpp"
#include "optospring/io.hpp"

namespace optospring {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& name, std::size_t line, const std::string& what) {
    throw ConfigError(name + ":" + std::to_string(line) + ": " + what);
}

struct RawKey {
    std::string value;
    std::size_t line;
};

struct RawSection {
    std::string name;
    std::size_t line;
    std::map<std::string, RawKey> keys;
};

std::vector<RawSection> lex(const std::string& text, const std::string& name) {
    std::vector<RawSection> sections;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(name, lineno, "unterminated section header");
            const std::string sec = trim(line.substr(1, line.size() - 2));
            if (sec.empty()) fail(name, lineno, "empty section name");
            sections.push_back({sec, lineno, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(name, lineno, "expected 'key = value' or a [section] header");
        }
        if (sections.empty()) fail(name, lineno, "key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(name, lineno, "empty key");
        if (value.empty()) fail(name, lineno, "empty value for '" + key + "'");
        auto [it, inserted] = sections.back().keys.emplace(key, RawKey{value, lineno});
        if (!inserted) {
            fail(name, lineno, "duplicate key '" + key + "' in [" + sections.back().name +
                                   "] (first at line " + std::to_string(it->second.line) +
                                   ")");
        }
    }
    return sections;
}

/// Typed view over one raw section; tracks which keys were consumed so
/// leftovers can be reported with their line numbers.
class SectionReader {
  public:
    SectionReader(const std::string& file, RawSection section)
        : file_(file), section_(std::move(section)) {}

    const std::string& name() const { return section_.name; }

    bool has(const std::string& key) const { return section_.keys.count(key) != 0; }

    std::string str(const std::string& key) { return take(key).value; }

    double number(const std::string& key) {
        const RawKey raw = take(key);
        return parse_number(raw.value, raw.line, key);
    }

    double number_or(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }

    int integer(const std::string& key) {
        const RawKey raw = take(key);
        const double v = parse_number(raw.value, raw.line, key);
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) {
            fail(file_, raw.line, "'" + key + "' must be an integer");
        }
        return i;
    }

    std::uint64_t unsigned_integer(const std::string& key) {
        const RawKey raw = take(key);
        const double v = parse_number(raw.value, raw.line, key);
        if (v < 0 || static_cast<double>(static_cast<std::uint64_t>(v)) != v) {
            fail(file_, raw.line, "'" + key + "' must be a non-negative integer");
        }
        return static_cast<std::uint64_t>(v);
    }

    bool boolean(const std::string& key) {
        const RawKey raw = take(key);
        if (raw.value == "true" || raw.value == "1") return true;
        if (raw.value == "false" || raw.value == "0") return false;
        fail(file_, raw.line, "'" + key + "' must be true or false");
    }

    std::vector<double> number_list(const std::string& key) {
        const RawKey raw = take(key);
        std::vector<double> out;
        std::istringstream items(raw.value);
        std::string item;
        while (std::getline(items, item, ',')) {
            item = trim(item);
            if (item.empty()) fail(file_, raw.line, "empty entry in '" + key + "' list");
            out.push_back(parse_number(item, raw.line, key));
        }
        if (out.empty()) fail(file_, raw.line, "'" + key + "' list is empty");
        return out;
    }

    void require(std::initializer_list<const char*> keys) {
        for (const char* key : keys) {
            if (!has(key)) {
                fail(file_, section_.line,
                     "[" + section_.name + "] is missing required key '" + key + "'");
            }
        }
    }

    void finish() {
        for (const auto& [key, raw] : section_.keys) {
            if (!consumed_.count(key)) {
                fail(file_, raw.line, "unknown key '" + key + "' in [" + section_.name + "]");
            }
        }
    }

  private:
    RawKey take(const std::string& key) {
        const auto it = section_.keys.find(key);
        if (it == section_.keys.end()) {
            fail(file_, section_.line,
                 "[" + section_.name + "] is missing required key '" + key + "'");
        }
        consumed_.insert(key);
        return it->second;
    }

    double parse_number(const std::string& token, std::size_t line, const std::string& key) {
        const char* s = token.c_str();
        char* end = nullptr;
        const double v = std::strtod(s, &end);
        if (end == s || *end != '\0') {
            fail(file_, line, "bad number '" + token + "' for '" + key + "'");
        }
        return v;
    }

    std::string file_;
    RawSection section_;
    std::set<std::string> consumed_;
};

void check_detunings(const std::vector<double>& detunings, const std::string& context) {
    if (detunings.empty()) throw ConfigError(context + ": detuning list is empty");
    for (double d : detunings) {
        if (!(d > -3.0 && d < 3.0)) {
            throw ConfigError(context + ": detuning " + format_double(d) +
                              " outside (-3, 3)");
        }
    }
}

}  // namespace

SimConfig SimSpec::resolve(const OperatingPoint& op) const {
    const double dt = dt_s > 0.0 ? dt_s : SimConfig::default_dt(op);
    return SimConfig(dt, duration_s, seed, burn_in_s, n_trajectories);
}

std::vector<MechanicalMode> ExperimentConfig::background_modes() const {
    return {modes.begin() + 1, modes.end()};
}

OperatingPoint ExperimentConfig::point_incident(double phi, double power_in_w) const {
    return OperatingPoint::from_incident_power(target_mode(), cavity, phi, power_in_w,
                                               bath_temperature);
}

OperatingPoint ExperimentConfig::point_intracavity(double phi, double power_w) const {
    return OperatingPoint::at_intracavity_power(target_mode(), cavity, phi, power_w,
                                                bath_temperature);
}

void validate(const ExperimentConfig& config) {
    if (config.modes.empty()) throw ConfigError("no [mode] section given");
    if (config.incident_powers.empty()) throw ConfigError("incident power list is empty");
    for (double p : config.incident_powers) {
        if (!(p > 0.0)) throw ConfigError("incident powers must be > 0 W");
    }
    check_detunings(config.detunings, "[experiment]");
    if (!(config.bath_temperature >= 0.0)) {
        throw ConfigError("bath temperature must be >= 0 K");
    }
    if (config.output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (config.sim) {
        const SimSpec& s = *config.sim;
        if (!(s.duration_s > 0.0)) throw ConfigError("[sim] duration_s must be > 0");
        if (!(s.dt_s >= 0.0)) throw ConfigError("[sim] dt_s must be >= 0 (0 = automatic)");
        if (!(s.burn_in_s >= 0.0)) throw ConfigError("[sim] burn_in_s must be >= 0");
        if (s.n_trajectories < 1) throw ConfigError("[sim] n_trajectories must be >= 1");
    }
    for (const SpectrumSeries& series : config.spectrum_series) {
        if (!(series.power_in_w > 0.0)) {
            throw ConfigError("[spectrum_series] power must be > 0");
        }
        check_detunings(series.detunings, "[spectrum_series]");
    }
    if (config.stability_map) {
        const StabilityMapSpec& m = *config.stability_map;
        if (m.phi_points < 2 || m.power_points < 2) {
            throw ConfigError("[stability_map] needs at least 2 points per axis");
        }
        if (!(m.phi_min < m.phi_max)) {
            throw ConfigError("[stability_map] phi_min must be < phi_max");
        }
        check_detunings({m.phi_min, m.phi_max}, "[stability_map]");
        if (!(m.power_min_w >= 0.0 && m.power_min_w < m.power_max_w)) {
            throw ConfigError("[stability_map] needs 0 <= power_min_w < power_max_w");
        }
        if (m.power_in_w && !(*m.power_in_w > 0.0)) {
            throw ConfigError("[stability_map] incident power must be > 0");
        }
    }
    if (!(config.calibration.drive_amplitude_m > 0.0)) {
        throw ConfigError("[calibration] drive_amplitude_m must be > 0");
    }
    if (!(config.calibration.drive_freq_hz > 0.0)) {
        throw ConfigError("[calibration] drive_freq_hz must be > 0");
    }
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& name) {
    std::vector<RawSection> raw = lex(text, name);

    std::vector<SectionReader> cavity, modes, experiment, sim, series, map, calibration;
    for (RawSection& section : raw) {
        SectionReader reader(name, std::move(section));
        if (reader.name() == "cavity") cavity.push_back(std::move(reader));
        else if (reader.name() == "mode") modes.push_back(std::move(reader));
        else if (reader.name() == "experiment") experiment.push_back(std::move(reader));
        else if (reader.name() == "sim") sim.push_back(std::move(reader));
        else if (reader.name() == "spectrum_series") series.push_back(std::move(reader));
        else if (reader.name() == "stability_map") map.push_back(std::move(reader));
        else if (reader.name() == "calibration") calibration.push_back(std::move(reader));
        else throw ConfigError(name + ": unknown section [" + reader.name() + "]");
    }
    auto at_most_one = [&](const std::vector<SectionReader>& group, const char* what) {
        if (group.size() > 1) {
            throw ConfigError(name + ": more than one [" + std::string(what) + "] section");
        }
    };
    at_most_one(cavity, "cavity");
    at_most_one(experiment, "experiment");
    at_most_one(sim, "sim");
    at_most_one(map, "stability_map");
    at_most_one(calibration, "calibration");
    if (cavity.empty()) throw ConfigError(name + ": missing [cavity] section");
    if (modes.empty()) throw ConfigError(name + ": missing [mode] section");
    if (experiment.empty()) throw ConfigError(name + ": missing [experiment] section");

    auto wrap = [&](const char* section, auto&& build) {
        try {
            return build();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(name + ": [" + std::string(section) + "]: " + e.what());
        }
    };

    SectionReader& cav = cavity.front();
    cav.require({"wavelength_m", "length_m", "finesse", "cutoff_freq_hz", "coupling_slope"});
    CavitySetup cavity_setup = wrap("cavity", [&] {
        return CavitySetup(cav.number("wavelength_m"), cav.number("length_m"),
                           cav.number("finesse"),
                           2.0 * constants::pi * cav.number("cutoff_freq_hz"),
                           cav.number("coupling_slope"));
    });
    cav.finish();

    std::vector<MechanicalMode> mode_list;
    for (SectionReader& m : modes) {
        m.require({"freq_hz", "mass_kg", "quality"});
        mode_list.push_back(wrap("mode", [&] {
            return MechanicalMode::from_frequency_hz(m.number("freq_hz"),
                                                     m.number("mass_kg"),
                                                     m.number("quality"));
        }));
        m.finish();
    }

    SectionReader& exp = experiment.front();
    exp.require({"bath_temperature_k", "incident_powers_mw", "detunings"});
    ExperimentConfig config{std::move(mode_list),
                            cavity_setup,
                            exp.number("bath_temperature_k"),
                            exp.number_list("incident_powers_mw"),
                            exp.number_list("detunings"),
                            exp.has("output_dir") ? exp.str("output_dir")
                                                  : std::string("optospring-out"),
                            std::nullopt,
                            {},
                            std::nullopt,
                            {}};
    for (double& p : config.incident_powers) p *= 1e-3;
    exp.finish();

    if (!sim.empty()) {
        SectionReader& s = sim.front();
        s.require({"duration_s"});
        SimSpec spec;
        spec.duration_s = s.number("duration_s");
        spec.dt_s = s.number_or("dt_s", 0.0);
        if (s.has("seed")) spec.seed = s.unsigned_integer("seed");
        spec.burn_in_s = s.number_or("burn_in_s", 0.0);
        if (s.has("n_trajectories")) spec.n_trajectories = s.integer("n_trajectories");
        s.finish();
        config.sim = spec;
    }

    for (SectionReader& s : series) {
        s.require({"power_in_mw", "detunings"});
        SpectrumSeries one;
        one.power_in_w = s.number("power_in_mw") * 1e-3;
        one.detunings = s.number_list("detunings");
        s.finish();
        config.spectrum_series.push_back(std::move(one));
    }

    if (!map.empty()) {
        SectionReader& s = map.front();
        s.require({"phi_min", "phi_max", "phi_points", "power_points"});
        StabilityMapSpec spec;
        spec.phi_min = s.number("phi_min");
        spec.phi_max = s.number("phi_max");
        spec.phi_points = s.integer("phi_points");
        spec.power_points = s.integer("power_points");
        const bool direct = s.has("power_max_w");
        const bool incident = s.has("power_in_max_mw");
        if (direct == incident) {
            throw ConfigError(name +
                              ": [stability_map] needs exactly one of power_max_w "
                              "(intracavity watts) or power_in_max_mw (incident)");
        }
        if (direct) {
            spec.power_min_w = s.number_or("power_min_w", 0.0);
            spec.power_max_w = s.number("power_max_w");
        } else {
            const double p_in = s.number("power_in_max_mw") * 1e-3;
            spec.power_in_w = p_in;
            spec.power_min_w = 0.0;
            spec.power_max_w = cavity_setup.coupling_slope * p_in;
        }
        s.finish();
        config.stability_map = spec;
    }

    if (!calibration.empty()) {
        SectionReader& s = calibration.front();
        CalibrationSpec spec;
        spec.drive_amplitude_m = s.number_or("drive_amplitude_m", spec.drive_amplitude_m);
        spec.drive_freq_hz = s.number_or("drive_freq_hz", spec.drive_freq_hz);
        s.finish();
        config.calibration = spec;
    }

    validate(config);
    return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_config_text(text, path);
}

std::string canonical_text(const ExperimentConfig& config) {
    std::string out;
    auto num = [&](double v) { out += ' ' + format_double(v); };
    auto list = [&](const std::vector<double>& v) {
        for (double x : v) num(x);
    };
    for (const MechanicalMode& m : config.modes) {
        out += "mode";
        num(m.omega_m);
        num(m.mass);
        num(m.q_factor);
        out += '\n';
    }
    out += "cavity";
    num(config.cavity.wavelength);
    num(config.cavity.length);
    num(config.cavity.finesse);
    num(config.cavity.omega_c);
    num(config.cavity.coupling_slope);
    out += "\nbath";
    num(config.bath_temperature);
    out += "\npowers";
    list(config.incident_powers);
    out += "\ndetunings";
    list(config.detunings);
    out += '\n';
    if (config.sim) {
        out += "sim";
        num(config.sim->dt_s);
        num(config.sim->duration_s);
        out += ' ' + std::to_string(config.sim->seed);
        num(config.sim->burn_in_s);
        out += ' ' + std::to_string(config.sim->n_trajectories);
        out += '\n';
    }
    for (const SpectrumSeries& s : config.spectrum_series) {
        out += "series";
        num(s.power_in_w);
        list(s.detunings);
        out += '\n';
    }
    if (config.stability_map) {
        const StabilityMapSpec& m = *config.stability_map;
        out += "map";
        num(m.phi_min);
        num(m.phi_max);
        out += ' ' + std::to_string(m.phi_points);
        num(m.power_min_w);
        num(m.power_max_w);
        out += ' ' + std::to_string(m.power_points);
        if (m.power_in_w) num(*m.power_in_w);
        out += '\n';
    }
    out += "calibration";
    num(config.calibration.drive_amplitude_m);
    num(config.calibration.drive_freq_hz);
    out += '\n';
    return out;
}

std::string config_hash(const ExperimentConfig& config) {
    return to_hex(fnv1a64(canonical_text(config)));
}

}  // namespace optospring
