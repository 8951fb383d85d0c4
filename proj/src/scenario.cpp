#include "stirapsim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "stirapsim/oracle.hpp"

namespace stirapsim {

namespace {

enum class Kind { rate, freq2pi, length, velocity, time, number, integer, enumeration, text };

constexpr unsigned kTwo = 1, kOne = 2, kCas = 4, kAll = 7;

struct KeySpec {
    const char* name;
    Kind kind;
    unsigned schemes;
    bool required;
    const char* default_value;  // nullptr: no default
    const char* options;        // enumeration options, '|' separated
};

const KeySpec kKeySchema[] = {
    {"scheme", Kind::enumeration, kAll, true, nullptr,
     "two_mode_single_node|one_mode_single_node|cascaded"},
    {"preset", Kind::text, kAll, false, nullptr, nullptr},
    {"rate_convention", Kind::enumeration, kAll, false, "angular", "ordinary|angular"},
    {"fragment", Kind::enumeration, kAll, false, "A", "A|B"},
    {"initial", Kind::enumeration, kAll, false, nullptr, "g1|g2"},
    {"v_x", Kind::velocity, kAll, true, nullptr, nullptr},
    {"v_y", Kind::velocity, kAll, true, nullptr, nullptr},
    {"w_c", Kind::length, kAll, false, "10 um", nullptr},
    {"w_p", Kind::length, kAll, false, nullptr, nullptr},  // defaults to w_c
    {"d", Kind::length, kAll, false, nullptr, nullptr},    // defaults to w_c
    {"omega0", Kind::freq2pi, kAll, false, "30 MHz", nullptr},
    {"pulse_order", Kind::enumeration, kTwo | kOne, false, "cavity_first",
     "cavity_first|pump_first"},
    {"eta_scale", Kind::number, kAll, false, "1", nullptr},
    {"n_output", Kind::integer, kAll, false, "2000", nullptr},
    {"rel_tol", Kind::number, kAll, false, "1e-9", nullptr},
    {"abs_tol", Kind::number, kAll, false, "1e-12", nullptr},
    {"window_pad", Kind::time, kAll, false, "0 us", nullptr},
    {"D_x", Kind::length, kAll, false, "10 um", nullptr},
    {"condition_threshold", Kind::number, kAll, false, "10", nullptr},
    {"kappa", Kind::rate, kAll, true, nullptr, nullptr},
    {"eta0_1", Kind::freq2pi, kTwo, true, nullptr, nullptr},
    {"eta0_2", Kind::freq2pi, kTwo, true, nullptr, nullptr},
    {"gamma_e1", Kind::rate, kTwo, true, nullptr, nullptr},
    {"gamma_e2", Kind::rate, kTwo, true, nullptr, nullptr},
    {"gamma_f", Kind::rate, kTwo, true, nullptr, nullptr},
    {"omega_p1", Kind::freq2pi, kTwo, false, nullptr, nullptr},
    {"omega_p2", Kind::freq2pi, kTwo, false, nullptr, nullptr},
    {"delta_p1", Kind::freq2pi, kTwo, false, nullptr, nullptr},
    {"delta_p2", Kind::freq2pi, kTwo, false, nullptr, nullptr},
    {"mode_spacing", Kind::freq2pi, kTwo, false, nullptr, nullptr},
    {"two_photon_detuning_1", Kind::freq2pi, kTwo, false, "0 MHz", nullptr},
    {"two_photon_detuning_2", Kind::freq2pi, kTwo, false, "0 MHz", nullptr},
    {"eta0", Kind::freq2pi, kOne | kCas, true, nullptr, nullptr},
    {"gamma_e", Kind::rate, kOne | kCas, true, nullptr, nullptr},
    {"omega_p", Kind::freq2pi, kOne | kCas, false, nullptr, nullptr},
    {"delta_p", Kind::freq2pi, kOne | kCas, false, nullptr, nullptr},
    {"two_photon_detuning", Kind::freq2pi, kOne | kCas, false, "0 MHz", nullptr},
    {"kappa_prime", Kind::rate, kCas, false, "0 MHz", nullptr},
    {"sync_offset", Kind::time, kCas, false, "0 us", nullptr},
    {"incomplete", Kind::enumeration, kAll, false, "false", "true|false"},
    {"note", Kind::text, kAll, false, nullptr, nullptr},
    {"reaction_channel", Kind::text, kAll, false, nullptr, nullptr},
    {"fragment_species", Kind::text, kAll, false, nullptr, nullptr},
    {"parent_species", Kind::text, kAll, false, nullptr, nullptr},
};

const KeySpec* find_spec(const std::string& key) {
    for (const auto& spec : kKeySchema)
        if (key == spec.name) return &spec;
    return nullptr;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::optional<Unit> parse_unit(const std::string& token) {
    if (token == "Hz") return Unit::hz;
    if (token == "kHz") return Unit::khz;
    if (token == "MHz") return Unit::mhz;
    if (token == "GHz") return Unit::ghz;
    if (token == "um") return Unit::um;
    if (token == "mm") return Unit::mm;
    if (token == "m") return Unit::m;
    if (token == "m_per_s") return Unit::m_per_s;
    if (token == "us") return Unit::us;
    if (token == "ns") return Unit::ns;
    return std::nullopt;
}

std::string unit_name(Unit u) {
    switch (u) {
        case Unit::none: return "";
        case Unit::hz: return "Hz";
        case Unit::khz: return "kHz";
        case Unit::mhz: return "MHz";
        case Unit::ghz: return "GHz";
        case Unit::um: return "um";
        case Unit::mm: return "mm";
        case Unit::m: return "m";
        case Unit::m_per_s: return "m_per_s";
        case Unit::us: return "us";
        case Unit::ns: return "ns";
    }
    return "";
}

bool frequency_unit(Unit u) {
    return u == Unit::hz || u == Unit::khz || u == Unit::mhz || u == Unit::ghz;
}

double to_mhz(double value, Unit u) {
    switch (u) {
        case Unit::hz: return value * 1e-6;
        case Unit::khz: return value * 1e-3;
        case Unit::mhz: return value;
        case Unit::ghz: return value * 1e3;
        default: throw std::logic_error("not a frequency unit");
    }
}

double to_um(double value, Unit u) {
    switch (u) {
        case Unit::um: return value;
        case Unit::mm: return value * 1e3;
        case Unit::m: return value * 1e6;
        default: throw std::logic_error("not a length unit");
    }
}

double to_us(double value, Unit u) {
    switch (u) {
        case Unit::us: return value;
        case Unit::ns: return value * 1e-3;
        default: throw std::logic_error("not a time unit");
    }
}

ConfigEntry parse_value(const KeySpec& spec, const std::string& raw, int line) {
    ConfigEntry entry;
    const std::string value = trim(raw);
    if (value.empty()) throw ConfigParseError("empty value for key " + std::string(spec.name), line);

    if (spec.kind == Kind::text) {
        entry.text = value;
        return entry;
    }
    if (spec.kind == Kind::enumeration) {
        entry.text = value;
        return entry;  // option membership checked at validation
    }

    std::istringstream ss(value);
    double num = 0.0;
    ss >> num;
    if (ss.fail())
        throw ConfigParseError("expected a number for key " + std::string(spec.name) + ", got '" +
                                   value + "'",
                               line);
    std::string unit_token;
    ss >> unit_token;
    std::string extra;
    if (ss >> extra) throw ConfigParseError("trailing tokens after value of " + std::string(spec.name), line);

    entry.numeric = true;
    entry.num = num;
    if (unit_token.empty()) {
        // Bare numbers take the key's canonical unit.
        switch (spec.kind) {
            case Kind::rate:
            case Kind::freq2pi: entry.unit = Unit::mhz; break;
            case Kind::length: entry.unit = Unit::um; break;
            case Kind::velocity: entry.unit = Unit::m_per_s; break;
            case Kind::time: entry.unit = Unit::us; break;
            default: entry.unit = Unit::none; break;
        }
        return entry;
    }
    const auto unit = parse_unit(unit_token);
    if (!unit) throw ConfigParseError("unknown unit suffix '" + unit_token + "'", line);
    entry.unit = *unit;

    switch (spec.kind) {
        case Kind::rate:
        case Kind::freq2pi:
            if (!frequency_unit(entry.unit))
                throw ConfigParseError(std::string(spec.name) + " takes a frequency unit", line);
            break;
        case Kind::length:
            if (entry.unit != Unit::um && entry.unit != Unit::mm && entry.unit != Unit::m)
                throw ConfigParseError(std::string(spec.name) + " takes a length unit", line);
            break;
        case Kind::velocity:
            if (entry.unit != Unit::m_per_s)
                throw ConfigParseError(std::string(spec.name) + " takes m_per_s", line);
            break;
        case Kind::time:
            if (entry.unit != Unit::us && entry.unit != Unit::ns)
                throw ConfigParseError(std::string(spec.name) + " takes a time unit", line);
            break;
        case Kind::number:
        case Kind::integer:
            throw ConfigParseError(std::string(spec.name) + " is dimensionless", line);
        default: break;
    }
    return entry;
}

// ---------------------------------------------------------------------------
// Presets.  The numbers with units are the published operating points; the
// geometry values without a published source (w_p, d, omega0, sync_offset)
// are calibrated and recorded in every run summary.

const char* kPresetFig2 = R"(
scheme = two_mode_single_node
rate_convention = angular
fragment = A
initial = g1
eta0_1 = 38 MHz
eta0_2 = 54 MHz
gamma_e1 = 9.6 MHz
gamma_e2 = 9.6 MHz
gamma_f = 25 MHz
kappa = 5 MHz
omega_p1 = 9.0738e14 Hz
omega_p2 = 9.0755e14 Hz
mode_spacing = 168.9 GHz
v_x = 5 m_per_s
v_y = 10 m_per_s
w_c = 10 um
w_p = 17 um
d = 20 um
omega0 = 38 MHz
D_x = 10 um
)";

const char* kPresetFig3 = R"(
scheme = cascaded
rate_convention = angular
fragment = A
initial = g2
eta0 = 22 MHz
gamma_e = 6.28 MHz
kappa = 5 MHz
kappa_prime = 0 MHz
omega_p = 5.083e14 Hz
v_x = 5 m_per_s
v_y = 10 m_per_s
w_c = 10 um
w_p = 10 um
d = 12 um
omega0 = 30 MHz
sync_offset = 0.5243 us
D_x = 10 um
)";

const char* kPresetCyanogen = R"(
scheme = two_mode_single_node
incomplete = true
parent_species = C2N2
fragment_species = CN
reaction_channel = C2N2(X1Sigma+g) + 193nm -> CN(X2Sigma+, v=0, N<=45) + CN(X2Sigma+, v=1, N<=31)
note = vib-rotational bookkeeping only; no coupling or relaxation rates are established for this channel, so runs are refused
v_x = 5 m_per_s
v_y = 10 m_per_s
)";

std::string canonical_preset_name(const std::string& name) {
    if (name == "fig2" || name == "fig2_sodium_two_mode") return "fig2_sodium_two_mode";
    if (name == "fig3" || name == "fig3_sodium_cascade") return "fig3_sodium_cascade";
    if (name == "cyanogen" || name == "cyanogen_sketch") return "cyanogen_sketch";
    throw ValidationError("unknown preset '" + name + "'", "preset");
}

}  // namespace

void ScenarioConfig::parse_stream(const std::string& text) {
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigParseError("expected 'key = value', got '" + line + "'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigParseError("missing key before '='", line_no);
        const KeySpec* spec = find_spec(key);
        if (!spec) throw ValidationError("unknown key '" + key + "'", key);
        ConfigEntry entry = parse_value(*spec, value, line_no);
        entry.provenance = Provenance::file;
        entries_[key] = entry;
        validated_ = false;
    }
}

ScenarioConfig ScenarioConfig::from_text(const std::string& text) {
    ScenarioConfig raw;
    raw.parse_stream(text);
    if (raw.entries_.count("preset")) {
        ScenarioConfig merged = preset(raw.entries_.at("preset").text);
        for (auto& [key, entry] : raw.entries_) {
            if (key == "preset") continue;
            merged.entries_[key] = entry;
        }
        merged.entries_["preset"] = raw.entries_.at("preset");
        merged.validated_ = false;
        return merged;
    }
    return raw;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_text(buffer.str());
}

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
    const std::string canonical = canonical_preset_name(name);
    ScenarioConfig cfg;
    if (canonical == "fig2_sodium_two_mode") cfg.parse_stream(kPresetFig2);
    if (canonical == "fig3_sodium_cascade") cfg.parse_stream(kPresetFig3);
    if (canonical == "cyanogen_sketch") cfg.parse_stream(kPresetCyanogen);
    for (auto& [_, entry] : cfg.entries_) entry.provenance = Provenance::preset;
    return cfg;
}

std::vector<std::pair<std::string, std::string>> ScenarioConfig::preset_catalog() {
    return {
        {"fig2_sodium_two_mode",
         "sodium two-mode single node: both entangled-pair branches emit one photon each"},
        {"fig3_sodium_cascade",
         "sodium one-mode sender feeding a time-reversed receiver through a one-way link"},
        {"cyanogen_sketch",
         "CN-fragment bookkeeping sketch; incomplete parameters, runs are refused"},
    };
}

void ScenarioConfig::set(const std::string& key, const std::string& value, Provenance prov) {
    const KeySpec* spec = find_spec(key);
    if (!spec) throw ValidationError("unknown key '" + key + "'", key);
    ConfigEntry entry = parse_value(*spec, value, 0);
    entry.provenance = prov;
    entries_[key] = entry;
    validated_ = false;
}

namespace {

bool enum_option_valid(const KeySpec& spec, const std::string& value) {
    std::string options(spec.options);
    std::size_t pos = 0;
    while (pos <= options.size()) {
        const auto next = options.find('|', pos);
        const std::string option =
            options.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (option == value) return true;
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return false;
}

}  // namespace

void ScenarioConfig::validate() {
    if (validated_) return;
    if (!entries_.count("scheme")) throw ValidationError("missing required key 'scheme'", "scheme");
    const std::string scheme_name = entries_.at("scheme").text;
    const KeySpec* scheme_spec = find_spec("scheme");
    if (!enum_option_valid(*scheme_spec, scheme_name))
        throw ValidationError("invalid scheme '" + scheme_name + "'", "scheme");
    const unsigned mask = scheme_name == "two_mode_single_node" ? kTwo
                          : scheme_name == "one_mode_single_node" ? kOne
                                                                  : kCas;

    for (const auto& [key, entry] : entries_) {
        const KeySpec* spec = find_spec(key);
        if (!(spec->schemes & mask) )
            throw ValidationError("key '" + key + "' does not apply to scheme " + scheme_name, key);
        if (spec->kind == Kind::enumeration && !enum_option_valid(*spec, entry.text))
            throw ValidationError("invalid value '" + entry.text + "' for key '" + key + "'", key);
    }

    // Defaults.
    for (const auto& spec : kKeySchema) {
        if (!(spec.schemes & mask) || entries_.count(spec.name)) continue;
        if (spec.required)
            throw ValidationError("missing required key '" + std::string(spec.name) + "'",
                                  spec.name);
        if (spec.default_value) {
            ConfigEntry entry = parse_value(spec, spec.default_value, 0);
            entry.provenance = Provenance::defaulted;
            entries_[spec.name] = entry;
        }
    }
    // Dependent defaults.
    auto copy_default = [&](const char* key, const char* source) {
        if (!entries_.count(key)) {
            ConfigEntry entry = entries_.at(source);
            entry.provenance = Provenance::defaulted;
            entries_[key] = entry;
        }
    };
    copy_default("w_p", "w_c");
    copy_default("d", "w_c");
    if (!entries_.count("initial")) {
        ConfigEntry entry;
        entry.text = (mask == kTwo) ? "g1" : "g2";
        entry.provenance = Provenance::defaulted;
        entries_["initial"] = entry;
    }

    // Range checks.
    auto positive = [&](const char* key) {
        if (entries_.count(key) && entries_.at(key).num <= 0.0)
            throw ValidationError(std::string("key '") + key + "' must be positive", key);
    };
    auto non_negative = [&](const char* key) {
        if (entries_.count(key) && entries_.at(key).num < 0.0)
            throw ValidationError(std::string("key '") + key + "' must be non-negative", key);
    };
    for (const char* key : {"kappa", "kappa_prime", "gamma_e", "gamma_e1", "gamma_e2", "gamma_f",
                            "d"})
        non_negative(key);
    for (const char* key : {"v_x", "v_y", "w_c", "w_p", "rel_tol", "abs_tol", "eta_scale"})
        positive(key);
    if (number("n_output") < 2) throw ValidationError("n_output must be at least 2", "n_output");

    validated_ = true;
}

std::string ScenarioConfig::serialize() const {
    std::ostringstream out;
    char buf[64];
    for (const auto& [key, entry] : entries_) {
        out << key << " = ";
        if (entry.numeric) {
            std::snprintf(buf, sizeof buf, "%.17g", entry.num);
            out << buf;
            if (entry.unit != Unit::none) out << " " << unit_name(entry.unit);
        } else {
            out << entry.text;
        }
        out << "\n";
    }
    return out.str();
}

bool ScenarioConfig::defaulted(const std::string& key) const {
    auto it = entries_.find(key);
    return it != entries_.end() && it->second.provenance == Provenance::defaulted;
}

const ConfigEntry& ScenarioConfig::require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ValidationError("missing key '" + key + "'", key);
    return it->second;
}

ConfigEntry& ScenarioConfig::require(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ValidationError("missing key '" + key + "'", key);
    return it->second;
}

double ScenarioConfig::rad_us(const std::string& key) const {
    const ConfigEntry& entry = require(key);
    const KeySpec* spec = find_spec(key);
    const double mhz = to_mhz(entry.num, entry.unit);
    if (spec->kind == Kind::rate) return units::rate_to_rad_us(mhz, convention());
    return units::mhz_to_rad_us(mhz);
}

double ScenarioConfig::length_um(const std::string& key) const {
    const ConfigEntry& entry = require(key);
    return to_um(entry.num, entry.unit);
}

double ScenarioConfig::velocity(const std::string& key) const { return require(key).num; }

double ScenarioConfig::time_us(const std::string& key) const {
    const ConfigEntry& entry = require(key);
    return to_us(entry.num, entry.unit);
}

double ScenarioConfig::number(const std::string& key) const { return require(key).num; }

std::string ScenarioConfig::token(const std::string& key) const { return require(key).text; }

Scheme ScenarioConfig::scheme() const {
    const std::string name = require("scheme").text;
    if (name == "two_mode_single_node") return Scheme::two_mode_single_node;
    if (name == "one_mode_single_node") return Scheme::one_mode_single_node;
    if (name == "cascaded") return Scheme::cascaded;
    throw ValidationError("invalid scheme '" + name + "'", "scheme");
}

units::RateConvention ScenarioConfig::convention() const {
    return token("rate_convention") == "angular" ? units::RateConvention::angular
                                                 : units::RateConvention::ordinary;
}

bool ScenarioConfig::operator==(const ScenarioConfig& other) const {
    return entries_ == other.entries_;
}

namespace {

double speed_from(const ScenarioConfig& cfg) {
    return std::hypot(cfg.velocity("v_x"), cfg.velocity("v_y"));
}

double doppler_from(const ScenarioConfig& cfg, const std::string& delta_key,
                    const std::string& omega_key) {
    if (cfg.has(delta_key)) return cfg.rad_us(delta_key);
    if (cfg.has(omega_key))
        return cfg.rad_us(omega_key) * cfg.velocity("v_x") / units::speed_of_light;
    return 0.0;
}

FragmentSign fragment_from(const ScenarioConfig& cfg) {
    return cfg.token("fragment") == "B" ? FragmentSign::B : FragmentSign::A;
}

}  // namespace

TwoModeParams ScenarioConfig::two_mode_params() const {
    TwoModeParams p;
    const double scale = number("eta_scale");
    p.pulses.n_modes = 2;
    p.pulses.eta0[0] = scale * rad_us("eta0_1");
    p.pulses.eta0[1] = scale * rad_us("eta0_2");
    p.pulses.omega0 = rad_us("omega0");
    p.pulses.w_c = length_um("w_c");
    p.pulses.w_p = length_um("w_p");
    p.pulses.d = length_um("d");
    p.pulses.v = speed_from(*this);
    p.pulses.order =
        token("pulse_order") == "pump_first" ? PulseOrder::pump_first : PulseOrder::cavity_first;
    p.gamma_e[0] = rad_us("gamma_e1");
    p.gamma_e[1] = rad_us("gamma_e2");
    p.gamma_f = rad_us("gamma_f");
    p.kappa = rad_us("kappa");
    p.delta_p[0] = doppler_from(*this, "delta_p1", "omega_p1");
    p.delta_p[1] = doppler_from(*this, "delta_p2", "omega_p2");
    p.fragment = fragment_from(*this);
    p.two_photon_detuning[0] = rad_us("two_photon_detuning_1");
    p.two_photon_detuning[1] = rad_us("two_photon_detuning_2");
    return p;
}

OneModeParams ScenarioConfig::one_mode_params() const {
    OneModeParams p;
    p.pulses.n_modes = 1;
    p.pulses.eta0[0] = number("eta_scale") * rad_us("eta0");
    p.pulses.omega0 = rad_us("omega0");
    p.pulses.w_c = length_um("w_c");
    p.pulses.w_p = length_um("w_p");
    p.pulses.d = length_um("d");
    p.pulses.v = speed_from(*this);
    if (scheme() == Scheme::one_mode_single_node)
        p.pulses.order = token("pulse_order") == "pump_first" ? PulseOrder::pump_first
                                                              : PulseOrder::cavity_first;
    p.gamma_e = rad_us("gamma_e");
    p.kappa = rad_us("kappa");
    p.delta_p = doppler_from(*this, "delta_p", "omega_p");
    p.fragment = fragment_from(*this);
    p.two_photon_detuning = rad_us("two_photon_detuning");
    return p;
}

CascadeParams ScenarioConfig::cascade_params() const {
    if (scheme() != Scheme::cascaded)
        throw ValidationError("cascade parameters are only defined for the cascaded scheme",
                              "scheme");
    CascadeParams p;
    p.sender = one_mode_params();
    p.sender.pulses.order = PulseOrder::cavity_first;
    p.sender.pulses.center_time = 0.0;
    p.receiver = p.sender;
    p.receiver.pulses.order = PulseOrder::pump_first;
    p.receiver.pulses.center_time = time_us("sync_offset");
    p.kappa_prime = rad_us("kappa_prime");
    return p;
}

FeasibilityInput ScenarioConfig::feasibility_input() const {
    FeasibilityInput in;
    const double scale = number("eta_scale");
    if (scheme() == Scheme::two_mode_single_node) {
        in.eta0 = {scale * rad_us("eta0_1"), scale * rad_us("eta0_2")};
        in.gamma_e = {rad_us("gamma_e1"), rad_us("gamma_e2")};
        in.gamma_f = rad_us("gamma_f");
        in.delta_p = {doppler_from(*this, "delta_p1", "omega_p1"),
                      doppler_from(*this, "delta_p2", "omega_p2")};
        if (has("mode_spacing")) in.mode_spacing = rad_us("mode_spacing");
        if (has("omega_p1") && has("omega_p2"))
            in.omega_p = {rad_us("omega_p1"), rad_us("omega_p2")};
    } else {
        in.eta0 = {scale * rad_us("eta0")};
        in.gamma_e = {rad_us("gamma_e")};
        in.delta_p = {doppler_from(*this, "delta_p", "omega_p")};
        if (has("omega_p")) in.omega_p = {rad_us("omega_p")};
    }
    in.omega0 = rad_us("omega0");
    in.w_c = length_um("w_c");
    in.w_p = length_um("w_p");
    in.d = length_um("d");
    in.v = speed_from(*this);
    in.kappa = rad_us("kappa");
    in.threshold = number("condition_threshold");
    return in;
}

// ---------------------------------------------------------------------------
// Scenario execution.

namespace {

int initial_index(const ScenarioConfig& cfg, const StateSpace& space) {
    const std::string initial = cfg.token("initial");
    const Level lvl = initial == "g1" ? Level::g1 : Level::g2;
    if (space.scheme() == Scheme::cascaded) return space.index_joint(lvl, Level::g1);
    return space.index(lvl);
}

EvolveOptions evolve_options(const ScenarioConfig& cfg) {
    EvolveOptions opts;
    opts.rel_tol = cfg.number("rel_tol");
    opts.abs_tol = cfg.number("abs_tol");
    opts.n_output = static_cast<int>(cfg.number("n_output"));
    return opts;
}

}  // namespace

RunResult run(const ScenarioConfig& input) {
    ScenarioConfig cfg = input;
    cfg.validate();
    if (cfg.token("incomplete") == "true")
        throw ValidationError(
            "insufficient parameters: this configuration is a bookkeeping sketch without "
            "established rates; simulation refused",
            "incomplete");

    const Scheme scheme = cfg.scheme();
    OpenSystemModel model = scheme == Scheme::two_mode_single_node
                                ? build_two_mode_model(cfg.two_mode_params())
                            : scheme == Scheme::one_mode_single_node
                                ? build_one_mode_model(cfg.one_mode_params())
                                : build_cascaded_model(cfg.cascade_params());

    auto window = model.default_window();
    const double pad = cfg.time_us("window_pad");
    window.first -= pad;
    window.second += pad;

    RunResult result{model.space(), {}, {}, {}, {}};
    const int rho0_index = initial_index(cfg, model.space());
    result.trajectory =
        evolve(model, pure_state(model.space(), rho0_index), window, evolve_options(cfg));

    RunSummary& summary = result.summary;
    summary.scheme = to_string(scheme);
    summary.initial = cfg.token("initial");
    const double kappa = cfg.rad_us("kappa");

    if (scheme == Scheme::two_mode_single_node) {
        summary.mode_names = {"w1", "w2"};
        for (int mode = 0; mode < 2; ++mode)
            result.emission.push_back(emission_record(model.space(), result.trajectory, kappa, mode));
        const int branch_mode = cfg.token("initial") == "g1" ? 0 : 1;
        const auto pulses = cfg.two_mode_params().pulses;
        result.dark_overlap =
            dark_state_overlap(model.space(), pulses, result.trajectory, branch_mode);
        if (kappa > 0.0) {
            summary.transfer_probability = result.emission[branch_mode].probability;
        } else {
            summary.transfer_probability =
                population(result.trajectory, model.space().index(Level::f, branch_mode)).back();
        }
    } else if (scheme == Scheme::one_mode_single_node) {
        summary.mode_names = {"w2"};
        result.emission.push_back(emission_record(model.space(), result.trajectory, kappa, 0));
        const auto pulses = cfg.one_mode_params().pulses;
        result.dark_overlap = dark_state_overlap(model.space(), pulses, result.trajectory, 0);
        if (kappa > 0.0) {
            summary.transfer_probability = result.emission[0].probability;
        } else {
            summary.transfer_probability =
                population(result.trajectory, model.space().index(Level::g1, 0)).back();
        }
    } else {
        summary.mode_names = {"sender", "receiver"};
        result.emission.push_back(emission_record(model.space(), result.trajectory, kappa, 0));
        result.emission.push_back(emission_record(model.space(), result.trajectory, kappa, 1));
        summary.fidelity = transfer_fidelity(model.space(), result.trajectory);
        summary.transfer_probability = summary.fidelity;
    }

    for (const auto& rec : result.emission) {
        summary.emission_probability.push_back(rec.probability);
        summary.peak_time.push_back(rec.peak_time);
        summary.symmetry.push_back(rec.symmetry);
    }
    if (!result.dark_overlap.empty())
        summary.dark_overlap_min =
            *std::min_element(result.dark_overlap.begin(), result.dark_overlap.end());

    if (scheme == Scheme::cascaded) {
        // Closure check: transients drained plus trace conservation.
        double photon_residual = 0.0;
        const auto& rho_end = result.trajectory.states.back();
        for (int i = 0; i < model.space().dimension(); ++i)
            if (model.space().state_at(i).total_photons() > 0)
                photon_residual += rho_end(i, i).real();
        summary.bookkeeping =
            photon_residual + std::abs(rho_end.trace().real() - 1.0);
    } else {
        double total_emission = 0.0;
        for (const auto& rec : result.emission) total_emission += rec.probability;
        summary.bookkeeping =
            bookkeeping_defect(model.space(), result.trajectory, total_emission, rho0_index);
    }

    const FeasibilityInput feas = cfg.feasibility_input();
    summary.conditions = all_condition_reports(feas);
    summary.repetition = repetition_rate(feas);
    if (feas.omega_p.size() >= 2)
        summary.recoil = recoil_distinguishability(feas, cfg.length_um("D_x"));

    summary.calibrated_d_um = cfg.length_um("d");
    summary.calibrated_omega0_rad_us = cfg.rad_us("omega0");
    if (scheme == Scheme::cascaded) summary.calibrated_sync_offset_us = cfg.time_us("sync_offset");
    summary.stats = result.trajectory.stats;
    for (const auto& [key, entry] : cfg.entries())
        if (entry.provenance == Provenance::defaulted) summary.defaulted_keys.push_back(key);
    return result;
}

// ---------------------------------------------------------------------------
// Artifact writers.

namespace {

void write_number(std::FILE* f, double x) { std::fprintf(f, "%.12g", x); }

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "w"));
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return f;
}

}  // namespace

void write_timeseries_csv(const std::filesystem::path& path, const RunResult& result) {
    FilePtr f = open_for_write(path);
    const StateSpace& space = result.space;
    std::fprintf(f.get(), "t_us");
    for (int i = 0; i < space.dimension(); ++i)
        std::fprintf(f.get(), ",pop_%s", space.label(i).c_str());
    if (space.scheme() == Scheme::two_mode_single_node)
        std::fprintf(f.get(), ",R_emit_1,R_emit_2");
    else if (space.scheme() == Scheme::one_mode_single_node)
        std::fprintf(f.get(), ",R_emit");
    else
        std::fprintf(f.get(), ",R_emit_sender,R_emit_receiver");
    std::fprintf(f.get(), ",trace");
    if (!result.dark_overlap.empty()) std::fprintf(f.get(), ",dark_overlap");
    std::fprintf(f.get(), "\n");

    const Trajectory& traj = result.trajectory;
    for (int k = 0; k < traj.samples(); ++k) {
        write_number(f.get(), traj.times[k]);
        for (int i = 0; i < space.dimension(); ++i) {
            std::fprintf(f.get(), ",");
            write_number(f.get(), traj.states[k](i, i).real());
        }
        for (const auto& rec : result.emission) {
            std::fprintf(f.get(), ",");
            write_number(f.get(), rec.rate[k]);
        }
        std::fprintf(f.get(), ",");
        write_number(f.get(), traj.states[k].trace().real());
        if (!result.dark_overlap.empty()) {
            std::fprintf(f.get(), ",");
            write_number(f.get(), result.dark_overlap[k]);
        }
        std::fprintf(f.get(), "\n");
    }
}

std::string summary_to_text(const RunSummary& s) {
    std::ostringstream out;
    out.precision(12);
    out << "# run summary\n";
    out << "scheme = " << s.scheme << "\n";
    out << "initial = " << s.initial << "\n";
    for (std::size_t i = 0; i < s.mode_names.size(); ++i) {
        out << "P_" << s.mode_names[i] << " = " << s.emission_probability[i] << "\n";
        out << "peak_time_" << s.mode_names[i] << " = " << s.peak_time[i] << "\n";
        out << "symmetry_" << s.mode_names[i] << " = " << s.symmetry[i] << "\n";
    }
    out << "transfer_probability = " << s.transfer_probability << "\n";
    if (!std::isnan(s.fidelity)) out << "fidelity = " << s.fidelity << "\n";
    if (!std::isnan(s.dark_overlap_min)) out << "dark_overlap_min = " << s.dark_overlap_min << "\n";
    out << "bookkeeping_defect = " << s.bookkeeping << "\n";
    out << "# feasibility\n";
    for (const auto& c : s.conditions) {
        out << "condition_" << c.name << "_lhs = " << c.lhs << "\n";
        out << "condition_" << c.name << "_rhs = " << c.rhs << "\n";
        out << "condition_" << c.name << "_margin = " << c.margin << "\n";
        out << "condition_" << c.name << "_pass = " << (c.pass ? "true" : "false") << "\n";
    }
    out << "repetition_interval_us = " << s.repetition.interval_us << "\n";
    out << "repetition_rate_kHz = " << s.repetition.rate_khz << "\n";
    if (s.recoil) {
        out << "recoil_ratio = " << s.recoil->ratio << "\n";
        out << "recoil_ratio_infinite = " << (s.recoil->infinite ? "true" : "false") << "\n";
    }
    out << "# calibrated geometry\n";
    out << "calibrated_d_um = " << s.calibrated_d_um << "\n";
    out << "calibrated_omega0_rad_us = " << s.calibrated_omega0_rad_us << "\n";
    out << "calibrated_sync_offset_us = " << s.calibrated_sync_offset_us << "\n";
    out << "# integrator\n";
    out << "rhs_evaluations = " << s.stats.rhs_evaluations << "\n";
    out << "max_trace_deviation = " << s.stats.max_trace_deviation << "\n";
    out << "max_hermiticity_drift = " << s.stats.max_hermiticity_drift << "\n";
    out << "min_eigenvalue = " << s.stats.min_eigenvalue << "\n";
    out << "positivity_warning = " << (s.stats.positivity_warning ? "true" : "false") << "\n";
    out << "wall_time_ms = " << s.stats.wall_time_ms << "\n";
    if (!s.defaulted_keys.empty()) {
        out << "# defaulted keys\n";
        out << "defaulted =";
        for (const auto& k : s.defaulted_keys) out << " " << k;
        out << "\n";
    }
    return out.str();
}

void write_summary(const std::filesystem::path& path, const RunSummary& summary) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << summary_to_text(summary);
}

// ---------------------------------------------------------------------------
// Sweeps.

std::vector<double> builtin_grid(const ScenarioConfig& config, const std::string& parameter) {
    if (parameter == "eta_scale") return {1.0, 0.5, 0.25, 0.125};
    if (parameter == "kappa_prime") {
        ScenarioConfig cfg = config;
        cfg.validate();
        const double kappa_mhz = to_mhz(cfg.entries().at("kappa").num,
                                        cfg.entries().at("kappa").unit);
        return {0.0, 0.25 * kappa_mhz, 0.5 * kappa_mhz, kappa_mhz, 2.0 * kappa_mhz};
    }
    throw ValidationError("no built-in grid for parameter '" + parameter + "'", parameter);
}

SweepTable sweep(const ScenarioConfig& config, const std::string& parameter,
                 const std::vector<double>& grid, int jobs) {
    if (!find_spec(parameter))
        throw ValidationError("unknown sweep parameter '" + parameter + "'", parameter);
    SweepTable table;
    table.parameter = parameter;
    if (grid.empty()) return table;

    std::vector<ScenarioConfig> configs;
    configs.reserve(grid.size());
    char buf[64];
    for (double value : grid) {
        ScenarioConfig cfg = config;
        std::snprintf(buf, sizeof buf, "%.17g", value);
        cfg.set(parameter, buf, Provenance::override_);
        cfg.validate();
        configs.push_back(std::move(cfg));
    }

    std::vector<RunSummary> summaries(grid.size());
    std::vector<std::string> errors(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= grid.size()) return;
            try {
                summaries[k] = run(configs[k]).summary;
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(grid.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (!errors[k].empty())
            throw std::runtime_error("sweep point " + std::to_string(k) + " failed: " + errors[k]);

    for (std::size_t k = 0; k < grid.size(); ++k) table.rows.push_back({grid[k], summaries[k]});
    return table;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepTable& table) {
    FilePtr f = open_for_write(path);
    std::fprintf(f.get(), "%s,transfer_probability,fidelity", table.parameter.c_str());
    if (!table.rows.empty())
        for (const auto& name : table.rows.front().summary.mode_names)
            std::fprintf(f.get(), ",P_%s,symmetry_%s", name.c_str(), name.c_str());
    std::fprintf(f.get(), ",bookkeeping_defect,max_trace_deviation\n");
    for (const auto& row : table.rows) {
        write_number(f.get(), row.value);
        std::fprintf(f.get(), ",");
        write_number(f.get(), row.summary.transfer_probability);
        std::fprintf(f.get(), ",");
        write_number(f.get(), std::isnan(row.summary.fidelity) ? 0.0 : row.summary.fidelity);
        for (std::size_t i = 0; i < row.summary.mode_names.size(); ++i) {
            std::fprintf(f.get(), ",");
            write_number(f.get(), row.summary.emission_probability[i]);
            std::fprintf(f.get(), ",");
            write_number(f.get(), row.summary.symmetry[i]);
        }
        std::fprintf(f.get(), ",");
        write_number(f.get(), row.summary.bookkeeping);
        std::fprintf(f.get(), ",");
        write_number(f.get(), row.summary.stats.max_trace_deviation);
        std::fprintf(f.get(), "\n");
    }
}

// ---------------------------------------------------------------------------
// Calibration.

namespace {

struct CalibrationAxis {
    std::string key;
    double lo = 0.0;  // canonical unit of the key
    double hi = 0.0;
    double xtol = 0.0;
};

CalibrationAxis axis_for(const ScenarioConfig& cfg, const std::string& param) {
    ScenarioConfig c = cfg;
    c.validate();
    if (param == "d") {
        const double w_c = c.length_um("w_c");
        return {"d", 0.5 * w_c, 2.0 * w_c, 0.02 * w_c};
    }
    if (param == "omega0") return {"omega0", 10.0, 60.0, 0.25};  // MHz
    if (param == "sync_offset") {
        if (c.scheme() != Scheme::cascaded)
            throw ValidationError("sync_offset calibration needs the cascaded scheme", param);
        return {"sync_offset", -5.0, 5.0, 0.005};  // us
    }
    throw ValidationError("unknown calibration parameter '" + param + "'", param);
}

double canonical_value(const ScenarioConfig& cfg, const std::string& key) {
    const ConfigEntry& entry = cfg.entries().at(key);
    switch (find_spec(key)->kind) {
        case Kind::rate:
        case Kind::freq2pi: return to_mhz(entry.num, entry.unit);
        case Kind::length: return to_um(entry.num, entry.unit);
        case Kind::time: return to_us(entry.num, entry.unit);
        default: return entry.num;
    }
}

// Branch probabilities need the matching initial state, so the metric
// drives its own runs (two of them for p_min).
double objective_metric(const ScenarioConfig& cfg, const std::string& target) {
    auto branch_probability = [&](const char* initial, int mode) {
        ScenarioConfig c = cfg;
        c.set("initial", initial, Provenance::override_);
        c.validate();
        return run(c).summary.emission_probability.at(mode);
    };
    if (target == "fidelity") return run(cfg).summary.fidelity;
    if (target == "p1") return branch_probability("g1", 0);
    if (target == "p2") return branch_probability("g2", 1);
    if (target == "p_min") {
        if (cfg.scheme() == Scheme::one_mode_single_node) return branch_probability("g2", 0);
        return std::min(branch_probability("g1", 0), branch_probability("g2", 1));
    }
    throw ValidationError("unknown calibration target '" + target + "'", "target");
}

}  // namespace

CalibrationResult calibrate(const ScenarioConfig& input,
                            const std::vector<std::string>& free_params,
                            const std::string& target_in) {
    ScenarioConfig cfg = input;
    cfg.validate();
    if (free_params.empty()) throw ValidationError("no calibration parameters given");

    std::string target = target_in;
    if (target == "auto")
        target = cfg.scheme() == Scheme::cascaded ? "fidelity" : "p_min";
    if (target == "fidelity" && cfg.scheme() != Scheme::cascaded)
        throw ValidationError("fidelity target requires the cascaded scheme", "target");

    std::vector<CalibrationAxis> axes;
    for (const auto& param : free_params) {
        CalibrationAxis axis = axis_for(cfg, param);
        const double v = canonical_value(cfg, param);
        if (v < axis.lo - 1e-12 || v > axis.hi + 1e-12)
            throw ValidationError("initial value of '" + param + "' violates calibration bounds",
                                  param);
        axes.push_back(axis);
    }

    // Coarser integration for the search; results re-checked at full
    // settings by the caller's final run.
    ScenarioConfig search = cfg;
    search.set("rel_tol", "1e-7", Provenance::override_);
    search.set("n_output", "600", Provenance::override_);
    search.validate();

    int evaluations = 0;
    char buf[64];
    auto evaluate = [&](ScenarioConfig& base, const std::string& key, double value) {
        std::snprintf(buf, sizeof buf, "%.17g", value);
        base.set(key, buf, Provenance::override_);
        base.validate();
        ++evaluations;
        return objective_metric(base, target);
    };

    constexpr double golden = 0.6180339887498949;
    const int passes = free_params.size() > 1 ? 2 : 1;
    for (int pass = 0; pass < passes; ++pass) {
        for (const auto& axis : axes) {
            double a = axis.lo, b = axis.hi;
            double x1 = b - golden * (b - a);
            double x2 = a + golden * (b - a);
            double f1 = evaluate(search, axis.key, x1);
            double f2 = evaluate(search, axis.key, x2);
            while (b - a > axis.xtol) {
                if (f1 < f2) {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + golden * (b - a);
                    f2 = evaluate(search, axis.key, x2);
                } else {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - golden * (b - a);
                    f1 = evaluate(search, axis.key, x1);
                }
            }
            const double best = f1 >= f2 ? x1 : x2;
            std::snprintf(buf, sizeof buf, "%.17g", best);
            search.set(axis.key, buf, Provenance::override_);
            search.validate();
        }
    }

    CalibrationResult result{cfg, 0.0, 0};
    for (const auto& axis : axes) {
        std::snprintf(buf, sizeof buf, "%.17g", canonical_value(search, axis.key));
        result.config.set(axis.key, buf, Provenance::override_);
    }
    result.config.validate();
    result.objective = objective_metric(result.config, target);
    result.evaluations = evaluations + 1;
    return result;
}

}  // namespace stirapsim
