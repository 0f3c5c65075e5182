#include "resotact/config.hpp"

#include "resotact/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace resotact {

namespace {

using ordered_json = nlohmann::ordered_json;

// Serialized numbers are normalized to 12 significant digits so that
// unit-converted values (m <-> mm) survive load/save cycles unchanged.
double norm12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::strtod(buf, nullptr);
}

double require_number(const ordered_json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key))
        throw ConfigError("config: missing field " + path + "." + key);
    if (!j[key].is_number())
        throw ConfigError("config: field " + path + "." + key + " must be a number");
    return j[key].get<double>();
}

double optional_number(const ordered_json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    return j[key].get<double>();
}

TaxelSpec parse_taxel(const ordered_json& j, const std::string& path) {
    TaxelSpec spec;
    if (!j.contains("id") || !j["id"].is_string())
        throw ConfigError("config: missing field " + path + ".id");
    spec.id = j["id"].get<std::string>();

    if (!j.contains("tube"))
        throw ConfigError("config: missing field " + path + ".tube");
    const auto& tube = j["tube"];
    spec.model.tube.length_m = require_number(tube, "length_mm", path + ".tube") * 1e-3;
    spec.model.tube.inner_diameter_m =
        optional_number(tube, "inner_diameter_mm", 6.0) * 1e-3;
    spec.model.tube.cap_inner_diameter_m =
        optional_number(tube, "cap_inner_diameter_mm", 7.0) * 1e-3;

    if (!j.contains("cap"))
        throw ConfigError("config: missing field " + path + ".cap");
    const auto& cap = j["cap"];
    spec.model.cap.wall_thickness_mm = require_number(cap, "thickness_mm", path + ".cap");
    spec.model.cap.hole_diameter_mm = optional_number(cap, "hole_mm", 0.0);
    spec.model.cap.added_mass_mg = optional_number(cap, "mass_mg", 0.0);

    if (!j.contains("length_freq"))
        throw ConfigError("config: missing field " + path + ".length_freq");
    const auto& lf = j["length_freq"];
    spec.model.length_freq.b1 = require_number(lf, "b1", path + ".length_freq");
    spec.model.length_freq.b2 = require_number(lf, "b2", path + ".length_freq");
    spec.model.length_freq.b3 = require_number(lf, "b3", path + ".length_freq");

    if (!j.contains("force_deflection"))
        throw ConfigError("config: missing field " + path + ".force_deflection");
    const auto& fd = j["force_deflection"];
    spec.model.force_defl.beta1 = require_number(fd, "beta1", path + ".force_deflection");
    spec.model.force_defl.beta2 = require_number(fd, "beta2", path + ".force_deflection");
    spec.model.force_defl.beta3 = optional_number(fd, "beta3", 0.0);
    spec.model.force_defl.f_max_n = require_number(fd, "f_max_n", path + ".force_deflection");
    if (fd.contains("delta_unit") && fd["delta_unit"].get<std::string>() != "mm")
        throw ConfigError("config: field " + path +
                          ".force_deflection.delta_unit must be \"mm\"");
    spec.model.force_defl.delta_unit = DeflectionUnit::millimeters;

    spec.model.transition = TransitionModel::defaults_for(spec.model.cap);
    if (j.contains("transition")) {
        const auto& tr = j["transition"];
        TransitionModel& tm = spec.model.transition;
        if (tr.contains("enabled")) tm.enabled = tr["enabled"].get<bool>();
        tm.transition_force_n = optional_number(tr, "force_n", tm.transition_force_n);
        tm.deviation_hz = optional_number(tr, "deviation_hz", tm.deviation_hz);
        tm.dip_depth = optional_number(tr, "dip_depth", tm.dip_depth);
        tm.dip_center_mm = optional_number(tr, "dip_center_mm", tm.dip_center_mm);
        tm.dip_width_mm = optional_number(tr, "dip_width_mm", tm.dip_width_mm);
        tm.mass_critical_mg = optional_number(tr, "mass_critical_mg", tm.mass_critical_mg);
    }

    if (j.contains("linear")) {
        const auto& lin = j["linear"];
        spec.linear.f0_hz = require_number(lin, "f0_hz", path + ".linear");
        spec.linear.unloaded_hz = optional_number(lin, "unloaded_hz", spec.linear.f0_hz);
        spec.linear.sensitivity_hz_per_n =
            require_number(lin, "sensitivity_hz_per_n", path + ".linear");
        spec.linear.f_min_n = require_number(lin, "f_min_n", path + ".linear");
        spec.linear.f_max_n = require_number(lin, "f_max_n", path + ".linear");
        spec.linear.amplitude_threshold =
            require_number(lin, "amplitude_threshold", path + ".linear");
    }

    if (j.contains("band")) {
        const auto& b = j["band"];
        spec.band = FrequencyBand{require_number(b, "lo_hz", path + ".band"),
                                  require_number(b, "hi_hz", path + ".band")};
    }
    return spec;
}

ordered_json taxel_to_json(const TaxelSpec& spec) {
    ordered_json j;
    j["id"] = spec.id;
    j["tube"] = {{"length_mm", norm12(spec.model.tube.length_m * 1e3)},
                 {"inner_diameter_mm", norm12(spec.model.tube.inner_diameter_m * 1e3)},
                 {"cap_inner_diameter_mm", norm12(spec.model.tube.cap_inner_diameter_m * 1e3)}};
    j["cap"] = {{"thickness_mm", norm12(spec.model.cap.wall_thickness_mm)},
                {"hole_mm", norm12(spec.model.cap.hole_diameter_mm)},
                {"mass_mg", norm12(spec.model.cap.added_mass_mg)}};
    j["length_freq"] = {{"b1", norm12(spec.model.length_freq.b1)},
                        {"b2", norm12(spec.model.length_freq.b2)},
                        {"b3", norm12(spec.model.length_freq.b3)}};
    j["force_deflection"] = {{"beta1", norm12(spec.model.force_defl.beta1)},
                             {"beta2", norm12(spec.model.force_defl.beta2)},
                             {"beta3", norm12(spec.model.force_defl.beta3)},
                             {"delta_unit", "mm"},
                             {"f_max_n", norm12(spec.model.force_defl.f_max_n)}};
    const TransitionModel& tm = spec.model.transition;
    j["transition"] = {{"enabled", tm.enabled},
                       {"force_n", norm12(tm.transition_force_n)},
                       {"deviation_hz", norm12(tm.deviation_hz)},
                       {"dip_depth", norm12(tm.dip_depth)},
                       {"dip_center_mm", norm12(tm.dip_center_mm)},
                       {"dip_width_mm", norm12(tm.dip_width_mm)},
                       {"mass_critical_mg", norm12(tm.mass_critical_mg)}};
    if (spec.linear.sensitivity_hz_per_n != 0.0 || spec.linear.f0_hz != 0.0) {
        j["linear"] = {{"f0_hz", norm12(spec.linear.f0_hz)},
                       {"unloaded_hz", norm12(spec.linear.unloaded_hz)},
                       {"sensitivity_hz_per_n", norm12(spec.linear.sensitivity_hz_per_n)},
                       {"f_min_n", norm12(spec.linear.f_min_n)},
                       {"f_max_n", norm12(spec.linear.f_max_n)},
                       {"amplitude_threshold", norm12(spec.linear.amplitude_threshold)}};
    }
    if (spec.band)
        j["band"] = {{"lo_hz", norm12(spec.band->lo_hz)}, {"hi_hz", norm12(spec.band->hi_hz)}};
    return j;
}

} // namespace

ArrayConfig parse_array_config(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }

    ArrayConfig cfg;
    if (j.contains("constants")) {
        cfg.constants.speed_of_sound_mps =
            optional_number(j["constants"], "speed_of_sound_mps", 340.0);
        cfg.constants.flow_rate_lpm = optional_number(j["constants"], "flow_rate_lpm", 4.5);
    }
    if (j.contains("audio"))
        cfg.sample_rate_hz =
            static_cast<int>(optional_number(j["audio"], "sample_rate_hz", 44100.0));
    if (j.contains("dsp")) {
        const auto& d = j["dsp"];
        cfg.stft.bin_hz = optional_number(d, "bin_hz", 2.5);
        cfg.stft.out_rate_hz = optional_number(d, "out_rate_hz", 25.0);
        cfg.stft.window_samples_ref =
            static_cast<int>(optional_number(d, "window_samples", 8192.0));
        cfg.jump_penalty = optional_number(d, "jump_penalty", 0.01);
        cfg.guard_hz = optional_number(d, "guard_hz", 10.0);
    }
    if (!j.contains("taxels") || !j["taxels"].is_array() || j["taxels"].empty())
        throw ConfigError("config: missing or empty field taxels");
    for (std::size_t i = 0; i < j["taxels"].size(); ++i)
        cfg.taxels.push_back(
            parse_taxel(j["taxels"][i], "taxels[" + std::to_string(i) + "]"));
    return cfg;
}

ArrayConfig load_array_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_array_config(ss.str());
}

std::string array_config_to_json(const ArrayConfig& cfg) {
    ordered_json j;
    j["constants"] = {{"speed_of_sound_mps", norm12(cfg.constants.speed_of_sound_mps)},
                      {"flow_rate_lpm", norm12(cfg.constants.flow_rate_lpm)}};
    j["audio"] = {{"sample_rate_hz", cfg.sample_rate_hz}};
    j["dsp"] = {{"bin_hz", norm12(cfg.stft.bin_hz)},
                {"out_rate_hz", norm12(cfg.stft.out_rate_hz)},
                {"window_samples", cfg.stft.window_samples_ref},
                {"jump_penalty", norm12(cfg.jump_penalty)},
                {"guard_hz", norm12(cfg.guard_hz)}};
    j["taxels"] = ordered_json::array();
    for (const auto& t : cfg.taxels) j["taxels"].push_back(taxel_to_json(t));
    return j.dump(2) + "\n";
}

void save_array_config(const ArrayConfig& cfg, const std::string& path) {
    const std::filesystem::path target(path);
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f)
            throw ConfigError("config: cannot open '" + tmp.string() + "'");
        f << array_config_to_json(cfg);
    }
    std::filesystem::rename(tmp, target);
}

void resolve_bands(ArrayConfig& cfg) {
    bool any_missing = false;
    for (const auto& t : cfg.taxels) any_missing |= !t.band.has_value();
    if (!any_missing) return;
    const auto bands = assign_bands(cfg.taxels, cfg.guard_hz);
    for (std::size_t i = 0; i < cfg.taxels.size(); ++i)
        if (!cfg.taxels[i].band) cfg.taxels[i].band = bands[i];
}

std::vector<std::string> validate_config(const ArrayConfig& cfg) {
    std::vector<std::string> violations;
    auto flag = [&](const std::string& msg) { violations.push_back(msg); };

    if (cfg.constants.speed_of_sound_mps <= 0.0)
        flag("constants: speed_of_sound_mps must be positive");
    if (cfg.sample_rate_hz < 8000)
        flag("audio: sample_rate_hz must be >= 8000");
    else if (std::fmod(static_cast<double>(cfg.sample_rate_hz), cfg.stft.out_rate_hz) != 0.0)
        flag("dsp: sample rate is not divisible by out_rate_hz (frame clock would drift)");
    if (cfg.stft.bin_hz <= 0.0) flag("dsp: bin_hz must be positive");

    std::set<std::string> ids;
    for (std::size_t i = 0; i < cfg.taxels.size(); ++i) {
        const TaxelSpec& t = cfg.taxels[i];
        const std::string p = "taxels[" + std::to_string(i) + "] (" + t.id + ")";
        if (!ids.insert(t.id).second) flag(p + ": duplicate id");

        if (t.model.tube.length_m <= 0.0) flag(p + ": tube length must be positive");
        if (t.model.tube.inner_diameter_m <= 0.0) flag(p + ": tube diameter must be positive");
        if (t.model.tube.length_m <= t.model.tube.inner_diameter_m)
            flag(p + ": thin-tube model needs length > inner diameter");
        if (t.model.cap.wall_thickness_mm <= 0.0 || t.model.cap.wall_thickness_mm > 10.0)
            flag(p + ": cap thickness must lie in (0, 10] mm");
        if (t.model.cap.hole_diameter_mm < 0.0) flag(p + ": hole diameter must be >= 0");
        const double cap_outer_mm =
            t.model.tube.cap_inner_diameter_m * 1e3 + 2.0 * t.model.cap.wall_thickness_mm;
        if (t.model.cap.hole_diameter_mm >= cap_outer_mm)
            flag(p + ": hole diameter must be smaller than the cap outer diameter");
        if (t.model.cap.added_mass_mg < 0.0) flag(p + ": added mass must be >= 0");

        if (t.model.length_freq.b2 == 0.0) flag(p + ": length_freq b2 must be nonzero");
        else if (t.model.length_freq.b1 / t.model.length_freq.b2 <= 0.0)
            flag(p + ": length_freq b1/b2 must be positive");
        if (t.model.force_defl.beta1 <= 0.0) flag(p + ": force_deflection beta1 must be positive");
        if (t.model.force_defl.beta2 <= 0.0) flag(p + ": force_deflection beta2 must be positive");
        if (t.model.force_defl.f_max_n <= t.model.force_defl.beta3)
            flag(p + ": force_deflection f_max_n must exceed beta3");
        if (t.model.transition.transition_force_n <= 0.0)
            flag(p + ": transition force_n must be positive");
        if (t.model.transition.deviation_hz < 0.0)
            flag(p + ": transition deviation_hz must be >= 0");

        if (t.linear.amplitude_threshold < 0.0 || t.linear.amplitude_threshold > 1.0)
            flag(p + ": amplitude_threshold must lie in [0, 1]");
        if (t.linear.sensitivity_hz_per_n != 0.0) {
            if (t.linear.sensitivity_hz_per_n < 0.0)
                flag(p + ": sensitivity must be positive");
            if (t.linear.f_min_n >= t.linear.f_max_n)
                flag(p + ": linear range needs f_min_n < f_max_n");
        }
    }

    // Band invariants on the resolved assignment.
    try {
        ArrayConfig resolved = cfg;
        resolve_bands(resolved);
        std::vector<std::size_t> order(resolved.taxels.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return resolved.taxels[a].band->lo_hz < resolved.taxels[b].band->lo_hz;
        });
        for (std::size_t i = 0; i < order.size(); ++i) {
            const TaxelSpec& t = resolved.taxels[order[i]];
            const std::string p = "taxels (" + t.id + ")";
            if (!(t.band->lo_hz > 0.0) || !(t.band->hi_hz > t.band->lo_hz))
                flag(p + ": band needs 0 < lo_hz < hi_hz");
            const double f_lo = fitted_freq(t.model.tube.length_m, t.model.length_freq);
            const double dmax =
                deflection_from_force(t.model.force_defl.f_max_n, t.model.force_defl);
            const double f_hi =
                fitted_freq(t.model.tube.length_m - dmax * 1e-3, t.model.length_freq);
            if (!t.band->contains(f_lo) || !t.band->contains(f_hi))
                flag(p + ": band does not cover the full deflection sweep");
            if (i + 1 < order.size()) {
                const TaxelSpec& u = resolved.taxels[order[i + 1]];
                if (t.band->hi_hz > u.band->lo_hz)
                    flag("band-overlap: taxels (" + t.id + ") and (" + u.id + ") overlap");
            }
        }
    } catch (const std::exception& e) {
        flag(std::string("band-assignment: ") + e.what());
    }
    return violations;
}

} // namespace resotact
