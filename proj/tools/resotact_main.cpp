// Command-line surface: synth (ground-truth audio), process (audio to force
// readings), calibrate (fit constants from characterization data), validate
// (config invariant checks).
//
// Exit codes: 0 success, 2 usage, 3 format, 4 configuration, 5 numerical.

#include "resotact/config.hpp"
#include "resotact/csv.hpp"
#include "resotact/errors.hpp"
#include "resotact/estimator.hpp"
#include "resotact/svg_plot.hpp"
#include "resotact/synth.hpp"
#include "resotact/wav.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace {

using resotact::ArrayConfig;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitConfig = 4;
constexpr int kExitNumerical = 5;

resotact::ProcessOptions process_options(const ArrayConfig& cfg) {
    resotact::ProcessOptions opt;
    opt.stft = cfg.stft;
    opt.jump_penalty = cfg.jump_penalty;
    opt.guard_hz = cfg.guard_hz;
    return opt;
}

int cmd_synth(const std::string& config_path, const std::string& traces_path,
              const std::string& out_path, std::optional<double> snr_db, std::uint64_t seed,
              double loudness, std::string sidecar_path) {
    ArrayConfig cfg = resotact::load_array_config(config_path);
    resotact::resolve_bands(cfg);

    {
        std::ifstream probe(traces_path);
        std::string line;
        int rows = 0;
        while (probe && std::getline(probe, line))
            if (!line.empty() && line != "\r") ++rows;
        if (rows <= 1) {
            std::cerr << "synth: trace file '" << traces_path << "' has no data rows\n";
            return kExitUsage;
        }
    }
    const auto traces = resotact::read_traces_csv(traces_path);

    resotact::SynthConfig scfg;
    scfg.sample_rate = cfg.sample_rate_hz;
    scfg.noise_snr_db = snr_db;
    scfg.noise_seed = seed;
    scfg.loudness = loudness;

    double gain = 1.0;
    const resotact::AudioBuffer audio = resotact::synthesize(traces, cfg.taxels, scfg, &gain);
    resotact::write_wav(out_path, audio);

    if (sidecar_path.empty()) sidecar_path = out_path + ".truth.csv";
    const resotact::StftLayout layout = resotact::stft_layout(cfg.sample_rate_hz, cfg.stft);
    std::vector<resotact::TruthRow> rows;
    const std::size_t frames =
        audio.samples.size() >= static_cast<std::size_t>(layout.window)
            ? (audio.samples.size() - layout.window) / layout.hop + 1
            : 0;
    auto trace_for = [&](const std::string& id) -> const resotact::ForceTrace* {
        for (const auto& tr : traces)
            if (tr.taxel_id == id) return &tr;
        return nullptr;
    };
    for (std::size_t f = 0; f < frames; ++f) {
        const double t = (static_cast<double>(f) * layout.hop + layout.window / 2.0) /
                         audio.sample_rate;
        for (const auto& spec : cfg.taxels) {
            const resotact::ForceTrace* tr = trace_for(spec.id);
            const double force = tr ? tr->force_at(t) : 0.0;
            const auto resp = resotact::forward_response(spec.model, force);
            rows.push_back({t, spec.id, resp.freq_hz, resp.amplitude * loudness * gain, force});
        }
    }
    resotact::write_truth_csv(sidecar_path, rows);
    std::cout << "wrote " << out_path << " (" << audio.duration_s() << " s, gain " << gain
              << ") and " << sidecar_path << "\n";
    return 0;
}

int cmd_process(const std::string& config_path, const std::string& in_path,
                const std::string& out_path, double tare_window_s,
                const std::string& dump_spec_path, const std::string& plot_path, bool stream) {
    ArrayConfig cfg = resotact::load_array_config(config_path);
    resotact::resolve_bands(cfg);
    // Every invariant is checked before any audio is touched.
    const auto violations = resotact::validate_config(cfg);
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << "process: " << v << "\n";
        throw resotact::ConfigError("process: configuration invalid (" +
                                    std::to_string(violations.size()) + " violations)");
    }
    for (const auto& t : cfg.taxels)
        if (t.linear.sensitivity_hz_per_n <= 0.0)
            throw resotact::ConfigError("process: taxel '" + t.id + "' has no calibration");

    const resotact::AudioBuffer audio = resotact::read_wav(in_path);
    resotact::ProcessOptions opt = process_options(cfg);
    opt.tare_window_s = tare_window_s;

    if (stream) {
        resotact::StreamProcessor sp(cfg.taxels, audio.sample_rate, opt);
        const std::size_t chunk = 4096;
        for (std::size_t pos = 0; pos < audio.samples.size(); pos += chunk) {
            const std::size_t len = std::min(chunk, audio.samples.size() - pos);
            const auto rows =
                sp.feed(std::span<const double>(audio.samples.data() + pos, len));
            for (const auto& row : rows) {
                for (std::size_t ti = 0; ti < row.size(); ++ti) {
                    ordered_json rec;
                    rec["time_s"] = row[ti].time_s;
                    rec["taxel_id"] = sp.array()[ti].id;
                    rec["freq_hz"] = row[ti].freq_hz;
                    rec["amplitude"] = row[ti].amplitude;
                    if (row[ti].force_n)
                        rec["force_n"] = *row[ti].force_n;
                    else
                        rec["force_n"] = nullptr;
                    rec["contact"] = resotact::to_string(row[ti].contact);
                    std::cout << rec.dump() << "\n";
                }
            }
        }
        return 0;
    }

    const resotact::ProcessResult result = resotact::process_stream(audio, cfg.taxels, opt);
    for (std::size_t i = 0; i < result.taxel_errors.size(); ++i)
        if (!result.taxel_errors[i].empty())
            std::cerr << "process: taxel '" << result.taxel_ids[i]
                      << "': " << result.taxel_errors[i] << "\n";
    resotact::write_readings_csv(out_path, result);
    std::cout << "wrote " << out_path << " (" << result.frame_times.size() << " frames x "
              << result.taxel_ids.size() << " taxels)\n";

    if (!dump_spec_path.empty()) {
        double lo = 1e12, hi = 0.0;
        for (const auto& t : cfg.taxels) {
            lo = std::min(lo, t.band->lo_hz);
            hi = std::max(hi, t.band->hi_hz);
        }
        const auto spec = resotact::spectrogram(audio, cfg.stft);
        resotact::write_spectrogram_csv(dump_spec_path, spec, std::max(0.0, lo - 100.0),
                                        hi + 100.0);
        std::cout << "wrote " << dump_spec_path << "\n";
    }
    if (!plot_path.empty()) {
        std::vector<resotact::PlotSeries> series;
        for (std::size_t ti = 0; ti < result.taxel_ids.size(); ++ti) {
            resotact::PlotSeries s;
            s.name = result.taxel_ids[ti];
            for (const auto& r : result.readings[ti])
                s.points.emplace_back(r.time_s, r.force_n.value_or(0.0));
            series.push_back(std::move(s));
        }
        resotact::write_line_plot_svg(plot_path, "Normal force over time", "time [s]",
                                      "force [N]", series);
        std::cout << "wrote " << plot_path << "\n";
    }
    return 0;
}

int cmd_calibrate(const std::string& in_path, const std::string& model,
                  const std::string& out_path, std::optional<double> threshold,
                  double monotonicity_tol) {
    ordered_json fragment;
    if (model == "length") {
        const auto pts_mm = resotact::read_pairs_csv(in_path, "length_mm", "freq_hz");
        std::vector<std::pair<double, double>> pts;
        for (const auto& [l_mm, f] : pts_mm) pts.emplace_back(l_mm * 1e-3, f);
        const auto res = resotact::fit_length_frequency(pts);
        fragment["length_freq"] = {{"b1", res.fit.b1}, {"b2", res.fit.b2}, {"b3", res.fit.b3}};
        fragment["residual_rms_hz"] = res.residual_rms_hz;
    } else if (model == "cap") {
        const auto record = resotact::read_palpation_csv(in_path);
        std::vector<std::pair<double, double>> pts;
        for (const auto& s : record.samples) pts.emplace_back(s.deflection_mm, s.force_n);
        const auto res = resotact::fit_force_deflection(pts);
        fragment["force_deflection"] = {{"beta1", res.fit.beta1},
                                        {"beta2", res.fit.beta2},
                                        {"beta3", res.fit.beta3},
                                        {"delta_unit", "mm"},
                                        {"f_max_n", res.fit.f_max_n}};
        fragment["residual_rms_n"] = res.residual_rms_n;
        fragment["iterations"] = res.iterations;
    } else if (model == "threshold") {
        const auto record = resotact::read_palpation_csv(in_path);
        const auto sel = resotact::select_amplitude_threshold(record, monotonicity_tol);
        double f_min = sel.retained.empty() ? 0.0 : sel.retained.front().force_n;
        fragment["amplitude_threshold"] = sel.threshold;
        fragment["retained_samples"] = sel.retained.size();
        fragment["f_min_n"] = f_min;
    } else if (model == "linear") {
        const auto record = resotact::read_palpation_csv(in_path);
        double t = threshold.value_or(-1.0);
        if (t < 0.0)
            t = resotact::select_amplitude_threshold(record, monotonicity_tol).threshold;
        const auto cal = resotact::extract_linear_calibration(record, t);
        fragment["linear"] = {{"f0_hz", cal.f0_hz},
                              {"unloaded_hz", cal.unloaded_hz},
                              {"sensitivity_hz_per_n", cal.sensitivity_hz_per_n},
                              {"f_min_n", cal.f_min_n},
                              {"f_max_n", cal.f_max_n},
                              {"amplitude_threshold", cal.amplitude_threshold}};
    } else {
        std::cerr << "calibrate: unknown model '" << model << "'\n";
        return kExitUsage;
    }

    std::ofstream out(out_path, std::ios::trunc);
    if (!out)
        throw resotact::FormatError("calibrate: cannot open '" + out_path + "'");
    out << fragment.dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    const ArrayConfig cfg = resotact::load_array_config(config_path);
    const auto violations = resotact::validate_config(cfg);
    if (violations.empty()) {
        std::cout << "valid: " << cfg.taxels.size() << " taxels, no violations\n";
        return 0;
    }
    for (const auto& v : violations) std::cout << "violation: " << v << "\n";
    return kExitConfig;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"resotact: pneumatic-resonance tactile sensing toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate ground-truth audio from force traces");
    std::string s_config, s_traces, s_out, s_sidecar;
    double s_snr = std::nan("");
    std::uint64_t s_seed = 0;
    double s_loudness = 1.0;
    synth->add_option("--config", s_config, "Array config JSON")->required();
    synth->add_option("--traces", s_traces, "Wide-format force trace CSV")->required();
    synth->add_option("--out", s_out, "Output WAV path")->required();
    synth->add_option("--snr", s_snr, "Additive white noise SNR in dB (omit for clean)");
    synth->add_option("--seed", s_seed, "Noise seed");
    synth->add_option("--loudness", s_loudness, "Per-taxel amplitude scale");
    synth->add_option("--sidecar", s_sidecar, "Ground-truth sidecar CSV (default <out>.truth.csv)");

    // process
    auto* process = app.add_subcommand("process", "Convert a WAV recording into force readings");
    std::string p_config, p_in, p_out = "readings.csv", p_dump, p_plot;
    double p_tare = 0.0;
    bool p_stream = false;
    process->add_option("--config", p_config, "Array config JSON")->required();
    process->add_option("--in", p_in, "Input WAV")->required();
    process->add_option("--out", p_out, "Readings CSV path");
    process->add_option("--tare-window", p_tare, "Tare on the leading window (seconds)");
    process->add_option("--dump-spec", p_dump, "Dump the band-range spectrogram as CSV");
    process->add_option("--plot", p_plot, "Emit an SVG force-vs-time plot");
    process->add_flag("--stream", p_stream, "Chunked mode; line-delimited records on stdout");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Fit constants from characterization data");
    std::string c_in, c_model, c_out = "calibration.json";
    double c_threshold = -1.0, c_tol = 2.5;
    calibrate->add_option("--in", c_in, "Input CSV (palpation, or length_mm/freq_hz pairs)")
        ->required();
    calibrate->add_option("--model", c_model, "One of: length, cap, threshold, linear")
        ->required();
    calibrate->add_option("--out", c_out, "Output fragment JSON");
    calibrate->add_option("--threshold", c_threshold, "Amplitude threshold for --model linear");
    calibrate->add_option("--tol", c_tol, "Monotonicity tolerance in Hz (default 2.5)");

    // validate
    auto* validate = app.add_subcommand("validate", "Check all config invariants");
    std::string v_config;
    validate->add_option("--config", v_config, "Array config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed())
            return cmd_synth(s_config, s_traces, s_out,
                             std::isnan(s_snr) ? std::nullopt : std::optional<double>(s_snr),
                             s_seed, s_loudness, s_sidecar);
        if (process->parsed())
            return cmd_process(p_config, p_in, p_out, p_tare, p_dump, p_plot, p_stream);
        if (calibrate->parsed())
            return cmd_calibrate(c_in, c_model, c_out,
                                 c_threshold < 0.0 ? std::nullopt
                                                   : std::optional<double>(c_threshold),
                                 c_tol);
        if (validate->parsed())
            return cmd_validate(v_config);
    } catch (const resotact::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const resotact::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const resotact::FitError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        if (!e.residual_history().empty()) {
            std::cerr << "residual history:";
            for (double r : e.residual_history()) std::cerr << ' ' << r;
            std::cerr << "\n";
        }
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
