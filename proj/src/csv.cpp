#include "resotact/csv.hpp"

#include "resotact/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace resotact {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("csv: bad number '" + s + "' in " + context);
    }
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("csv: cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

void expect_header(const std::vector<std::string>& fields,
                   const std::vector<std::string>& expected, const std::string& path) {
    if (fields.size() < expected.size())
        throw FormatError("csv: '" + path + "' header has " + std::to_string(fields.size()) +
                          " columns, expected " + std::to_string(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (fields[i] != expected[i])
            throw FormatError("csv: '" + path + "' column " + std::to_string(i) + " is '" +
                              fields[i] + "', expected '" + expected[i] + "'");
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f)
            throw FormatError("csv: cannot open '" + tmp.string() + "'");
        f << content;
        if (!f)
            throw FormatError("csv: short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

} // namespace

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void write_readings_csv(const std::string& path, const ProcessResult& result) {
    std::ostringstream out;
    out << "time_s,taxel_id,freq_hz,amplitude,force_n,contact\n";
    for (std::size_t f = 0; f < result.frame_times.size(); ++f) {
        for (std::size_t t = 0; t < result.taxel_ids.size(); ++t) {
            if (f >= result.readings[t].size()) continue;
            const TaxelReading& r = result.readings[t][f];
            out << format_number(r.time_s) << ',' << result.taxel_ids[t] << ','
                << format_number(r.freq_hz) << ',' << format_number(r.amplitude) << ',';
            if (r.force_n) out << format_number(*r.force_n);
            out << ',' << to_string(r.contact) << '\n';
        }
    }
    atomic_write(path, out.str());
}

void write_palpation_csv(const std::string& path, const PalpationRecord& record) {
    std::ostringstream out;
    out << "time_s,force_n,deflection_mm,freq_hz,amplitude\n";
    for (const auto& s : record.samples) {
        out << format_number(s.time_s) << ',' << format_number(s.force_n) << ','
            << format_number(s.deflection_mm) << ',' << format_number(s.freq_hz) << ','
            << format_number(s.amplitude) << '\n';
    }
    atomic_write(path, out.str());
}

PalpationRecord read_palpation_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty())
        throw FormatError("csv: '" + path + "' is empty");
    expect_header(split_line(lines[0]),
                  {"time_s", "force_n", "deflection_mm", "freq_hz", "amplitude"}, path);
    PalpationRecord record;
    double prev_time = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_line(lines[i]);
        if (f.size() < 5)
            throw FormatError("csv: '" + path + "' row " + std::to_string(i) + " has " +
                              std::to_string(f.size()) + " fields, expected 5");
        const std::string ctx = path + " row " + std::to_string(i);
        const PalpationSample s{parse_number(f[0], ctx), parse_number(f[1], ctx),
                                parse_number(f[2], ctx), parse_number(f[3], ctx),
                                parse_number(f[4], ctx)};
        if (s.time_s <= prev_time)
            throw FormatError("csv: '" + path + "' times must be strictly increasing (row " +
                              std::to_string(i) + ")");
        if (s.force_n < 0.0)
            throw FormatError("csv: '" + path + "' negative force at row " + std::to_string(i));
        if (s.freq_hz <= 0.0)
            throw FormatError("csv: '" + path + "' nonpositive frequency at row " +
                              std::to_string(i));
        prev_time = s.time_s;
        record.samples.push_back(s);
    }
    return record;
}

void write_traces_csv(const std::string& path, const std::vector<ForceTrace>& traces) {
    std::ostringstream out;
    out << "time_s";
    for (const auto& t : traces) out << ',' << t.taxel_id;
    out << '\n';

    // Union of all sample times, emitted once per row.
    std::vector<double> times;
    for (const auto& t : traces)
        for (const auto& [time, force] : t.samples) times.push_back(time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    for (double time : times) {
        out << format_number(time);
        for (const auto& t : traces) out << ',' << format_number(t.force_at(time));
        out << '\n';
    }
    atomic_write(path, out.str());
}

std::vector<ForceTrace> read_traces_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty())
        throw FormatError("csv: '" + path + "' is empty");
    const auto header = split_line(lines[0]);
    if (header.size() < 2 || header[0] != "time_s")
        throw FormatError("csv: '" + path + "' must start with a time_s column plus one "
                          "force column per taxel");
    std::vector<ForceTrace> traces(header.size() - 1);
    for (std::size_t c = 1; c < header.size(); ++c) traces[c - 1].taxel_id = header[c];

    double prev_time = -1.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_line(lines[i]);
        if (f.size() != header.size())
            throw FormatError("csv: '" + path + "' row " + std::to_string(i) +
                              " has wrong field count");
        const std::string ctx = path + " row " + std::to_string(i);
        const double time = parse_number(f[0], ctx);
        if (time <= prev_time)
            throw FormatError("csv: '" + path + "' times must be strictly increasing (row " +
                              std::to_string(i) + ")");
        prev_time = time;
        for (std::size_t c = 1; c < f.size(); ++c) {
            const double force = parse_number(f[c], ctx);
            if (force < 0.0)
                throw FormatError("csv: '" + path + "' negative force at row " +
                                  std::to_string(i));
            traces[c - 1].samples.emplace_back(time, force);
        }
    }
    if (lines.size() < 3)
        throw FormatError("csv: '" + path + "' needs at least two trace rows");
    return traces;
}

void write_truth_csv(const std::string& path, const std::vector<TruthRow>& rows) {
    std::ostringstream out;
    out << "time_s,taxel_id,freq_hz,amplitude,force_n\n";
    for (const auto& r : rows) {
        out << format_number(r.time_s) << ',' << r.taxel_id << ',' << format_number(r.freq_hz)
            << ',' << format_number(r.amplitude) << ',' << format_number(r.force_n) << '\n';
    }
    atomic_write(path, out.str());
}

std::vector<TruthRow> read_truth_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty())
        throw FormatError("csv: '" + path + "' is empty");
    expect_header(split_line(lines[0]), {"time_s", "taxel_id", "freq_hz", "amplitude", "force_n"},
                  path);
    std::vector<TruthRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_line(lines[i]);
        if (f.size() < 5)
            throw FormatError("csv: '" + path + "' row " + std::to_string(i) + " is short");
        const std::string ctx = path + " row " + std::to_string(i);
        rows.push_back({parse_number(f[0], ctx), f[1], parse_number(f[2], ctx),
                        parse_number(f[3], ctx), parse_number(f[4], ctx)});
    }
    return rows;
}

std::vector<std::pair<double, double>> read_pairs_csv(const std::string& path,
                                                      const std::string& col_a,
                                                      const std::string& col_b) {
    const auto lines = read_lines(path);
    if (lines.empty())
        throw FormatError("csv: '" + path + "' is empty");
    expect_header(split_line(lines[0]), {col_a, col_b}, path);
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_line(lines[i]);
        if (f.size() < 2)
            throw FormatError("csv: '" + path + "' row " + std::to_string(i) + " is short");
        const std::string ctx = path + " row " + std::to_string(i);
        out.emplace_back(parse_number(f[0], ctx), parse_number(f[1], ctx));
    }
    return out;
}

void write_spectrogram_csv(const std::string& path, const Spectrogram& spec, double lo_hz,
                           double hi_hz) {
    const std::size_t b_lo = static_cast<std::size_t>(
        std::max(0.0, std::ceil(lo_hz / spec.bin_step_hz)));
    const std::size_t b_hi = std::min<std::size_t>(
        spec.bin_count - 1, static_cast<std::size_t>(std::floor(hi_hz / spec.bin_step_hz)));
    std::ostringstream out;
    out << "time_s";
    for (std::size_t b = b_lo; b <= b_hi; ++b) out << ',' << format_number(spec.bin_freq(b));
    out << '\n';
    for (std::size_t f = 0; f < spec.frames(); ++f) {
        out << format_number(spec.frame_times[f]);
        for (std::size_t b = b_lo; b <= b_hi; ++b) out << ',' << format_number(spec.at(f, b));
        out << '\n';
    }
    atomic_write(path, out.str());
}

} // namespace resotact
