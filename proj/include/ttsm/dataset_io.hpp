#pragma once

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsm/time_series.hpp"

namespace ttsm::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ISO-8601 (UTC, second resolution)
// ---------------------------------------------------------------------------

namespace detail {

// Civil-date <-> epoch-day conversions (proleptic Gregorian).
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

}  // namespace detail

inline std::string format_iso8601(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    std::int64_t y;
    unsigned m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04" PRId64 "-%02u-%02uT%02" PRId64 ":%02" PRId64 ":%02" PRId64,
                  y, m, d, rem / 3600, (rem / 60) % 60, rem % 60);
    return buf;
}

inline std::int64_t parse_iso8601(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%d%*1[T ]%d:%d:%d", &y, &mo, &d, &h, &mi, &sec);
    if (n < 3) throw std::invalid_argument("invalid ISO-8601 timestamp: " + s);
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60)
        throw std::invalid_argument("invalid ISO-8601 timestamp: " + s);
    return detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
           h * 3600 + mi * 60 + sec;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------
// Layout: optional first column `timestamp` (ISO-8601), one column per channel,
// header row names channels, empty cell = missing point.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline bool is_blank(const std::string& s) {
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_csv(const TimeSeries& ts, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const bool with_time = ts.time_index().has_value();
    if (with_time) f << "timestamp";
    for (std::size_t c = 0; c < ts.n_channels(); ++c) {
        if (with_time || c > 0) f << ',';
        f << ts.channel_name(c);
    }
    f << '\n';
    for (std::size_t t = 0; t < ts.length(); ++t) {
        if (with_time) f << format_iso8601(ts.time_index()->at(static_cast<std::int64_t>(t)));
        for (std::size_t c = 0; c < ts.n_channels(); ++c) {
            if (with_time || c > 0) f << ',';
            if (ts.observed(c, t)) f << detail::format_double(ts.value(c, t));
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline TimeSeries read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty file: " + path);
    std::vector<std::string> header = detail::split_csv_line(line);
    require(!header.empty(), "missing CSV header");
    const bool with_time = header[0] == "timestamp";
    const std::size_t first_channel = with_time ? 1 : 0;
    const std::size_t n_channels = header.size() - first_channel;
    require(n_channels >= 1, "CSV has no channel columns");

    std::vector<std::string> names(header.begin() + static_cast<std::ptrdiff_t>(first_channel),
                                   header.end());
    std::vector<std::vector<double>> values(n_channels);
    std::vector<std::vector<std::uint8_t>> observed(n_channels);
    std::vector<std::int64_t> stamps;

    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("ragged CSV row at line " + std::to_string(line_no) + " in " +
                                     path);
        if (with_time) stamps.push_back(parse_iso8601(cells[0]));
        for (std::size_t c = 0; c < n_channels; ++c) {
            const std::string& cell = cells[first_channel + c];
            if (detail::is_blank(cell)) {
                values[c].push_back(std::numeric_limits<double>::quiet_NaN());
                observed[c].push_back(0);
            } else {
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str() || *end != '\0')
                    throw std::runtime_error("non-numeric cell '" + cell + "' at line " +
                                             std::to_string(line_no) + " in " + path);
                values[c].push_back(v);
                observed[c].push_back(1);
            }
        }
    }
    require(!values[0].empty(), "CSV has no data rows");

    TimeSeries ts;
    for (std::size_t c = 0; c < n_channels; ++c)
        ts.add_channel(std::move(values[c]), std::move(observed[c]), names[c]);
    ts.set_channel_names(names);

    if (with_time) {
        for (std::size_t i = 1; i < stamps.size(); ++i)
            if (stamps[i] == stamps[i - 1])
                throw std::runtime_error("duplicate timestamps in " + path);
        if (stamps.size() >= 2) {
            const std::int64_t step = stamps[1] - stamps[0];
            if (step <= 0) throw std::runtime_error("irregular time index in " + path);
            for (std::size_t i = 1; i < stamps.size(); ++i)
                if (stamps[i] - stamps[i - 1] != step)
                    throw std::runtime_error("irregular time index in " + path);
            ts.set_time_index(TimeIndex(stamps[0], step));
        } else {
            ts.set_time_index(TimeIndex(stamps[0], 1));
        }
    }
    return ts;
}

// ---------------------------------------------------------------------------
// Dataset manifest
// ---------------------------------------------------------------------------
// JSON: {channels, target_channel, known_future, frequency{base_unit,
// multiplier}, files[]}; each file is a CSV in the layout above.

inline json frequency_to_json(const FrequencyTag& f) {
    return json{{"base_unit", base_unit_name(f.base_unit)}, {"multiplier", f.multiplier}};
}

inline FrequencyTag frequency_from_json(const json& j) {
    return FrequencyTag(base_unit_from_name(j.at("base_unit").get<std::string>()),
                        j.at("multiplier").get<std::int64_t>());
}

inline void write_dataset(const std::vector<TimeSeries>& series, const std::string& manifest_path) {
    namespace fs = std::filesystem;
    const fs::path mpath(manifest_path);
    const fs::path dir = mpath.parent_path().empty() ? fs::path(".") : mpath.parent_path();
    fs::create_directories(dir);
    const std::string stem = mpath.stem().string();

    require(!series.empty(), "dataset must contain at least one series");
    json manifest;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < series[0].n_channels(); ++c)
        names.push_back(series[0].channel_name(c));
    manifest["channels"] = names;
    manifest["target_channel"] = series[0].target_channel();
    manifest["known_future"] = series[0].known_future();
    if (series[0].frequency()) manifest["frequency"] = frequency_to_json(*series[0].frequency());
    json files = json::array();
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::string fname = stem + "_" + std::to_string(i) + ".csv";
        write_csv(series[i], (dir / fname).string());
        files.push_back(fname);
    }
    manifest["files"] = files;

    // collections with per-series schemas (varying channels or roles) carry
    // their metadata per file; the global block stays for uniform datasets
    bool uniform = true;
    for (std::size_t i = 1; i < series.size(); ++i) {
        uniform = uniform && series[i].n_channels() == series[0].n_channels() &&
                  series[i].target_channel() == series[0].target_channel() &&
                  series[i].known_future() == series[0].known_future();
    }
    if (!uniform) {
        json per_file = json::array();
        for (const auto& s : series) {
            json m{{"target_channel", s.target_channel()}, {"known_future", s.known_future()}};
            if (s.frequency()) m["frequency"] = frequency_to_json(*s.frequency());
            per_file.push_back(std::move(m));
        }
        manifest["per_file"] = per_file;
    }

    std::ofstream f(manifest_path);
    if (!f) throw std::runtime_error("cannot open for writing: " + manifest_path);
    f << manifest.dump(2) << '\n';
}

inline std::vector<TimeSeries> read_dataset(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream f(manifest_path);
    if (!f) throw std::runtime_error("cannot open: " + manifest_path);
    json manifest;
    f >> manifest;

    const fs::path dir = fs::path(manifest_path).parent_path();
    const json* per_file = manifest.contains("per_file") ? &manifest["per_file"] : nullptr;
    if (per_file)
        require(per_file->size() == manifest.at("files").size(),
                "per_file metadata count does not match files");
    std::vector<TimeSeries> out;
    for (const auto& fname : manifest.at("files")) {
        TimeSeries ts = read_csv((dir / fname.get<std::string>()).string());
        const json& meta = per_file ? (*per_file)[out.size()] : manifest;
        if (meta.contains("target_channel"))
            ts.set_target_channel(meta["target_channel"].get<int>());
        if (meta.contains("known_future"))
            ts.set_known_future(meta["known_future"].get<std::set<int>>());
        if (meta.contains("frequency"))
            ts.set_frequency(frequency_from_json(meta["frequency"]));
        out.push_back(std::move(ts));
    }
    require(!out.empty(), "dataset manifest lists no files");
    return out;
}

}  // namespace ttsm::io
