#pragma once

// Single-signal waveform CSV: header "t,<name>", one sample per row, numbers
// in shortest round-trip decimal form.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "upsim/errors.hpp"
#include "upsim/waveform.hpp"

namespace upsim {

inline void write_csv(std::ostream& out, const Waveform& w) {
    out << "t," << w.name() << '\n';
    char buf[64];
    std::string row;
    const auto x = w.samples();
    for (std::size_t i = 0; i < x.size(); ++i) {
        row.clear();
        auto r = std::to_chars(buf, buf + sizeof buf, w.time(i));
        row.append(buf, r.ptr);
        row.push_back(',');
        r = std::to_chars(buf, buf + sizeof buf, x[i]);
        row.append(buf, r.ptr);
        row.push_back('\n');
        out << row;
    }
}

inline void write_csv(const std::string& path, const Waveform& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_csv(out, w);
    if (!out.flush()) throw Error("failed writing '" + path + "'");
}

/// Reads a waveform written by write_csv. The time column must be uniformly
/// spaced; the sample interval is taken from its overall span.
inline Waveform read_csv(std::istream& in, const std::string& source = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) throw ArgumentError(source + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("t,", 0) != 0 || line.size() <= 2 || line.find(',', 2) != std::string::npos)
        throw ArgumentError(source + ": header must be 't,<name>'");
    const std::string name = line.substr(2);

    std::vector<double> t, x;
    std::size_t row = 1;
    auto parse = [&](const char* first, const char* last, double& out) {
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc{} || ptr != last)
            throw ArgumentError(source + ": row " + std::to_string(row) + " is not numeric");
    };
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ArgumentError(source + ": row " + std::to_string(row) + " has one column");
        double tv = 0.0, xv = 0.0;
        parse(line.data(), line.data() + comma, tv);
        parse(line.data() + comma + 1, line.data() + line.size(), xv);
        t.push_back(tv);
        x.push_back(xv);
    }
    if (x.size() < 2) throw ArgumentError(source + ": need at least two samples");
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    if (!(dt > 0.0)) throw ArgumentError(source + ": time column must increase");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs(t[i] - t[i - 1] - dt) > 1e-6 * dt)
            throw ArgumentError(source + ": time column is not uniformly spaced near row " + std::to_string(i + 2));
    return {name, dt, t.front(), std::move(x)};
}

inline Waveform read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open '" + path + "'");
    return read_csv(in, path);
}

}  // namespace upsim
