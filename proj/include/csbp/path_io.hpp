#ifndef CSBP_PATH_IO_HPP
#define CSBP_PATH_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csbp/mechanism.hpp"
#include "csbp/path.hpp"
#include "csbp/simulate.hpp"

namespace csbp {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace io_detail {

inline std::string fmt(double v) {
    if (std::isinf(v)) return "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw FormatError("trailing characters in number: " + s);
        return v;
    } catch (const std::invalid_argument&) {
        throw FormatError("not a number: " + s);
    } catch (const std::out_of_range&) {
        throw FormatError("number out of range: " + s);
    }
}

}  // namespace io_detail

/// FNV-1a hash of a string, as 16 hex digits; used as config digest.
inline std::string fnv1a_digest(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Serializes a path: header `t,value`, one row per breakpoint/grid node
/// (`inf` literal for infinity), then a metadata trailer.
inline std::string path_to_csv(const CadlagPath& p) {
    std::ostringstream out;
    out << "t,value\n";
    for (std::size_t i = 0; i < p.values.size(); ++i)
        out << io_detail::fmt(p.node_time(i)) << ',' << io_detail::fmt(p.values[i].get())
            << '\n';
    out << "# terminal=" << (p.terminal.is_infinite() ? "inf" : "0")
        << " kind=" << (p.kind == PathKind::Event ? "event" : "grid")
        << " horizon=" << (p.horizon ? io_detail::fmt(*p.horizon) : std::string("none"))
        << '\n';
    return out.str();
}

inline CadlagPath path_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "t,value")
        throw FormatError("path csv: missing 't,value' header");
    std::vector<double> times;
    std::vector<ExtReal> values;
    std::string meta;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            meta = line;
            break;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("path csv: row without comma");
        times.push_back(io_detail::parse_double(line.substr(0, comma)));
        const double v = io_detail::parse_double(line.substr(comma + 1));
        values.push_back(std::isinf(v) ? ExtReal::infinity() : ExtReal(v));
    }
    if (meta.empty()) throw FormatError("path csv: missing metadata trailer");

    auto field = [&meta](const std::string& key) {
        const std::string tag = key + "=";
        const std::size_t at = meta.find(tag);
        if (at == std::string::npos) throw FormatError("path csv: missing field " + key);
        const std::size_t start = at + tag.size();
        const std::size_t end = meta.find(' ', start);
        return meta.substr(start, end == std::string::npos ? end : end - start);
    };
    const std::string term = field("terminal");
    const std::string kind = field("kind");
    const std::string hor = field("horizon");
    const ExtReal terminal = (term == "inf") ? ExtReal::infinity() : ExtReal(0.0);
    if (term != "inf" && term != "0")
        throw FormatError("path csv: terminal must be 0 or inf");
    std::optional<double> horizon;
    if (hor != "none") horizon = io_detail::parse_double(hor);

    CadlagPath p;
    if (kind == "event") {
        p = CadlagPath::event(std::move(times), std::move(values), terminal, horizon);
    } else if (kind == "grid") {
        if (times.size() < 2 && values.size() > 1)
            throw FormatError("path csv: grid needs at least two nodes to fix the step");
        const double step = times.size() >= 2 ? times[1] - times[0] : 1.0;
        p = CadlagPath::grid(step, std::move(values), terminal, horizon);
    } else {
        throw FormatError("path csv: unknown kind " + kind);
    }
    require_valid(p);
    return p;
}

inline void write_text_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + file.string());
    out << text;
    if (!out) throw IoError("write failed: " + file.string());
}

inline std::string read_text_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + file.string());
    return ss.str();
}

inline std::string ensemble_to_json(const PathEnsemble& ens) {
    nlohmann::json j;
    j["config_digest"] = ens.config_digest;
    j["seed"] = ens.seed;
    j["n_paths"] = ens.paths.size();
    j["stream_ids"] = ens.stream_ids;
    nlohmann::json paths = nlohmann::json::array();
    for (const CadlagPath& p : ens.paths) paths.push_back(path_to_csv(p));
    j["paths"] = std::move(paths);
    return j.dump(1);
}

inline PathEnsemble ensemble_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("ensemble json: ") + e.what());
    }
    PathEnsemble ens;
    try {
        ens.config_digest = j.at("config_digest").get<std::string>();
        ens.seed = j.at("seed").get<std::uint64_t>();
        ens.stream_ids = j.at("stream_ids").get<std::vector<std::uint64_t>>();
        for (const auto& s : j.at("paths"))
            ens.paths.push_back(path_from_csv(s.get<std::string>()));
        if (ens.paths.size() != j.at("n_paths").get<std::size_t>())
            throw FormatError("ensemble json: n_paths does not match path count");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("ensemble json: ") + e.what());
    }
    return ens;
}

/// Flow table as CSV: first column t, one column per lambda.
inline std::string flow_table_to_csv(const FlowTable& tab) {
    std::ostringstream out;
    out << "t";
    for (double l : tab.lambdas) out << ",lambda=" << io_detail::fmt(l);
    out << '\n';
    for (std::size_t i = 0; i < tab.times.size(); ++i) {
        out << io_detail::fmt(tab.times[i]);
        for (double v : tab.u[i]) out << ',' << io_detail::fmt(v);
        out << '\n';
    }
    return out.str();
}

inline FlowTable flow_table_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,", 0) != 0)
        throw FormatError("flow table csv: bad header");
    FlowTable tab;
    {
        std::istringstream hs(line);
        std::string cell;
        std::getline(hs, cell, ',');  // "t"
        while (std::getline(hs, cell, ',')) {
            const std::string tag = "lambda=";
            if (cell.rfind(tag, 0) != 0)
                throw FormatError("flow table csv: bad column header " + cell);
            tab.lambdas.push_back(io_detail::parse_double(cell.substr(tag.size())));
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        tab.times.push_back(io_detail::parse_double(cell));
        std::vector<double> row;
        while (std::getline(ls, cell, ','))
            row.push_back(io_detail::parse_double(cell));
        if (row.size() != tab.lambdas.size())
            throw FormatError("flow table csv: ragged row");
        tab.u.push_back(std::move(row));
    }
    return tab;
}

}  // namespace csbp

#endif  // CSBP_PATH_IO_HPP
