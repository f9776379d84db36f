#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tnale/errors.hpp"
#include "tnale/landscape.hpp"
#include "tnale/objective.hpp"
#include "tnale/structure.hpp"
#include "tnale/tensor.hpp"

namespace tnale::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b.data(), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw FormatError("tnsr: truncated header");
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace detail

/// TNSR v1: "TNSR", u32 order, u32 dims, f64 values; little endian, row-major.
inline void write_tnsr(std::ostream& os, const DenseTensor& t) {
    os.write("TNSR", 4);
    detail::put_u32(os, static_cast<std::uint32_t>(t.order()));
    for (std::size_t d : t.dims()) {
        if (d > std::numeric_limits<std::uint32_t>::max()) throw FormatError("tnsr: dimension exceeds 32 bits");
        detail::put_u32(os, static_cast<std::uint32_t>(d));
    }
    for (double v : t.values()) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        std::array<char, 8> b{};
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
        os.write(b.data(), 8);
    }
    if (!os) throw FormatError("tnsr: write failed");
}

inline DenseTensor read_tnsr(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "TNSR", 4) != 0)
        throw FormatError("tnsr: bad magic bytes");
    const std::uint32_t order = detail::get_u32(is);
    if (order == 0) throw FormatError("tnsr: order must be positive");
    Shape dims(order);
    for (auto& d : dims) {
        d = detail::get_u32(is);
        if (d == 0) throw FormatError("tnsr: zero dimension");
    }
    DenseTensor t(dims);
    for (double& v : t.values()) {
        std::array<unsigned char, 8> b{};
        if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("tnsr: truncated payload");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        v = std::bit_cast<double>(bits);
    }
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("tnsr: trailing bytes after payload");
    return t;
}

inline void save_tnsr(const std::filesystem::path& path, const DenseTensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    write_tnsr(os, t);
}

inline DenseTensor load_tnsr(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    return read_tnsr(is);
}

inline Json structure_to_json(const TnStructure& s) {
    Json j;
    j["n"] = s.n_vertices();
    j["phys_dims"] = s.phys_dims();
    std::vector<std::size_t> bond;
    for (std::size_t i = 0; i < s.n_vertices(); ++i)
        for (std::size_t k = i + 1; k < s.n_vertices(); ++k) bond.push_back(s.bond(i, k));
    j["bond"] = bond;
    if (s.template_edges()) {
        Json edges = Json::array();
        for (const Edge& e : *s.template_edges()) edges.push_back({e.a, e.b});
        j["template_edges"] = edges;
    }
    return j;
}

inline TnStructure structure_from_json(const Json& j) {
    try {
        const auto n = j.at("n").get<std::size_t>();
        auto phys = j.at("phys_dims").get<std::vector<std::size_t>>();
        if (phys.size() != n) throw FormatError("structure json: phys_dims length differs from n");
        std::optional<std::vector<Edge>> tmpl;
        if (j.contains("template_edges") && !j["template_edges"].is_null()) {
            tmpl.emplace();
            for (const auto& e : j["template_edges"]) tmpl->emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
        }
        TnStructure s(std::move(phys), std::move(tmpl));
        const auto bond = j.at("bond").get<std::vector<std::size_t>>();
        if (bond.size() != n * (n - 1) / 2) throw FormatError("structure json: bond list has the wrong length");
        std::size_t k = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b, ++k)
                if (bond[k] != 1) s.set_bond(Edge(a, b), bond[k]);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("structure json: ") + e.what());
    } catch (const StructureError& e) {
        throw FormatError(std::string("structure json: ") + e.what());
    }
}

inline Json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    try {
        return Json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

inline std::string structure_id(const TnStructure& s) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << s.hash();
    return os.str();
}

/// Shortest decimal form that round-trips.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

inline constexpr const char* kTraceHeader = "eval_index,objective,rse,compression_ratio,estimated,structure_id";

/// Writes the trace CSV and returns the structures referenced by it.
inline std::map<std::string, TnStructure> write_trace_csv(std::ostream& os,
                                                          const std::vector<EvaluationRecord>& records) {
    std::map<std::string, TnStructure> ids;
    os << kTraceHeader << '\n';
    for (const auto& r : records) {
        const std::string id = structure_id(r.structure);
        ids.emplace(id, r.structure);
        os << r.eval_index << ',' << format_double(r.objective) << ',' << format_double(r.rse) << ','
           << format_double(r.compression_ratio) << ',' << (r.estimated ? 1 : 0) << ',' << id << '\n';
    }
    return ids;
}

struct TraceRow {
    std::size_t eval_index = 0;
    double objective = 0.0;
    double rse = 0.0;
    double compression_ratio = 0.0;
    bool estimated = false;
    std::string structure_id;
};

inline std::vector<TraceRow> read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kTraceHeader) throw FormatError("trace csv: unexpected header");
    std::vector<TraceRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw FormatError("trace csv: line " + std::to_string(lineno) + " has " +
                                             std::to_string(f.size()) + " fields");
        try {
            TraceRow r;
            r.eval_index = std::stoull(f[0]);
            r.objective = std::stod(f[1]);
            r.rse = std::stod(f[2]);
            r.compression_ratio = std::stod(f[3]);
            if (f[4] != "0" && f[4] != "1") throw FormatError("estimated flag");
            r.estimated = f[4] == "1";
            r.structure_id = f[5];
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw FormatError("trace csv: line " + std::to_string(lineno) + " is malformed (" + e.what() + ")");
        }
    }
    return rows;
}

inline std::vector<TraceRow> load_trace_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    return read_trace_csv(is);
}

inline Json record_to_json(const EvaluationRecord& r) {
    Json j;
    j["structure"] = structure_to_json(r.structure);
    j["objective"] = r.objective;
    j["rse"] = r.rse;
    j["compression_ratio"] = r.compression_ratio;
    j["eval_index"] = r.eval_index;
    j["estimated"] = r.estimated;
    return j;
}

inline Json spectra_to_json(const std::vector<ModeSpectrum>& spectra, double tolerance) {
    Json modes = Json::array();
    for (std::size_t k = 0; k < spectra.size(); ++k) {
        Json m;
        m["mode"] = k;
        m["singular_values"] = spectra[k].singular_values;
        m["rank_at_tolerance"] = spectra[k].rank_at_tolerance;
        modes.push_back(m);
    }
    Json j;
    j["tolerance"] = tolerance;
    j["modes"] = modes;
    return j;
}

}  // namespace tnale::io
