#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chaoslab/binary.hpp"
#include "chaoslab/chaos_measure.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Ensemble store layout (little-endian):
//   "CHAO" | u32 version | u32 payload (2 = ensemble) | u32 schema id | u32 0
//   | u32 field kind | u32 measure variant | f64 t | u64 m | f64 beta | u32 level | u32 0 | u64 seed
//   | u64 count | count x (u64 replica_id, f64 total, f64 m0, f64 m1, f64 max_level)
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::uint32_t kPayloadEnsemble = 2;
inline constexpr std::uint32_t kRecordSchema = 1;

/// 17 significant digits; enough to round-trip any double.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    std::istringstream is(s);
    is.imbue(std::locale::classic());
    double v = 0.0;
    is >> v;
    if (is.fail() || !is.eof()) throw IoError("bad number in CSV: '" + s + "'");
    return v;
}

inline std::ofstream open_out(const fs::path& p, bool binary = false) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
    }
    std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
    if (!os) throw IoError("cannot open " + p.string() + " for writing");
    return os;
}

inline std::ifstream open_in(const fs::path& p, bool binary = false) {
    std::ifstream is(p, binary ? std::ios::binary : std::ios::in);
    if (!is) throw IoError("cannot open " + p.string());
    return is;
}

inline json spec_json(const EnsembleSpec& s) {
    return json{{"field", {{"kind", std::string(to_string(s.field.kind))}, {"t", s.field.t}, {"m", s.field.m}}},
                {"measure", {{"kind", std::string(to_string(s.kind.variant))}, {"beta", s.kind.beta}}},
                {"level", s.level},
                {"seed", s.seed}};
}

inline void write_store(std::ostream& os, const Ensemble& e) {
    binary::put_magic(os);
    binary::put<std::uint32_t>(os, kStoreVersion);
    binary::put<std::uint32_t>(os, kPayloadEnsemble);
    binary::put<std::uint32_t>(os, kRecordSchema);
    binary::put<std::uint32_t>(os, 0);
    binary::put<std::uint32_t>(os, e.spec.field.kind == FieldKind::ExactX ? 0U : 1U);
    binary::put<std::uint32_t>(os, static_cast<std::uint32_t>(e.spec.kind.variant));
    binary::put<double>(os, e.spec.field.t);
    binary::put<std::uint64_t>(os, e.spec.field.m);
    binary::put<double>(os, e.spec.kind.beta);
    binary::put<std::uint32_t>(os, e.spec.level);
    binary::put<std::uint32_t>(os, 0);
    binary::put<std::uint64_t>(os, e.spec.seed);
    binary::put<std::uint64_t>(os, e.records.size());
    for (const auto& r : e.records) {
        binary::put<std::uint64_t>(os, r.replica_id);
        binary::put<double>(os, r.total);
        binary::put<double>(os, r.m0);
        binary::put<double>(os, r.m1);
        binary::put<double>(os, r.max_level);
    }
}

inline Ensemble read_store(std::istream& is) {
    binary::expect_magic(is);
    if (binary::get<std::uint32_t>(is) != kStoreVersion) throw IoError("unsupported store version");
    if (binary::get<std::uint32_t>(is) != kPayloadEnsemble) throw IoError("file is not an ensemble store");
    const auto schema = binary::get<std::uint32_t>(is);
    if (schema != kRecordSchema) throw ConfigError("record schema id " + std::to_string(schema) + " is not supported");
    binary::get<std::uint32_t>(is);
    Ensemble e;
    const auto fk = binary::get<std::uint32_t>(is);
    const auto mv = binary::get<std::uint32_t>(is);
    if (fk > 1 || mv > 2) throw IoError("corrupt store header");
    e.spec.field.kind = fk == 0 ? FieldKind::ExactX : FieldKind::StarY;
    e.spec.kind.variant = static_cast<MeasureVariant>(mv);
    e.spec.kind.field_kind = e.spec.field.kind;
    e.spec.field.t = binary::get<double>(is);
    e.spec.field.m = static_cast<std::size_t>(binary::get<std::uint64_t>(is));
    e.spec.kind.beta = binary::get<double>(is);
    e.spec.level = binary::get<std::uint32_t>(is);
    binary::get<std::uint32_t>(is);
    e.spec.seed = binary::get<std::uint64_t>(is);
    const auto count = binary::get<std::uint64_t>(is);
    if (count > (std::uint64_t{1} << 40)) throw IoError("corrupt store: implausible record count");
    e.records.resize(static_cast<std::size_t>(count));
    for (auto& r : e.records) {
        r.replica_id = binary::get<std::uint64_t>(is);
        r.total = binary::get<double>(is);
        r.m0 = binary::get<double>(is);
        r.m1 = binary::get<double>(is);
        r.max_level = binary::get<double>(is);
    }
    return e;
}

inline json sidecar(const Ensemble& e) {
    json j = spec_json(e.spec);
    j["format_version"] = kStoreVersion;
    j["schema_id"] = kRecordSchema;
    j["N"] = e.records.size();
    return j;
}

/// Writes path (binary) and path + ".json" (metadata).
inline void save_store(const fs::path& path, const Ensemble& e) {
    {
        auto os = open_out(path, true);
        write_store(os, e);
    }
    auto js = open_out(fs::path(path.string() + ".json"));
    js << sidecar(e).dump(2) << '\n';
    if (!js) throw IoError("write failed: " + path.string() + ".json");
}

inline Ensemble load_store(const fs::path& path) {
    auto is = open_in(path, true);
    return read_store(is);
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kEnsembleCsvHeader = "replica_id,total,m0,m1,max_level_n";

inline void write_csv(std::ostream& os, const Ensemble& e) {
    os << kEnsembleCsvHeader << '\n';
    for (const auto& r : e.records) {
        os << r.replica_id << ',' << fmt(r.total) << ',' << fmt(r.m0) << ',' << fmt(r.m1) << ',' << fmt(r.max_level)
           << '\n';
    }
    if (!os) throw IoError("CSV write failed");
}

inline std::vector<EnsembleRecord> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kEnsembleCsvHeader) throw IoError("CSV header mismatch");
    std::vector<EnsembleRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw IoError("CSV row has " + std::to_string(cells.size()) + " fields");
        EnsembleRecord r;
        try {
            r.replica_id = std::stoull(cells[0]);
        } catch (const std::exception&) {
            throw IoError("bad replica id in CSV: '" + cells[0] + "'");
        }
        r.total = parse_double(cells[1]);
        r.m0 = parse_double(cells[2]);
        r.m1 = parse_double(cells[3]);
        r.max_level = parse_double(cells[4]);
        out.push_back(r);
    }
    return out;
}

/// N, mean and bootstrap CI for every tracked column.
inline json summary(const Ensemble& e) {
    json j = spec_json(e.spec);
    j["N"] = e.records.size();
    json st = json::object();
    const std::pair<const char*, double EnsembleRecord::*> cols[] = {
        {"total", &EnsembleRecord::total}, {"m0", &EnsembleRecord::m0}, {"m1", &EnsembleRecord::m1},
        {"max_level_n", &EnsembleRecord::max_level}};
    for (const auto& [name, member] : cols) {
        if (e.records.empty()) {
            st[name] = {{"N", 0}, {"mean", nullptr}, {"ci", nullptr}};
            continue;
        }
        const auto est = stats::bootstrap_mean(e.column(member));
        st[name] = {{"N", e.records.size()}, {"mean", est.value}, {"ci", {est.lo, est.hi}}};
    }
    j["statistics"] = st;
    return j;
}

inline void write_text(const fs::path& p, const std::string& text) {
    auto os = open_out(p);
    os << text;
    if (!os) throw IoError("write failed: " + p.string());
}

} // namespace chaoslab::io
