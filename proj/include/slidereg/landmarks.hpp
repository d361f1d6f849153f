#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slidereg/geometry.hpp"
#include "slidereg/numfmt.hpp"

namespace slidereg {

// One annotated point pair: the source (IHC) location plus two target (H&E)
// locations placed by independent annotators.
struct LandmarkRecord {
    std::string pair_id;
    std::string point_id;
    Vec2 src;
    Vec2 tgt1;
    Vec2 tgt2;
    double mpp = 1.0;
};

struct SubmissionRecord {
    std::string pair_id;
    std::string point_id;
    std::optional<Vec2> reg; // absent = missing landmark
};

struct PairDims {
    int width = 0;
    int height = 0;
};

namespace csv_detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline void expect_header(const std::string& line, const std::string& expected,
                          const std::string& path) {
    std::string got = line;
    if (!got.empty() && got.back() == '\r') got.pop_back();
    if (got != expected)
        fail(errc::schema, path + ":1: expected header '" + expected + "', got '" + got + "'");
}

} // namespace csv_detail

inline std::vector<LandmarkRecord> read_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) fail(errc::schema, path + ": empty file");
    csv_detail::expect_header(line, "pair_id,point_id,src_x,src_y,tgt1_x,tgt1_y,tgt2_x,tgt2_y,mpp",
                              path);
    std::vector<LandmarkRecord> records;
    std::map<std::pair<std::string, std::string>, int> seen;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto f = csv_detail::split_fields(line);
        if (f.size() != 9)
            fail(errc::schema, path + ":" + std::to_string(lineno) + ": expected 9 fields, got " +
                                   std::to_string(f.size()));
        LandmarkRecord r;
        r.pair_id = f[0];
        r.point_id = f[1];
        std::string where = path + ":" + std::to_string(lineno);
        r.src = {parse_double(f[2], where), parse_double(f[3], where)};
        r.tgt1 = {parse_double(f[4], where), parse_double(f[5], where)};
        r.tgt2 = {parse_double(f[6], where), parse_double(f[7], where)};
        r.mpp = parse_double(f[8], where);
        if (!(r.mpp > 0.0)) fail(errc::schema, where + ": mpp must be positive");
        if (!seen.emplace(std::make_pair(r.pair_id, r.point_id), lineno).second)
            fail(errc::schema, where + ": duplicate (pair_id, point_id)");
        records.push_back(std::move(r));
    }
    return records;
}

inline void write_truth_csv(const std::vector<LandmarkRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(errc::io, "cannot open '" + path + "' for writing");
    out << "pair_id,point_id,src_x,src_y,tgt1_x,tgt1_y,tgt2_x,tgt2_y,mpp\n";
    for (const auto& r : records)
        out << r.pair_id << "," << r.point_id << "," << format_g17(r.src.x) << ","
            << format_g17(r.src.y) << "," << format_g17(r.tgt1.x) << "," << format_g17(r.tgt1.y)
            << "," << format_g17(r.tgt2.x) << "," << format_g17(r.tgt2.y) << ","
            << format_g17(r.mpp) << "\n";
}

inline std::vector<SubmissionRecord> read_submission_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) fail(errc::schema, path + ": empty file");
    csv_detail::expect_header(line, "pair_id,point_id,reg_x,reg_y", path);
    std::vector<SubmissionRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto f = csv_detail::split_fields(line);
        if (f.size() != 4)
            fail(errc::schema, path + ":" + std::to_string(lineno) + ": expected 4 fields, got " +
                                   std::to_string(f.size()));
        SubmissionRecord r;
        r.pair_id = f[0];
        r.point_id = f[1];
        std::string where = path + ":" + std::to_string(lineno);
        bool has_x = !f[2].empty(), has_y = !f[3].empty();
        if (has_x != has_y) fail(errc::schema, where + ": reg_x/reg_y must both be present or both empty");
        if (has_x) r.reg = Vec2{parse_double(f[2], where), parse_double(f[3], where)};
        records.push_back(std::move(r));
    }
    return records;
}

inline void write_submission_csv(const std::vector<SubmissionRecord>& records,
                                 const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(errc::io, "cannot open '" + path + "' for writing");
    out << "pair_id,point_id,reg_x,reg_y\n";
    for (const auto& r : records) {
        out << r.pair_id << "," << r.point_id << ",";
        if (r.reg) out << format_g17(r.reg->x) << "," << format_g17(r.reg->y);
        else out << ",";
        out << "\n";
    }
}

inline std::map<std::string, PairDims> read_dims_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) fail(errc::schema, path + ": empty file");
    csv_detail::expect_header(line, "pair_id,width,height", path);
    std::map<std::string, PairDims> dims;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto f = csv_detail::split_fields(line);
        std::string where = path + ":" + std::to_string(lineno);
        if (f.size() != 3) fail(errc::schema, where + ": expected 3 fields");
        PairDims d;
        d.width = int(parse_int(f[1], where));
        d.height = int(parse_int(f[2], where));
        if (d.width <= 0 || d.height <= 0) fail(errc::schema, where + ": non-positive dims");
        if (!dims.emplace(f[0], d).second) fail(errc::schema, where + ": duplicate pair_id");
    }
    return dims;
}

inline void write_dims_csv(const std::map<std::string, PairDims>& dims, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(errc::io, "cannot open '" + path + "' for writing");
    out << "pair_id,width,height\n";
    for (const auto& [id, d] : dims) out << id << "," << d.width << "," << d.height << "\n";
}

} // namespace slidereg
