#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "sfld.hpp"
#include "state.hpp"

namespace sf {

// A compound state on disk is a directory:
//   state.json   axis, tag, interval, grid, optional levels / N for the next step
//   theta.sfld   one record per slice
//   c.sfld       one record per slice
//   R.sfld       two records per slice (components 1, 2)
struct StoredState {
    CompoundState state;
    nlohmann::json meta;    // whatever else state.json carried
};

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << std::setw(2) << j << "\n";
    if (!os) throw IoError("write failed for " + path);
}

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }
}

inline void save_state(const std::string& dir, const CompoundState& s, nlohmann::json meta = nlohmann::json::object()) {
    namespace fs = std::filesystem;
    s.check_shape();
    fs::create_directories(dir);
    std::vector<Field> r;
    r.reserve(2 * s.R.size());
    for (const auto& v : s.R) {
        r.push_back(v[0]);
        r.push_back(v[1]);
    }
    sfld::save(dir + "/theta.sfld", s.theta);
    sfld::save(dir + "/c.sfld", s.c);
    sfld::save(dir + "/R.sfld", r);
    meta["grid"] = s.grid().n();
    meta["axis"] = {{"t0", s.axis.t0}, {"dt", s.axis.dt}, {"count", s.axis.count}};
    meta["tag"] = tag_name(s.tag);
    meta["interval"] = {s.I_lo, s.I_hi};
    write_json(dir + "/state.json", meta);
}

inline StoredState load_state(const std::string& dir) {
    StoredState out;
    out.meta = read_json(dir + "/state.json");
    CompoundState& s = out.state;
    try {
        const auto& ax = out.meta.at("axis");
        s.axis = {ax.at("t0").get<double>(), ax.at("dt").get<double>(), ax.at("count").get<int>()};
        std::string tag = out.meta.at("tag").get<std::string>();
        if (tag != "A" && tag != "B") throw IoError("state tag must be A or B");
        s.tag = tag == "A" ? VectorTag::A : VectorTag::B;
        s.I_lo = out.meta.at("interval").at(0).get<double>();
        s.I_hi = out.meta.at("interval").at(1).get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(dir + "/state.json: " + e.what());
    }
    s.theta = sfld::load(dir + "/theta.sfld");
    s.c = sfld::load(dir + "/c.sfld");
    auto r = sfld::load(dir + "/R.sfld");
    if (r.size() != 2 * s.c.size()) throw SizeMismatch("R.sfld must hold two records per slice");
    for (std::size_t i = 0; i < r.size(); i += 2) s.R.push_back({std::move(r[i]), std::move(r[i + 1])});
    s.check_shape();
    if (s.theta.empty()) throw IoError(dir + " holds no slices");
    require_same(s.theta[0].grid, s.c[0].grid);
    require_same(s.theta[0].grid, s.R[0][0].grid);
    return out;
}

} // namespace sf
