/**
 * @file io.hpp
 * @brief Result persistence: CSV tables, binary space-time fields, content
 * hashes, the adjoint cache and run manifests.
 *
 * Numbers are written in the shortest form that reads back to the same
 * double, so every CSV can be used for bitwise recomputation.
 *
 * Binary field layout (little endian): 8-byte magic "ECOFLD01", int32 N_h,
 * int32 N_t, float64 side, then (N_t+1)(N_h+1)^2 float64 values, slice by
 * slice, each slice row-major with rows along y.
 */

#ifndef ECOSPEED_IO_HPP
#define ECOSPEED_IO_HPP

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "dispersion.hpp"
#include "grid.hpp"
#include "moo.hpp"
#include "objectives.hpp"
#include "traffic.hpp"

namespace ecospeed {

inline constexpr const char* toolkit_version = "0.1.0";

inline std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
    double v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ParseError(what + ": '" + std::string(s) + "' is not a number");
    return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

/// Writes through a temporary file in the same directory and renames it.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

// ---- trajectories -----------------------------------------------------------

inline std::string trajectory_csv(const Scenario& s, const TrafficTrajectory& traj) {
    std::string out = "t,road,cell,rho\n";
    const double dt = s.dt();
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const std::string t = format_double(static_cast<double>(k) * dt);
        for (std::size_t e = 0; e < s.roads.size(); ++e) {
            const auto& rho = traj.snapshots[k].densities[e];
            for (std::size_t n = 0; n < rho.size(); ++n)
                out += t + ',' + std::to_string(s.roads[e].id) + ',' + std::to_string(n + 1) + ',' +
                       format_double(rho[n]) + '\n';
        }
    }
    return out;
}

inline std::string queue_csv(const Scenario& s, const TrafficTrajectory& traj) {
    std::string out = "t,road,queue\n";
    const double dt = s.dt();
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const std::string t = format_double(static_cast<double>(k) * dt);
        for (std::size_t q = 0; q < s.access.size(); ++q)
            out += t + ',' + std::to_string(s.access[q].road) + ',' + format_double(traj.snapshots[k].queues[q]) + '\n';
    }
    return out;
}

/// Step-averaged boundary flows; `t` is the start of the step.
inline std::string flow_csv(const Scenario& s, const TrafficTrajectory& traj) {
    std::string out = "t,road,end,flux\n";
    const double dt = s.dt();
    for (std::size_t k = 0; k < traj.flows.size(); ++k) {
        const std::string t = format_double(static_cast<double>(k) * dt);
        for (std::size_t e = 0; e < s.roads.size(); ++e) {
            const std::string id = std::to_string(s.roads[e].id);
            out += t + ',' + id + ",tail," + format_double(traj.flows[k].inflow[e]) + '\n';
            out += t + ',' + id + ",head," + format_double(traj.flows[k].outflow[e]) + '\n';
        }
    }
    return out;
}

namespace detail {

inline std::vector<std::vector<std::string>> read_table(const std::string& text, const std::vector<std::string>& header,
                                                        const std::string& what) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != header) throw ParseError(what + ": unexpected header");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (row.size() != header.size()) throw ParseError(what + ": wrong number of columns");
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace detail

/// Rebuilds densities and queues of a trajectory from its two CSV tables.
inline TrafficTrajectory read_trajectory_csv(const Scenario& s, const std::string& trajectory_text,
                                             const std::string& queue_text) {
    const auto nt = static_cast<std::size_t>(s.disc.n_time);
    TrafficTrajectory traj;
    traj.snapshots.assign(nt + 1, initial_state(s));
    for (std::size_t k = 0; k <= nt; ++k) traj.snapshots[k].time = static_cast<double>(k) * s.dt();
    const auto rows = detail::read_table(trajectory_text, {"t", "road", "cell", "rho"}, "trajectory");
    if (rows.size() != (nt + 1) * s.roads.size() * static_cast<std::size_t>(s.disc.n_cells))
        throw ParseError("trajectory: row count does not match the scenario");
    std::size_t r = 0;
    for (std::size_t k = 0; k <= nt; ++k)
        for (std::size_t e = 0; e < s.roads.size(); ++e)
            for (auto& rho : traj.snapshots[k].densities[e]) rho = parse_double(rows[r++][3], "trajectory.rho");
    const auto qrows = detail::read_table(queue_text, {"t", "road", "queue"}, "queues");
    if (qrows.size() != (nt + 1) * s.access.size()) throw ParseError("queues: row count does not match the scenario");
    r = 0;
    for (std::size_t k = 0; k <= nt; ++k)
        for (auto& q : traj.snapshots[k].queues) q = parse_double(qrows[r++][2], "queues.queue");
    return traj;
}

// ---- binary fields ----------------------------------------------------------

inline constexpr char field_magic[8] = {'E', 'C', 'O', 'F', 'L', 'D', '0', '1'};

template <class Tag>
std::string field_bytes(const SpaceTimeField<Tag>& f) {
    static_assert(sizeof(double) == 8);
    std::string out(field_magic, 8);
    auto put = [&](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
    const std::int32_t nh = f.grid().n, nt = f.n_time();
    const double side = f.grid().side;
    put(&nh, 4);
    put(&nt, 4);
    put(&side, 8);
    put(f.data().data(), f.data().size() * 8);
    return out;
}

template <class Tag>
SpaceTimeField<Tag> field_from_bytes(std::string_view bytes) {
    if (bytes.size() < 24 || std::memcmp(bytes.data(), field_magic, 8) != 0) throw ParseError("field: bad header");
    std::int32_t nh{}, nt{};
    double side{};
    std::memcpy(&nh, bytes.data() + 8, 4);
    std::memcpy(&nt, bytes.data() + 12, 4);
    std::memcpy(&side, bytes.data() + 16, 8);
    if (nh < 1 || nt < 0 || !(side > 0.0)) throw ParseError("field: bad dimensions");
    SpaceTimeField<Tag> f(Grid2D{side, nh}, nt);
    if (bytes.size() != 24 + f.data().size() * 8) throw ParseError("field: truncated data");
    std::memcpy(f.data().data(), bytes.data() + 24, f.data().size() * 8);
    return f;
}

// ---- adjoint cache ----------------------------------------------------------

/// Hash of everything the adjoint depends on: grid, dispersion parameters, T and N_t.
inline std::string adjoint_key(const Scenario& s) {
    std::string key = "adjoint-v1";
    for (double v : {s.side, s.dispersion.mu, s.dispersion.kappa, s.dispersion.wind.x, s.dispersion.wind.y, s.horizon})
        key += ';' + format_double(v);
    key += ';' + std::to_string(s.disc.n_grid) + ';' + std::to_string(s.disc.n_time);
    return sha256_hex(key);
}

/// Loads the adjoint from `dir` when a matching cache file exists, otherwise
/// solves it and stores it there.
inline AdjointField load_or_solve_adjoint(const Scenario& s, const std::filesystem::path& dir, bool* cache_hit = nullptr) {
    const auto path = dir / ("adjoint-" + adjoint_key(s).substr(0, 16) + ".bin");
    if (std::filesystem::exists(path)) {
        try {
            auto p = field_from_bytes<AdjointTag>(read_file(path));
            if (p.grid() == Grid2D::of(s) && p.n_time() == s.disc.n_time) {
                if (cache_hit) *cache_hit = true;
                return p;
            }
        } catch (const ParseError&) {
            // fall through and rebuild a damaged cache file
        }
    }
    if (cache_hit) *cache_hit = false;
    auto p = solve_adjoint(s);
    std::filesystem::create_directories(dir);
    atomic_write(path, field_bytes(p));
    return p;
}

// ---- objective tables -------------------------------------------------------

inline std::string policy_header(std::size_t d) {
    std::string h;
    for (std::size_t i = 1; i <= d; ++i) h += "V_" + std::to_string(i) + ',';
    return h;
}

inline std::string objective_log_csv(const std::vector<std::pair<SpeedLimitPolicy, ObjectiveValues>>& rows,
                                     double delta) {
    const std::size_t d = rows.empty() ? 0 : rows.front().first.v_max.size();
    std::string out = policy_header(d) + "J_flow,J_diff,J_queue,J_poll\n";
    for (const auto& [p, v] : rows) {
        for (double x : p.v_max) out += format_double(x) + ',';
        out += format_double(v.flow) + ',' + format_double(v.diff) + ',' + format_double(v.queue) + ',' +
               format_double(v.poll(delta)) + '\n';
    }
    return out;
}

struct FrontRow {
    std::vector<double> policy;
    ObjectiveValues values;
};

/// Names of the normalized columns for a mode.
inline std::vector<std::string> normalized_columns(ObjectiveMode mode) {
    if (mode == ObjectiveMode::TwoObjective) return {"N_flow", "N_poll"};
    return {"N_flow", "N_diff", "N_queue"};
}

/// Front table: policy, raw objectives and the normalized objective vector.
/// `normalized` may be empty, in which case only raw columns are written.
inline std::string front_csv(const std::vector<FrontRow>& rows, const std::vector<ObjectiveVector>& normalized,
                             ObjectiveMode mode, double delta, std::size_t d) {
    std::string out = policy_header(d) + "J_flow,J_diff,J_queue,J_poll";
    if (!normalized.empty())
        for (const auto& c : normalized_columns(mode)) out += ',' + c;
    out += '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (double x : rows[r].policy) out += format_double(x) + ',';
        const auto& v = rows[r].values;
        out += format_double(v.flow) + ',' + format_double(v.diff) + ',' + format_double(v.queue) + ',' +
               format_double(v.poll(delta));
        if (!normalized.empty())
            for (double x : normalized[r]) out += ',' + format_double(x);
        out += '\n';
    }
    return out;
}

/// Parsed CSV with a header row; columns looked up by name.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ParseError("missing column '" + name + "'");
    }

    static CsvTable parse(const std::string& text, const std::string& what) {
        CsvTable t;
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line) || line.empty()) return t;
        t.header = split_csv_line(line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto row = split_csv_line(line);
            if (row.size() != t.header.size()) throw ParseError(what + ": wrong number of columns");
            t.rows.push_back(std::move(row));
        }
        return t;
    }
};

/// Per-road min/max of the speed limits over a set of policies.
inline std::string speed_limit_range_csv(const Scenario& s, const std::vector<std::vector<double>>& policies) {
    std::string out = "road,v_min,v_max\n";
    if (policies.empty()) return out;
    for (std::size_t e = 0; e < s.roads.size(); ++e) {
        double lo = policies.front()[e], hi = lo;
        for (const auto& p : policies) {
            lo = std::min(lo, p[e]);
            hi = std::max(hi, p[e]);
        }
        out += std::to_string(s.roads[e].id) + ',' + format_double(lo) + ',' + format_double(hi) + '\n';
    }
    return out;
}

// ---- manifest ---------------------------------------------------------------

struct RunManifest {
    std::string command;
    std::string scenario_path;
    std::string scenario_hash;
    std::uint64_t seed{};
    std::size_t budget{};
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
    nlohmann::json extra = nlohmann::json::object();
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["scenario"] = {{"path", m.scenario_path}, {"sha256", m.scenario_hash}};
    j["seed"] = m.seed;
    j["budget"] = m.budget;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["outputs"] = m.outputs;
    j["version"] = toolkit_version;
    if (!m.extra.empty()) j["details"] = m.extra;
    atomic_write(dir / "manifest.json", j.dump(2) + "\n");
}

} // namespace ecospeed

#endif // ECOSPEED_IO_HPP
