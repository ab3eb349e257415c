/**
 * @file scenario_io.hpp
 * @brief JSON scenario schema: loading with defaults and schema checks, and
 * the inverse serialization.
 */

#ifndef ECOSPEED_SCENARIO_IO_HPP
#define ECOSPEED_SCENARIO_IO_HPP

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "network.hpp"

namespace ecospeed {

namespace detail {

using Json = nlohmann::json;

inline std::string line_col(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

class Reader {
public:
    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw ParseError(path + ": " + what);
    }

    static const Json& field(const Json& obj, const std::string& key, const std::string& path) {
        if (!obj.is_object()) fail(path, "expected an object");
        auto it = obj.find(key);
        if (it == obj.end()) fail(path, "missing field '" + key + "'");
        return *it;
    }

    static const Json* optional(const Json& obj, const std::string& key) {
        auto it = obj.find(key);
        return it == obj.end() || it->is_null() ? nullptr : &*it;
    }

    static double number(const Json& v, const std::string& path) {
        if (!v.is_number()) fail(path, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(path, "expected a finite number");
        return x;
    }

    static int integer(const Json& v, const std::string& path) {
        if (!v.is_number_integer()) fail(path, "expected an integer");
        return v.get<int>();
    }

    static double positive(const Json& v, const std::string& path) {
        const double x = number(v, path);
        if (!(x > 0.0)) fail(path, "must be positive");
        return x;
    }

    static double nonnegative(const Json& v, const std::string& path) {
        const double x = number(v, path);
        if (x < 0.0) fail(path, "must be nonnegative");
        return x;
    }

    static Vec2 point(const Json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 2) fail(path, "expected [x, y]");
        return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
    }

    static std::vector<int> ids(const Json& v, const std::string& path) {
        if (!v.is_array()) fail(path, "expected an array of road ids");
        std::vector<int> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(integer(v[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }
};

inline bool sums_to_one(double a, double b) { return std::abs(a + b - 1.0) <= 1e-12; }

inline Json to_json(Vec2 p) { return Json::array({p.x, p.y}); }

} // namespace detail

/// Parses scenario text. Omitted phi0, kappa, queue0 default to zero; omitted
/// objectives default to delta = 0 and two-objective mode.
inline Scenario load_scenario(std::string_view text) {
    using detail::Json;
    using R = detail::Reader;

    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw ParseError("parse error at " + detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError("scenario: top level must be an object");

    Scenario s;
    s.horizon = R::positive(R::field(doc, "horizon", "scenario"), "horizon");

    const Json& domain = R::field(doc, "domain", "scenario");
    s.side = R::positive(R::field(domain, "side", "domain"), "domain.side");
    s.disc.n_grid = R::integer(R::field(domain, "n_grid", "domain"), "domain.n_grid");
    if (s.disc.n_grid < 2) R::fail("domain.n_grid", "must be at least 2");

    const Json& disc = R::field(doc, "discretization", "scenario");
    s.disc.n_cells = R::integer(R::field(disc, "n_cells", "discretization"), "discretization.n_cells");
    s.disc.n_time = R::integer(R::field(disc, "n_time", "discretization"), "discretization.n_time");
    if (s.disc.n_cells < 1) R::fail("discretization.n_cells", "must be positive");
    if (s.disc.n_time < 1) R::fail("discretization.n_time", "must be positive");

    const Json& roads = R::field(doc, "roads", "scenario");
    if (!roads.is_array() || roads.empty()) R::fail("roads", "expected a nonempty array");
    std::set<int> seen;
    for (std::size_t i = 0; i < roads.size(); ++i) {
        const std::string p = "roads[" + std::to_string(i) + "]";
        const Json& jr = roads[i];
        Road r;
        r.id = R::integer(R::field(jr, "id", p), p + ".id");
        if (!seen.insert(r.id).second) R::fail(p + ".id", "duplicate road id " + std::to_string(r.id));
        r.curve.push_back(R::point(R::field(jr, "start", p), p + ".start"));
        if (const Json* via = R::optional(jr, "via")) {
            if (!via->is_array()) R::fail(p + ".via", "expected an array of points");
            for (std::size_t k = 0; k < via->size(); ++k)
                r.curve.push_back(R::point((*via)[k], p + ".via[" + std::to_string(k) + "]"));
        }
        r.curve.push_back(R::point(R::field(jr, "end", p), p + ".end"));
        for (std::size_t k = 1; k < r.curve.size(); ++k)
            if (norm(r.curve[k] - r.curve[k - 1]) <= 0.0) R::fail(p, "polyline has a zero-length segment");
        r.width = R::positive(R::field(jr, "width", p), p + ".width");
        r.rho_max = R::positive(R::field(jr, "rho_max", p), p + ".rho_max");
        r.v_min = R::positive(R::field(jr, "v_min", p), p + ".v_min");
        r.v_max = R::positive(R::field(jr, "v_max", p), p + ".v_max");
        if (r.v_min > r.v_max) R::fail(p, "v_min exceeds v_max");
        const Json& rho0 = R::field(jr, "rho0", p);
        if (rho0.is_array()) {
            if (rho0.size() != static_cast<std::size_t>(s.disc.n_cells))
                R::fail(p + ".rho0", "expected " + std::to_string(s.disc.n_cells) + " cell values");
            for (std::size_t k = 0; k < rho0.size(); ++k)
                r.rho0.push_back(R::nonnegative(rho0[k], p + ".rho0[" + std::to_string(k) + "]"));
        } else {
            r.rho0.assign(static_cast<std::size_t>(s.disc.n_cells), R::nonnegative(rho0, p + ".rho0"));
        }
        for (double v : r.rho0)
            if (v > r.rho_max) R::fail(p + ".rho0", "initial density exceeds rho_max");
        s.roads.push_back(std::move(r));
    }
    std::sort(s.roads.begin(), s.roads.end(), [](const Road& a, const Road& b) { return a.id < b.id; });

    auto require_road = [&](int id, const std::string& p) {
        if (!s.find_road(id)) R::fail(p, "references missing road " + std::to_string(id));
    };

    if (const Json* junctions = R::optional(doc, "junctions")) {
        if (!junctions->is_array()) R::fail("junctions", "expected an array");
        for (std::size_t i = 0; i < junctions->size(); ++i) {
            const std::string p = "junctions[" + std::to_string(i) + "]";
            const Json& jj = (*junctions)[i];
            Junction j;
            const Json& kind = R::field(jj, "kind", p);
            const std::string k = kind.is_string() ? kind.get<std::string>() : "";
            if (k == "one_to_one")
                j.kind = JunctionKind::OneToOne;
            else if (k == "one_to_two")
                j.kind = JunctionKind::OneToTwo;
            else if (k == "two_to_one")
                j.kind = JunctionKind::TwoToOne;
            else
                R::fail(p + ".kind", "expected one_to_one, one_to_two or two_to_one");
            j.incoming = R::ids(R::field(jj, "in", p), p + ".in");
            j.outgoing = R::ids(R::field(jj, "out", p), p + ".out");
            if (j.incoming.size() != expected_incoming(j.kind) || j.outgoing.size() != expected_outgoing(j.kind))
                R::fail(p, std::string("road count does not match kind ") + to_string(j.kind));
            for (int id : j.incoming) require_road(id, p + ".in");
            for (int id : j.outgoing) require_road(id, p + ".out");
            auto rates = [&](const char* key) {
                const Json& a = R::field(jj, key, p);
                if (!a.is_array() || a.size() != 2) R::fail(p + "." + key, "expected two rates");
                std::array<double, 2> out{};
                for (std::size_t m = 0; m < 2; ++m) {
                    out[m] = R::number(a[m], p + "." + key);
                    if (!(out[m] > 0.0 && out[m] < 1.0)) R::fail(p + "." + key, "rates must lie in (0, 1)");
                }
                return out;
            };
            if (j.kind == JunctionKind::OneToTwo) {
                j.alpha = rates("alpha");
                if (!detail::sums_to_one(j.alpha[0], j.alpha[1]))
                    R::fail(p + ".alpha", "distribution rates must sum to 1");
            }
            if (j.kind == JunctionKind::TwoToOne) {
                j.beta = rates("beta");
                if (!detail::sums_to_one(j.beta[0], j.beta[1])) R::fail(p + ".beta", "priority rates must sum to 1");
            }
            s.junctions.push_back(std::move(j));
        }
    }

    if (const Json* access = R::optional(doc, "access")) {
        if (!access->is_array()) R::fail("access", "expected an array");
        for (std::size_t i = 0; i < access->size(); ++i) {
            const std::string p = "access[" + std::to_string(i) + "]";
            const Json& ja = (*access)[i];
            AccessBoundary a;
            a.road = R::integer(R::field(ja, "road", p), p + ".road");
            require_road(a.road, p + ".road");
            const Json& inflow = R::field(ja, "inflow", p);
            if (inflow.is_object()) {
                const Json& times = R::field(inflow, "times", p + ".inflow");
                const Json& rates = R::field(inflow, "rates", p + ".inflow");
                if (!times.is_array() || !rates.is_array() || times.empty() || times.size() != rates.size())
                    R::fail(p + ".inflow", "times and rates must be nonempty arrays of equal length");
                a.inflow.times.clear();
                a.inflow.rates.clear();
                for (std::size_t k = 0; k < times.size(); ++k) {
                    a.inflow.times.push_back(R::number(times[k], p + ".inflow.times"));
                    a.inflow.rates.push_back(R::nonnegative(rates[k], p + ".inflow.rates"));
                    if (k > 0 && !(a.inflow.times[k] > a.inflow.times[k - 1]))
                        R::fail(p + ".inflow.times", "must be strictly increasing");
                }
            } else {
                a.inflow = InflowSeries::constant(R::nonnegative(inflow, p + ".inflow"));
            }
            if (const Json* q0 = R::optional(ja, "queue0")) a.initial_queue = R::nonnegative(*q0, p + ".queue0");
            s.access.push_back(std::move(a));
        }
    }

    if (const Json* exits = R::optional(doc, "exits")) {
        s.exits = R::ids(*exits, "exits");
        for (int id : s.exits) require_road(id, "exits");
    }

    const Json& disp = R::field(doc, "dispersion", "scenario");
    s.dispersion.mu = R::positive(R::field(disp, "mu", "dispersion"), "dispersion.mu");
    if (const Json* k = R::optional(disp, "kappa")) s.dispersion.kappa = R::nonnegative(*k, "dispersion.kappa");
    s.dispersion.wind = R::point(R::field(disp, "wind", "dispersion"), "dispersion.wind");
    const std::size_t n_points = static_cast<std::size_t>(s.disc.n_grid + 1) * static_cast<std::size_t>(s.disc.n_grid + 1);
    s.phi0.assign(n_points, 0.0);
    if (const Json* phi0 = R::optional(disp, "phi0")) {
        if (phi0->is_array()) {
            if (phi0->size() != n_points)
                R::fail("dispersion.phi0", "expected " + std::to_string(n_points) + " grid values");
            for (std::size_t k = 0; k < n_points; ++k) s.phi0[k] = R::nonnegative((*phi0)[k], "dispersion.phi0");
        } else {
            s.phi0.assign(n_points, R::nonnegative(*phi0, "dispersion.phi0"));
        }
    }

    const Json& emission = R::field(doc, "emission", "scenario");
    s.theta = R::nonnegative(R::field(emission, "theta", "emission"), "emission.theta");

    if (const Json* obj = R::optional(doc, "objectives")) {
        if (const Json* d = R::optional(*obj, "delta")) s.delta = R::nonnegative(*d, "objectives.delta");
        if (const Json* m = R::optional(*obj, "mode")) {
            const std::string mode = m->is_string() ? m->get<std::string>() : "";
            if (mode == "2d")
                s.mode = ObjectiveMode::TwoObjective;
            else if (mode == "3d")
                s.mode = ObjectiveMode::ThreeObjective;
            else
                R::fail("objectives.mode", "expected \"2d\" or \"3d\"");
        }
    }
    return s;
}

inline Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

/// Inverse of load_scenario; load_scenario(serialize_scenario(s)) == s.
inline std::string serialize_scenario(const Scenario& s) {
    using detail::Json;
    Json doc;
    doc["horizon"] = s.horizon;
    doc["domain"] = {{"side", s.side}, {"n_grid", s.disc.n_grid}};
    doc["discretization"] = {{"n_cells", s.disc.n_cells}, {"n_time", s.disc.n_time}};

    Json roads = Json::array();
    for (const auto& r : s.roads) {
        Json jr;
        jr["id"] = r.id;
        jr["start"] = detail::to_json(r.curve.front());
        jr["end"] = detail::to_json(r.curve.back());
        if (r.curve.size() > 2) {
            Json via = Json::array();
            for (std::size_t k = 1; k + 1 < r.curve.size(); ++k) via.push_back(detail::to_json(r.curve[k]));
            jr["via"] = via;
        }
        jr["width"] = r.width;
        jr["rho_max"] = r.rho_max;
        const bool uniform = std::all_of(r.rho0.begin(), r.rho0.end(), [&](double v) { return v == r.rho0.front(); });
        jr["rho0"] = uniform ? Json(r.rho0.front()) : Json(r.rho0);
        jr["v_min"] = r.v_min;
        jr["v_max"] = r.v_max;
        roads.push_back(jr);
    }
    doc["roads"] = roads;

    Json junctions = Json::array();
    for (const auto& j : s.junctions) {
        Json jj{{"kind", to_string(j.kind)}, {"in", j.incoming}, {"out", j.outgoing}};
        if (j.kind == JunctionKind::OneToTwo) jj["alpha"] = j.alpha;
        if (j.kind == JunctionKind::TwoToOne) jj["beta"] = j.beta;
        junctions.push_back(jj);
    }
    doc["junctions"] = junctions;

    Json access = Json::array();
    for (const auto& a : s.access) {
        Json ja{{"road", a.road}, {"queue0", a.initial_queue}};
        if (a.inflow.is_constant() && a.inflow.times.front() == 0.0)
            ja["inflow"] = a.inflow.rates.front();
        else
            ja["inflow"] = {{"times", a.inflow.times}, {"rates", a.inflow.rates}};
        access.push_back(ja);
    }
    doc["access"] = access;
    doc["exits"] = s.exits;

    Json disp{{"mu", s.dispersion.mu}, {"kappa", s.dispersion.kappa}, {"wind", detail::to_json(s.dispersion.wind)}};
    const bool uniform_phi0 =
        std::all_of(s.phi0.begin(), s.phi0.end(), [&](double v) { return v == s.phi0.front(); });
    disp["phi0"] = uniform_phi0 ? Json(s.phi0.empty() ? 0.0 : s.phi0.front()) : Json(s.phi0);
    doc["dispersion"] = disp;
    doc["emission"] = {{"theta", s.theta}};
    doc["objectives"] = {{"delta", s.delta}, {"mode", s.mode == ObjectiveMode::TwoObjective ? "2d" : "3d"}};
    return doc.dump(2) + "\n";
}

/// Parses "v1,v2,...,vd".
inline SpeedLimitPolicy parse_policy(std::string_view text) {
    SpeedLimitPolicy p;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            p.v_max.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParseError("policy: '" + item + "' is not a number");
        }
    }
    if (p.v_max.empty()) throw ParseError("policy: empty");
    return p;
}

} // namespace ecospeed

#endif // ECOSPEED_SCENARIO_IO_HPP
