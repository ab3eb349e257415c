/**
 * @file network.hpp
 * @brief Road network description: roads as directed polylines, junctions,
 * access boundaries with queues, and the immutable Scenario.
 */

#ifndef ECOSPEED_NETWORK_HPP
#define ECOSPEED_NETWORK_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace ecospeed {

struct Vec2 {
    double x{};
    double y{};

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Road {
    int id{};
    std::vector<Vec2> curve;   // directed polyline, curve.front() is the tail
    double width{};
    double rho_max{};
    std::vector<double> rho0;  // one value per cell
    double v_min{};
    double v_max{};

    double length() const {
        double total = 0.0;
        for (std::size_t i = 1; i < curve.size(); ++i) total += norm(curve[i] - curve[i - 1]);
        return total;
    }

    friend bool operator==(const Road&, const Road&) = default;
};

enum class JunctionKind { OneToOne, OneToTwo, TwoToOne };

inline const char* to_string(JunctionKind k) {
    switch (k) {
    case JunctionKind::OneToOne: return "one_to_one";
    case JunctionKind::OneToTwo: return "one_to_two";
    case JunctionKind::TwoToOne: return "two_to_one";
    }
    return "?";
}

inline std::size_t expected_incoming(JunctionKind k) { return k == JunctionKind::TwoToOne ? 2 : 1; }
inline std::size_t expected_outgoing(JunctionKind k) { return k == JunctionKind::OneToTwo ? 2 : 1; }

struct Junction {
    JunctionKind kind{JunctionKind::OneToOne};
    std::vector<int> incoming;
    std::vector<int> outgoing;
    std::array<double, 2> alpha{};  // (alpha_21, alpha_31), OneToTwo only
    std::array<double, 2> beta{};   // (beta_31, beta_32), TwoToOne only

    friend bool operator==(const Junction&, const Junction&) = default;
};

/// Piecewise-constant inflow rate: rates[i] holds on [times[i], times[i+1]).
struct InflowSeries {
    std::vector<double> times{0.0};
    std::vector<double> rates{0.0};

    static InflowSeries constant(double rate) { return {{0.0}, {rate}}; }

    double at(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return rates.front();
        return rates[static_cast<std::size_t>(it - times.begin()) - 1];
    }

    bool is_constant() const { return rates.size() == 1; }

    friend bool operator==(const InflowSeries&, const InflowSeries&) = default;
};

struct AccessBoundary {
    int road{};
    InflowSeries inflow;
    double initial_queue{0.0};

    friend bool operator==(const AccessBoundary&, const AccessBoundary&) = default;
};

struct DispersionParams {
    double mu{};
    double kappa{0.0};
    Vec2 wind{};

    friend bool operator==(const DispersionParams&, const DispersionParams&) = default;
};

enum class ObjectiveMode { TwoObjective, ThreeObjective };

inline std::size_t objective_count(ObjectiveMode m) { return m == ObjectiveMode::TwoObjective ? 2 : 3; }

struct Discretization {
    int n_cells{};  // N_s, cells per road
    int n_time{};   // N_t, time steps over [0, T]
    int n_grid{};   // N_h, grid intervals per side of the control area

    friend bool operator==(const Discretization&, const Discretization&) = default;
};

/// Immutable problem description. Roads are kept in ascending id order and
/// every per-road vector (policies included) follows that order.
struct Scenario {
    double horizon{};
    double side{};  // control area is [0, side]^2
    std::vector<Road> roads;
    std::vector<Junction> junctions;
    std::vector<AccessBoundary> access;
    std::vector<int> exits;
    DispersionParams dispersion;
    std::vector<double> phi0;  // (n_grid+1)^2 values, index j*(n_grid+1)+i
    double theta{};
    double delta{};
    ObjectiveMode mode{ObjectiveMode::TwoObjective};
    Discretization disc;

    double dt() const { return horizon / disc.n_time; }
    double h() const { return side / disc.n_grid; }
    double ds(std::size_t road) const { return roads[road].length() / disc.n_cells; }
    double area() const { return side * side; }

    std::optional<std::size_t> find_road(int id) const {
        for (std::size_t i = 0; i < roads.size(); ++i)
            if (roads[i].id == id) return i;
        return std::nullopt;
    }

    std::size_t road_index(int id) const {
        if (auto i = find_road(id)) return *i;
        throw DomainError("unknown road id " + std::to_string(id));
    }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Speed limits, one per road in ascending road-id order.
struct SpeedLimitPolicy {
    std::vector<double> v_max;

    friend bool operator==(const SpeedLimitPolicy&, const SpeedLimitPolicy&) = default;
};

/// Throws DomainError naming the first violated bound.
inline void check_feasible(const Scenario& s, const SpeedLimitPolicy& p) {
    if (p.v_max.size() != s.roads.size())
        throw DomainError("policy has " + std::to_string(p.v_max.size()) + " components, network has " +
                          std::to_string(s.roads.size()) + " roads");
    auto fmt = [](double v) {
        std::string out = std::to_string(v);
        out.erase(out.find_last_not_of('0') + 1);
        if (out.back() == '.') out.pop_back();
        return out;
    };
    for (std::size_t e = 0; e < s.roads.size(); ++e) {
        const auto& r = s.roads[e];
        const double v = p.v_max[e];
        const std::string name = "V_" + std::to_string(r.id);
        if (!std::isfinite(v)) throw DomainError(name + " is not finite");
        if (v > r.v_max) throw DomainError(name + " exceeds upper bound " + fmt(r.v_max));
        if (v < r.v_min) throw DomainError(name + " is below lower bound " + fmt(r.v_min));
    }
}

/// sigma_e(s): the point at arc length s along the road, measured from its tail.
inline Vec2 point_on_road(const Road& r, double s) {
    const double len = r.length();
    if (!(s >= 0.0 && s <= len))
        throw DomainError("arc length " + std::to_string(s) + " outside [0, " + std::to_string(len) + "]");
    double acc = 0.0;
    for (std::size_t i = 1; i < r.curve.size(); ++i) {
        const Vec2 a = r.curve[i - 1];
        const Vec2 b = r.curve[i];
        const double seg = norm(b - a);
        if (s <= acc + seg || i + 1 == r.curve.size()) {
            const double t = seg > 0.0 ? std::clamp((s - acc) / seg, 0.0, 1.0) : 0.0;
            return a + t * (b - a);
        }
        acc += seg;
    }
    return r.curve.back();
}

/// How each road end is attached to the rest of the network.
struct RoadLinks {
    enum class Kind { None, Junction, Access, Exit };
    Kind tail{Kind::None};
    Kind head{Kind::None};
    std::size_t tail_index{};  // junction or access entry
    std::size_t head_index{};  // junction index (head == Junction)
    int tail_count{0};
    int head_count{0};
};

/// Resolves road-end attachments. Endpoints attached twice or never are
/// reported through tail_count/head_count rather than thrown.
inline std::vector<RoadLinks> link_roads(const Scenario& s) {
    std::vector<RoadLinks> links(s.roads.size());
    for (std::size_t j = 0; j < s.junctions.size(); ++j) {
        for (int id : s.junctions[j].incoming) {
            if (auto e = s.find_road(id)) {
                links[*e].head = RoadLinks::Kind::Junction;
                links[*e].head_index = j;
                ++links[*e].head_count;
            }
        }
        for (int id : s.junctions[j].outgoing) {
            if (auto e = s.find_road(id)) {
                links[*e].tail = RoadLinks::Kind::Junction;
                links[*e].tail_index = j;
                ++links[*e].tail_count;
            }
        }
    }
    for (std::size_t a = 0; a < s.access.size(); ++a) {
        if (auto e = s.find_road(s.access[a].road)) {
            links[*e].tail = RoadLinks::Kind::Access;
            links[*e].tail_index = a;
            ++links[*e].tail_count;
        }
    }
    for (int id : s.exits) {
        if (auto e = s.find_road(id)) {
            links[*e].head = RoadLinks::Kind::Exit;
            ++links[*e].head_count;
        }
    }
    return links;
}

} // namespace ecospeed

#endif // ECOSPEED_NETWORK_HPP
