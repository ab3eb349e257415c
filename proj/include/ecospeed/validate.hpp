#ifndef ECOSPEED_VALIDATE_HPP
#define ECOSPEED_VALIDATE_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "dispersion.hpp"
#include "emission.hpp"
#include "network.hpp"

namespace ecospeed {

struct ValidationReport {
    double dt{};
    AdjointCflReport cfl;
    std::vector<std::string> findings;  // empty iff the scenario is valid

    bool valid() const { return findings.empty(); }

    /// One-line CFL status, e.g. "CFL: pass (Δt=0.0083 ≤ 0.008333)".
    std::string cfl_line() const {
        char buf[160];
        if (cfl.diffusive_ok)
            std::snprintf(buf, sizeof buf, "CFL: %s (Δt=%.4f ≤ %.6f)", cfl.pass() ? "pass" : "fail", dt,
                          cfl.dt_bound);
        else
            std::snprintf(buf, sizeof buf, "CFL: fail (Δt=%.4f > %.6f)", dt, cfl.dt_bound);
        return buf;
    }
};

inline ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport rep;
    auto add = [&](std::string f) { rep.findings.push_back(std::move(f)); };
    char buf[200];

    rep.dt = s.dt();
    rep.cfl = cfl_check_adjoint(s.h(), s.dt(), s.dispersion);
    if (!rep.cfl.diffusive_ok) {
        std::snprintf(buf, sizeof buf, "CFL violation: dt = %.6g exceeds (1/3) h^2 / (4 mu + |v|_1 h) = %.6g", rep.dt,
                      rep.cfl.dt_bound);
        add(buf);
    }
    if (!rep.cfl.advective_ok) {
        std::snprintf(buf, sizeof buf, "CFL violation: dt sum v_i^2 / (2 mu + |v_i| h) = %.6g exceeds 1/3",
                      rep.cfl.advective);
        add(buf);
    }
    if (!rep.cfl.reaction_ok) {
        std::snprintf(buf, sizeof buf, "CFL violation: dt kappa = %.6g exceeds 1/3", rep.cfl.reaction);
        add(buf);
    }

    const auto links = link_roads(s);
    for (std::size_t e = 0; e < s.roads.size(); ++e) {
        const std::string name = "road " + std::to_string(s.roads[e].id);
        if (links[e].tail_count != 1)
            add(name + ": tail attached " + std::to_string(links[e].tail_count) + " times, expected once");
        if (links[e].head_count != 1)
            add(name + ": head attached " + std::to_string(links[e].head_count) + " times, expected once");
        for (Vec2 p : s.roads[e].curve)
            if (p.x < 0.0 || p.y < 0.0 || p.x > s.side || p.y > s.side) {
                add(name + ": leaves the control area");
                break;
            }
    }

    const auto map = rasterize_network(s);
    std::vector<std::size_t> points(s.roads.size(), 0);
    for (std::size_t idx : map.covered)
        for (const auto& c : map.covers[idx]) ++points[c.road];
    for (std::size_t e = 0; e < s.roads.size(); ++e) {
        if (points[e] == 0)
            add("road " + std::to_string(s.roads[e].id) + ": road invisible to grid");
        else if (points[e] < static_cast<std::size_t>(s.disc.n_cells))
            add("road " + std::to_string(s.roads[e].id) + ": only " + std::to_string(points[e]) +
                " grid points cover the road, fewer than its " + std::to_string(s.disc.n_cells) + " cells");
    }
    return rep;
}

} // namespace ecospeed

#endif // ECOSPEED_VALIDATE_HPP
