/**
 * @file emission.hpp
 * @brief Per-road emission rates and their rasterization onto the control
 * area: emissions are spread across the road width and averaged where roads
 * overlap.
 */

#ifndef ECOSPEED_EMISSION_HPP
#define ECOSPEED_EMISSION_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "grid.hpp"
#include "network.hpp"
#include "traffic.hpp"

namespace ecospeed {

/// Q(rho, V) + theta * rho.
inline double road_emission_rate(double rho, double v_max, double rho_max, double theta) {
    if (theta < 0.0) throw DomainError("theta must be nonnegative");
    return greenshields_flux(rho, v_max, rho_max) + theta * rho;
}

struct RasterCover {
    std::size_t road{};  // index into Scenario::roads
    std::size_t cell{};  // cell containing the perpendicular foot point

    friend bool operator==(const RasterCover&, const RasterCover&) = default;
};

/// Which roads cover each grid point. Policy independent; build once per scenario.
struct RasterMap {
    Grid2D grid;
    std::vector<std::vector<RasterCover>> covers;  // per grid point, Grid2D::index order
    std::vector<std::size_t> covered;              // indices with a nonempty cover, ascending

    std::size_t count(int i, int j) const { return covers[grid.index(i, j)].size(); }
};

namespace detail {

struct Footpoint {
    double arc{};       // arc length of the foot along the road
    double distance{};  // distance from the point to the foot
};

// Closest foot point over the segments whose perpendicular foot falls inside
// the segment. Ties at the segment ends and at w/2 count as inside.
inline std::optional<Footpoint> perpendicular_foot(const Road& r, Vec2 p, double tol) {
    std::optional<Footpoint> best;
    double acc = 0.0;
    for (std::size_t k = 1; k < r.curve.size(); ++k) {
        const Vec2 a = r.curve[k - 1];
        const Vec2 d = r.curve[k] - a;
        const double len = norm(d);
        const double along = dot(p - a, d) / len;
        if (along >= -tol && along <= len + tol) {
            const double t = std::clamp(along, 0.0, len);
            const double dist = norm(p - (a + (t / len) * d));
            if (!best || dist < best->distance) best = Footpoint{acc + t, dist};
        }
        acc += len;
    }
    return best;
}

} // namespace detail

/// Exact membership for polylines: a point is covered by road e when its
/// perpendicular foot lies on the road and is at most w_e/2 away.
inline RasterMap rasterize_network(const Scenario& s) {
    RasterMap map;
    map.grid = Grid2D::of(s);
    map.covers.resize(map.grid.points());
    const double h = map.grid.h();
    const double tol = 1e-9 * h;

    for (std::size_t e = 0; e < s.roads.size(); ++e) {
        const Road& r = s.roads[e];
        const double half = 0.5 * r.width;
        double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
        for (Vec2 p : r.curve) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        auto lo = [&](double v) { return std::max(0, static_cast<int>(std::floor((v - half) / h)) - 1); };
        auto hi = [&](double v) { return std::min(map.grid.n, static_cast<int>(std::ceil((v + half) / h)) + 1); };
        const double ds = s.ds(e);
        for (int j = lo(ymin); j <= hi(ymax); ++j) {
            for (int i = lo(xmin); i <= hi(xmax); ++i) {
                const auto foot = detail::perpendicular_foot(r, {map.grid.x(i), map.grid.y(j)}, tol);
                if (!foot || foot->distance > half + tol) continue;
                // half-open cells [s_{n-1}, s_n); the head belongs to the last cell
                const auto cell = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(foot->arc / ds))),
                                           static_cast<std::size_t>(s.disc.n_cells - 1));
                map.covers[map.grid.index(i, j)].push_back({e, cell});
            }
        }
    }
    for (std::size_t p = 0; p < map.covers.size(); ++p)
        if (!map.covers[p].empty()) map.covered.push_back(p);
    return map;
}

/// Cell emission rates Q_e(rho) + theta rho for one traffic snapshot.
inline std::vector<std::vector<double>> cell_emission_rates(const Scenario& s, const SpeedLimitPolicy& p,
                                                            const TrafficState& st) {
    std::vector<std::vector<double>> rates(s.roads.size());
    for (std::size_t e = 0; e < s.roads.size(); ++e) {
        rates[e].reserve(st.densities[e].size());
        for (double rho : st.densities[e])
            rates[e].push_back(road_emission_rate(rho, p.v_max[e], s.roads[e].rho_max, s.theta));
    }
    return rates;
}

/// Overlap-averaged, width-normalized emission at one covered grid point.
inline double point_emission(const Scenario& s, const std::vector<RasterCover>& covers,
                             const std::vector<std::vector<double>>& rates) {
    double sum = 0.0;
    for (const auto& c : covers) sum += rates[c.road][c.cell] / s.roads[c.road].width;
    return sum / static_cast<double>(covers.size());
}

inline EmissionField emission_field(const TrafficTrajectory& traj, const RasterMap& map, const Scenario& s,
                                    const SpeedLimitPolicy& p) {
    if (traj.snapshots.size() != static_cast<std::size_t>(s.disc.n_time) + 1)
        throw DomainError("emission_field: trajectory does not match the time grid");
    if (!(map.grid == Grid2D::of(s))) throw DomainError("emission_field: raster map does not match the grid");
    EmissionField field(map.grid, s.disc.n_time);
    for (int k = 0; k <= s.disc.n_time; ++k) {
        const auto rates = cell_emission_rates(s, p, traj.snapshots[static_cast<std::size_t>(k)]);
        auto slice = field.slice(k);
        for (std::size_t idx : map.covered) slice[idx] = point_emission(s, map.covers[idx], rates);
    }
    return field;
}

} // namespace ecospeed

#endif // ECOSPEED_EMISSION_HPP
