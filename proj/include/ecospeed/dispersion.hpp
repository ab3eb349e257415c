/**
 * @file dispersion.hpp
 * @brief Explicit finite differences for the pollutant transport equation
 * and its time-reversed adjoint on a square control area.
 *
 * Both equations share one operator
 *
 *     u_t = mu Lap(u) - a . grad(u) - kappa u + f
 *
 * with a five-point Laplacian and first-order upwinding of the advection
 * velocity a. Ghost points outside the square are eliminated per edge
 * through a Neumann or Robin condition (corners use the condition of each
 * axis' own edge). The adjoint runs with a = -v, Robin on the outflow edges
 * of the physical wind v; the forward problem runs with a = v, Robin on the
 * inflow edges.
 */

#ifndef ECOSPEED_DISPERSION_HPP
#define ECOSPEED_DISPERSION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "grid.hpp"
#include "network.hpp"

namespace ecospeed {

enum class BoundaryKind { Inflow, Outflow };
enum class Edge { Left = 0, Right = 1, Bottom = 2, Top = 3 };

inline Vec2 outward_normal(Edge e) {
    switch (e) {
    case Edge::Left: return {-1.0, 0.0};
    case Edge::Right: return {1.0, 0.0};
    case Edge::Bottom: return {0.0, -1.0};
    case Edge::Top: return {0.0, 1.0};
    }
    return {};
}

/// Inflow (v . eta < 0) or outflow (v . eta >= 0) per edge of the square.
/// A constant wind makes this time independent.
struct BoundaryClassification {
    std::array<BoundaryKind, 4> edges{};

    BoundaryKind edge(Edge e) const { return edges[static_cast<std::size_t>(e)]; }

    /// Labels of a boundary grid point, one per edge it lies on (two at corners).
    std::vector<std::pair<Edge, BoundaryKind>> at(const Grid2D& g, int i, int j) const {
        std::vector<std::pair<Edge, BoundaryKind>> out;
        if (i == 0) out.emplace_back(Edge::Left, edge(Edge::Left));
        if (i == g.n) out.emplace_back(Edge::Right, edge(Edge::Right));
        if (j == 0) out.emplace_back(Edge::Bottom, edge(Edge::Bottom));
        if (j == g.n) out.emplace_back(Edge::Top, edge(Edge::Top));
        return out;
    }
};

inline BoundaryClassification classify_boundary(const Grid2D&, Vec2 wind) {
    BoundaryClassification c;
    for (int e = 0; e < 4; ++e)
        c.edges[static_cast<std::size_t>(e)] =
            dot(wind, outward_normal(static_cast<Edge>(e))) < 0.0 ? BoundaryKind::Inflow : BoundaryKind::Outflow;
    return c;
}

struct AdjointCflReport {
    double dt_bound{};        // (1/3) h^2 / (4 mu + |v|_1 h)
    double advective{};       // dt [vx^2/(2mu+|vx|h) + vy^2/(2mu+|vy|h)], must be <= 1/3
    double reaction{};        // dt kappa, must be <= 1/3
    bool diffusive_ok{};
    bool advective_ok{};
    bool reaction_ok{};

    bool pass() const { return diffusive_ok && advective_ok && reaction_ok; }
};

/// Tightened explicit-scheme stability bound, plus dt*kappa <= 1/3 for kappa > 0.
inline AdjointCflReport cfl_check_adjoint(double h, double dt, const DispersionParams& p) {
    const double vx = std::abs(p.wind.x), vy = std::abs(p.wind.y);
    AdjointCflReport r;
    r.dt_bound = (1.0 / 3.0) * h * h / (4.0 * p.mu + (vx + vy) * h);
    r.advective = dt * (vx * vx / (2.0 * p.mu + vx * h) + vy * vy / (2.0 * p.mu + vy * h));
    r.reaction = dt * p.kappa;
    r.diffusive_ok = dt <= r.dt_bound;
    r.advective_ok = r.advective <= 1.0 / 3.0;
    r.reaction_ok = r.reaction <= 1.0 / 3.0;
    return r;
}

enum class GhostCondition { Robin, Neumann };

/// Value at the ghost point mirrored across the boundary from `neighbor`.
/// Robin: mu du/deta + v_normal u = 0 discretized by central differences.
inline double ghost_value(GhostCondition kind, double neighbor, double mu, double v_normal, double h) {
    if (kind == GhostCondition::Neumann) return neighbor;
    const double denom = mu + v_normal * h;
    if (denom == 0.0) throw DomainError("Robin ghost point: mu + v h vanishes");
    return (mu - v_normal * h) / denom * neighbor;
}

/// mu/h^2 (N + S + E + W - 4C): the five-point Laplacian.
inline double diffusion_stencil(double center, double east, double west, double north, double south, double mu,
                                double h) {
    return mu / (h * h) * (north + south - 4.0 * center + east + west);
}

/// Upwind approximation of a . grad(u).
inline double advection_stencil(double center, double east, double west, double north, double south, Vec2 a,
                                 double h) {
    const double ax_p = std::max(a.x, 0.0), ax_m = std::min(a.x, 0.0);
    const double ay_p = std::max(a.y, 0.0), ay_m = std::min(a.y, 0.0);
    return (ay_m * north - ay_p * south + (std::abs(a.x) + std::abs(a.y)) * center + ax_m * east - ax_p * west) / h;
}

/// Coefficients of u^{k+1}_{ij} on the five stencil values at an interior point.
struct UpdateCoefficients {
    double center{}, east{}, west{}, north{}, south{};
};

inline UpdateCoefficients interior_update_coefficients(double h, double dt, double mu, double kappa, Vec2 a) {
    const double d = mu / (h * h);
    UpdateCoefficients c;
    c.center = 1.0 - dt * (4.0 * d + (std::abs(a.x) + std::abs(a.y)) / h + kappa);
    c.east = dt * (d - std::min(a.x, 0.0) / h);
    c.west = dt * (d + std::max(a.x, 0.0) / h);
    c.north = dt * (d - std::min(a.y, 0.0) / h);
    c.south = dt * (d + std::max(a.y, 0.0) / h);
    return c;
}

/// Spatial part mu Lap(u) - a . grad(u) - kappa u with ghost elimination.
class TransportOperator {
public:
    struct EdgeCondition {
        GhostCondition kind{GhostCondition::Neumann};
        double v_normal{};  // wind component along the outward normal in the Robin condition
    };

    TransportOperator(Grid2D grid, double mu, double kappa, Vec2 advect, std::array<EdgeCondition, 4> edges)
        : grid_(grid), mu_(mu), kappa_(kappa), advect_(advect) {
        for (std::size_t e = 0; e < 4; ++e)
            ghost_factor_[e] = ghost_value(edges[e].kind, 1.0, mu, edges[e].v_normal, grid.h());
    }

    /// Adjoint of the transport problem for wind v: a = -v, Robin on outflow edges.
    static TransportOperator adjoint(Grid2D grid, const DispersionParams& p) {
        const auto cls = classify_boundary(grid, p.wind);
        std::array<EdgeCondition, 4> edges{};
        for (int e = 0; e < 4; ++e) {
            const auto edge = static_cast<Edge>(e);
            const bool robin = cls.edge(edge) == BoundaryKind::Outflow;
            edges[static_cast<std::size_t>(e)] = {robin ? GhostCondition::Robin : GhostCondition::Neumann,
                                                  dot(p.wind, outward_normal(edge))};
        }
        return {grid, p.mu, p.kappa, -1.0 * p.wind, edges};
    }

    /// Transport of pollutants by wind v: a = v, zero total flux on inflow edges.
    static TransportOperator forward(Grid2D grid, const DispersionParams& p) {
        const auto cls = classify_boundary(grid, p.wind);
        std::array<EdgeCondition, 4> edges{};
        for (int e = 0; e < 4; ++e) {
            const auto edge = static_cast<Edge>(e);
            const bool robin = cls.edge(edge) == BoundaryKind::Inflow;
            edges[static_cast<std::size_t>(e)] = {robin ? GhostCondition::Robin : GhostCondition::Neumann,
                                                  -dot(p.wind, outward_normal(edge))};
        }
        return {grid, p.mu, p.kappa, p.wind, edges};
    }

    double ghost_factor(Edge e) const { return ghost_factor_[static_cast<std::size_t>(e)]; }
    const Grid2D& grid() const { return grid_; }

    void apply(std::span<const double> u, std::span<double> out) const {
        const int n = grid_.n;
        const double h = grid_.h();
        auto at = [&](int i, int j) { return u[grid_.index(i, j)]; };
        const double gl = ghost_factor(Edge::Left), gr = ghost_factor(Edge::Right);
        const double gb = ghost_factor(Edge::Bottom), gt = ghost_factor(Edge::Top);
        for (int j = 0; j <= n; ++j) {
            for (int i = 0; i <= n; ++i) {
                const double c = at(i, j);
                const double east = i < n ? at(i + 1, j) : gr * at(n - 1, j);
                const double west = i > 0 ? at(i - 1, j) : gl * at(1, j);
                const double north = j < n ? at(i, j + 1) : gt * at(i, n - 1);
                const double south = j > 0 ? at(i, j - 1) : gb * at(i, 1);
                out[grid_.index(i, j)] = diffusion_stencil(c, east, west, north, south, mu_, h) -
                                         advection_stencil(c, east, west, north, south, advect_, h) - kappa_ * c;
            }
        }
    }

private:
    Grid2D grid_;
    double mu_;
    double kappa_;
    Vec2 advect_;
    std::array<double, 4> ghost_factor_{};
};

namespace detail {

inline void require_adjoint_cfl(const Scenario& s) {
    const auto r = cfl_check_adjoint(s.h(), s.dt(), s.dispersion);
    if (!r.pass())
        throw DomainError("dispersion CFL condition violated: dt = " + std::to_string(s.dt()) +
                          ", bound = " + std::to_string(r.dt_bound));
}

inline void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite value, scheme unstable");
}

} // namespace detail

/// Marches the time-reversed adjoint from zero with source 1/(T |Omega|) and
/// returns it in forward time, p^k = ptilde^{N_t - k}.
inline AdjointField solve_adjoint(const Scenario& s) {
    detail::require_adjoint_cfl(s);
    const Grid2D grid = Grid2D::of(s);
    const auto op = TransportOperator::adjoint(grid, s.dispersion);
    const int nt = s.disc.n_time;
    const double dt = s.dt();
    const double source = 1.0 / (s.horizon * s.area());

    AdjointField p(grid, nt);
    std::vector<double> cur(grid.points(), 0.0), rhs(grid.points());
    for (int k = 1; k <= nt; ++k) {
        op.apply(cur, rhs);
        for (std::size_t q = 0; q < cur.size(); ++q) cur[q] += dt * (rhs[q] + source);
        detail::require_finite(cur, "solve_adjoint");
        std::copy(cur.begin(), cur.end(), p.slice(nt - k).begin());
    }
    return p;
}

/// Forward transport of the emissions from phi0. Used to cross-check the
/// adjoint representation of the average pollution.
inline ConcentrationField solve_dispersion_forward(const Scenario& s, const EmissionField& emission) {
    detail::require_adjoint_cfl(s);
    const Grid2D grid = Grid2D::of(s);
    emission.require_shape(grid, s.disc.n_time, "solve_dispersion_forward");
    const auto op = TransportOperator::forward(grid, s.dispersion);
    const int nt = s.disc.n_time;
    const double dt = s.dt();

    ConcentrationField phi(grid, nt);
    std::copy(s.phi0.begin(), s.phi0.end(), phi.slice(0).begin());
    std::vector<double> rhs(grid.points());
    for (int k = 0; k < nt; ++k) {
        const auto cur = phi.slice(k);
        const auto src = emission.slice(k);
        auto next = phi.slice(k + 1);
        op.apply(cur, rhs);
        for (std::size_t q = 0; q < rhs.size(); ++q) next[q] = cur[q] + dt * (rhs[q] + src[q]);
        detail::require_finite(next, "solve_dispersion_forward");
    }
    return phi;
}

} // namespace ecospeed

#endif // ECOSPEED_DISPERSION_HPP
