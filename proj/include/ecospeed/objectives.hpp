/**
 * @file objectives.hpp
 * @brief Discrete objectives (right-rectangle quadrature) and the policy
 * evaluator that turns a speed-limit policy into an objective vector without
 * solving any dispersion problem.
 */

#ifndef ECOSPEED_OBJECTIVES_HPP
#define ECOSPEED_OBJECTIVES_HPP

#include <cmath>
#include <span>
#include <vector>

#include "dispersion.hpp"
#include "emission.hpp"
#include "grid.hpp"
#include "traffic.hpp"

namespace ecospeed {

namespace detail {

inline void require_trajectory(const TrafficTrajectory& traj, const Scenario& s, const char* what) {
    if (traj.snapshots.size() != static_cast<std::size_t>(s.disc.n_time) + 1)
        throw DomainError(std::string(what) + ": trajectory does not match the time grid");
    for (const auto& st : traj.snapshots)
        if (st.densities.size() != s.roads.size() || st.queues.size() != s.access.size())
            throw DomainError(std::string(what) + ": trajectory does not match the network");
}

} // namespace detail

/// Accumulated traffic flow dt * sum_e ds_e sum_{k>=1} sum_n Q_e(rho^k_{e,n}).
inline double j_flow(const TrafficTrajectory& traj, const SpeedLimitPolicy& p, const Scenario& s) {
    detail::require_trajectory(traj, s, "j_flow");
    double total = 0.0;
    for (std::size_t e = 0; e < s.roads.size(); ++e) {
        double road = 0.0;
        for (int k = 1; k <= s.disc.n_time; ++k)
            for (double rho : traj.snapshots[static_cast<std::size_t>(k)].densities[e])
                road += greenshields_flux(rho, p.v_max[e], s.roads[e].rho_max);
        total += s.ds(e) * road;
    }
    return s.dt() * total;
}

/// Time-averaged total queue length (dt / T) sum_{k>=1} sum_e l_e^k.
inline double j_queue(const TrafficTrajectory& traj, const Scenario& s) {
    detail::require_trajectory(traj, s, "j_queue");
    double total = 0.0;
    for (int k = 1; k <= s.disc.n_time; ++k)
        for (double q : traj.snapshots[static_cast<std::size_t>(k)].queues) total += q;
    return s.dt() / s.horizon * total;
}

/// Average pollution through the adjoint:
/// dt h^2 sum_{k>=1} sum_{i,j>=1} xi p + h^2 sum_{i,j>=1} phi0 p^0.
inline double j_diff_adjoint(const EmissionField& xi, const AdjointField& p, std::span<const double> phi0,
                             const Scenario& s) {
    const Grid2D g = Grid2D::of(s);
    xi.require_shape(g, s.disc.n_time, "j_diff_adjoint");
    p.require_shape(g, s.disc.n_time, "j_diff_adjoint");
    if (phi0.size() != g.points()) throw DomainError("j_diff_adjoint: phi0 does not match the grid");
    const double h = g.h();
    double sum = 0.0;
    for (int k = 1; k <= s.disc.n_time; ++k) {
        const auto xs = xi.slice(k);
        const auto ps = p.slice(k);
        for (int j = 1; j <= g.n; ++j)
            for (int i = 1; i <= g.n; ++i) sum += xs[g.index(i, j)] * ps[g.index(i, j)];
    }
    double initial = 0.0;
    const auto p0 = p.slice(0);
    for (int j = 1; j <= g.n; ++j)
        for (int i = 1; i <= g.n; ++i) initial += phi0[g.index(i, j)] * p0[g.index(i, j)];
    return s.dt() * h * h * sum + h * h * initial;
}

/// Average pollution straight from a concentration field, same quadrature.
inline double j_diff_forward(const ConcentrationField& phi, const Scenario& s) {
    const Grid2D g = Grid2D::of(s);
    phi.require_shape(g, s.disc.n_time, "j_diff_forward");
    const double h = g.h();
    double sum = 0.0;
    for (int k = 1; k <= s.disc.n_time; ++k) {
        const auto ps = phi.slice(k);
        for (int j = 1; j <= g.n; ++j)
            for (int i = 1; i <= g.n; ++i) sum += ps[g.index(i, j)];
    }
    return s.dt() * h * h / (s.horizon * s.area()) * sum;
}

struct ObjectiveValues {
    double flow{};
    double diff{};
    double queue{};

    double poll(double delta) const { return diff + delta * queue; }

    friend bool operator==(const ObjectiveValues&, const ObjectiveValues&) = default;
};

/// Minimization vector: (-J_flow, J_poll) or (-J_flow, J_diff, J_queue).
inline std::vector<double> objective_vector(const ObjectiveValues& v, ObjectiveMode mode, double delta) {
    if (mode == ObjectiveMode::TwoObjective) return {-v.flow, v.poll(delta)};
    return {-v.flow, v.diff, v.queue};
}

/// Reusable evaluator: holds the raster map and the precomputed adjoint, so
/// each policy costs one traffic simulation plus sparse sums.
class PolicyEvaluator {
public:
    PolicyEvaluator(const Scenario& s, const AdjointField& adjoint)
        : scenario_(s), adjoint_(adjoint), raster_(rasterize_network(s)) {
        adjoint.require_shape(Grid2D::of(s), s.disc.n_time, "PolicyEvaluator");
        const Grid2D& g = raster_.grid;
        for (std::size_t idx : raster_.covered) {
            const auto i = static_cast<int>(idx % g.width()), j = static_cast<int>(idx / g.width());
            if (i >= 1 && j >= 1) quadrature_points_.push_back(idx);
        }
        const auto p0 = adjoint.slice(0);
        double initial = 0.0;
        for (int j = 1; j <= g.n; ++j)
            for (int i = 1; i <= g.n; ++i) initial += s.phi0[g.index(i, j)] * p0[g.index(i, j)];
        initial_term_ = g.h() * g.h() * initial;
    }

    const RasterMap& raster() const { return raster_; }
    const Scenario& scenario() const { return scenario_; }

    ObjectiveValues values(const SpeedLimitPolicy& p) const { return values(p, simulate_traffic(scenario_, p)); }

    ObjectiveValues values(const SpeedLimitPolicy& p, const TrafficTrajectory& traj) const {
        const Scenario& s = scenario_;
        ObjectiveValues v;
        v.flow = j_flow(traj, p, s);
        v.queue = j_queue(traj, s);
        // same summation order as j_diff_adjoint on the dense field; skipped terms are exact zeros
        double sum = 0.0;
        for (int k = 1; k <= s.disc.n_time; ++k) {
            const auto rates = cell_emission_rates(s, p, traj.snapshots[static_cast<std::size_t>(k)]);
            const auto ps = adjoint_.slice(k);
            for (std::size_t idx : quadrature_points_)
                sum += point_emission(s, raster_.covers[idx], rates) * ps[idx];
        }
        const double h = raster_.grid.h();
        v.diff = s.dt() * h * h * sum + initial_term_;
        return v;
    }

    std::vector<double> operator()(const SpeedLimitPolicy& p) const {
        return objective_vector(values(p), scenario_.mode, scenario_.delta);
    }

private:
    const Scenario& scenario_;
    const AdjointField& adjoint_;
    RasterMap raster_;
    std::vector<std::size_t> quadrature_points_;
    double initial_term_{};
};

/// One-shot evaluation; repeated evaluations should share a PolicyEvaluator.
inline std::vector<double> evaluate_policy(const Scenario& s, const SpeedLimitPolicy& p, const AdjointField& adjoint) {
    check_feasible(s, p);
    return PolicyEvaluator(s, adjoint)(p);
}

} // namespace ecospeed

#endif // ECOSPEED_OBJECTIVES_HPP
