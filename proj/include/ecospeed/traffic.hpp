/**
 * @file traffic.hpp
 * @brief Speed-limit-dependent LWR network model: Greenshields flux,
 * demand/supply, Godunov finite volumes, closed-form junction coupling and
 * access-road queues.
 *
 * Boundary flows are named from the road's point of view: `inflow` enters a
 * road at its tail (s = 0), `outflow` leaves it at its head (s = L).
 */

#ifndef ECOSPEED_TRAFFIC_HPP
#define ECOSPEED_TRAFFIC_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "network.hpp"

namespace ecospeed {

namespace detail {

// Densities produced by the monotone scheme may overshoot the bounds by a
// few ulps; that is not a precondition violation.
inline void check_density(double rho, double rho_max) {
    const double slack = 1e-12 * rho_max;
    if (!(rho >= -slack && rho <= rho_max + slack))
        throw DomainError("density " + std::to_string(rho) + " outside [0, " + std::to_string(rho_max) + "]");
}

inline void check_speed(double v_max) {
    if (!(v_max > 0.0)) throw DomainError("speed limit must be positive");
}

} // namespace detail

/// Q(rho) = V rho (1 - rho / rho_max).
inline double greenshields_flux(double rho, double v_max, double rho_max) {
    detail::check_density(rho, rho_max);
    detail::check_speed(v_max);
    return v_max * rho * (1.0 - rho / rho_max);
}

/// Q^max(V) = V rho_max / 4, attained at the critical density rho_max / 2.
inline double capacity(double v_max, double rho_max) { return 0.25 * v_max * rho_max; }

inline double demand(double rho, double v_max, double rho_max) {
    const double q = greenshields_flux(rho, v_max, rho_max);
    return rho <= 0.5 * rho_max ? q : capacity(v_max, rho_max);
}

inline double supply(double rho, double v_max, double rho_max) {
    const double q = greenshields_flux(rho, v_max, rho_max);
    return rho <= 0.5 * rho_max ? capacity(v_max, rho_max) : q;
}

/// Godunov flux for a concave flux: min{D(left), S(right)}.
inline double godunov_flux(double left, double right, double v_max, double rho_max) {
    return std::min(demand(left, v_max, rho_max), supply(right, v_max, rho_max));
}

struct OneToOneFlows {
    double in{};   // leaving the incoming road
    double out{};  // entering the outgoing road
};

struct OneToTwoFlows {
    double in1{};
    double out2{};
    double out3{};
};

struct TwoToOneFlows {
    double in1{};
    double in2{};
    double out3{};
};

inline OneToOneFlows junction_one_to_one(double d_in, double s_out) {
    if (d_in < 0.0 || s_out < 0.0) throw DomainError("junction demand and supply must be nonnegative");
    const double q = std::min(d_in, s_out);
    return {q, q};
}

/// Diverge with distribution rates alpha = (alpha_21, alpha_31).
inline OneToTwoFlows junction_one_to_two(double d1, double s2, double s3, std::array<double, 2> alpha) {
    if (d1 < 0.0 || s2 < 0.0 || s3 < 0.0) throw DomainError("junction demand and supply must be nonnegative");
    if (std::abs(alpha[0] + alpha[1] - 1.0) > 1e-12) throw DomainError("distribution rates must sum to 1");
    OneToTwoFlows f;
    f.out2 = std::min(alpha[0] * d1, s2);
    f.out3 = std::min(alpha[1] * d1, s3);
    f.in1 = f.out2 + f.out3;
    return f;
}

/// Merge with priority rates beta = (beta_31, beta_32); `s` is the supply of
/// the single outgoing road.
inline TwoToOneFlows junction_two_to_one(double d1, double d2, double s, std::array<double, 2> beta) {
    if (d1 < 0.0 || d2 < 0.0 || s < 0.0) throw DomainError("junction demand and supply must be nonnegative");
    if (std::abs(beta[0] + beta[1] - 1.0) > 1e-12) throw DomainError("priority rates must sum to 1");
    const double gamma1 = std::max(beta[0] * s, s - d2);
    const double gamma2 = std::max(beta[1] * s, s - d1);
    TwoToOneFlows f;
    f.in1 = std::min(d1, gamma1);
    f.in2 = std::min(d2, gamma2);
    f.out3 = f.in1 + f.in2;
    return f;
}

struct QueueUpdate {
    double queue{};
    double outflow{};
};

/// One explicit Euler step of the queue ODE. The queue demand is the
/// prescribed inflow plus the rate that clears the queue within `dt`.
inline QueueUpdate queue_step(double queue, double q_in, double road_supply, double dt) {
    if (queue < 0.0 || q_in < 0.0 || road_supply < 0.0) throw DomainError("queue inputs must be nonnegative");
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    QueueUpdate u;
    u.outflow = std::min(q_in + queue / dt, road_supply);
    // a fully drained queue may land a few ulps below zero
    u.queue = std::max(queue + dt * (q_in - u.outflow), 0.0);
    return u;
}

/// Conservative traffic CFL bound: min over roads of ds_e / V_e (|Q'| <= V).
inline double cfl_max_dt_traffic(std::span<const double> v_max, std::span<const double> ds) {
    if (v_max.empty()) throw DomainError("empty network");
    double dt = INFINITY;
    for (std::size_t e = 0; e < v_max.size(); ++e) {
        detail::check_speed(v_max[e]);
        dt = std::min(dt, ds[e] / v_max[e]);
    }
    return dt;
}

inline double cfl_max_dt_traffic(std::span<const double> v_max, double ds) {
    std::vector<double> uniform(v_max.size(), ds);
    return cfl_max_dt_traffic(v_max, uniform);
}

inline double cfl_max_dt_traffic(const Scenario& s, const SpeedLimitPolicy& p) {
    std::vector<double> ds(s.roads.size());
    for (std::size_t e = 0; e < ds.size(); ++e) ds[e] = s.ds(e);
    return cfl_max_dt_traffic(p.v_max, ds);
}

struct TrafficState {
    std::vector<std::vector<double>> densities;  // [road][cell]
    std::vector<double> queues;                  // one per access boundary, scenario order
    double time{};
};

/// Boundary flows of one step (time-averaged over its substeps).
struct BoundaryFlows {
    std::vector<double> inflow;   // at each road's tail
    std::vector<double> outflow;  // at each road's head
};

struct TrafficTrajectory {
    std::vector<TrafficState> snapshots;  // t^0 .. t^{N_t}
    std::vector<BoundaryFlows> flows;     // step k covers [t^k, t^{k+1}]
};

inline TrafficState initial_state(const Scenario& s) {
    TrafficState st;
    for (const auto& r : s.roads) st.densities.push_back(r.rho0);
    for (const auto& a : s.access) st.queues.push_back(a.initial_queue);
    st.time = 0.0;
    return st;
}

/// Vehicles on the roads plus vehicles waiting in queues.
inline double network_mass(const Scenario& s, const TrafficState& st) {
    double total = 0.0;
    for (std::size_t e = 0; e < s.roads.size(); ++e) {
        double m = 0.0;
        for (double rho : st.densities[e]) m += rho;
        total += s.ds(e) * m;
    }
    for (double q : st.queues) total += q;
    return total;
}

/// Explicit finite-volume step of size dt. Fills `flows` (when given) with the
/// boundary flows used.
inline TrafficState lwr_step(const TrafficState& state, const SpeedLimitPolicy& policy, const Scenario& s, double dt,
                             BoundaryFlows* flows = nullptr) {
    const std::size_t n_roads = s.roads.size();
    if (policy.v_max.size() != n_roads) throw DomainError("policy size does not match the network");
    if (state.densities.size() != n_roads || state.queues.size() != s.access.size())
        throw DomainError("state does not match the network");
    if (dt > cfl_max_dt_traffic(s, policy) * (1.0 + 1e-12))
        throw DomainError("traffic CFL condition violated (dt = " + std::to_string(dt) + ")");

    const auto links = link_roads(s);
    std::vector<double> head_demand(n_roads), tail_supply(n_roads);
    for (std::size_t e = 0; e < n_roads; ++e) {
        const auto& r = s.roads[e];
        const auto& rho = state.densities[e];
        if (rho.empty()) throw DomainError("road without cells");
        if (links[e].tail_count != 1 || links[e].head_count != 1)
            throw DomainError("road " + std::to_string(r.id) + " is not attached exactly once at both ends");
        head_demand[e] = demand(rho.back(), policy.v_max[e], r.rho_max);
        tail_supply[e] = supply(rho.front(), policy.v_max[e], r.rho_max);
    }

    std::vector<double> in(n_roads, 0.0), out(n_roads, 0.0);
    for (const auto& j : s.junctions) {
        switch (j.kind) {
        case JunctionKind::OneToOne: {
            const std::size_t a = s.road_index(j.incoming[0]), b = s.road_index(j.outgoing[0]);
            const auto f = junction_one_to_one(head_demand[a], tail_supply[b]);
            out[a] = f.in;
            in[b] = f.out;
            break;
        }
        case JunctionKind::OneToTwo: {
            const std::size_t a = s.road_index(j.incoming[0]);
            const std::size_t b = s.road_index(j.outgoing[0]), c = s.road_index(j.outgoing[1]);
            const auto f = junction_one_to_two(head_demand[a], tail_supply[b], tail_supply[c], j.alpha);
            out[a] = f.in1;
            in[b] = f.out2;
            in[c] = f.out3;
            break;
        }
        case JunctionKind::TwoToOne: {
            const std::size_t a = s.road_index(j.incoming[0]), b = s.road_index(j.incoming[1]);
            const std::size_t c = s.road_index(j.outgoing[0]);
            const auto f = junction_two_to_one(head_demand[a], head_demand[b], tail_supply[c], j.beta);
            out[a] = f.in1;
            out[b] = f.in2;
            in[c] = f.out3;
            break;
        }
        }
    }

    TrafficState next;
    next.time = state.time + dt;
    next.queues = state.queues;
    for (std::size_t q = 0; q < s.access.size(); ++q) {
        const std::size_t e = s.road_index(s.access[q].road);
        const auto u = queue_step(state.queues[q], s.access[q].inflow.at(state.time), tail_supply[e], dt);
        next.queues[q] = u.queue;
        in[e] = u.outflow;
    }
    for (int id : s.exits) {
        const std::size_t e = s.road_index(id);
        out[e] = head_demand[e];
    }

    next.densities.resize(n_roads);
    for (std::size_t e = 0; e < n_roads; ++e) {
        const auto& r = s.roads[e];
        const auto& rho = state.densities[e];
        const double v = policy.v_max[e];
        const double lambda = dt / s.ds(e);
        auto& nr = next.densities[e];
        nr.resize(rho.size());
        double left = in[e];
        for (std::size_t n = 0; n < rho.size(); ++n) {
            const double right = n + 1 < rho.size() ? godunov_flux(rho[n], rho[n + 1], v, r.rho_max) : out[e];
            nr[n] = rho[n] - lambda * (right - left);
            left = right;
        }
    }
    if (flows) {
        flows->inflow = std::move(in);
        flows->outflow = std::move(out);
    }
    return next;
}

/// Number of uniform substeps per output step under the conservative CFL bound.
inline int substeps_per_step(const Scenario& s, const SpeedLimitPolicy& p) {
    const double ratio = s.dt() / cfl_max_dt_traffic(s, p);
    return std::max(1, static_cast<int>(std::ceil(ratio * (1.0 - 1e-12))));
}

/// Advances the network over [0, T]; snapshots land exactly on t^k.
inline TrafficTrajectory simulate_traffic(const Scenario& s, const SpeedLimitPolicy& policy) {
    check_feasible(s, policy);
    const int n_sub = substeps_per_step(s, policy);
    const double dt = s.dt();
    const double dt_sub = dt / n_sub;

    TrafficTrajectory traj;
    traj.snapshots.reserve(static_cast<std::size_t>(s.disc.n_time) + 1);
    traj.flows.reserve(static_cast<std::size_t>(s.disc.n_time));
    traj.snapshots.push_back(initial_state(s));
    BoundaryFlows sub;
    for (int k = 0; k < s.disc.n_time; ++k) {
        TrafficState st = traj.snapshots.back();
        BoundaryFlows avg{std::vector<double>(s.roads.size(), 0.0), std::vector<double>(s.roads.size(), 0.0)};
        for (int m = 0; m < n_sub; ++m) {
            st.time = k * dt + m * dt_sub;
            st = lwr_step(st, policy, s, dt_sub, &sub);
            for (std::size_t e = 0; e < s.roads.size(); ++e) {
                avg.inflow[e] += sub.inflow[e] / n_sub;
                avg.outflow[e] += sub.outflow[e] / n_sub;
            }
        }
        st.time = (k + 1) * dt;
        traj.snapshots.push_back(std::move(st));
        traj.flows.push_back(std::move(avg));
    }
    return traj;
}

} // namespace ecospeed

#endif // ECOSPEED_TRAFFIC_HPP
