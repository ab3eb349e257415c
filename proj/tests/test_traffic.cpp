#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ecospeed/traffic.hpp"
#include "riemann_oracle.hpp"
#include "support.hpp"

using namespace ecospeed;
using testing_support::from_json;
using testing_support::Json;

namespace {

SpeedLimitPolicy uniform_policy(const Scenario& s, double v) { return {std::vector<double>(s.roads.size(), v)}; }

SpeedLimitPolicy random_policy(const Scenario& s, std::mt19937_64& rng) {
    SpeedLimitPolicy p;
    for (const auto& r : s.roads) p.v_max.push_back(std::uniform_real_distribution<double>(r.v_min, r.v_max)(rng));
    return p;
}

// Road 1 (two cells, length 0.1) with a dead access and a jammed successor,
// so no vehicle crosses its ends.
Scenario closed_two_cells(double rho1, double rho2) {
    Json j = testing_support::single_road_json(2, 0.0, 0.0);
    j["roads"][0]["end"] = {0.6, 1.5};
    j["roads"][0]["rho0"] = {rho1, rho2};
    j["roads"].push_back({{"id", 2},
                          {"start", {0.6, 1.5}},
                          {"end", {0.7, 1.5}},
                          {"width", 0.1},
                          {"rho_max", 1},
                          {"rho0", 1.0},
                          {"v_min", 0.25},
                          {"v_max", 2}});
    j["junctions"] = Json::array({{{"kind", "one_to_one"}, {"in", {1}}, {"out", {2}}}});
    j["exits"] = {2};
    return from_json(j);
}

} // namespace

TEST(Flux, GreenshieldsExamples) {
    EXPECT_EQ(greenshields_flux(0.0, 1.0, 1.0), 0.0);
    EXPECT_EQ(greenshields_flux(0.5, 1.0, 1.0), 0.25);
    EXPECT_EQ(greenshields_flux(0.25, 1.0, 1.0), 0.1875);
    EXPECT_EQ(capacity(2.0, 1.0), 0.5);
    EXPECT_THROW(greenshields_flux(1.5, 1.0, 1.0), DomainError);
    EXPECT_THROW(greenshields_flux(-0.1, 1.0, 1.0), DomainError);
}

TEST(Flux, DemandSupplyExamples) {
    EXPECT_EQ(demand(0.25, 1.0, 1.0), 0.1875);
    EXPECT_EQ(demand(0.75, 1.0, 1.0), 0.25);
    EXPECT_EQ(supply(0.5, 1.0, 1.0), 0.25);
    EXPECT_EQ(supply(0.75, 1.0, 1.0), 0.1875);
    EXPECT_EQ(supply(0.25, 1.0, 1.0), 0.25);
}

TEST(Flux, DemandSupplyEnvelopes) {
    for (double v : {0.25, 1.0, 2.0}) {
        double prev_d = -1.0, prev_s = 1e9;
        for (int i = 0; i <= 100; ++i) {
            const double rho = i / 100.0;
            const double d = demand(rho, v, 1.0), s = supply(rho, v, 1.0);
            EXPECT_LE(d, capacity(v, 1.0));
            EXPECT_LE(s, capacity(v, 1.0));
            EXPECT_GE(d, prev_d);
            EXPECT_LE(s, prev_s);
            EXPECT_EQ(std::min(d, s), greenshields_flux(rho, v, 1.0));
            prev_d = d;
            prev_s = s;
        }
    }
}

TEST(Flux, GodunovExamples) {
    EXPECT_EQ(godunov_flux(0.25, 0.75, 1.0, 1.0), 0.1875);
    for (double r : {0.0, 0.3, 0.5, 1.0}) {
        EXPECT_EQ(godunov_flux(0.0, r, 1.0, 1.0), 0.0);
        EXPECT_EQ(godunov_flux(r, 1.0, 1.0, 1.0), 0.0);
    }
    EXPECT_EQ(godunov_flux(0.5, 0.5, 2.0, 1.0), 0.5);
}

TEST(Junction, OneToOneExamples) {
    auto f = junction_one_to_one(0.25, 0.1);
    EXPECT_EQ(f.in, 0.1);
    EXPECT_EQ(f.out, 0.1);
    EXPECT_EQ(junction_one_to_one(0.1, 0.25).in, 0.1);
    EXPECT_EQ(junction_one_to_one(0.0, 0.25).out, 0.0);
    EXPECT_THROW(junction_one_to_one(-0.1, 0.25), DomainError);
}

TEST(Junction, OneToTwoExamples) {
    auto f = junction_one_to_two(0.2, 0.05, 0.2, {0.5, 0.5});
    EXPECT_DOUBLE_EQ(f.in1, 0.15);
    EXPECT_EQ(f.out2, 0.05);
    EXPECT_DOUBLE_EQ(f.out3, 0.1);
    f = junction_one_to_two(0.0, 0.3, 0.3, {0.5, 0.5});
    EXPECT_EQ(f.in1, 0.0);
    EXPECT_EQ(f.out2, 0.0);
    EXPECT_EQ(f.out3, 0.0);
    f = junction_one_to_two(0.2, 1.0, 1.0, {0.5, 0.5});
    EXPECT_EQ(f.in1, 0.2);
    EXPECT_EQ(f.out2, 0.1);
    EXPECT_EQ(f.out3, 0.1);
    EXPECT_THROW(junction_one_to_two(0.2, 1.0, 1.0, {0.6, 0.5}), DomainError);
}

TEST(Junction, TwoToOneExamples) {
    auto f = junction_two_to_one(0.3, 0.3, 0.25, {0.5, 0.5});
    EXPECT_EQ(f.in1, 0.125);
    EXPECT_EQ(f.in2, 0.125);
    EXPECT_EQ(f.out3, 0.25);
    f = junction_two_to_one(0.05, 0.3, 0.25, {0.5, 0.5});
    EXPECT_EQ(f.in1, 0.05);
    EXPECT_DOUBLE_EQ(f.in2, 0.2);
    EXPECT_DOUBLE_EQ(f.out3, 0.25);
    f = junction_two_to_one(0.0, 0.0, 0.4, {0.5, 0.5});
    EXPECT_EQ(f.out3, 0.0);
    EXPECT_THROW(junction_two_to_one(0.1, 0.1, 0.1, {0.3, 0.3}), DomainError);
}

TEST(Junction, ConservationAndSupplyBoundRandomized) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 0.5), a(0.05, 0.95);
    for (int i = 0; i < 2000; ++i) {
        const double al = a(rng), be = a(rng);
        const auto d = junction_one_to_two(u(rng), u(rng), u(rng), {al, 1.0 - al});
        EXPECT_EQ(d.in1, d.out2 + d.out3);
        const double d1 = u(rng), d2 = u(rng), s = u(rng);
        const auto m = junction_two_to_one(d1, d2, s, {be, 1.0 - be});
        EXPECT_EQ(m.out3, m.in1 + m.in2);
        EXPECT_LE(m.out3, s * (1.0 + 1e-15));
        EXPECT_LE(m.in1, d1);
        EXPECT_LE(m.in2, d2);
    }
}

TEST(Queue, StepExamples) {
    auto q = queue_step(0.0, 0.25, 0.3, 0.01);
    EXPECT_EQ(q.queue, 0.0);
    EXPECT_EQ(q.outflow, 0.25);
    q = queue_step(0.1, 0.25, 0.2, 0.01);
    EXPECT_DOUBLE_EQ(q.queue, 0.1005);
    EXPECT_EQ(q.outflow, 0.2);
    q = queue_step(0.002, 0.0, 0.5, 0.01);
    EXPECT_EQ(q.queue, 0.0);
    EXPECT_DOUBLE_EQ(q.outflow, 0.2);
    EXPECT_THROW(queue_step(-1.0, 0.1, 0.1, 0.01), DomainError);
    EXPECT_THROW(queue_step(0.0, 0.1, 0.1, 0.0), DomainError);
}

TEST(Cfl, TrafficBoundExamples) {
    EXPECT_DOUBLE_EQ(cfl_max_dt_traffic(std::vector<double>(6, 2.0), 0.05), 0.025);
    EXPECT_DOUBLE_EQ(cfl_max_dt_traffic(std::vector<double>(6, 1.0), 0.05), 0.05);
    EXPECT_DOUBLE_EQ(cfl_max_dt_traffic(std::vector<double>{0.25}, 0.05), 0.2);
    EXPECT_THROW(cfl_max_dt_traffic(std::vector<double>{}, 0.05), DomainError);
}

TEST(LwrStep, ClosedLoopUniformStateIsSteady) {
    Json j = testing_support::single_road_json(20, 0.5, 0.0);
    j["access"] = Json::array();
    j["exits"] = Json::array();
    j["junctions"] = Json::array({{{"kind", "one_to_one"}, {"in", {1}}, {"out", {1}}}});
    const Scenario s = from_json(j);
    const auto st0 = initial_state(s);
    auto st = st0;
    for (int k = 0; k < 50; ++k) st = lwr_step(st, {{1.0}}, s, 0.01);
    EXPECT_EQ(st.densities, st0.densities);
}

TEST(LwrStep, TwoCellHandUpdate) {
    const Scenario s = closed_two_cells(0.25, 0.75);
    BoundaryFlows f;
    const auto next = lwr_step(initial_state(s), {{1.0, 1.0}}, s, 0.01, &f);
    EXPECT_EQ(f.inflow[0], 0.0);
    EXPECT_EQ(f.outflow[0], 0.0);
    EXPECT_DOUBLE_EQ(next.densities[0][0], 0.2125);
    EXPECT_DOUBLE_EQ(next.densities[0][1], 0.7875);
}

TEST(LwrStep, RiemannDataMassChangeMatchesBoundaryFlux) {
    const Scenario s = riemann::scenario(40, 0.2, 0.8, 0.5, 10);
    auto st = initial_state(s);
    BoundaryFlows f;
    for (int k = 0; k < 30; ++k) {
        const double dt = 0.01;
        const auto next = lwr_step(st, {{1.0}}, s, dt, &f);
        double change = 0.0;
        for (std::size_t n = 0; n < next.densities[0].size(); ++n)
            change += next.densities[0][n] - st.densities[0][n];
        EXPECT_NEAR(s.ds(0) * change, dt * (f.inflow[0] - f.outflow[0]), 1e-15);
        st = next;
    }
}

TEST(LwrStep, RejectsCflViolation) {
    const Scenario s = testing_support::table1();
    EXPECT_THROW(lwr_step(initial_state(s), uniform_policy(s, 2.0), s, 0.03), DomainError);
}

TEST(LwrStep, GlobalMassBalanceAndJunctionConservation) {
    const Scenario s = testing_support::table1();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = random_policy(s, rng);
        const double dt = s.dt() / substeps_per_step(s, p);
        auto st = initial_state(s);
        BoundaryFlows f;
        for (int k = 0; k < 200; ++k) {
            const auto next = lwr_step(st, p, s, dt, &f);
            const double q_in = s.access[0].inflow.at(st.time);
            const double out = f.outflow[s.road_index(6)];
            EXPECT_NEAR(network_mass(s, next) - network_mass(s, st), dt * (q_in - out), 1e-13);
            for (const auto& j : s.junctions) {
                double a = 0.0, b = 0.0;
                for (int id : j.incoming) a += f.outflow[s.road_index(id)];
                for (int id : j.outgoing) b += f.inflow[s.road_index(id)];
                EXPECT_EQ(a, b);
            }
            st = next;
        }
    }
}

TEST(Simulate, ZeroDynamicsStayZero) {
    Json j = testing_support::table1_json();
    for (auto& r : j["roads"]) r["rho0"] = 0.0;
    j["access"][0]["inflow"] = 0.0;
    const Scenario s = from_json(j);
    const auto traj = simulate_traffic(s, uniform_policy(s, 1.0));
    ASSERT_EQ(traj.snapshots.size(), 602u);
    for (const auto& st : traj.snapshots) {
        for (const auto& road : st.densities)
            for (double rho : road) EXPECT_EQ(rho, 0.0);
        EXPECT_EQ(st.queues[0], 0.0);
    }
}

TEST(Simulate, Table1StaysWithinBounds) {
    const Scenario s = testing_support::table1();
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto traj = simulate_traffic(s, random_policy(s, rng));
        ASSERT_EQ(traj.snapshots.size(), 602u);
        ASSERT_EQ(traj.flows.size(), 601u);
        for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
            EXPECT_NEAR(traj.snapshots[k].time, static_cast<double>(k) * s.dt(), 1e-12);
            for (const auto& road : traj.snapshots[k].densities)
                for (double rho : road) {
                    EXPECT_GE(rho, -1e-12);
                    EXPECT_LE(rho, 1.0 + 1e-12);
                }
            EXPECT_GE(traj.snapshots[k].queues[0], 0.0);
        }
    }
}

TEST(Simulate, QueueGrowsWhenInflowExceedsCapacity) {
    Json j = testing_support::single_road_json(20, 0.0, 0.25);
    const Scenario s = from_json(j);
    const auto traj = simulate_traffic(s, {{0.25}});
    // capacity 0.0625 while the first cell stays uncongested: l^k = k dt (0.25 - 0.0625)
    for (int k = 1; k <= 10; ++k) {
        EXPECT_GT(traj.snapshots[k].queues[0], traj.snapshots[k - 1].queues[0]);
        EXPECT_NEAR(traj.snapshots[k].queues[0], k * s.dt() * 0.1875, 1e-12);
    }
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k)
        EXPECT_GE(traj.snapshots[k].queues[0], traj.snapshots[k - 1].queues[0]);
}

TEST(Simulate, QueueWithoutInflowNeverGrows) {
    Json j = testing_support::single_road_json(20, 0.3, 0.0);
    j["access"][0]["queue0"] = 0.5;
    const Scenario s = from_json(j);
    const auto traj = simulate_traffic(s, {{0.5}});
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
        EXPECT_LE(traj.snapshots[k].queues[0], traj.snapshots[k - 1].queues[0]);
        EXPECT_GE(traj.snapshots[k].queues[0], 0.0);
    }
    EXPECT_EQ(traj.snapshots.back().queues[0], 0.0);
}

TEST(Simulate, SubstepsLandOnOutputGrid) {
    const Scenario s = testing_support::table1();
    EXPECT_EQ(substeps_per_step(s, uniform_policy(s, 2.0)), 1);
    Json j = testing_support::table1_json();
    j["discretization"]["n_time"] = 60;  // dt = 1/12 > 0.025
    const Scenario c = from_json(j);
    EXPECT_EQ(substeps_per_step(c, uniform_policy(c, 2.0)), 4);
    const auto traj = simulate_traffic(c, uniform_policy(c, 2.0));
    EXPECT_DOUBLE_EQ(traj.snapshots.back().time, 5.0);
}

TEST(Simulate, TimeVaryingInflowSampledPerStep) {
    Json j = testing_support::single_road_json(20, 0.0, 0.0);
    j["access"][0]["inflow"] = {{"times", {0.0, 1.0}}, {"rates", {0.5, 0.0}}};
    const Scenario s = from_json(j);
    const auto traj = simulate_traffic(s, {{0.25}});
    // queue rises while the rate is 0.5 > capacity, then drains
    const auto k1 = static_cast<std::size_t>(std::floor(1.0 / s.dt()));
    EXPECT_GT(traj.snapshots[k1].queues[0], 0.3);
    EXPECT_LT(traj.snapshots.back().queues[0], traj.snapshots[k1 + 1].queues[0]);
}

TEST(Simulate, Deterministic) {
    const Scenario s = testing_support::table1();
    const auto p = uniform_policy(s, 0.7);
    const auto a = simulate_traffic(s, p), b = simulate_traffic(s, p);
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
        EXPECT_EQ(a.snapshots[k].densities, b.snapshots[k].densities);
        EXPECT_EQ(a.snapshots[k].queues, b.snapshots[k].queues);
    }
}

TEST(Godunov, RiemannErrorsDecreaseUnderRefinement) {
    // centered fans converge like h |log h|, so the observed order creeps up towards 1
    for (auto [l, r] : {std::pair{0.2, 0.8}, std::pair{0.8, 0.2}}) {
        std::vector<double> e;
        for (int n : {20, 40, 80, 160}) e.push_back(riemann::l1_error(n, l, r, 0.5));
        double prev_order = 0.0;
        for (std::size_t i = 0; i + 1 < e.size(); ++i) {
            const double order = std::log2(e[i] / e[i + 1]);
            EXPECT_GT(order, 0.55) << l << " -> " << r;
            EXPECT_GT(order, prev_order);
            prev_order = order;
        }
    }
}

TEST(Godunov, FanErrorIsSelfSimilar) {
    // e(T, h) = T g(h / T) for a single centered fan
    const double a = riemann::l1_error(20, 0.8, 0.2, 0.5);
    const double b = riemann::l1_error(40, 0.8, 0.2, 0.25);
    EXPECT_NEAR(a, 2.0 * b, 1e-12);
}

TEST(Godunov, ExactOracleSelfConsistency) {
    EXPECT_EQ(riemann::exact(0.3, 0.4, 0.2, 0.8, 1.0), 0.2);
    EXPECT_EQ(riemann::exact(0.6, 0.4, 0.2, 0.8, 1.0), 0.8);
    EXPECT_DOUBLE_EQ(riemann::exact(1.0, 0.4, 0.2, 0.8, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(riemann::exact(0.5, 0.4, 0.8, 0.2, 1.0), 0.5);
    EXPECT_EQ(riemann::exact(0.1, 0.4, 0.8, 0.2, 1.0), 0.8);
    EXPECT_EQ(riemann::exact(0.9, 0.4, 0.8, 0.2, 1.0), 0.2);
}
