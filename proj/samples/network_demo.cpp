// Simulates one uniform speed limit on a scenario and prints per-road traffic and the objectives.
#include <cstdio>
#include <cstdlib>
#include <exception>

#include "ecospeed/ecospeed.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: network_demo SCENARIO.json [SPEED]\n");
        return 2;
    }
    try {
        const ecospeed::Scenario s = ecospeed::load_scenario_file(argv[1]);
        const double v = argc > 2 ? std::atof(argv[2]) : 1.0;
        const ecospeed::SpeedLimitPolicy p{std::vector<double>(s.roads.size(), v)};
        ecospeed::check_feasible(s, p);

        const auto traj = ecospeed::simulate_traffic(s, p);
        std::printf("road  length  mean density  final density\n");
        for (std::size_t e = 0; e < s.roads.size(); ++e) {
            double mean = 0.0;
            for (const auto& st : traj.snapshots)
                for (double rho : st.densities[e]) mean += rho;
            mean /= static_cast<double>(traj.snapshots.size() * s.disc.n_cells);
            double last = 0.0;
            for (double rho : traj.snapshots.back().densities[e]) last += rho;
            last /= static_cast<double>(s.disc.n_cells);
            std::printf("%4d  %6.3f  %12.4f  %13.4f\n", s.roads[e].id, s.roads[e].length(), mean, last);
        }

        const auto adjoint = ecospeed::solve_adjoint(s);
        const auto j = ecospeed::PolicyEvaluator(s, adjoint).values(p, traj);
        std::printf("J_flow %.6g  J_diff %.6g  J_queue %.6g\n", j.flow, j.diff, j.queue);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
