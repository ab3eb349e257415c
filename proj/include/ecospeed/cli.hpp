/**
 * @file cli.hpp
 * @brief The `ecospeed` command line: validate, simulate, optimize, export.
 *
 * Exit codes: 0 success, 1 domain error (infeasible policy, CFL violation,
 * invalid option value), 2 I/O, parse or usage error.
 */

#ifndef ECOSPEED_CLI_HPP
#define ECOSPEED_CLI_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dispersion.hpp"
#include "emission.hpp"
#include "io.hpp"
#include "moo.hpp"
#include "objectives.hpp"
#include "scenario_io.hpp"
#include "traffic.hpp"
#include "validate.hpp"

namespace ecospeed::cli {

namespace fs = std::filesystem;

struct OptimizeOptions {
    std::string mode;
    double delta{-1.0};  // negative keeps the scenario's value
    std::uint64_t seed{1};
    long long budget{2000};
    unsigned jobs{1};
    std::size_t poll_members{0};
};

inline ObjectiveMode parse_mode(const std::string& m) {
    if (m == "2d") return ObjectiveMode::TwoObjective;
    if (m == "3d") return ObjectiveMode::ThreeObjective;
    throw DomainError("invalid mode '" + m + "', expected 2d or 3d");
}

inline std::string vector_text(const ObjectiveVector& f) {
    std::string s = "(";
    for (std::size_t i = 0; i < f.size(); ++i) s += (i ? ", " : "") + format_double(f[i]);
    return s + ")";
}

inline RunManifest start_manifest(const std::string& command, const std::string& scenario_path) {
    RunManifest m;
    m.command = command;
    m.scenario_path = scenario_path;
    if (!scenario_path.empty()) m.scenario_hash = sha256_hex(read_file(scenario_path));
    m.started = utc_timestamp();
    return m;
}

inline void finish_manifest(const fs::path& out, RunManifest m) {
    m.finished = utc_timestamp();
    write_manifest(out, m);
}

inline int cmd_validate(const std::string& scenario_path, const std::string& out_dir, std::ostream& out) {
    const Scenario s = load_scenario_file(scenario_path);
    const auto rep = validate_scenario(s);
    out << rep.cfl_line() << '\n';
    for (const auto& f : rep.findings) out << f << '\n';
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::string text = rep.cfl_line() + '\n';
        for (const auto& f : rep.findings) text += f + '\n';
        atomic_write(fs::path(out_dir) / "validation.txt", text);
        auto m = start_manifest("validate", scenario_path);
        m.outputs = {"validation.txt"};
        m.extra["valid"] = rep.valid();
        finish_manifest(out_dir, std::move(m));
    }
    return rep.valid() ? 0 : 1;
}

inline int cmd_simulate(const std::string& scenario_path, const std::string& policy_text, const std::string& out_dir,
                        std::ostream& out) {
    const Scenario s = load_scenario_file(scenario_path);
    const SpeedLimitPolicy p = parse_policy(policy_text);
    check_feasible(s, p);
    auto m = start_manifest("simulate", scenario_path);
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    const auto traj = simulate_traffic(s, p);
    bool hit = false;
    const AdjointField adjoint = load_or_solve_adjoint(s, dir, &hit);
    const PolicyEvaluator eval(s, adjoint);
    const ObjectiveValues v = eval.values(p, traj);
    const EmissionField xi = emission_field(traj, eval.raster(), s, p);

    atomic_write(dir / "trajectory.csv", trajectory_csv(s, traj));
    atomic_write(dir / "queues.csv", queue_csv(s, traj));
    atomic_write(dir / "flows.csv", flow_csv(s, traj));
    atomic_write(dir / "emission.bin", field_bytes(xi));
    atomic_write(dir / "objectives.csv", objective_log_csv({{p, v}}, s.delta));

    out << "J_flow=" << format_double(v.flow) << " J_diff=" << format_double(v.diff)
        << " J_queue=" << format_double(v.queue) << " J_poll=" << format_double(v.poll(s.delta)) << '\n';
    out << "objective vector " << vector_text(objective_vector(v, s.mode, s.delta)) << '\n';

    m.outputs = {"trajectory.csv", "queues.csv", "flows.csv", "emission.bin", "objectives.csv",
                 "adjoint-" + adjoint_key(s).substr(0, 16) + ".bin"};
    m.extra["policy"] = p.v_max;
    m.extra["adjoint_cache_hit"] = hit;
    finish_manifest(dir, std::move(m));
    return 0;
}

inline int cmd_optimize(const std::string& scenario_path, const OptimizeOptions& o, const std::string& out_dir,
                        std::ostream& out) {
    Scenario s = load_scenario_file(scenario_path);
    if (!o.mode.empty()) s.mode = parse_mode(o.mode);
    if (o.delta >= 0.0) s.delta = o.delta;
    if (o.budget <= 0) throw DomainError("budget must be positive");
    if (o.jobs == 0) throw DomainError("jobs must be positive");
    const auto rep = validate_scenario(s);
    if (!rep.valid()) throw DomainError("scenario is not valid: " + rep.findings.front());

    auto m = start_manifest("optimize", scenario_path);
    m.seed = o.seed;
    m.budget = static_cast<std::size_t>(o.budget);
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    const AdjointField adjoint = load_or_solve_adjoint(s, dir);
    const PolicyEvaluator eval(s, adjoint);
    auto objective = [&](const std::vector<double>& x) { return eval(SpeedLimitPolicy{x}); };

    Box box;
    for (const auto& r : s.roads) {
        box.lower.push_back(r.v_min);
        box.upper.push_back(r.v_max);
    }
    SearchOptions opts;
    opts.max_evaluations = static_cast<std::size_t>(o.budget);
    opts.seed = o.seed;
    opts.jobs = o.jobs;
    opts.poll_members = o.poll_members;
    const auto res = pareto_search(objective, box, opts);

    SearchOptions single = opts;
    single.max_evaluations = std::max<std::size_t>(100, opts.max_evaluations / 4);
    ObjectiveVector ideal = ideal_point(objective, box, single);
    for (const auto& e : res.archive.entries())
        for (std::size_t k = 0; k < ideal.size(); ++k) ideal[k] = std::min(ideal[k], e.f[k]);

    std::vector<FrontRow> rows;
    std::vector<std::vector<double>> policies;
    for (const auto& e : res.archive.entries()) {
        rows.push_back({e.x, eval.values(SpeedLimitPolicy{e.x})});
        policies.push_back(e.x);
    }
    const auto objs = res.archive.objectives();
    std::vector<bool> skip(ideal.size(), false);
    if (s.mode == ObjectiveMode::ThreeObjective) skip[2] = true;
    const auto normalized = normalize_front(objs, ideal, skip);

    const std::size_t d = s.roads.size();
    atomic_write(dir / "front.csv", front_csv(rows, {}, s.mode, s.delta, d));
    atomic_write(dir / "front_normalized.csv", front_csv(rows, normalized, s.mode, s.delta, d));
    atomic_write(dir / "speed_limits.csv", speed_limit_range_csv(s, policies));
    nlohmann::json diag;
    diag["evaluations"] = res.diagnostics.evaluations;
    diag["iterations"] = res.diagnostics.iterations;
    diag["final_mesh"] = res.diagnostics.final_mesh;
    diag["archive_size"] = res.diagnostics.archive_size;
    diag["budget_exhausted"] = res.diagnostics.budget_exhausted;
    diag["ideal"] = ideal;
    diag["mode"] = s.mode == ObjectiveMode::TwoObjective ? "2d" : "3d";
    diag["delta"] = s.delta;
    atomic_write(dir / "diagnostics.json", diag.dump(2) + "\n");

    out << "front: " << res.archive.size() << " efficient points from " << res.diagnostics.evaluations
        << " evaluations\n";
    out << "ideal " << vector_text(ideal) << '\n';

    m.outputs = {"front.csv", "front_normalized.csv", "speed_limits.csv", "diagnostics.json",
                 "adjoint-" + adjoint_key(s).substr(0, 16) + ".bin"};
    m.extra["mode"] = diag["mode"];
    m.extra["delta"] = s.delta;
    m.extra["jobs"] = o.jobs;
    finish_manifest(dir, std::move(m));
    return 0;
}

/// Re-expresses a stored front in (J_flow, J_poll) or (J_diff, J_queue).
inline std::string export_front(const std::string& front_text, const std::string& coords, double delta) {
    if (coords != "flow-poll" && coords != "diff-queue")
        throw DomainError("invalid coordinates '" + coords + "', expected flow-poll or diff-queue");
    const auto t = CsvTable::parse(front_text, "front");
    if (t.header.empty()) return "";
    std::vector<std::size_t> policy_cols;
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i].rfind("V_", 0) == 0) policy_cols.push_back(i);
    const std::size_t flow = t.column("J_flow"), diff = t.column("J_diff"), queue = t.column("J_queue");

    std::string out;
    for (std::size_t c : policy_cols) out += t.header[c] + ',';
    out += coords == "flow-poll" ? "J_flow,J_poll\n" : "J_diff,J_queue\n";
    for (const auto& row : t.rows) {
        for (std::size_t c : policy_cols) out += row[c] + ',';
        const double jd = parse_double(row[diff], "J_diff"), jq = parse_double(row[queue], "J_queue");
        if (coords == "flow-poll")
            out += format_double(parse_double(row[flow], "J_flow")) + ',' + format_double(jd + delta * jq) + '\n';
        else
            out += format_double(jd) + ',' + format_double(jq) + '\n';
    }
    return out;
}

inline int cmd_export(const std::string& front_path, const std::string& coords, double delta,
                      const std::string& scenario_path, const std::string& out_dir, std::ostream& out) {
    const std::string text = export_front(read_file(front_path), coords, delta);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const std::string name = "export_" + coords + ".csv";
    atomic_write(dir / name, text);
    auto m = start_manifest("export", scenario_path);
    m.outputs = {name};
    m.extra["front"] = front_path;
    m.extra["front_sha256"] = sha256_hex(read_file(front_path));
    m.extra["coords"] = coords;
    m.extra["delta"] = delta;
    finish_manifest(dir, std::move(m));
    out << "wrote " << (dir / name).string() << '\n';
    return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Speed-limit policies for traffic emissions: simulation and Pareto optimization", "ecospeed"};
    app.require_subcommand(1);
    app.set_version_flag("--version", toolkit_version);

    std::string scenario, out_dir, policy, front, coords = "flow-poll";
    OptimizeOptions oo;
    double export_delta = 0.0;

    auto* validate = app.add_subcommand("validate", "Check grid, CFL and network consistency");
    validate->add_option("--scenario", scenario, "Scenario JSON file")->required();
    validate->add_option("--out", out_dir, "Directory for the report and manifest");

    auto* simulate = app.add_subcommand("simulate", "Run one policy and write trajectories and objectives");
    simulate->add_option("--scenario", scenario, "Scenario JSON file")->required();
    simulate->add_option("--policy", policy, "Speed limits \"v1,...,vd\" in road id order")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();

    auto* optimize = app.add_subcommand("optimize", "Compute a Pareto front of speed-limit policies");
    optimize->add_option("--scenario", scenario, "Scenario JSON file")->required();
    optimize->add_option("--out", out_dir, "Output directory")->required();
    optimize->add_option("--mode", oo.mode, "2d: (-J_flow, J_poll); 3d: (-J_flow, J_diff, J_queue)");
    optimize->add_option("--delta", oo.delta, "Idle emission weight (default: scenario value)");
    optimize->add_option("--seed", oo.seed, "Random seed")->capture_default_str();
    optimize->add_option("--budget", oo.budget, "Evaluation budget of the front search")->capture_default_str();
    optimize->add_option("--jobs", oo.jobs, "Concurrent policy evaluations")->capture_default_str();
    optimize->add_option("--poll-members", oo.poll_members, "Archive members polled per iteration (0: all)")
        ->capture_default_str();

    auto* exp = app.add_subcommand("export", "Re-express a stored front in other coordinates");
    exp->add_option("--front", front, "Front CSV written by optimize")->required();
    exp->add_option("--coords", coords, "flow-poll or diff-queue")->capture_default_str();
    exp->add_option("--delta", export_delta, "Idle emission weight for J_poll")->capture_default_str();
    exp->add_option("--scenario", scenario, "Scenario the front belongs to");
    exp->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate) return cmd_validate(scenario, out_dir, out);
        if (*simulate) return cmd_simulate(scenario, policy, out_dir, out);
        if (*optimize) return cmd_optimize(scenario, oo, out_dir, out);
        if (*exp) return cmd_export(front, coords, export_delta, scenario, out_dir, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return dynamic_cast<const DomainError*>(&e) ? 1 : 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

} // namespace ecospeed::cli

#endif // ECOSPEED_CLI_HPP
