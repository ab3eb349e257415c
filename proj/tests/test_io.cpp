#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "ecospeed/io.hpp"
#include "support.hpp"

using namespace ecospeed;
using testing_support::from_json;
using testing_support::Json;

TEST(Numbers, ShortestRoundTrip) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
        EXPECT_EQ(parse_double(format_double(v), "v"), v);
    }
    EXPECT_EQ(format_double(0.25), "0.25");
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min()), "v"),
              std::numeric_limits<double>::denorm_min());
}

TEST(Numbers, ParseErrorsNameTheField) {
    try {
        parse_double("1.5x", "front.J_flow");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("front.J_flow"), std::string::npos);
    }
    EXPECT_THROW(parse_double("", "v"), ParseError);
}

TEST(Csv, SplitKeepsEmptyFieldsAndDropsCarriageReturn) {
    EXPECT_EQ(split_csv_line("a,,b"), (std::vector<std::string>{"a", "", "b"}));
    EXPECT_EQ(split_csv_line("a,b\r"), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(split_csv_line(""), (std::vector<std::string>{""}));
}

TEST(Csv, TableLooksUpColumnsByName) {
    const auto t = CsvTable::parse("x,y\n1,2\n3,4\n", "t");
    EXPECT_EQ(t.column("y"), 1u);
    EXPECT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[1][t.column("x")], "3");
    EXPECT_THROW(t.column("z"), ParseError);
    EXPECT_THROW(CsvTable::parse("x,y\n1\n", "t"), ParseError);
    EXPECT_TRUE(CsvTable::parse("", "t").header.empty());
}

TEST(Files, AtomicWriteAndRead) {
    const auto dir = testing_support::scratch_dir("io_files");
    atomic_write(dir / "a.txt", "hello\n");
    EXPECT_EQ(read_file(dir / "a.txt"), "hello\n");
    atomic_write(dir / "a.txt", "bye");
    EXPECT_EQ(read_file(dir / "a.txt"), "bye");
    EXPECT_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
    EXPECT_THROW(read_file(dir / "missing.txt"), IoError);
    EXPECT_THROW(atomic_write(dir / "no" / "such" / "dir.txt", "x"), IoError);
}

TEST(Hash, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Fields, BinaryRoundTrip) {
    AdjointField f(Grid2D{3.0, 4}, 2);
    std::mt19937_64 rng(2);
    for (double& v : f.data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const auto bytes = field_bytes(f);
    EXPECT_EQ(bytes.size(), 24u + 3u * 25u * 8u);
    EXPECT_EQ(bytes.substr(0, 8), "ECOFLD01");
    EXPECT_EQ(field_from_bytes<AdjointTag>(bytes), f);
    EXPECT_THROW(field_from_bytes<AdjointTag>(bytes.substr(0, bytes.size() - 1)), ParseError);
    EXPECT_THROW(field_from_bytes<AdjointTag>("ECOFLD02" + bytes.substr(8)), ParseError);
}

TEST(Trajectory, CsvRoundTripIsBitwise) {
    const Scenario s = testing_support::table1();
    const auto traj = simulate_traffic(s, {{0.3, 1.7, 0.9, 2.0, 0.25, 1.1}});
    const auto back = read_trajectory_csv(s, trajectory_csv(s, traj), queue_csv(s, traj));
    ASSERT_EQ(back.snapshots.size(), traj.snapshots.size());
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        EXPECT_EQ(back.snapshots[k].densities, traj.snapshots[k].densities);
        EXPECT_EQ(back.snapshots[k].queues, traj.snapshots[k].queues);
    }
}

TEST(Trajectory, CsvLayout) {
    const Scenario s = from_json(testing_support::single_road_json(2, 0.5, 0.1));
    const auto traj = simulate_traffic(s, {{1.0}});
    const auto csv = trajectory_csv(s, traj);
    EXPECT_EQ(csv.substr(0, csv.find('\n', csv.find('\n') + 1)), "t,road,cell,rho\n0,1,1,0.5");
    const auto table = CsvTable::parse(csv, "trajectory");
    EXPECT_EQ(table.rows.size(), static_cast<std::size_t>(s.disc.n_time + 1) * 2);
    const auto flows = CsvTable::parse(flow_csv(s, traj), "flows");
    EXPECT_EQ(flows.rows.size(), static_cast<std::size_t>(s.disc.n_time) * 2);
    EXPECT_EQ(flows.rows[0][flows.column("end")], "tail");
    EXPECT_EQ(parse_double(flows.rows[0][flows.column("flux")], "flux"), 0.1);
    EXPECT_THROW(read_trajectory_csv(s, "t,road,cell,rho\n", queue_csv(s, traj)), ParseError);
}

TEST(AdjointCache, KeyTracksDependencies) {
    Json j = testing_support::table1_json();
    const auto base = adjoint_key(from_json(j));
    j["roads"][0]["rho0"] = 0.1;
    j["emission"]["theta"] = 0.9;
    j["dispersion"]["phi0"] = 0.2;
    EXPECT_EQ(adjoint_key(from_json(j)), base);
    j["dispersion"]["mu"] = 2e-6;
    EXPECT_NE(adjoint_key(from_json(j)), base);
    j = testing_support::table1_json();
    j["discretization"]["n_time"] = 700;
    EXPECT_NE(adjoint_key(from_json(j)), base);
}

TEST(AdjointCache, SecondLoadHitsCache) {
    const auto dir = testing_support::scratch_dir("io_cache");
    const Scenario s = testing_support::table1();
    bool hit = true;
    const auto a = load_or_solve_adjoint(s, dir, &hit);
    EXPECT_FALSE(hit);
    const auto b = load_or_solve_adjoint(s, dir, &hit);
    EXPECT_TRUE(hit);
    EXPECT_EQ(a, b);
    // a damaged file is rebuilt
    for (const auto& f : std::filesystem::directory_iterator(dir)) atomic_write(f.path(), "garbage");
    const auto c = load_or_solve_adjoint(s, dir, &hit);
    EXPECT_FALSE(hit);
    EXPECT_EQ(a, c);
}

TEST(Tables, FrontCsvColumns) {
    const std::vector<FrontRow> rows{{{1.0, 2.0}, {3.0, 0.5, 0.25}}};
    const auto two = front_csv(rows, {{1.0, 1.2}}, ObjectiveMode::TwoObjective, 0.5, 2);
    EXPECT_EQ(two, "V_1,V_2,J_flow,J_diff,J_queue,J_poll,N_flow,N_poll\n1,2,3,0.5,0.25,0.625,1,1.2\n");
    const auto three = front_csv(rows, {{1.0, 1.2, 0.25}}, ObjectiveMode::ThreeObjective, 0.0, 2);
    EXPECT_EQ(CsvTable::parse(three, "f").header.size(), 9u);
    EXPECT_EQ(front_csv(rows, {}, ObjectiveMode::TwoObjective, 0.0, 2),
              "V_1,V_2,J_flow,J_diff,J_queue,J_poll\n1,2,3,0.5,0.25,0.5\n");
}

TEST(Tables, SpeedLimitRanges) {
    const Scenario s = from_json(testing_support::single_road_json(2, 0.5, 0.1));
    EXPECT_EQ(speed_limit_range_csv(s, {{0.5}, {2.0}, {1.0}}), "road,v_min,v_max\n1,0.5,2\n");
    EXPECT_EQ(speed_limit_range_csv(s, {}), "road,v_min,v_max\n");
}

TEST(Manifest, WritesJson) {
    const auto dir = testing_support::scratch_dir("io_manifest");
    RunManifest m;
    m.command = "simulate";
    m.scenario_path = "x.json";
    m.scenario_hash = sha256_hex("x");
    m.seed = 3;
    m.started = utc_timestamp();
    m.finished = m.started;
    m.outputs = {"a.csv"};
    write_manifest(dir, m);
    const auto j = Json::parse(read_file(dir / "manifest.json"));
    EXPECT_EQ(j["command"], "simulate");
    EXPECT_EQ(j["seed"], 3);
    EXPECT_EQ(j["outputs"][0], "a.csv");
    EXPECT_EQ(j["scenario"]["sha256"], m.scenario_hash);
    EXPECT_EQ(m.started.size(), 20u);
}
