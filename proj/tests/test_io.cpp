#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include <unistd.h>

#include <cqed/commands.hpp>

using namespace cqed;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cqed_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_config(const fs::path& out) {
  return parse_config(Json::parse(R"({
    "params": {"g": 2, "gamma": 1, "drive": 0.5, "beta": {"re": 0, "im": 0.5}},
    "evolve": {"t_total": 0.2, "dt": 0.005, "stride": 10, "rho0": "vacuum_g"},
    "sample": {"t_total": 0.2, "dt": 0.005, "n_traj": 30, "seed": 4},
    "conditional": {"dt": 0.4, "record": [2, 2]},
    "sme": {"t_total": 0.1, "dt": 0.005, "n_traj": 3, "stride": 5, "seed": 1, "phi": 0.2, "eta": 0.9},
    "output": {"path": ")" + out.string() + R"("}
  })"));
}

}  // namespace

TEST(Format, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(u(rng) * 300));
    const double y = std::stod(format_double(x));
    EXPECT_EQ(std::memcmp(&x, &y, sizeof x), 0) << format_double(x);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Table, CsvAndJsonRoundTrip) {
  Table t{{"time", "x", "y"}, {}};
  t.add({0.0, 1.0 / 3, -2e-300});
  t.add({0.5, std::nextafter(1.0, 2.0), 6.02214076e23});
  EXPECT_THROW(t.add({1.0}), DimensionMismatch);
  const Table c = parse_csv(to_csv(t));
  EXPECT_EQ(c.columns, t.columns);
  EXPECT_EQ(c.rows, t.rows);
  const Table j = table_from_json(Json::parse(table_json(t).dump()));
  EXPECT_EQ(j.columns, t.columns);
  EXPECT_EQ(j.rows, t.rows);
  EXPECT_THROW(parse_csv("a,b\n1,2,3\n"), IOError);
  EXPECT_THROW(parse_csv("a\n1x\n"), IOError);
  EXPECT_THROW(parse_csv(""), IOError);
}

TEST(Records, JsonForms) {
  PhotocountRecord r{{2, 1, 2}, 1.0, std::vector<double>{0.1, 0.25, 0.9}};
  const PhotocountRecord back = record_from_json(Json::parse(record_json(r).dump()), 1.0);
  EXPECT_EQ(back.labels, r.labels);
  EXPECT_EQ(*back.times, *r.times);
  const auto bare = record_from_json(Json::parse("[1, 2, 2]"), 0.5);
  EXPECT_EQ(bare.labels, (std::vector<int>{1, 2, 2}));
  EXPECT_FALSE(bare.times.has_value());
  const auto untimed = record_from_json(Json::parse(R"([{"k": 1, "t": null}, {"k": 2}])"), 0.5);
  EXPECT_FALSE(untimed.times.has_value());
  EXPECT_THROW(record_from_json(Json::parse(R"([{"k": 1, "t": 0.1}, {"k": 2}])"), 1.0), ConfigError);
  EXPECT_THROW(record_from_json(Json::parse(R"([{"k": 3}])"), 1.0), ConfigError);
  EXPECT_THROW(record_from_json(Json::parse(R"([{"k": 1, "when": 0.1}])"), 1.0), ConfigError);
  EXPECT_THROW(record_from_json(Json::parse(R"([{"k": 1, "t": 0.5}, {"k": 1, "t": 0.2}])"), 1.0), ConfigError);
  EXPECT_THROW(record_from_json(Json::parse(R"([{"k": 1, "t": 1.5}])"), 1.0), ConfigError);
}

TEST(Config, DefaultsAndRoundTrip) {
  const RunConfig d = parse_config(Json::object());
  EXPECT_EQ(d.g, 10.0);
  EXPECT_EQ(d.format, "csv");
  EXPECT_FALSE(d.n_fock.has_value());
  const RunConfig c = small_config("out");
  const Json j = c.to_json();
  EXPECT_EQ(parse_config(j).to_json(), j);
  EXPECT_EQ(c.params().n_fock(), fock_margin(std::abs(Complex(1, 2))));
  EXPECT_EQ(c.conditional.record.labels, (std::vector<int>{2, 2}));
  EXPECT_EQ(c.conditional.record.dt_total, 0.4);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  const char* bad[] = {
      R"({"parms": {}})",
      R"({"params": {"gama": 1}})",
      R"({"params": {"gamma": 0}})",
      R"({"params": {"g": "ten"}})",
      R"({"params": {"beta": {"re": 1, "imag": 0}}})",
      R"({"params": {"n_fock": 1}})",
      R"({"sme": {"eta": 0}})",
      R"({"sme": {"eta": 1.5}})",
      R"({"sample": {"seed": -1}})",
      R"({"sample": {"n_traj": 2.5}})",
      R"({"evolve": {"rho0": "vacuum_x"}})",
      R"({"evolve": {"rho0": {"atom": "g", "fock": 1, "coherent": 1}}})",
      R"({"verify": {"checks": ["theorem3"]}})",
      R"({"output": {"format": "xml"}})",
      R"({"conditional": {"record": [1], "record_file": "r.json"}})",
      R"({"conditional": {"record_file": "/definitely/not/here.json"}})",
      R"({"conditional": {"engine": "fast"}})",
  };
  for (const char* text : bad) EXPECT_THROW(parse_config(Json::parse(text)), ConfigError) << text;
  EXPECT_THROW(parse_json("{\"params\": ", "cfg"), ConfigError);
}

TEST(Config, RecordFileIsResolvedNextToTheConfig) {
  const fs::path dir = scratch("recfile");
  write_text(dir / "rec.json", R"([{"k": 2, "t": 0.1}, {"k": 1, "t": 0.3}])");
  write_text(dir / "cfg.json", R"({"conditional": {"dt": 0.5, "record_file": "rec.json"}})");
  const RunConfig c = load_config(dir / "cfg.json");
  EXPECT_EQ(c.conditional.record.labels, (std::vector<int>{2, 1}));
  EXPECT_EQ(c.conditional.record.times->at(1), 0.3);
  EXPECT_THROW(load_config(dir / "missing.json"), IOError);
}

TEST(Commands, EvolveAtZeroDurationWritesInitialObservables) {
  const fs::path dir = scratch("evolve0");
  RunConfig c = small_config(dir);
  c.evolve.t_total = 0.0;
  const auto out = run_command("evolve", c);
  const Table t = parse_csv(read_text(dir / "timeseries.csv"));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], observable_row(0.0, c.evolve.rho0.build(c.params())));
  EXPECT_EQ(t.columns, observable_columns());
  const Json m = Json::parse(read_text(dir / "manifest.json"));
  EXPECT_EQ(m["command"], "evolve");
  EXPECT_EQ(parse_config(m["config"]).to_json(), c.to_json());
  EXPECT_TRUE(m["diagnostics"].contains("edge_population"));
  EXPECT_TRUE(m["versions"].contains("eigen"));
}

TEST(Commands, EvolveJsonFormatRoundTrips) {
  const fs::path dir = scratch("evolvejson");
  RunConfig c = small_config(dir);
  c.format = "json";
  run_command("evolve", c);
  const Table t = table_from_json(Json::parse(read_text(dir / "timeseries.json")));
  EXPECT_EQ(t.rows.size(), 5u);  // t=0, then every 10 of 40 steps
  EXPECT_NEAR(t.rows.back()[0], 0.2, 1e-15);
}

TEST(Commands, SampleIsByteIdenticalForAFixedSeed) {
  const fs::path a = scratch("sample_a"), b = scratch("sample_b");
  RunConfig c = small_config(a);
  run_command("sample", c);
  c.output_path = b.string();
  run_command("sample", c);
  EXPECT_EQ(read_text(a / "records.json"), read_text(b / "records.json"));
  EXPECT_EQ(read_text(a / "ensemble_mean.csv"), read_text(b / "ensemble_mean.csv"));
  const Json recs = Json::parse(read_text(a / "records.json"));
  ASSERT_EQ(recs.size(), 30u);
  for (const auto& r : recs) record_from_json(r["record"], 0.2);  // parses and validates
  c.sample.seed = 5;
  c.output_path = b.string();
  run_command("sample", c);
  EXPECT_NE(read_text(a / "records.json"), read_text(b / "records.json"));
}

TEST(Commands, ConditionalReportsBothRatios) {
  const fs::path dir = scratch("cond");
  const RunConfig c = small_config(dir);
  run_command("conditional", c);
  const Table t = parse_csv(read_text(dir / "conditional.csv"));
  ASSERT_EQ(t.rows.size(), 1u);
  auto col = [&](const std::string& name) {
    return t.rows[0][std::find(t.columns.begin(), t.columns.end(), name) - t.columns.begin()];
  };
  const SystemParams p = c.params();
  EXPECT_EQ(col("formula_ratio"), eigenvalue_ratio({2, 2}, 0.4, p));
  EXPECT_NEAR(col("lambda_ratio"), steady_block_ratio({2, 2}, 0.4, p), 1e-12);
  EXPECT_NEAR(col("lambda1") + col("lambda2"), 1.0, 1e-13);
  EXPECT_EQ(col("counts"), 2.0);
  EXPECT_EQ(Json::parse(read_text(dir / "manifest.json"))["diagnostics"]["engine"], "precise");
  EXPECT_EQ(record_from_json(Json::parse(read_text(dir / "record.json")), 0.4).labels, (std::vector<int>{2, 2}));
}

TEST(Commands, ConditionalDoubleEngineAgreesAtShortInterval) {
  const fs::path a = scratch("cond_p"), b = scratch("cond_d");
  RunConfig c = small_config(a);
  c.conditional.dt = 0.2;
  c.conditional.record.dt_total = 0.2;
  run_command("conditional", c);
  c.conditional.engine = "double";
  c.output_path = b.string();
  run_command("conditional", c);
  const Table x = parse_csv(read_text(a / "conditional.csv")), y = parse_csv(read_text(b / "conditional.csv"));
  for (std::size_t i = 1; i < x.columns.size(); ++i) {
    if (x.columns[i] == "formula_ratio") continue;
    EXPECT_NEAR(x.rows[0][i], y.rows[0][i], 1e-6 * (1 + std::abs(y.rows[0][i]))) << x.columns[i];
  }
  c.conditional.engine = "precise";
  c.conditional.rho0.atom = "g";
  EXPECT_THROW(run_command("conditional", c), ConfigError);
}

TEST(Commands, SmeWritesSeriesAndIsSeeded) {
  const fs::path a = scratch("sme_a"), b = scratch("sme_b");
  RunConfig c = small_config(a);
  run_command("sme", c);
  c.output_path = b.string();
  run_command("sme", c);
  for (const char* f : {"ensemble_mean.csv", "photocurrent.csv", "mean_current.csv"})
    EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
  const Table cur = parse_csv(read_text(a / "photocurrent.csv"));
  EXPECT_EQ(cur.rows.size(), 20u);
  const Table mean = parse_csv(read_text(a / "ensemble_mean.csv"));
  EXPECT_EQ(mean.rows.size(), 5u);
  EXPECT_EQ(parse_csv(read_text(a / "mean_current.csv")).rows.size(), 3u);
}

TEST(Commands, VerifyWithZeroToleranceFailsEveryCheck) {
  const fs::path dir = scratch("verify0");
  RunConfig c = small_config(dir);
  c.verify.checks = {"theorem1", "corollary", "lemma2"};
  c.verify.tolerance = 0.0;
  c.format = "json";
  const auto out = run_command("verify", c);
  EXPECT_EQ(out.exit_code, kCheckFailed);
  const Json report = Json::parse(read_text(dir / "report.json"));
  ASSERT_EQ(report.size(), 3u);
  for (const auto& r : report) {
    EXPECT_FALSE(r["passed"].get<bool>());
    EXPECT_TRUE(r["residual"].is_number());
  }
  c.verify.tolerance.reset();
  EXPECT_EQ(run_command("verify", c).exit_code, kOk);
}

TEST(Commands, VerifyNamesTheCheckHitByTruncation) {
  const fs::path dir = scratch("verifytrunc");
  RunConfig c = small_config(dir);
  c.n_fock = 10;
  c.verify.checks = {"theorem1"};
  const auto out = run_command("verify", c);
  EXPECT_EQ(out.exit_code, kNumericError);
  // report.csv has a quoted free-text column, so look at the raw text.
  const std::string csv = read_text(dir / "report.csv");
  EXPECT_NE(csv.find("theorem1,nan"), std::string::npos) << csv;
  EXPECT_NE(csv.find("TruncationError"), std::string::npos);
}
