#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mplab/mplab.hpp"

using namespace mplab;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& p) {
  std::ifstream is(p);
  return json::parse(is);
}

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mplab_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(MPLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json tiny_decay() {
  return json::parse(R"({
    "kind": "decay_probe",
    "model": {"d": 1, "L": 6, "n": 1, "sector": "distinguishable", "lambda": 4},
    "ensemble": {"base_seed": 3, "count": 6},
    "numerics": {"s": 0.5, "quad_points": 4},
    "output": {"directory": "out", "name": "tiny"}
  })");
}

bool has_field(const std::vector<Violation>& vs, const std::string& field) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.field == field; });
}

ResultTable sample_table() {
  ResultTable t;
  t.columns = {{"i", ColumnType::integer}, {"x", ColumnType::real}, {"label", ColumnType::text}, {"ok", ColumnType::boolean}};
  t.add_row({std::int64_t{1}, 1.0 / 3.0, std::string("plain"), true});
  t.add_row({std::int64_t{-7}, 1e-300, std::string("comma, \"quoted\"\r\nline"), false});
  t.add_row({std::int64_t{0}, std::numeric_limits<double>::infinity(), std::string(""), true});
  t.add_row({std::int64_t{42}, -std::numeric_limits<double>::infinity(), std::string("x"), false});
  return t;
}

}  // namespace

TEST(Table, RealsUseSeventeenDigits) {
  EXPECT_EQ(format_real(1.0 / 3.0), "0.33333333333333331");
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(parse_real(format_real(v)), v);
  }
}

TEST(Table, HeaderOnlyCsv) {
  ResultTable t;
  t.columns = {{"a", ColumnType::integer}, {"b", ColumnType::real}};
  EXPECT_EQ(to_csv(t), "a,b\r\n");
  const auto back = table_from_csv(to_csv(t), {ColumnType::integer, ColumnType::real});
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_TRUE(back.rows.empty());
}

TEST(Table, CsvRoundTrip) {
  const auto t = sample_table();
  const std::string text = to_csv(t);
  EXPECT_NE(text.find("\"comma, \"\"quoted\"\"\r\nline\""), std::string::npos);
  const auto back = table_from_csv(text, {ColumnType::integer, ColumnType::real, ColumnType::text, ColumnType::boolean});
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(to_csv(back), text);
}

TEST(Table, JsonRoundTrip) {
  auto t = sample_table();
  t.meta.kind = "demo";
  t.footer = {{"note", "x"}};
  const auto doc = json::parse(to_json_document(t).dump());
  EXPECT_EQ(doc.at("rows")[2].at("x"), "inf");
  const auto back = table_from_json(doc);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.footer, t.footer);
  EXPECT_EQ(back.meta.kind, "demo");
}

TEST(Table, RowTypeChecks) {
  ResultTable t;
  t.columns = {{"a", ColumnType::integer}};
  EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
  EXPECT_THROW(t.add_row({}), std::invalid_argument);
  EXPECT_THROW(parse_csv("\"open"), std::invalid_argument);
}

TEST(Validate, ShippedConfigsAreValid) {
  for (const auto& e : fs::directory_iterator(MPLAB_CONFIG_DIR)) {
    const auto vs = validate(read_json(e.path()));
    EXPECT_TRUE(vs.empty()) << e.path() << ": " << describe(vs);
  }
}

TEST(Validate, Examples) {
  auto doc = tiny_decay();
  doc["numerics"]["s"] = 1.5;
  auto vs = validate(doc);
  ASSERT_TRUE(has_field(vs, "numerics.s"));
  EXPECT_EQ(vs.front().message, "s must lie in (0,1)");
  EXPECT_FALSE(vs.front().budget);

  doc = tiny_decay();
  doc["model"]["interaction"] = {{"kind", "nn_pair"}, {"alpha", {0, 0.2}}, {"range", 6}};
  EXPECT_TRUE(has_field(validate(doc), "model.interaction.range"));

  doc = tiny_decay();
  doc["model"]["L"] = 0;
  EXPECT_TRUE(has_field(validate(doc), "model.L"));

  doc = tiny_decay();
  doc["model"]["lambda"] = -1;
  EXPECT_TRUE(has_field(validate(doc), "model.lambda"));

  doc = tiny_decay();
  doc["ensemble"]["base_seed"] = std::int64_t{5};
  EXPECT_TRUE(validate(doc).empty());
  doc["ensemble"]["base_seed"] = -5;
  EXPECT_TRUE(has_field(validate(doc), "ensemble.base_seed"));
  doc["ensemble"]["base_seed"] = 1.5;
  EXPECT_TRUE(has_field(validate(doc), "ensemble.base_seed"));

  doc = tiny_decay();
  doc["kind"] = "nonsense";
  EXPECT_FALSE(validate(doc).empty());

  doc = tiny_decay();
  doc["params"] = {{"bogus", 1}};
  EXPECT_TRUE(has_field(validate(doc), "params.bogus"));

  doc = tiny_decay();
  doc["model"]["d"] = 2;
  doc["model"]["n"] = 3;
  doc["model"]["L"] = 10;
  vs = validate(doc);
  ASSERT_FALSE(vs.empty());
  EXPECT_TRUE(std::all_of(vs.begin(), vs.end(), [](const Violation& v) { return v.budget; }));
}

TEST(Validate, LoadConfigThrowsWithAllViolations) {
  auto doc = tiny_decay();
  doc["numerics"]["s"] = 0;
  doc["model"]["lambda"] = -1;
  try {
    load_config(doc);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_GE(e.violations.size(), 2u);
  }
}

TEST(Override, SetsDottedPaths) {
  auto doc = tiny_decay();
  apply_override(doc, "model.lambda=15");
  EXPECT_EQ(doc["model"]["lambda"], 15);
  apply_override(doc, "model.sector=boson");
  EXPECT_EQ(doc["model"]["sector"], "boson");
  apply_override(doc, "numerics.interval=[0,2]");
  EXPECT_EQ(doc["numerics"]["interval"], json::parse("[0,2]"));
  apply_override(doc, "numerics.interval.1=3");
  EXPECT_EQ(doc["numerics"]["interval"][1], 3);
  apply_override(doc, "params.new.key=true");
  EXPECT_EQ(doc["params"]["new"]["key"], true);
  EXPECT_THROW(apply_override(doc, "nokey"), std::invalid_argument);
  EXPECT_THROW(apply_override(doc, "=1"), std::invalid_argument);
  EXPECT_THROW(apply_override(doc, "model..L=1"), std::invalid_argument);
  EXPECT_THROW(apply_override(doc, "numerics.interval.5=1"), std::invalid_argument);
  EXPECT_THROW(apply_override(doc, "model.L.x=1"), std::invalid_argument);
}

TEST(SeedEnv, OverridesBaseSeed) {
  auto doc = tiny_decay();
  ::setenv("MPLAB_SEED", "12345", 1);
  apply_seed_env(doc);
  EXPECT_EQ(doc["ensemble"]["base_seed"], 12345u);
  ::setenv("MPLAB_SEED", "-3", 1);
  EXPECT_THROW(apply_seed_env(doc), ConfigError);
  ::setenv("MPLAB_SEED", "12x", 1);
  EXPECT_THROW(apply_seed_env(doc), ConfigError);
  ::unsetenv("MPLAB_SEED");
  doc = tiny_decay();
  apply_seed_env(doc);
  EXPECT_EQ(doc["ensemble"]["base_seed"], 3);
}

TEST(ConfigHash, IgnoresOutputBlock) {
  auto a = tiny_decay(), b = tiny_decay();
  b["output"]["name"] = "other";
  b["output"]["directory"] = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b["ensemble"]["base_seed"] = 4;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  const auto dir = scratch("repeat");
  auto doc = tiny_decay();
  const auto cfg = load_config(doc);
  RunOptions opt;
  opt.out_dir = (dir / "a").string();
  run(cfg, opt);
  opt.out_dir = (dir / "b").string();
  run(cfg, opt);
  const auto a = read_text(dir / "a" / "tiny.csv"), b = read_text(dir / "b" / "tiny.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_TRUE(fs::exists(dir / "a" / "tiny.meta.json"));
  const auto meta = read_json(dir / "a" / "tiny.meta.json");
  EXPECT_EQ(meta.at("config_hash"), config_hash(doc));
  EXPECT_EQ(meta.at("kind"), "decay_probe");
  fs::remove_all(dir);
}

TEST(Run, WorkerCountDoesNotChangeResults) {
  for (const char* name : {"decay_probe.json", "subadditivity.json", "composite_check.json"}) {
    auto doc = read_json(fs::path(MPLAB_CONFIG_DIR) / name);
    doc["ensemble"]["count"] = 8;
    if (doc["kind"] == "decay_probe") doc["model"]["L"] = 8;
    const auto cfg = load_config(doc);
    RunOptions one, four;
    one.write = four.write = false;
    four.workers = 4;
    EXPECT_EQ(to_csv(run(cfg, one)), to_csv(run(cfg, four))) << name;
  }
}

TEST(Run, MetadataRecordsTheConfiguration) {
  const auto cfg = load_config(tiny_decay());
  RunOptions opt;
  opt.write = false;
  opt.workers = 2;
  const auto t = run(cfg, opt);
  EXPECT_EQ(t.meta.kind, "decay_probe");
  EXPECT_EQ(t.meta.workers, 2);
  EXPECT_EQ(t.meta.config, tiny_decay());
  EXPECT_GE(t.meta.wall_seconds, 0.0);
  EXPECT_FALSE(t.rows.empty());
}

TEST(Run, FuzzTinyConfigurations) {
  std::mt19937_64 rng(99);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  const std::vector<std::string> kinds{"decay_probe", "equivalence", "wegner", "composite_check", "subadditivity",
                                       "b_monitor"};
  const std::vector<std::string> sectors{"distinguishable", "boson", "fermion", "hardcore"};
  int ran = 0, budget = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    json doc;
    const auto kind = kinds[rng() % kinds.size()];
    doc["kind"] = kind;
    const int L = pick(2, 5);
    const int n = kind == "wegner" ? 1 : pick(1, 2);
    json model = {{"d", 1}, {"L", L}, {"n", n}, {"sector", sectors[rng() % sectors.size()]},
                  {"lambda", pick(1, 20)}};
    if (rng() % 2) model["interaction"] = {{"kind", "nn_pair"}, {"alpha", {0, 0.1 * pick(0, 5)}}, {"range", 1}};
    if (rng() % 3 == 0) model["density"] = {{"kind", "uniform"}, {"a", -1}, {"b", 1}};
    doc["model"] = model;
    doc["ensemble"] = {{"base_seed", rng() % 1000}, {"count", pick(2, 4)}};
    doc["numerics"] = {{"s", 0.1 * pick(1, 9)}, {"quad_points", pick(1, 4)}, {"quadrature_points", 32},
                       {"time_grid", {{"count", 8}, {"t_min", 0.1}, {"t_max", 10}}}};
    if (kind == "wegner") {
      const int a = pick(0, L - 1), b = pick(0, L - 1);
      doc["params"] = {{"x", {{a}}}, {"y", {{b}}}, {"u1", {a}}, {"u2", {b}}, {"subsamples", 4},
                       {"energies", 2}, {"levels", 2}};
    } else if (kind == "composite_check" || kind == "subadditivity") {
      doc["params"] = {{"n_j", pick(1, 2)}, {"n_k", 1}};
    } else if (kind == "b_monitor") {
      doc["model"].erase("L");
      doc["params"] = {{"L", 2}};
    }
    if (!validate(doc).empty()) continue;
    const auto cfg = load_config(doc);
    RunOptions opt;
    opt.write = false;
    opt.workers = pick(1, 3);
    try {
      const auto t = run(cfg, opt);
      for (const auto& r : t.rows) ASSERT_EQ(r.size(), t.columns.size());
      ++ran;
    } catch (const BudgetError&) {
      ++budget;
    } catch (const SingularEnergyError&) {
      ++budget;
    } catch (const std::exception& e) {
      ADD_FAILURE() << kind << ": " << e.what() << "\n" << doc.dump();
    }
  }
  EXPECT_GT(ran, 500);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const std::string cfgdir = MPLAB_CONFIG_DIR;
  EXPECT_EQ(cli("validate " + cfgdir + "/decay_probe.json"), 0);
  EXPECT_EQ(cli("validate " + (dir / "missing.json").string()), 2);

  auto doc = tiny_decay();
  doc["numerics"]["s"] = 1.5;
  std::ofstream(dir / "bad.json") << doc.dump();
  EXPECT_EQ(cli("validate " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(cli("run " + (dir / "bad.json").string()), 2);

  doc = tiny_decay();
  doc["model"]["d"] = 2;
  doc["model"]["n"] = 3;
  doc["model"]["L"] = 10;
  std::ofstream(dir / "big.json") << doc.dump();
  EXPECT_EQ(cli("validate " + (dir / "big.json").string()), 3);
  EXPECT_EQ(cli("run " + (dir / "big.json").string()), 3);

  std::ofstream(dir / "tiny.json") << tiny_decay().dump();
  const auto tiny = (dir / "tiny.json").string();
  EXPECT_EQ(cli("run " + tiny + " --workers 2 --out " + (dir / "o1").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o1" / "tiny.csv"));
  EXPECT_TRUE(fs::exists(dir / "o1" / "tiny.meta.json"));
  EXPECT_EQ(cli("run " + tiny + " --set numerics.s=2 --out " + (dir / "o2").string()), 2);
  EXPECT_EQ(cli("run " + tiny + " --set model.lambda=6 --out " + (dir / "o3").string()), 0);
  EXPECT_EQ(read_json(dir / "o3" / "tiny.meta.json").at("config").at("model").at("lambda"), 6);
  EXPECT_NE(read_text(dir / "o1" / "tiny.csv"), read_text(dir / "o3" / "tiny.csv"));

  EXPECT_EQ(cli("run " + tiny + " --out " + (dir / "s1").string() + " && MPLAB_SEED=9 " + MPLAB_CLI + " run " + tiny +
                " --out " + (dir / "s2").string()),
            0);
  EXPECT_EQ(read_json(dir / "s2" / "tiny.meta.json").at("config").at("ensemble").at("base_seed"), 9);
  EXPECT_NE(read_text(dir / "s1" / "tiny.csv"), read_text(dir / "s2" / "tiny.csv"));
  EXPECT_EQ(std::system(("MPLAB_SEED=abc " + std::string(MPLAB_CLI) + " validate " + tiny + " >/dev/null 2>&1").c_str()) >> 8, 2);
  fs::remove_all(dir);
}
