// mplab command line: run or validate an experiment configuration.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mplab/mplab.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInvalid = 2;
constexpr int kBudget = 3;

mplab::json read_document(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return mplab::json::parse(ss.str());
}

int report(const std::vector<mplab::Violation>& vs) {
  std::cerr << mplab::describe(vs);
  const bool budget_only =
      std::all_of(vs.begin(), vs.end(), [](const mplab::Violation& v) { return v.budget; });
  return budget_only ? kBudget : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-particle Anderson localization laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mplab::kVersion));

  std::string config_path;
  int workers = mplab::default_workers();
  std::string out_dir;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("config", config_path, "Experiment configuration (JSON)")->required();
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (overrides output.directory)");
  run->add_option("--set", overrides, "Override a field by dotted path, e.g. model.lambda=15");

  auto* validate = app.add_subcommand("validate", "Check a configuration without running it");
  validate->add_option("config", config_path, "Experiment configuration (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  mplab::json doc;
  try {
    doc = read_document(config_path);
    for (const auto& o : overrides) mplab::apply_override(doc, o);
    mplab::apply_seed_env(doc);
  } catch (const mplab::ConfigError& e) {
    return report(e.violations);
  } catch (const std::exception& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kInvalid;
  }

  const auto violations = mplab::validate(doc);
  if (*validate) {
    if (!violations.empty()) return report(violations);
    std::cout << "ok: " << doc.value("kind", std::string()) << " (config " << mplab::config_hash(doc) << ")\n";
    return kOk;
  }
  if (!violations.empty()) return report(violations);

  try {
    const auto cfg = mplab::load_config(doc);
    mplab::RunOptions opt;
    opt.workers = workers;
    if (!out_dir.empty()) opt.out_dir = out_dir;
    const auto table = mplab::run(cfg, opt);
    const std::string dir = opt.out_dir.value_or(cfg.output.directory);
    std::cout << cfg.kind << ": " << table.rows.size() << " rows in " << table.meta.wall_seconds << " s -> " << dir
              << '/' << cfg.output.name << ".*\n";
    if (!table.footer.empty()) std::cout << table.footer.dump() << '\n';
    return kOk;
  } catch (const mplab::ConfigError& e) {
    return report(e.violations);
  } catch (const mplab::BudgetError& e) {
    std::cerr << "budget: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
