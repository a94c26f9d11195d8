#include "app.hpp"

#include <decrom/config.hpp>
#include <decrom/types.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

void print_status(const nlohmann::json& j) { std::cout << j.dump() << std::endl; }

int fail(const std::string& kind, const std::string& message, int code) {
  print_status({{"status", "error"}, {"kind", kind}, {"message", message}});
  return code;
}

/// Moves the finished staging directory into place.
void publish(const fs::path& staging, const fs::path& out) {
  if (!fs::exists(out)) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    fs::rename(staging, out);
    return;
  }
  for (const auto& entry : fs::directory_iterator(staging)) {
    const fs::path target = out / entry.path().filename();
    if (fs::exists(target)) fs::remove_all(target);
    fs::rename(entry.path(), target);
  }
  fs::remove_all(staging);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Certified reduced-order models with learned time-integration defects"};
  cli.require_subcommand(1);

  std::string config_path;
  std::optional<int> alg;
  std::optional<std::string> surrogate;
  std::optional<long long> seed;
  std::optional<std::string> out_dir;
  std::string log_level = "info";
  cli.add_option("--config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  cli.add_option("--alg", alg, "Greedy algorithm")->check(CLI::IsMember({1, 2}));
  cli.add_option("--surrogate", surrogate, "Defect surrogate")->check(CLI::IsMember({"rbf", "fnn"}));
  cli.add_option("--seed", seed, "Seed for splits and network initialization")->check(CLI::NonNegativeNumber);
  cli.add_option("--out", out_dir, "Output directory");
  cli.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  auto* sim = cli.add_subcommand("simulate-fom", "Blackbox trajectory dump");
  std::string param_text;
  sim->add_option("--param", param_text, "Comma-separated parameter (default: demo parameter)");
  cli.add_subcommand("closure-train", "Defect tensor and closure model");
  cli.add_subcommand("greedy", "POD-Greedy run with convergence history");
  auto* est = cli.add_subcommand("estimate", "Test-set error estimates");
  std::string from_dir;
  bool truth = false;
  est->add_option("--from", from_dir, "Reuse a saved greedy result")->check(CLI::ExistingDirectory);
  est->add_flag("--truth", truth, "Also compute true output errors");
  cli.add_subcommand("demo-heat", "Closure-free estimation on the heat model");
  cli.add_subcommand("svd-report", "Snapshot and defect singular values");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return cli.exit(e);
    return fail("usage", e.what(), 2);
  }

  auto logger = spdlog::stderr_color_mt("decrom");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  decrom::ExperimentConfig cfg;
  try {
    cfg = decrom::load_config(config_path);
    if (alg) cfg.algorithm = *alg;
    if (surrogate) cfg.greedy.closure.surrogate = decrom::surrogate_from_string(*surrogate);
    if (seed) {
      cfg.seed = static_cast<std::uint64_t>(*seed);
      cfg.greedy.closure.fnn.seed = cfg.seed;
    }
    if (out_dir) cfg.output_dir = *out_dir;
    cfg.validate();
  } catch (const decrom::Error& e) {
    return fail(e.kind(), e.what(), 2);
  }

  const std::string command = cli.get_subcommands().front()->get_name();
  const fs::path out = cfg.output_dir;
  const fs::path staging =
      (out.has_parent_path() ? out.parent_path() : fs::path(".")) /
      ("." + out.filename().string() + ".staging-" + std::to_string(::getpid()));

  try {
    std::optional<decrom::Parameter> param;
    if (!param_text.empty()) {
      std::vector<double> values;
      std::stringstream ss(param_text);
      std::string item;
      while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
      param = Eigen::Map<const decrom::Vector>(values.data(), static_cast<decrom::Index>(values.size()));
    }
    fs::create_directories(staging);
    if (command == "simulate-fom") {
      decrom::app::simulate_fom(cfg, staging, param);
    } else if (command == "closure-train") {
      decrom::app::closure_train(cfg, staging);
    } else if (command == "greedy") {
      decrom::app::greedy(cfg, staging);
    } else if (command == "estimate") {
      std::optional<fs::path> from;
      if (!from_dir.empty()) from = from_dir;
      decrom::app::estimate(cfg, staging, from, truth);
    } else if (command == "demo-heat") {
      decrom::app::demo_heat(cfg, staging);
    } else if (command == "svd-report") {
      decrom::app::svd_report(cfg, staging);
    }
    publish(staging, out);
  } catch (const decrom::Error& e) {
    fs::remove_all(staging);
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    fs::remove_all(staging);
    return fail("internal", e.what(), 1);
  }
  print_status({{"status", "ok"}, {"command", command}, {"out", out.string()}, {"config_hash", cfg.hash()}});
  return 0;
}
