#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dipolar/experiments.hpp"

namespace {

enum Exit : int { ok = 0, failure = 1, config_error = 2, resource_error = 3, gate_missing = 4 };

void print_catalog(std::ostream& os) {
  for (const auto& s : dipolar::experiment_catalog()) {
    os << s.name << "  " << s.description << "\n    required:";
    bool any = false;
    for (const auto& k : s.keys)
      if (!k.default_value) {
        os << " " << k.name;
        any = true;
      }
    if (!any) os << " (none)";
    os << "\n";
  }
}

void print_experiment(std::ostream& os, const dipolar::ExperimentSpec& s) {
  os << "[" << s.name << "]  " << s.description << "\n";
  for (const auto& k : s.keys) {
    os << "  " << k.name << " (" << dipolar::to_string(k.type) << ", ";
    if (k.default_value)
      os << "default " << *k.default_value;
    else
      os << "required";
    os << ")  " << k.help << "\n";
  }
}

std::filesystem::path output_dir(const std::string& flag, const std::string& experiment) {
  if (!flag.empty()) return flag;
  if (const char* root = std::getenv("DIPOLAR_SIM_OUT"); root && *root)
    return std::filesystem::path(root) / experiment;
  return std::filesystem::path("sim_runs") / experiment;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear phase and decoherence of collective excitations of polar molecules on lattices"};
  app.set_version_flag("--version", std::string(dipolar::version));
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  std::string config_path, out_flag;
  std::size_t workers = 1;
  run->add_option("config", config_path, "config file with one [experiment] section")->required();
  run->add_option("--workers", workers, "worker threads for sweeps (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_flag, "output directory (default $DIPOLAR_SIM_OUT/<experiment> or sim_runs/<experiment>)");

  auto* list = app.add_subcommand("list", "list experiments, or the keys of one experiment");
  std::string which;
  list->add_option("experiment", which, "experiment to describe");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (list->parsed()) {
      if (which.empty())
        print_catalog(std::cout);
      else
        print_experiment(std::cout, dipolar::find_experiment(which));
      return ok;
    }

    const dipolar::RunConfig cfg = dipolar::load_config(config_path);
    const dipolar::RunResult result = dipolar::run_experiment(cfg, workers);
    const auto dir = output_dir(out_flag, cfg.experiment());
    dipolar::write_run(result, dir);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << result.summary.dump(2) << "\n";
    std::cerr << "wrote " << dir.string() << "\n";
    if (result.gate_not_reached) {
      std::cerr << "error: gate not reached within the time window\n";
      return gate_missing;
    }
    return ok;
  } catch (const dipolar::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config_error;
  } catch (const dipolar::ResourceLimit& e) {
    std::cerr << "error: resource limit: " << e.what() << "\n";
    return resource_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
}
