// Command-line front end. Uses only the C interface of the library.
#include "steinshrink.h"

#include "CLI11.hpp"

#include <cstdio>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOther = 1;

std::vector<std::string> lines(const char* text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

int exit_code(ss_status status) {
  switch (status) {
    case SS_OK: return 0;
    case SS_ERR_PARAMETER: return kExitUsage;
    case SS_ERR_NUMERICAL: return kExitNumerical;
    default: return kExitOther;
  }
}

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Flags shared by every subcommand; each maps onto one config key.
constexpr Flag kFlags[] = {
    {"--model", "model", "noise model"},
    {"--d", "d", "dimension"},
    {"--k", "k", "Student degrees of freedom"},
    {"--sigma", "sigma", "coordinate standard deviation"},
    {"--eps", "eps", "corruption fraction"},
    {"--theta", "theta", "mean: zero | scaled:c | spikes:m:h | file path"},
    {"--estimator", "estimator", "identity | james-stein | soft-threshold"},
    {"--lambda", "lambda", "shrinkage parameter(s), comma separated"},
    {"--lambda-grid", "lambda_grid", "SURE selection grid C:size on [0, sqrt(C log d)]"},
    {"--reps", "reps", "Monte Carlo replicates"},
    {"--seed", "seed", "random seed"},
    {"--out", "out", "output CSV path (default stdout)"},
    {"--dims", "dims", "dimension sweep, comma separated"},
    {"--c-low", "c_low", "sphere demo: lower ||theta||^2/(sigma^2 d)"},
    {"--c-high", "c_high", "sphere demo: upper ||theta||^2/(sigma^2 d)"},
    {"--bounds", "bounds", "compute analytic bounds (on/off)"},
    {"--alpha-minus", "alpha_minus", "declared lower Stein kernel bound"},
    {"--alpha-plus", "alpha_plus", "declared upper Stein kernel bound"},
    {"--pinsker", "pinsker", "coordinate variance sigma^2/d (on/off)"},
    {"--threads", "threads", "worker threads (0 = all cores)"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shrinkage estimation, Stein kernels and zero-bias experiments"};
  app.set_version_flag("--version", std::string(ss_version()));
  app.require_subcommand(1);

  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::App*> subcommands;
  for (const auto& name : lines(ss_command_names())) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_file, "key=value config file (flags take precedence)");
    for (const auto& flag : kFlags) sub->add_option(flag.name, values[flag.key], flag.help);
    subcommands[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::string command;
  for (const auto& [name, sub] : subcommands)
    if (sub->parsed()) command = name;

  ss_config* raw = nullptr;
  if (ss_config_create(&raw) != SS_OK) {
    std::fprintf(stderr, "error: %s\n", ss_last_error());
    return kExitOther;
  }
  std::unique_ptr<ss_config, void (*)(ss_config*)> config(raw, ss_config_destroy);

  auto fail = [](ss_status status) {
    std::fprintf(stderr, "error: %s\n", ss_last_error());
    return exit_code(status);
  };

  // Precedence: defaults < config file < flags.
  if (!config_file.empty()) {
    if (const ss_status s = ss_config_load_file(config.get(), config_file.c_str()); s != SS_OK) return fail(s);
  }
  if (const ss_status s = ss_config_set(config.get(), "command", command.c_str()); s != SS_OK) return fail(s);
  const CLI::App* sub = subcommands[command];
  for (const auto& flag : kFlags) {
    if (sub->count(flag.name) == 0) continue;
    if (const ss_status s = ss_config_set(config.get(), flag.key, values[flag.key].c_str()); s != SS_OK)
      return fail(s);
  }
  if (const ss_status s = ss_run_to_output(config.get()); s != SS_OK) return fail(s);
  return 0;
}
