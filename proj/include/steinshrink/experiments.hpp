#pragma once

#include "steinshrink/estimation.hpp"
#include "steinshrink/noise_models.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace steinshrink {

/// Resolved settings of one experiment run. Every field can be set from a
/// key=value pair (config file line or command-line flag).
struct ExperimentConfig {
  std::string command = "risk";
  std::string model = "gaussian";
  int d = 5;
  double k = 6.0;
  double sigma = 1.0;
  double eps = 0.1;
  std::string theta = "zero";
  std::string estimator = "james-stein";
  /// Empty means the command default (usually sigma^2 (d-2)).
  std::vector<double> lambdas;
  std::optional<LambdaGrid> lambda_grid;
  std::size_t reps = 100000;
  std::uint64_t seed = 1;
  std::string out;
  /// Dimension sweep for adaptivity, sphere-demo and student-demo.
  std::vector<int> dims;
  double c_low = 4.0;
  double c_high = 9.0;
  bool bounds = true;
  std::optional<double> alpha_minus;
  std::optional<double> alpha_plus;
  bool pinsker = false;
  unsigned threads = 0;

  /// Sets one key. Keys use underscores or dashes interchangeably. Throws
  /// ParameterError for unknown keys and malformed values.
  void set(const std::string& key, const std::string& value);
  /// Reads key=value lines; blank lines and lines starting with '#' are
  /// skipped.
  void load_file(const std::string& path);
  /// Every key with its resolved value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> resolved() const;
};

/// Model names accepted by build_model.
std::vector<std::string> model_names();
/// theta + Y for the configured family at dimension d, with coordinate
/// variance sigma^2 (or sigma^2/d when `pinsker` is set).
NoiseModel build_model(const ExperimentConfig& config, int d);

/// Runs config.command and returns the CSV text, beginning with the
/// '#'-prefixed metadata header. Commands: risk, identity-check, sure,
/// adaptivity, sphere-demo, student-demo.
std::string run_experiment(const ExperimentConfig& config);
std::vector<std::string> command_names();

}  // namespace steinshrink
