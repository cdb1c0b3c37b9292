#include "steinshrink.h"

#include "steinshrink/estimation.hpp"
#include "steinshrink/experiments.hpp"
#include "steinshrink/risk_lab.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

struct ss_config {
  steinshrink::ExperimentConfig config;
};

namespace {

thread_local std::string g_last_error;

template <class F>
ss_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return SS_OK;
  } catch (const steinshrink::ParameterError& e) {
    g_last_error = e.what();
    return SS_ERR_PARAMETER;
  } catch (const steinshrink::NumericalGuardError& e) {
    g_last_error = e.what();
    return SS_ERR_NUMERICAL;
  } catch (const steinshrink::UnavailableError& e) {
    g_last_error = e.what();
    return SS_ERR_UNAVAILABLE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SS_ERR_INTERNAL;
  }
}

ss_status null_argument(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return SS_ERR_PARAMETER;
}

std::string joined(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += n + "\n";
  return out;
}

}  // namespace

extern "C" {

const char* ss_version(void) { return steinshrink::kVersion; }

const char* ss_last_error(void) { return g_last_error.c_str(); }

ss_status ss_config_create(ss_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = new ss_config{}; });
}

void ss_config_destroy(ss_config* config) { delete config; }

ss_status ss_config_set(ss_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return null_argument("config, key or value");
  return guarded([&] { config->config.set(key, value); });
}

ss_status ss_config_load_file(ss_config* config, const char* path) {
  if (!config || !path) return null_argument("config or path");
  return guarded([&] { config->config.load_file(path); });
}

ss_status ss_run(const ss_config* config, char** csv_out) {
  if (!config || !csv_out) return null_argument("config or csv_out");
  *csv_out = nullptr;
  return guarded([&] {
    const std::string csv = steinshrink::run_experiment(config->config);
    char* buffer = new char[csv.size() + 1];
    std::memcpy(buffer, csv.c_str(), csv.size() + 1);
    *csv_out = buffer;
  });
}

ss_status ss_run_to_output(const ss_config* config) {
  if (!config) return null_argument("config");
  std::string csv;
  const ss_status status = guarded([&] { csv = steinshrink::run_experiment(config->config); });
  if (status != SS_OK) return status;
  const std::string& path = config->config.out;
  if (path.empty() || path == "-") {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
    std::fflush(stdout);
    return SS_OK;
  }
  std::ofstream file(path, std::ios::binary);
  file << csv;
  if (!file) {
    g_last_error = "cannot write output file '" + path + "'";
    return SS_ERR_IO;
  }
  return SS_OK;
}

void ss_string_free(char* text) { delete[] text; }

const char* ss_command_names(void) {
  static const std::string names = joined(steinshrink::command_names());
  return names.c_str();
}

const char* ss_model_names(void) {
  static const std::string names = joined(steinshrink::model_names());
  return names.c_str();
}

ss_status ss_james_stein(const double* x, size_t d, double lambda, double* out) {
  if (!x || !out) return null_argument("x or out");
  return guarded([&] {
    const Eigen::Map<const steinshrink::Vec> in(x, static_cast<Eigen::Index>(d));
    Eigen::Map<steinshrink::Vec>(out, static_cast<Eigen::Index>(d)) = steinshrink::james_stein(in, lambda);
  });
}

ss_status ss_soft_threshold(const double* x, size_t d, double lambda, double* out) {
  if (!x || !out) return null_argument("x or out");
  return guarded([&] {
    const Eigen::Map<const steinshrink::Vec> in(x, static_cast<Eigen::Index>(d));
    Eigen::Map<steinshrink::Vec>(out, static_cast<Eigen::Index>(d)) = steinshrink::soft_threshold(in, lambda);
  });
}

ss_status ss_sure(const double* x, size_t d, const char* estimator, double lambda, double sigma2, double* out) {
  if (!x || !estimator || !out) return null_argument("x, estimator or out");
  return guarded([&] {
    using steinshrink::EstimatorKind;
    using steinshrink::EstimatorSpec;
    const Eigen::Map<const steinshrink::Vec> in(x, static_cast<Eigen::Index>(d));
    EstimatorSpec spec;
    switch (steinshrink::parse_estimator_kind(estimator)) {
      case EstimatorKind::Identity: spec = EstimatorSpec::identity(); break;
      case EstimatorKind::JamesStein: spec = EstimatorSpec::james_stein(lambda); break;
      case EstimatorKind::SoftThreshold: spec = EstimatorSpec::soft_threshold(lambda); break;
    }
    *out = steinshrink::sure(steinshrink::Vec(in), spec, sigma2);
  });
}

ss_status ss_pinsker_limit(double sigma2, double c2, double* out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = steinshrink::pinsker_limit(sigma2, c2); });
}

}  // extern "C"
