#include "steinshrink/experiments.hpp"

#include "steinshrink/risk_lab.hpp"
#include "steinshrink/stein_kernels.hpp"
#include "steinshrink/vector_fields.hpp"
#include "steinshrink/zero_bias.hpp"
#include "util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace steinshrink {

namespace {

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) {
    part = trim(part);
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

int parse_int(const std::string& text, const std::string& what) {
  const double v = detail::parse_double(text, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ParameterError(what + ": expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "0" || text == "no") return false;
  throw ParameterError(what + ": expected on/off, got '" + text + "'");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

template <class T>
std::string join_numbers(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += fmt(static_cast<double>(values[i]));
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> values;
  for (const auto& part : split(text, text.find(';') != std::string::npos ? ';' : ',')) {
    values.push_back(detail::parse_double(part, what));
  }
  if (values.empty()) throw ParameterError(what + ": empty list");
  return values;
}

class CsvWriter {
 public:
  CsvWriter(const ExperimentConfig& config, std::vector<std::string> columns) : columns_(std::move(columns)) {
    out_ << "# steinshrink " << kVersion << '\n';
    for (const auto& [key, value] : config.resolved()) out_ << "# " << key << '=' << value << '\n';
  }
  void note(const std::string& key, const std::string& value) { notes_.emplace_back(key, value); }
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("CSV row width mismatch");
    rows_ += join(cells);
  }
  std::string str() {
    for (const auto& [key, value] : notes_) out_ << "# " << key << '=' << value << '\n';
    out_ << join(columns_) << rows_;
    return out_.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> notes_;
  std::string rows_;
  std::ostringstream out_;
};

double sigma2_of(const ExperimentConfig& config) { return config.sigma * config.sigma; }

EstimatorKind estimator_kind(const ExperimentConfig& config) { return parse_estimator_kind(config.estimator); }

std::vector<double> lambdas_or_default(const ExperimentConfig& config, const NoiseModel& model) {
  if (!config.lambdas.empty()) return config.lambdas;
  const Mat cov = model.law().covariance();
  const double kappa = Eigen::SelfAdjointEigenSolver<Mat>(cov, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  return {std::max(cov.trace() - 2.0 * kappa, 0.0)};
}

EstimatorSpec make_estimator(EstimatorKind kind, double lambda) {
  switch (kind) {
    case EstimatorKind::Identity: return EstimatorSpec::identity();
    case EstimatorKind::JamesStein: return EstimatorSpec::james_stein(lambda);
    case EstimatorKind::SoftThreshold: return EstimatorSpec::soft_threshold(lambda);
  }
  return EstimatorSpec::identity();
}

std::optional<SteinKernel> try_kernel(const LawPtr& law) {
  try {
    return default_kernel(law);
  } catch (const UnavailableError&) {
    return std::nullopt;
  } catch (const ParameterError&) {
    return std::nullopt;
  }
}

std::optional<ZeroBiasCoupling> try_coupling(const LawPtr& law) {
  try {
    return default_coupling(law);
  } catch (const UnavailableError&) {
    return std::nullopt;
  } catch (const ParameterError&) {
    return std::nullopt;
  }
}

// Seeds for auxiliary Monte Carlo inputs, kept apart from the risk draws.
enum SeedStream : std::uint64_t {
  kSeedInv2 = 0x1001,
  kSeedInv4 = 0x1002,
  kSeedDiscrepancy = 0x1003,
  kSeedBStar = 0x1004,
};

std::uint64_t stream(const ExperimentConfig& config, std::uint64_t tag, std::uint64_t index = 0) {
  return derive_seed(derive_seed(config.seed, tag), index);
}

struct ModelBounds {
  std::optional<double> kernel_range;
  std::optional<double> discrepancy;
  std::optional<double> zb;
};

ModelBounds bounds_for(const ExperimentConfig& config, const NoiseModel& model, double lambda, std::size_t index) {
  ModelBounds out;
  if (!config.bounds) return out;
  const Mat cov = model.law().covariance();
  BoundInputs in;
  in.lambda = lambda;
  in.d = model.dim();
  in.trace_sigma = cov.trace();
  in.kappa = Eigen::SelfAdjointEigenSolver<Mat>(cov, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  in.e_inv2 = mc_e_inv2(model, config.reps, stream(config, kSeedInv2)).mean;
  if (config.alpha_minus && config.alpha_plus) {
    in.alpha_minus = config.alpha_minus;
    in.alpha_plus = config.alpha_plus;
  } else if (model.law().is_gaussian() && cov.isDiagonal(0.0)) {
    in.alpha_minus = cov.diagonal().minCoeff();
    in.alpha_plus = cov.diagonal().maxCoeff();
  }
  if (in.alpha_minus) out.kernel_range = bound_kernel_range(in);
  if (auto kernel = try_kernel(model.law_ptr())) {
    try {
      in.e_d2_inv4 = mc_e_d2_inv4(model, config.reps, stream(config, kSeedInv4)).mean;
      in.discrepancy = discrepancy_stats(*kernel, config.reps, stream(config, kSeedDiscrepancy));
      out.discrepancy = bound_discrepancy(in);
    } catch (const UnavailableError&) {
    }
  }
  if (validity_check(model, ValidityNeed::ZeroBias).ok) {
    if (auto coupling = try_coupling(model.law_ptr())) {
      const auto b_star = bound_b_star(model, *coupling, lambda, config.reps, stream(config, kSeedBStar, index));
      out.zb = bound_zb(in, b_star.mean);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// risk
// ---------------------------------------------------------------------------

std::string cmd_risk(const ExperimentConfig& config) {
  const NoiseModel model = build_model(config, config.d);
  const EstimatorKind kind = estimator_kind(config);
  const double trace = model.law().covariance().trace();
  CsvWriter csv(config, {"label", "lambda", "mean", "stderr", "n", "seed", "bound_kernel_range", "bound_discrepancy", "bound_zb"});
  csv.note("trace_sigma", fmt(trace));
  const std::vector<double> lambdas =
      kind == EstimatorKind::Identity ? std::vector<double>{0.0} : lambdas_or_default(config, model);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const EstimatorSpec est = make_estimator(kind, lambdas[i]);
    const RiskReport risk = mc_risk(model, est, config.reps, config.seed);
    const RiskReport excess = mc_excess_risk(model, est, config.reps, config.seed);
    ModelBounds b;
    if (kind == EstimatorKind::JamesStein) b = bounds_for(config, model, lambdas[i], i);
    auto minus_trace = [&](const std::optional<double>& v) -> std::optional<double> {
      if (!v) return std::nullopt;
      return *v - trace;
    };
    csv.row({risk.label, fmt(lambdas[i]), fmt(risk.mean), fmt(risk.std_error), std::to_string(risk.n),
             std::to_string(risk.seed), fmt(b.kernel_range), fmt(b.discrepancy), fmt(b.zb)});
    csv.row({excess.label, fmt(lambdas[i]), fmt(excess.mean), fmt(excess.std_error), std::to_string(excess.n),
             std::to_string(excess.seed), fmt(minus_trace(b.kernel_range)), fmt(minus_trace(b.discrepancy)),
             fmt(minus_trace(b.zb))});
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// identity-check
// ---------------------------------------------------------------------------

VectorField linear_test_field(int d) {
  Mat B = Mat::Identity(d, d);
  for (int i = 0; i + 1 < d; ++i) B(i, i + 1) = 0.5;
  return linear_field(B, Vec::Ones(d));
}

std::string cmd_identity_check(const ExperimentConfig& config) {
  const NoiseModel model = build_model(config, config.d);
  const int d = model.dim();
  CsvWriter csv(config, {"model", "construction", "test_function", "mean", "stderr", "n", "pass"});
  const std::vector<VectorField> fields = {linear_test_field(d), coordinate_quadratic_field(), g0_field()};

  auto emit = [&](const std::string& construction, std::size_t index,
                  const std::function<RiskReport(const VectorField&, std::uint64_t)>& run) {
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const std::uint64_t seed = derive_seed(config.seed, index * 16 + f);
      try {
        const RiskReport r = run(fields[f], seed);
        const bool pass = std::abs(r.mean) < 3.0 * r.std_error || (r.mean == 0.0 && r.std_error == 0.0);
        csv.row({model.name(), construction, fields[f].name, fmt(r.mean), fmt(r.std_error), std::to_string(r.n),
                 pass ? "pass" : "fail"});
      } catch (const ValidityError&) {
        csv.row({model.name(), construction, fields[f].name, "", "", "0", "invalid-by-validity-check"});
      } catch (const UnavailableError&) {
        csv.row({model.name(), construction, fields[f].name, "", "", "0", "unavailable"});
      }
    }
  };

  std::vector<std::pair<std::string, SteinKernel>> kernels;
  if (auto k = try_kernel(model.law_ptr())) kernels.emplace_back("kernel:" + to_string(k->construction()), *k);
  if (std::holds_alternative<family::StudentT>(model.law().family()))
    kernels.emplace_back("kernel:elliptical-quadrature", elliptical_kernel(model.law_ptr(), TailMethod::Quadrature));
  std::size_t index = 0;
  if (kernels.empty()) {
    for (const auto& f : fields) csv.row({model.name(), "kernel", f.name, "", "", "0", "unavailable"});
  }
  for (const auto& [name, kernel] : kernels) {
    emit(name, index++, [&](const VectorField& f, std::uint64_t seed) {
      return stein_identity_residual(model, kernel, f, config.reps, seed);
    });
  }
  if (auto coupling = try_coupling(model.law_ptr())) {
    emit("zero-bias:" + to_string(coupling->construction()), index++, [&](const VectorField& f, std::uint64_t seed) {
      return zb_identity_residual(model, *coupling, f, config.reps, seed);
    });
  } else {
    for (const auto& f : fields) csv.row({model.name(), "zero-bias", f.name, "", "", "0", "unavailable"});
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// sure
// ---------------------------------------------------------------------------

std::string cmd_sure(const ExperimentConfig& config) {
  const NoiseModel model = build_model(config, config.d);
  const int d = model.dim();
  const EstimatorKind kind = estimator_kind(config);
  const Mat cov = model.law().covariance();
  const Vec& theta = model.theta();
  CsvWriter csv(config, {"model", "estimator", "lambda", "sure_mean", "risk_mean", "bias", "bias_bound"});

  const bool select = kind == EstimatorKind::SoftThreshold && (config.lambda_grid || config.lambdas.empty());
  if (select) {
    if (!cov.isDiagonal(0.0) || (cov.diagonal().array() != cov(0, 0)).any())
      throw ParameterError("lambda selection needs an isotropic covariance");
    const double s2 = cov(0, 0);
    const LambdaGrid grid_spec = config.lambda_grid.value_or(LambdaGrid{});
    const std::vector<double> grid = grid_spec.points(d);
    const std::size_t g = grid.size();
    // Statistics per replicate: lambda_hat, SURE at lambda_hat, loss at
    // lambda_hat, then SURE and loss along the grid.
    const auto result = run_replicates(
        config.reps, config.seed, 3 + 2 * g,
        [&](Rng& rng, std::size_t, std::span<double> out) {
          Vec x(d);
          model.draw(rng, x);
          const auto sure_path = soft_threshold_sure_path(x, s2, grid);
          const auto loss_path = soft_threshold_loss_path(x, theta, grid);
          const auto best = static_cast<std::size_t>(std::min_element(sure_path.begin(), sure_path.end()) -
                                                     sure_path.begin());
          out[0] = grid[best];
          out[1] = sure_path[best];
          out[2] = loss_path[best];
          std::copy(sure_path.begin(), sure_path.end(), out.begin() + 3);
          std::copy(loss_path.begin(), loss_path.end(), out.begin() + 3 + static_cast<std::ptrdiff_t>(g));
          return true;
        },
        1e-4, false);
    const auto& st = result.stats;
    std::size_t oracle = 0;
    for (std::size_t i = 1; i < g; ++i) {
      if (st.mean(3 + g + i) < st.mean(3 + g + oracle)) oracle = i;
    }
    csv.note("lambda_grid_top", fmt(grid.back()));
    csv.note("selected_risk_stderr", fmt(st.stderr_of_mean(2)));
    csv.note("oracle_risk_stderr", fmt(st.stderr_of_mean(3 + g + oracle)));
    csv.row({model.name(), "soft-threshold(lambda_hat)", fmt(st.mean(0)), fmt(st.mean(1)), fmt(st.mean(2)),
             fmt(st.mean(1) - st.mean(2)), ""});
    csv.row({model.name(), "soft-threshold(oracle)", fmt(grid[oracle]), fmt(st.mean(3 + oracle)),
             fmt(st.mean(3 + g + oracle)), fmt(st.mean(3 + oracle) - st.mean(3 + g + oracle)), ""});
    if (config.lambdas.empty()) return csv.str();
  }

  const std::vector<double> lambdas =
      kind == EstimatorKind::Identity ? std::vector<double>{0.0} : lambdas_or_default(config, model);
  std::optional<ZeroBiasCoupling> coupling;
  if (kind == EstimatorKind::JamesStein && config.bounds && !model.law().is_gaussian() &&
      validity_check(model, ValidityNeed::ZeroBias).ok)
    coupling = try_coupling(model.law_ptr());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const EstimatorSpec est = make_estimator(kind, lambdas[i]);
    const auto result = run_replicates(config.reps, config.seed, 2, [&](Rng& rng, std::size_t, std::span<double> out) {
      Vec x(d);
      model.draw(rng, x);
      if (est.kind == EstimatorKind::JamesStein && est.lambda > 0.0 && x.squaredNorm() <= kSingularNorm2)
        return false;
      out[0] = sure(x, est, cov);
      out[1] = (est.apply(x) - theta).squaredNorm();
      return true;
    });
    std::optional<double> bias_bound;
    if (kind == EstimatorKind::JamesStein && config.bounds) {
      if (model.law().is_gaussian()) {
        bias_bound = 0.0;
      } else if (coupling) {
        bias_bound = 2.0 * bound_b_star(model, *coupling, lambdas[i], config.reps, stream(config, kSeedBStar, i)).mean;
      }
    }
    const auto& st = result.stats;
    csv.row({model.name(), est.name(), fmt(lambdas[i]), fmt(st.mean(0)), fmt(st.mean(1)),
             fmt(st.mean(0) - st.mean(1)), fmt(bias_bound)});
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// adaptivity
// ---------------------------------------------------------------------------

std::vector<int> dims_or(const ExperimentConfig& config, std::vector<int> fallback) {
  return config.dims.empty() ? fallback : config.dims;
}

std::string cmd_adaptivity(const ExperimentConfig& config) {
  CsvWriter csv(config, {"d", "risk_mean", "stderr", "pinsker_limit", "adaptivity_bound"});
  const double s2 = sigma2_of(config);
  ExperimentConfig scaled_config = config;
  scaled_config.pinsker = true;
  const auto dims = dims_or(config, {100, 400, 1600});
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const int d = dims[i];
    const NoiseModel model = build_model(scaled_config, d);
    const double lambda = (d - 2.0) * s2 / d;
    const RiskReport risk = mc_risk(model, EstimatorSpec::james_stein(lambda), config.reps, derive_seed(config.seed, i));
    const double t2 = model.theta().squaredNorm();
    std::optional<double> bound;
    if (config.bounds) {
      if (model.law().is_gaussian()) {
        bound = adaptivity_bound_kernel(t2, s2, d, 0.0);
      } else if (auto kernel = try_kernel(model.law_ptr())) {
        BoundInputs in;
        in.lambda = lambda;
        in.d = d;
        in.trace_sigma = model.law().covariance().trace();
        in.e_d2_inv4 = mc_e_d2_inv4(model, config.reps, stream(config, kSeedInv4, i)).mean;
        in.discrepancy = discrepancy_stats(*kernel, config.reps, stream(config, kSeedDiscrepancy, i));
        bound = adaptivity_bound_kernel(t2, s2, d, b_lambda(in));
      }
    }
    csv.row({std::to_string(d), fmt(risk.mean), fmt(risk.std_error), fmt(pinsker_limit(s2, t2)), fmt(bound)});
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// sphere-demo
// ---------------------------------------------------------------------------

std::string cmd_sphere_demo(const ExperimentConfig& config) {
  CsvWriter csv(config, {"d", "gain_term", "two_b_star_closed", "improves"});
  const double s2 = sigma2_of(config);
  csv.note("crossing_dimension", fmt(sphere_crossing_dimension(config.c_low, config.c_high)));
  for (int d : dims_or(config, {16, 65, 100, 200})) {
    std::optional<double> lambda;
    if (!config.lambdas.empty()) lambda = config.lambdas.front();
    const auto cmp = sphere_comparison(d, s2, config.c_low, config.c_high, lambda);
    csv.row({std::to_string(d), fmt(cmp.gain_term), fmt(cmp.two_b_star_closed), cmp.improves ? "true" : "false"});
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// student-demo
// ---------------------------------------------------------------------------

std::string cmd_student_demo(const ExperimentConfig& config) {
  CsvWriter csv(config, {"d", "k", "lambda", "e_d2_inv4_bound", "var_trace_T", "var_trace_T_mc",
                         "var_trace_T_stderr", "e_frob_T_minus_Sigma_sq", "e_frob_mc", "e_frob_stderr",
                         "kernel_excess_bound", "kernel_excess_from_constants", "zero_bias_excess_bound",
                         "b_star_mc", "b_star_stderr"});
  csv.note("e_d2_inv4_bound", "bound-input");
  const auto dims = dims_or(config, {config.d});
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const int d = dims[i];
    const double k = config.k;
    const double lambda = config.lambdas.empty() ? d - 2.0 : config.lambdas.front();
    const StudentConstants c = student_constants(d, k, lambda);
    // The closed forms describe dispersion k/(k-2).
    const LawPtr law = student_t(d, k, k / (k - 2.0));
    const auto disc = discrepancy_stats(student_kernel(law), config.reps, stream(config, kSeedDiscrepancy, i));
    const NoiseModel model(law, parse_theta(config.theta, d));
    const auto b_star = bound_b_star(model, couple_student(law), lambda, config.reps, stream(config, kSeedBStar, i));
    csv.row({std::to_string(d), fmt(k), fmt(lambda), fmt(c.e_d2_inv4_bound), fmt(c.var_trace_T),
             fmt(disc.var_trace_T), fmt(disc.var_trace_T_stderr), fmt(c.e_frob_T_minus_Sigma_sq),
             fmt(disc.e_frob_T_minus_Sigma_sq), fmt(disc.e_frob_T_minus_Sigma_sq_stderr), fmt(c.kernel_excess_bound),
             fmt(c.kernel_excess_from_constants), fmt(c.zero_bias_excess_bound), fmt(b_star.mean),
             fmt(b_star.std_error)});
  }
  return csv.str();
}

using Command = std::string (*)(const ExperimentConfig&);

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"risk", cmd_risk},           {"identity-check", cmd_identity_check}, {"sure", cmd_sure},
      {"adaptivity", cmd_adaptivity}, {"sphere-demo", cmd_sphere_demo},       {"student-demo", cmd_student_demo},
  };
  return table;
}

}  // namespace

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string value = trim(raw_value);
  if (key == "command") {
    if (!commands().count(value)) throw ParameterError("unknown command '" + value + "'");
    command = value;
  } else if (key == "model") {
    const auto names = model_names();
    if (std::find(names.begin(), names.end(), value) == names.end())
      throw ParameterError("unknown model '" + value + "'");
    model = value;
  } else if (key == "d") {
    d = parse_int(value, "d");
    if (d < 1) throw ParameterError("d must be at least 1");
  } else if (key == "k") {
    k = detail::parse_double(value, "k");
  } else if (key == "sigma") {
    sigma = detail::parse_double(value, "sigma");
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  } else if (key == "eps") {
    eps = detail::parse_double(value, "eps");
    if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("eps must lie in [0, 1]");
  } else if (key == "theta") {
    theta = value;
  } else if (key == "estimator") {
    parse_estimator_kind(value);
    estimator = value;
  } else if (key == "lambda") {
    lambdas = parse_number_list(value, "lambda");
    for (double l : lambdas)
      if (!(l >= 0.0)) throw ParameterError("lambda must be >= 0");
  } else if (key == "lambda_grid") {
    lambda_grid = LambdaGrid::parse(value);
  } else if (key == "reps") {
    const double r = detail::parse_double(value, "reps");
    if (r < 2 || r != std::floor(r) || r > 1e10) throw ParameterError("reps must be an integer >= 2");
    reps = static_cast<std::size_t>(r);
  } else if (key == "seed") {
    std::uint64_t s = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw ParameterError("seed must be a non-negative integer");
    seed = s;
  } else if (key == "out") {
    out = value;
  } else if (key == "dims") {
    dims.clear();
    for (double v : parse_number_list(value, "dims")) {
      if (v != std::floor(v) || v < 1) throw ParameterError("dims must be positive integers");
      dims.push_back(static_cast<int>(v));
    }
  } else if (key == "c_low") {
    c_low = detail::parse_double(value, "c_low");
  } else if (key == "c_high") {
    c_high = detail::parse_double(value, "c_high");
  } else if (key == "bounds") {
    bounds = parse_bool(value, "bounds");
  } else if (key == "alpha_minus") {
    alpha_minus = detail::parse_double(value, "alpha_minus");
  } else if (key == "alpha_plus") {
    alpha_plus = detail::parse_double(value, "alpha_plus");
  } else if (key == "pinsker") {
    pinsker = parse_bool(value, "pinsker");
  } else if (key == "threads") {
    threads = static_cast<unsigned>(std::max(0, parse_int(value, "threads")));
  } else {
    throw ParameterError("unknown config key '" + raw_key + "'");
  }
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config file '" + path + "'");
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParameterError(path + ":" + std::to_string(number) + ": expected key=value");
    set(t.substr(0, eq), t.substr(eq + 1));
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"command", command},
      {"model", model},
      {"d", std::to_string(d)},
      {"k", fmt(k)},
      {"sigma", fmt(sigma)},
      {"eps", fmt(eps)},
      {"theta", theta},
      {"estimator", estimator},
      {"lambda", lambdas.empty() ? "default" : join_numbers(lambdas)},
      {"lambda_grid", lambda_grid ? fmt(lambda_grid->c) + ":" + std::to_string(lambda_grid->size) : "none"},
      {"reps", std::to_string(reps)},
      {"seed", std::to_string(seed)},
      {"out", out.empty() ? "-" : out},
      {"dims", dims.empty() ? "default" : join_numbers(dims)},
      {"c_low", fmt(c_low)},
      {"c_high", fmt(c_high)},
      {"bounds", bounds ? "on" : "off"},
      {"alpha_minus", alpha_minus ? fmt(*alpha_minus) : "none"},
      {"alpha_plus", alpha_plus ? fmt(*alpha_plus) : "none"},
      {"pinsker", pinsker ? "on" : "off"},
  };
  return kv;
}

std::vector<std::string> model_names() {
  return {"gaussian",         "student",         "sphere",          "ball",
          "product-gaussian", "product-laplace", "product-uniform", "product-rademacher",
          "corrupted-additive", "corrupted-mixing", "four-point"};
}

NoiseModel build_model(const ExperimentConfig& config, int d) {
  const double s2 = sigma2_of(config);
  const std::string& m = config.model;
  LawPtr law;
  if (m == "gaussian") {
    law = gaussian_iso(d, s2);
  } else if (m == "student") {
    if (!(config.k > 2.0)) throw ParameterError("student model needs k > 2");
    law = student_t(d, config.k, s2 * (config.k - 2.0) / config.k);
  } else if (m == "sphere") {
    law = sphere_uniform(d, config.sigma);
  } else if (m == "ball") {
    law = ball_uniform(d, config.sigma * std::sqrt((d + 2.0) / d));
  } else if (m == "product-gaussian") {
    law = product_iid(d, Law1D::gaussian(s2));
  } else if (m == "product-laplace") {
    law = product_iid(d, Law1D::laplace(s2));
  } else if (m == "product-uniform") {
    law = product_iid(d, Law1D::uniform(s2));
  } else if (m == "product-rademacher") {
    law = product_iid(d, Law1D::smoothed_rademacher(s2));
  } else if (m == "corrupted-additive" || m == "corrupted-mixing") {
    if (!(config.k > 2.0)) throw ParameterError("corrupted models need an outlier Student k > 2");
    const LawPtr outlier = student_t(d, config.k, s2 * (config.k - 2.0) / config.k);
    law = m == "corrupted-additive" ? corrupted_additive(config.eps, s2, outlier)
                                    : corrupted_mixing(config.eps, s2, outlier);
  } else if (m == "four-point") {
    if (d != 2) throw ParameterError("four-point model is two-dimensional (set d=2)");
    const double a = config.sigma * std::sqrt(2.0);
    law = finite_points({Vec::Unit(2, 0) * a, -Vec::Unit(2, 0) * a, Vec::Unit(2, 1) * a, -Vec::Unit(2, 1) * a});
  } else {
    throw ParameterError("unknown model '" + m + "'");
  }
  return NoiseModel(law, parse_theta(config.theta, d), config.pinsker);
}

std::vector<std::string> command_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : commands()) names.push_back(name);
  return names;
}

std::string run_experiment(const ExperimentConfig& config) {
  const auto it = commands().find(config.command);
  if (it == commands().end()) throw ParameterError("unknown command '" + config.command + "'");
  if (config.threads > 0) set_worker_count(config.threads);
  return it->second(config);
}

}  // namespace steinshrink
