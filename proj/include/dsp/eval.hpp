#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsp/geo_core.hpp"
#include "dsp/hyperfield.hpp"
#include "dsp/idw.hpp"
#include "dsp/rl.hpp"

namespace dsp::eval {

struct MetricReport {
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  double mape_percent = 0.0;
  std::size_t n_used = 0;
  std::size_t n_skipped_mape = 0;  // actual values with |a| < 1e-12
};

MetricReport compute_metrics(std::span<const double> predicted, std::span<const double> actual);

struct ConvergenceRecord {
  bool converged = false;
  std::optional<std::size_t> episode_of_convergence;
  double wall_seconds = 0.0;
  std::size_t window = 100;
  double precision = 0.01;

  /// Episode number, or ">>" when the curve never settled.
  std::string render() const;
};

/// Trailing moving average; the first window-1 entries average what is available.
std::vector<double> smooth_curve(std::span<const double> curve, std::size_t window);

/// Converged at the first episode from which the smoothed curve stays within
/// `precision` of its global minimum.
ConvergenceRecord measure_convergence(std::span<const double> error_curve, std::size_t window = 100,
                                      double precision = 0.01, double wall_seconds = 0.0);

struct CompareConfig {
  double train_fraction = 0.8;
  double classic_power = 2.0;
  double field_power = 2.0;
  rl::AgentConfig agent;
  hyper::EnvConfig env;
  IdwConfig idw;
};

struct ModelRow {
  std::string model;
  MetricReport metrics;
  std::vector<double> predictions;
  std::vector<double> powers;  // per test point
  std::vector<double> errors;  // predicted - actual
  double learn_seconds = 0.0;
};

struct ComparisonReport {
  std::string dataset_name;
  std::size_t n_train = 0;
  Dataset test;
  std::vector<ModelRow> rows;
};

/// Valid model names: "classic" (fixed-power IDW), the four learner variants,
/// "grid" (powers from the exhaustive LOO oracle) and "constant" (every power
/// set to the environment's p_init).
bool is_known_model(std::string_view name);

ComparisonReport compare_models(const Dataset& dataset, std::span<const std::string> models,
                                std::uint64_t split_seed, const CompareConfig& cfg);

/// Metrics of a model that predicts `test` from `train` with the given power field.
ModelRow evaluate_field(const std::string& model, const Dataset& train, const Dataset& test,
                        const hyper::PowerField& field, const IdwConfig& idw);

nlohmann::json metrics_to_json(const MetricReport& m);
nlohmann::json report_to_json(const ComparisonReport& r);
/// Columns: model, MSE, MAE, RMSE, MAPE.
void write_metrics_csv(std::ostream& out, std::span<const std::pair<std::string, MetricReport>> rows);
void write_report_csv(std::ostream& out, const ComparisonReport& r);

}  // namespace dsp::eval
