#include "dsp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dsp/error.hpp"

namespace dsp::eval {

namespace {

constexpr double kZeroActual = 1e-12;

}  // namespace

MetricReport compute_metrics(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size())
    throw Error("compute_metrics: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                std::to_string(actual.size()) + ")");
  if (predicted.empty()) throw Error("compute_metrics: empty input");
  MetricReport m;
  double sq = 0.0, ab = 0.0, pct = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    sq += d * d;
    ab += std::abs(d);
    if (std::abs(actual[i]) < kZeroActual) {
      ++m.n_skipped_mape;
    } else {
      pct += std::abs(d / actual[i]);
    }
  }
  const auto n = static_cast<double>(predicted.size());
  m.n_used = predicted.size();
  m.mse = sq / n;
  m.mae = ab / n;
  m.rmse = std::sqrt(m.mse);
  const auto n_mape = predicted.size() - m.n_skipped_mape;
  m.mape_percent = n_mape > 0 ? 100.0 * pct / static_cast<double>(n_mape) : 0.0;
  return m;
}

std::string ConvergenceRecord::render() const {
  return converged && episode_of_convergence ? std::to_string(*episode_of_convergence) : ">>";
}

std::vector<double> smooth_curve(std::span<const double> curve, std::size_t window) {
  if (window == 0) throw Error("smooth_curve: window must be >= 1");
  std::vector<double> out(curve.size());
  for (std::size_t e = 0; e < curve.size(); ++e) {
    const std::size_t first = e + 1 >= window ? e + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t k = first; k <= e; ++k) sum += curve[k];
    out[e] = sum / static_cast<double>(e + 1 - first);
  }
  return out;
}

ConvergenceRecord measure_convergence(std::span<const double> error_curve, std::size_t window,
                                      double precision, double wall_seconds) {
  if (window == 0) throw Error("measure_convergence: window must be >= 1");
  if (error_curve.empty()) throw Error("measure_convergence: empty curve");
  ConvergenceRecord rec;
  rec.window = window;
  rec.precision = precision;
  rec.wall_seconds = wall_seconds;
  const auto smoothed = smooth_curve(error_curve, window);
  const double m = *std::min_element(smoothed.begin(), smoothed.end());
  std::size_t start = smoothed.size();
  while (start > 0 && smoothed[start - 1] - m <= precision) --start;
  if (start < smoothed.size()) {
    rec.converged = true;
    rec.episode_of_convergence = start;
  }
  return rec;
}

// ---------------------------------------------------------------------------

bool is_known_model(std::string_view name) {
  if (name == "classic" || name == "grid" || name == "constant") return true;
  for (auto v : {rl::Variant::dqn, rl::Variant::ddqn, rl::Variant::dudqn, rl::Variant::rsv_dudqn})
    if (name == rl::to_string(v)) return true;
  return false;
}

ModelRow evaluate_field(const std::string& model, const Dataset& train, const Dataset& test,
                        const hyper::PowerField& field, const IdwConfig& idw) {
  ModelRow row;
  row.model = model;
  for (const auto& s : test.samples()) {
    const double p = field.query_power(s.point());
    const double pred = differential_idw_predict(train, s.point(), p, idw);
    row.powers.push_back(p);
    row.predictions.push_back(pred);
    row.errors.push_back(pred - s.value);
  }
  row.metrics = compute_metrics(row.predictions, test.values());
  return row;
}

ComparisonReport compare_models(const Dataset& dataset, std::span<const std::string> models,
                                std::uint64_t split_seed, const CompareConfig& cfg) {
  for (const auto& m : models)
    if (!is_known_model(m))
      throw Error("unknown model '" + m +
                  "' (valid: classic, constant, grid, dqn, ddqn, dudqn, rsv-dudqn)");
  auto [train, test] = split_train_test(dataset, cfg.train_fraction, split_seed);
  ComparisonReport report;
  report.dataset_name = dataset.name();
  report.n_train = train.size();

  for (const auto& model : models) {
    if (model == "classic") {
      ModelRow row;
      row.model = model;
      IdwConfig idw = cfg.idw;
      idw.power = cfg.classic_power;
      for (const auto& s : test.samples()) {
        const double pred = idw_predict(train, s.point(), idw);
        row.powers.push_back(cfg.classic_power);
        row.predictions.push_back(pred);
        row.errors.push_back(pred - s.value);
      }
      row.metrics = compute_metrics(row.predictions, test.values());
      report.rows.push_back(std::move(row));
      continue;
    }
    hyper::PowerAssignment pa;
    double seconds = 0.0;
    if (model == "constant") {
      pa = hyper::constant_assignment(train, cfg.env.p_init, cfg.env, cfg.idw);
    } else if (model == "grid") {
      pa = hyper::grid_assignment(train, hyper::default_grid(cfg.env.p_min, cfg.env.p_max),
                                  cfg.env, cfg.idw);
    } else {
      auto agent = cfg.agent;
      agent.variant = rl::parse_variant(model);
      auto learned = hyper::learn_powers(train, agent, cfg.env, cfg.idw);
      pa = std::move(learned.assignment);
      seconds = learned.wall_seconds;
    }
    auto field = hyper::build_power_field(train, pa, cfg.field_power);
    auto row = evaluate_field(model, train, test, field, cfg.idw);
    row.learn_seconds = seconds;
    report.rows.push_back(std::move(row));
  }
  report.test = std::move(test);
  return report;
}

nlohmann::json metrics_to_json(const MetricReport& m) {
  return {{"mse", m.mse},
          {"mae", m.mae},
          {"rmse", m.rmse},
          {"mape_percent", m.mape_percent},
          {"n_used", m.n_used},
          {"n_skipped_mape", m.n_skipped_mape}};
}

nlohmann::json report_to_json(const ComparisonReport& r) {
  nlohmann::json j;
  j["dataset_name"] = r.dataset_name;
  j["n_train"] = r.n_train;
  j["n_test"] = r.test.size();
  auto pts = nlohmann::json::array();
  for (const auto& s : r.test.samples()) pts.push_back({{"x", s.x}, {"y", s.y}, {"value", s.value}});
  j["test_points"] = std::move(pts);
  auto rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"model", row.model},
                    {"metrics", metrics_to_json(row.metrics)},
                    {"predictions", row.predictions},
                    {"powers", row.powers},
                    {"errors", row.errors}});
  j["models"] = std::move(rows);
  return j;
}

void write_metrics_csv(std::ostream& out,
                       std::span<const std::pair<std::string, MetricReport>> rows) {
  out << "model,MSE,MAE,RMSE,MAPE\n";
  for (const auto& [name, m] : rows)
    out << name << ',' << format_double(m.mse) << ',' << format_double(m.mae) << ','
        << format_double(m.rmse) << ',' << format_double(m.mape_percent) << '\n';
}

void write_report_csv(std::ostream& out, const ComparisonReport& r) {
  std::vector<std::pair<std::string, MetricReport>> rows;
  for (const auto& row : r.rows) rows.emplace_back(row.model, row.metrics);
  write_metrics_csv(out, rows);
}

}  // namespace dsp::eval
