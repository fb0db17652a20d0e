#include "commands.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "dsp/config.hpp"
#include "dsp/error.hpp"
#include "dsp/eval.hpp"
#include "dsp/geo_core.hpp"
#include "dsp/hyperfield.hpp"

namespace dsp::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

bool is_stdout(const std::string& path) { return path.empty() || path == "-"; }

void write_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (is_stdout(path)) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  fn(out);
  if (!out) throw Error("write failed for '" + path + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": invalid JSON: " + e.what());
  }
}

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : RunConfig::load(g.config);
  if (g.config.empty()) cfg.reseed(cfg.seed);
  if (g.seed) cfg.reseed(*g.seed);
  return cfg;
}

Dataset require_dataset(const std::string& path, const char* flag) {
  if (path.empty()) throw Error(std::string("missing required flag ") + flag);
  return load_csv(path);
}

// Minimal numeric CSV table: header names plus rows of doubles.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name, const std::string& path) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw Error(path + ": missing column '" + name + "'");
  }
};

Table read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file '" + path + "'");
  auto split = [](std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": missing header");
  t.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw Error(path + ": malformed row at line " + std::to_string(line_no));
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw Error(path + ": malformed row at line " + std::to_string(line_no));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ordered_json step_record(const hyper::StepLog& s) {
  ordered_json j;
  j["step"] = s.step;
  j["episode"] = s.episode;
  j["loss"] = s.loss ? ordered_json(*s.loss) : ordered_json(nullptr);
  j["epsilon"] = s.epsilon;
  j["reward_raw"] = s.reward_raw;
  j["reward_shaped"] = s.reward_shaped;
  j["p_current"] = s.p_current;
  j["loo_error"] = s.loo_error;
  return j;
}

void log_convergence(const std::string& label, const eval::ConvergenceRecord& rec) {
  spdlog::info("{}: convergence episode {} (window {}, precision {}), wall {:.2f} s", label,
               rec.render(), rec.window, rec.precision, rec.wall_seconds);
}

}  // namespace

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("dsp");
  logger->set_pattern("%l: %v");
  spdlog::set_default_logger(logger);
  const char* level = std::getenv("DSP_LOG_LEVEL");
  const std::string lv = level ? level : "info";
  if (lv == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (lv == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    if (lv != "info") spdlog::warn("unknown DSP_LOG_LEVEL '{}', using info", lv);
    spdlog::set_level(spdlog::level::info);
  }
}

void cmd_synth(const GlobalOptions& g, const SynthOptions& o) {
  RunConfig cfg = resolve_config(g);
  SyntheticConfig synth = cfg.synth;
  if (!o.synth_config.empty()) {
    const auto j = read_json_file(o.synth_config);
    synth = SyntheticConfig::defaults();
    synth.seed = cfg.seed;
    from_json(j, synth);
  }
  if (g.seed) synth.seed = *g.seed;
  if (o.n) synth.n = *o.n;
  const auto d = generate_synthetic(synth);
  write_output(g.out, [&](std::ostream& os) { write_csv(os, d); });
  spdlog::debug("synth: wrote {} samples (seed {})", d.size(), synth.seed);
}

void cmd_learn(const GlobalOptions& g, const LearnOptions& o) {
  RunConfig cfg = resolve_config(g);
  const Dataset d = require_dataset(o.data, "--data");
  if (o.variant) cfg.agent.variant = rl::parse_variant(*o.variant);
  if (o.episodes) cfg.env.episode_budget = *o.episodes;

  std::ofstream log_file;
  if (!o.log.empty()) {
    log_file.open(o.log, std::ios::binary | std::ios::trunc);
    if (!log_file) throw Error("cannot write '" + o.log + "'");
  }
  hyper::LearnHooks hooks;
  if (log_file.is_open())
    hooks.on_step = [&](const hyper::StepLog& s) { log_file << step_record(s).dump() << '\n'; };
  const std::size_t report_every = std::max<std::size_t>(1, cfg.env.episode_budget / 10);
  hooks.on_episode = [&](std::size_t e, double err) {
    if ((e + 1) % report_every == 0)
      spdlog::info("episode {}/{} error {:.6g}", e + 1, cfg.env.episode_budget, err);
  };

  spdlog::info("learn: {} samples, variant {}, {} episodes", d.size(),
               rl::to_string(cfg.agent.variant), cfg.env.episode_budget);
  const auto result = hyper::learn_powers(d, cfg.agent, cfg.env, cfg.idw, hooks);
  if (log_file.is_open() && !log_file) throw Error("write failed for '" + o.log + "'");

  write_output(g.out, [&](std::ostream& os) {
    os << nlohmann::json(result.assignment).dump(2) << '\n';
  });
  if (!o.checkpoint.empty())
    write_output(o.checkpoint, [&](std::ostream& os) {
      os << nlohmann::json(result.network).dump() << '\n';
    });
  log_convergence("learn",
                  eval::measure_convergence(result.episode_errors, cfg.curve_window,
                                            cfg.curve_precision, result.wall_seconds));
}

void cmd_field(const GlobalOptions& g, const FieldOptions& o) {
  RunConfig cfg = resolve_config(g);
  if (o.assignment.empty()) throw Error("missing required flag --assignment");
  const auto pa = read_json_file(o.assignment).get<hyper::PowerAssignment>();
  const double field_power = o.field_power.value_or(cfg.field_power);
  hyper::build_power_field(pa, field_power);  // validates the assignment
  write_output(g.out, [&](std::ostream& os) {
    os << hyper::field_to_json(pa, field_power).dump(2) << '\n';
  });
}

void cmd_predict(const GlobalOptions& g, const PredictOptions& o) {
  RunConfig cfg = resolve_config(g);
  if (o.field.empty()) throw Error("missing required flag --field");
  if (o.queries.empty()) throw Error("missing required flag --queries");
  const Dataset train = require_dataset(o.data, "--data");
  const auto file = hyper::field_from_json(read_json_file(o.field));
  if (file.assignment.dataset_name != train.name())
    spdlog::warn("field was learned on '{}' but the training data is '{}'",
                 file.assignment.dataset_name, train.name());
  const auto field = hyper::build_power_field(train, file.assignment, file.field_power);
  const auto queries = load_points_csv(o.queries);

  write_output(g.out, [&](std::ostream& os) {
    os << "x,y,power,prediction\n";
    for (const auto& q : queries) {
      const double p = field.query_power(q);
      const double pred = differential_idw_predict(train, q, p, cfg.idw);
      spdlog::debug("predict ({}, {}) power {}", q.x, q.y, p);
      os << format_double(q.x) << ',' << format_double(q.y) << ',' << format_double(p) << ','
         << format_double(pred) << '\n';
    }
  });
}

void cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
  if (o.predicted.empty() || o.actual.empty())
    throw Error("missing required flags --predicted and --actual");
  const auto pred_table = read_table(o.predicted);
  const Dataset actual = load_csv(o.actual);
  const auto px = pred_table.column("x", o.predicted);
  const auto py = pred_table.column("y", o.predicted);
  const auto pv = pred_table.column("prediction", o.predicted);
  if (pred_table.rows.size() != actual.size())
    throw Error("eval: " + std::to_string(pred_table.rows.size()) + " predictions but " +
                std::to_string(actual.size()) + " actual values");
  std::vector<double> predicted;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const auto& row = pred_table.rows[i];
    if (row[px] != actual[i].x || row[py] != actual[i].y)
      throw Error("eval: coordinates differ at row " + std::to_string(i + 1));
    predicted.push_back(row[pv]);
  }
  const auto m = eval::compute_metrics(predicted, actual.values());
  const std::vector<std::pair<std::string, eval::MetricReport>> rows{{"model", m}};
  if (!g.csv.empty())
    write_output(g.csv, [&](std::ostream& os) { eval::write_metrics_csv(os, rows); });
  if (!g.json.empty() || g.csv.empty())
    write_output(g.json.empty() ? g.out : g.json,
                 [&](std::ostream& os) { os << eval::metrics_to_json(m).dump(2) << '\n'; });
}

void cmd_compare(const GlobalOptions& g, const CompareOptions& o) {
  RunConfig cfg = resolve_config(g);
  const Dataset d = require_dataset(o.data, "--data");
  if (o.episodes) cfg.env.episode_budget = *o.episodes;
  if (o.variants.empty()) throw Error("compare: no models requested");
  const auto report = eval::compare_models(d, o.variants, cfg.split_seed(), cfg.compare_config());
  for (const auto& row : report.rows)
    spdlog::info("{}: MSE {:.6g} MAE {:.6g} RMSE {:.6g} MAPE {:.4g}%", row.model, row.metrics.mse,
                 row.metrics.mae, row.metrics.rmse, row.metrics.mape_percent);
  if (!g.csv.empty())
    write_output(g.csv, [&](std::ostream& os) { eval::write_report_csv(os, report); });
  if (!g.json.empty() || g.csv.empty())
    write_output(g.json.empty() ? g.out : g.json,
                 [&](std::ostream& os) { os << eval::report_to_json(report).dump(2) << '\n'; });
}

void cmd_curves(const GlobalOptions& g, const CurvesOptions& o) {
  RunConfig cfg = resolve_config(g);
  if (o.log.empty()) throw Error("missing required flag --log");
  std::ifstream in(o.log);
  if (!in) throw Error("cannot open file '" + o.log + "'");
  std::vector<double> episode_error;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto e = j.at("episode").get<std::size_t>();
      if (e >= episode_error.size()) episode_error.resize(e + 1, 0.0);
      episode_error[e] = j.at("loo_error").get<double>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(o.log + ": malformed record at line " + std::to_string(line_no) + ": " +
                  ex.what());
    }
  }
  if (episode_error.empty()) throw Error(o.log + ": no training records");
  const std::size_t window = o.window.value_or(cfg.curve_window);
  const auto smoothed = eval::smooth_curve(episode_error, window);
  write_output(g.out, [&](std::ostream& os) {
    os << "episode,raw_error,smoothed_error\n";
    for (std::size_t e = 0; e < episode_error.size(); ++e)
      os << e << ',' << format_double(episode_error[e]) << ',' << format_double(smoothed[e])
         << '\n';
  });
  log_convergence("curves", eval::measure_convergence(episode_error, window, cfg.curve_precision));
}

}  // namespace dsp::cli
