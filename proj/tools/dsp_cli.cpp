// dsp: learn per-point IDW powers with Q-learning variants and predict with
// the resulting power field.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace dsp::cli;

  CLI::App app{"Differential IDW spatial prediction with learned per-point powers"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration JSON");
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--out", g.out, "Output file (default: standard output)");
  app.add_option("--json", g.json, "Write the report as JSON to this path");
  app.add_option("--csv", g.csv, "Write the report as CSV to this path");

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic two-region dataset");
  s->add_option("--n", synth.n, "Number of samples (>= 10)");
  s->add_option("--synth-config", synth.synth_config, "Synthetic generator JSON");

  LearnOptions learn;
  auto* l = app.add_subcommand("learn", "Learn a power for every sample point");
  l->add_option("--data", learn.data, "Dataset CSV (x,y,value)")->required();
  l->add_option("--variant", learn.variant, "dqn | ddqn | dudqn | rsv-dudqn");
  l->add_option("--episodes", learn.episodes, "Episode budget (default 5000)");
  l->add_option("--log", learn.log, "Per-step training log (JSON lines)");
  l->add_option("--checkpoint", learn.checkpoint, "Write final network parameters (JSON)");

  FieldOptions field;
  auto* f = app.add_subcommand("field", "Build a power field from an assignment");
  f->add_option("--assignment", field.assignment, "Power assignment JSON")->required();
  f->add_option("--field-power", field.field_power, "IDW exponent used to interpolate powers");

  PredictOptions predict;
  auto* p = app.add_subcommand("predict", "Predict at query points with a power field");
  p->add_option("--field", predict.field, "Power field JSON")->required();
  p->add_option("--data", predict.data, "Training dataset CSV")->required();
  p->add_option("--queries", predict.queries, "Query CSV (header starting with x,y)")->required();

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Error metrics of predictions against actual values");
  e->add_option("--predicted", ev.predicted, "Predictions CSV from `predict`")->required();
  e->add_option("--actual", ev.actual, "Actual values CSV (x,y,value)")->required();

  CompareOptions compare;
  auto* c = app.add_subcommand("compare", "Compare classic IDW with learned power fields");
  c->add_option("--data", compare.data, "Dataset CSV")->required();
  c->add_option("--variants", compare.variants,
                "Models: classic, constant, grid, dqn, ddqn, dudqn, rsv-dudqn")
      ->delimiter(',');
  c->add_option("--episodes", compare.episodes, "Episode budget per learned model");

  CurvesOptions curves;
  auto* cu = app.add_subcommand("curves", "Per-episode error curve from a training log");
  cu->add_option("--log", curves.log, "Training log (JSON lines)")->required();
  cu->add_option("--window", curves.window, "Moving-average window");

  for (auto* sub : {s, l, f, p, e, c, cu}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) return app.exit(ex);  // --help
    std::cerr << "error: " << ex.what() << '\n';
    return ex.get_exit_code();
  }

  try {
    configure_logging();
    if (s->parsed()) cmd_synth(g, synth);
    if (l->parsed()) cmd_learn(g, learn);
    if (f->parsed()) cmd_field(g, field);
    if (p->parsed()) cmd_predict(g, predict);
    if (e->parsed()) cmd_eval(g, ev);
    if (c->parsed()) cmd_compare(g, compare);
    if (cu->parsed()) cmd_curves(g, curves);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
