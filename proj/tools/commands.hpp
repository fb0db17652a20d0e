#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dsp::cli {

/// Flags accepted by every subcommand.
struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;   // empty or "-" means standard output
  std::string json;  // report sinks for eval/compare
  std::string csv;
};

struct SynthOptions {
  std::optional<std::size_t> n;
  std::string synth_config;
};

struct LearnOptions {
  std::string data;
  std::optional<std::string> variant;
  std::optional<std::size_t> episodes;
  std::string log;
  std::string checkpoint;
};

struct FieldOptions {
  std::string assignment;
  std::optional<double> field_power;
};

struct PredictOptions {
  std::string field;
  std::string data;
  std::string queries;
};

struct EvalOptions {
  std::string predicted;
  std::string actual;
};

struct CompareOptions {
  std::string data;
  std::vector<std::string> variants{"classic", "rsv-dudqn"};
  std::optional<std::size_t> episodes;
};

struct CurvesOptions {
  std::string log;
  std::optional<std::size_t> window;
};

void configure_logging();

void cmd_synth(const GlobalOptions& g, const SynthOptions& o);
void cmd_learn(const GlobalOptions& g, const LearnOptions& o);
void cmd_field(const GlobalOptions& g, const FieldOptions& o);
void cmd_predict(const GlobalOptions& g, const PredictOptions& o);
void cmd_eval(const GlobalOptions& g, const EvalOptions& o);
void cmd_compare(const GlobalOptions& g, const CompareOptions& o);
void cmd_curves(const GlobalOptions& g, const CurvesOptions& o);

}  // namespace dsp::cli
