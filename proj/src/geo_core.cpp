#include "dsp/geo_core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dsp/error.hpp"
#include "dsp/json_util.hpp"
#include "dsp/rng.hpp"

namespace dsp {

namespace {

constexpr double kStdFloor = 1e-12;

bool finite_sample(const Sample& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.value);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(std::string_view field, double& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

// Plain mean followed by one correction pass over the residuals.
double refined_mean(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double r = 0.0;
  for (double x : v) r += x - m;
  return m + r / n;
}

double population_std(std::span<const double> v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

Dataset::Dataset(std::string name, std::vector<Sample> samples)
    : name_(std::move(name)), samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!finite_sample(samples_[i]))
      throw Error("non-finite sample at index " + std::to_string(i));
  }
  std::vector<std::size_t> order(samples_.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [this](std::size_t i) { return std::pair(samples_[i].x, samples_[i].y); };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (key(order[k]) == key(order[k - 1])) {
      auto later = std::max(order[k], order[k - 1]);
      throw Error("duplicate coordinates at index " + std::to_string(later));
    }
  }
}

std::vector<double> Dataset::values() const {
  std::vector<double> v;
  v.reserve(samples_.size());
  for (const auto& s : samples_) v.push_back(s.value);
  return v;
}

Dataset Dataset::renamed(std::string name) const {
  Dataset d = *this;
  d.name_ = std::move(name);
  return d;
}

Point StandardizationParams::apply(Point p) const {
  return {(p.x - mean_x) / std_x, (p.y - mean_y) / std_y};
}

Point StandardizationParams::invert(Point p) const {
  return {p.x * std_x + mean_x, p.y * std_y + mean_y};
}

double euclidean_distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

Dataset parse_csv(std::istream& in, std::string name) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty dataset");
  {
    auto header = split_commas(trim(line));
    if (!line.empty() && static_cast<unsigned char>(line[0]) == 0xEF && line.size() >= 3)
      header = split_commas(trim(std::string_view(line).substr(3)));  // UTF-8 BOM
    if (header.size() != 3 || header[0] != "x" || header[1] != "y" || header[2] != "value")
      throw Error("line 1: expected header 'x,y,value'");
  }

  std::vector<Sample> samples;
  std::vector<std::size_t> line_of;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty()) continue;
    auto fields = split_commas(body);
    Sample s;
    if (fields.size() != 3 || !parse_number(fields[0], s.x) || !parse_number(fields[1], s.y) ||
        !parse_number(fields[2], s.value))
      throw Error("malformed row at line " + std::to_string(line_no));
    if (!finite_sample(s)) throw Error("non-finite value at line " + std::to_string(line_no));
    samples.push_back(s);
    line_of.push_back(line_no);
  }
  if (samples.empty()) throw Error("empty dataset");

  // Report duplicates by the line of the later occurrence.
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) { return std::pair(samples[i].x, samples[i].y); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::size_t first_dup = samples.size();
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (key(order[k]) == key(order[k - 1])) first_dup = std::min(first_dup, order[k]);
  }
  if (first_dup != samples.size())
    throw Error("duplicate coordinates at line " + std::to_string(line_of[first_dup]));

  return Dataset(std::move(name), std::move(samples));
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file '" + path.string() + "'");
  try {
    return parse_csv(in, path.stem().string());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_csv(std::ostream& out, const Dataset& d) {
  out << "x,y,value\n";
  for (const auto& s : d.samples())
    out << format_double(s.x) << ',' << format_double(s.y) << ',' << format_double(s.value)
        << '\n';
}

std::vector<Point> load_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": missing header");
  auto header = split_commas(trim(line));
  if (header.size() < 2 || header[0] != "x" || header[1] != "y")
    throw Error(path.string() + ": line 1: expected header starting with 'x,y'");
  std::vector<Point> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty()) continue;
    auto fields = split_commas(body);
    Point p;
    if (fields.size() != header.size() || !parse_number(fields[0], p.x) ||
        !parse_number(fields[1], p.y) || !std::isfinite(p.x) || !std::isfinite(p.y))
      throw Error(path.string() + ": malformed row at line " + std::to_string(line_no));
    points.push_back(p);
  }
  return points;
}

StandardizationParams fit_standardization(const Dataset& d) {
  if (d.size() < 2) throw Error("standardize_coords: need at least 2 samples");
  std::vector<double> xs, ys;
  xs.reserve(d.size());
  ys.reserve(d.size());
  for (const auto& s : d.samples()) {
    xs.push_back(s.x);
    ys.push_back(s.y);
  }
  StandardizationParams p;
  p.mean_x = refined_mean(xs);
  p.mean_y = refined_mean(ys);
  p.std_x = population_std(xs, p.mean_x);
  p.std_y = population_std(ys, p.mean_y);
  if (p.std_x < kStdFloor) throw Error("standardize_coords: zero variance in x column");
  if (p.std_y < kStdFloor) throw Error("standardize_coords: zero variance in y column");
  return p;
}

std::pair<Dataset, StandardizationParams> standardize_coords(const Dataset& d) {
  auto params = fit_standardization(d);
  std::vector<Sample> out;
  out.reserve(d.size());
  for (const auto& s : d.samples()) {
    auto p = params.apply(s.point());
    out.push_back({p.x, p.y, s.value});
  }
  return {Dataset(d.name(), std::move(out)), params};
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& d, double train_fraction,
                                             std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("split_train_test: train_fraction must lie in (0, 1)");
  const auto n = d.size();
  const auto n_train =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train >= n)
    throw Error("split_train_test: dataset of " + std::to_string(n) +
                " samples leaves an empty part");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t k = n - 1; k > 0; --k) std::swap(order[k], order[rng.index(k + 1)]);

  std::vector<Sample> train, test;
  for (std::size_t k = 0; k < n; ++k)
    (k < n_train ? train : test).push_back(d[order[k]]);
  return {Dataset(d.name() + "-train", std::move(train)),
          Dataset(d.name() + "-test", std::move(test))};
}

// ---------------------------------------------------------------------------

SyntheticConfig SyntheticConfig::defaults() {
  SyntheticConfig c;
  c.regions = {
      {50.0, 50.0, 28.0, 3.0},   // rough core
      {50.0, 50.0, 200.0, 0.0},  // smooth remainder of the square
  };
  c.base_field = {
      {20.0, 0.0, 0.0, std::numbers::pi / 2.0},  // constant offset
      {6.0, 0.06, 0.02, 0.0},
      {4.0, -0.03, 0.08, 1.0},
      {3.0, 0.11, 0.09, 2.0},
  };
  return c;
}

double base_field_value(const SyntheticConfig& cfg, Point p) {
  double v = 0.0;
  for (const auto& t : cfg.base_field) v += t.amplitude * std::sin(t.fx * p.x + t.fy * p.y + t.phase);
  return v;
}

std::size_t region_index(const SyntheticConfig& cfg, Point p) {
  for (std::size_t r = 0; r < cfg.regions.size(); ++r) {
    const auto& reg = cfg.regions[r];
    if (euclidean_distance(p, {reg.cx, reg.cy}) <= reg.radius) return r;
  }
  return cfg.regions.size();
}

double noise_scale_at(const SyntheticConfig& cfg, Point p) {
  auto r = region_index(cfg, p);
  return r < cfg.regions.size() ? cfg.regions[r].noise_scale : 0.0;
}

Dataset generate_synthetic(std::size_t n, const SyntheticConfig& cfg, std::uint64_t seed) {
  if (n < 10) throw Error("generate_synthetic: n must be at least 10 (got " + std::to_string(n) + ")");
  for (const auto& r : cfg.regions) {
    if (!(r.noise_scale >= 0.0) || !(r.radius >= 0.0))
      throw Error("generate_synthetic: region radius and noise_scale must be non-negative");
  }
  Rng rng = Rng::stream(seed, "synth");
  std::vector<Sample> samples;
  samples.reserve(n);
  while (samples.size() < n) {
    Point p{rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)};
    const bool taken = std::any_of(samples.begin(), samples.end(), [&](const Sample& s) {
      return s.x == p.x && s.y == p.y;
    });
    if (taken) continue;
    const double noise = noise_scale_at(cfg, p);
    const double eps = rng.normal();
    double v = base_field_value(cfg, p);
    if (noise > 0.0) v += noise * eps;
    samples.push_back({p.x, p.y, v});
  }
  return Dataset("synthetic", std::move(samples));
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  j = nlohmann::json::object();
  j["n"] = c.n;
  j["seed"] = c.seed;
  j["regions"] = nlohmann::json::array();
  for (const auto& r : c.regions)
    j["regions"].push_back(
        {{"cx", r.cx}, {"cy", r.cy}, {"radius", r.radius}, {"noise_scale", r.noise_scale}});
  j["base_field"] = nlohmann::json::array();
  for (const auto& t : c.base_field)
    j["base_field"].push_back(
        {{"amplitude", t.amplitude}, {"fx", t.fx}, {"fy", t.fy}, {"phase", t.phase}});
}

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  using namespace json_util;
  require_known_keys(j, {"n", "seed", "regions", "base_field"}, "synth");
  read_if_present(j, "n", c.n, "synth");
  read_if_present(j, "seed", c.seed, "synth");
  if (auto it = j.find("regions"); it != j.end()) {
    if (!it->is_array()) throw Error("synth.regions: expected a list");
    c.regions.clear();
    for (const auto& r : *it) {
      require_known_keys(r, {"cx", "cy", "radius", "noise_scale"}, "synth.regions[]");
      NoiseRegion reg;
      read_if_present(r, "cx", reg.cx, "synth.regions[]");
      read_if_present(r, "cy", reg.cy, "synth.regions[]");
      read_if_present(r, "radius", reg.radius, "synth.regions[]");
      read_if_present(r, "noise_scale", reg.noise_scale, "synth.regions[]");
      c.regions.push_back(reg);
    }
  }
  if (auto it = j.find("base_field"); it != j.end()) {
    if (!it->is_array()) throw Error("synth.base_field: expected a list");
    c.base_field.clear();
    for (const auto& t : *it) {
      require_known_keys(t, {"amplitude", "fx", "fy", "phase"}, "synth.base_field[]");
      SinusoidTerm term;
      read_if_present(t, "amplitude", term.amplitude, "synth.base_field[]");
      read_if_present(t, "fx", term.fx, "synth.base_field[]");
      read_if_present(t, "fy", term.fy, "synth.base_field[]");
      read_if_present(t, "phase", term.phase, "synth.base_field[]");
      c.base_field.push_back(term);
    }
  }
}

}  // namespace dsp
