#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dsp {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// One measurement at a planar location.
struct Sample {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;

  Point point() const { return {x, y}; }
};

/// Ordered, immutable collection of samples with pairwise-distinct locations.
class Dataset {
 public:
  Dataset() = default;
  /// Throws if any field is non-finite or two samples share a location.
  Dataset(std::string name, std::vector<Sample> samples);

  const std::string& name() const { return name_; }
  std::span<const Sample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  std::vector<double> values() const;
  Dataset renamed(std::string name) const;

 private:
  std::string name_;
  std::vector<Sample> samples_;
};

struct StandardizationParams {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double std_x = 1.0;
  double std_y = 1.0;

  Point apply(Point p) const;
  Point invert(Point p) const;
};

double euclidean_distance(Point a, Point b);

/// Reads a `x,y,value` CSV (LF or CRLF). The dataset is named after the file stem.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(std::istream& in, std::string name);
void write_csv(std::ostream& out, const Dataset& d);

/// Query points from a CSV whose header starts with `x,y`; extra columns are ignored.
std::vector<Point> load_points_csv(const std::filesystem::path& path);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Population z-scores of both coordinate columns.
StandardizationParams fit_standardization(const Dataset& d);
std::pair<Dataset, StandardizationParams> standardize_coords(const Dataset& d);

/// Deterministic shuffle by seed; the first round(n * train_fraction) shuffled
/// samples form the training part.
std::pair<Dataset, Dataset> split_train_test(const Dataset& d, double train_fraction,
                                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic generator

/// A plane-wave term: amplitude * sin(fx * x + fy * y + phase).
struct SinusoidTerm {
  double amplitude = 0.0;
  double fx = 0.0;
  double fy = 0.0;
  double phase = 0.0;
};

/// Disk with its own Gaussian noise scale. The first region containing a
/// point decides its noise; points outside every region are noise-free.
struct NoiseRegion {
  double cx = 50.0;
  double cy = 50.0;
  double radius = 25.0;
  double noise_scale = 0.0;
};

struct SyntheticConfig {
  std::size_t n = 200;
  std::uint64_t seed = 42;
  std::vector<NoiseRegion> regions;
  std::vector<SinusoidTerm> base_field;

  /// Inner rough disk, outer smooth annulus, and a smooth sinusoid base.
  static SyntheticConfig defaults();
};

double base_field_value(const SyntheticConfig& cfg, Point p);
double noise_scale_at(const SyntheticConfig& cfg, Point p);
/// Index of the first region containing p, or regions.size() if none.
std::size_t region_index(const SyntheticConfig& cfg, Point p);

Dataset generate_synthetic(std::size_t n, const SyntheticConfig& cfg, std::uint64_t seed);
inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
  return generate_synthetic(cfg.n, cfg, cfg.seed);
}

void to_json(nlohmann::json& j, const SyntheticConfig& c);
/// Strict: unknown keys raise dsp::Error.
void from_json(const nlohmann::json& j, SyntheticConfig& c);

}  // namespace dsp
