#pragma once

#include <cstddef>
#include <vector>

#include "dsp/geo_core.hpp"

namespace dsp {

struct IdwConfig {
  double power = 2.0;
  /// Queries closer than this to a sample return that sample's value.
  double zero_distance_epsilon = 1e-12;
  /// Use only the k nearest samples; 0 means all samples.
  std::size_t neighbor_limit = 0;

  void validate() const;
};

/// Normalized inverse-distance weights, one per sample in dataset order.
/// The query must not coincide with a sample (see idw_predict's snap rule).
std::vector<double> idw_weights(const Dataset& train, Point query, double power);

/// Weighted average of sample values with weights proportional to 1/d^p.
/// Exact at sample locations and always inside [min, max] of the neighbors used.
double idw_predict(const Dataset& train, Point query, const IdwConfig& cfg);

/// Same estimator with a per-query exponent; cfg.power is ignored.
double differential_idw_predict(const Dataset& train, Point query, double power_of_query,
                                const IdwConfig& cfg);

/// |Y_i - prediction at x_i from every other sample|.
double loo_error(const Dataset& train, std::size_t i, double power, const IdwConfig& cfg = {});

}  // namespace dsp
