#include "dsp/idw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dsp/error.hpp"

namespace dsp {

namespace {

struct Neighbor {
  double distance;
  std::size_t index;
};

void check_power(double p, const char* where) {
  if (!(p > 0.0) || !std::isfinite(p))
    throw Error(std::string(where) + ": power must be a finite value > 0");
}

// Distances to every sample except `skip`, truncated to the k nearest when a
// limit is set (ties resolved by index).
std::vector<Neighbor> gather(const Dataset& train, Point q, std::size_t neighbor_limit,
                             std::size_t skip) {
  std::vector<Neighbor> out;
  out.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (i == skip) continue;
    out.push_back({euclidean_distance(q, train[i].point()), i});
  }
  if (neighbor_limit > 0 && neighbor_limit < out.size()) {
    auto by_distance = [](const Neighbor& a, const Neighbor& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    };
    std::nth_element(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(neighbor_limit),
                     out.end(), by_distance);
    out.resize(neighbor_limit);
    std::sort(out.begin(), out.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  }
  return out;
}

// Weights are formed relative to the nearest distance, (d_min / d)^p, which is
// the same after normalization but cannot overflow for large p.
double weighted_average(const Dataset& train, const std::vector<Neighbor>& nbrs, double p,
                        double eps) {
  double d_min = std::numeric_limits<double>::infinity();
  std::size_t nearest = 0;
  for (const auto& n : nbrs) {
    if (n.distance < d_min) {
      d_min = n.distance;
      nearest = n.index;
    }
  }
  if (d_min <= eps) return train[nearest].value;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double num = 0.0;
  double den = 0.0;
  for (const auto& n : nbrs) {
    const double w = std::pow(d_min / n.distance, p);
    const double y = train[n.index].value;
    num += w * y;
    den += w;
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  return std::clamp(num / den, lo, hi);
}

}  // namespace

void IdwConfig::validate() const {
  check_power(power, "IdwConfig");
  if (!(zero_distance_epsilon >= 0.0))
    throw Error("IdwConfig: zero_distance_epsilon must be >= 0");
}

std::vector<double> idw_weights(const Dataset& train, Point query, double power) {
  if (train.empty()) throw Error("idw_weights: empty dataset");
  check_power(power, "idw_weights");
  std::vector<double> d(train.size());
  double d_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train.size(); ++i) {
    d[i] = euclidean_distance(query, train[i].point());
    d_min = std::min(d_min, d[i]);
  }
  if (!(d_min > 0.0)) throw Error("idw_weights: query coincides with a sample");
  std::vector<double> w(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) w[i] = std::pow(d_min / d[i], power);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

double differential_idw_predict(const Dataset& train, Point query, double power_of_query,
                                const IdwConfig& cfg) {
  if (train.empty()) throw Error("idw_predict: empty dataset");
  if (!std::isfinite(query.x) || !std::isfinite(query.y))
    throw Error("idw_predict: non-finite query");
  check_power(power_of_query, "idw_predict");
  auto nbrs = gather(train, query, cfg.neighbor_limit, train.size());
  return weighted_average(train, nbrs, power_of_query, cfg.zero_distance_epsilon);
}

double idw_predict(const Dataset& train, Point query, const IdwConfig& cfg) {
  return differential_idw_predict(train, query, cfg.power, cfg);
}

double loo_error(const Dataset& train, std::size_t i, double power, const IdwConfig& cfg) {
  if (train.size() < 2) throw Error("loo_error: need at least 2 samples");
  if (i >= train.size())
    throw Error("loo_error: index " + std::to_string(i) + " out of range");
  check_power(power, "loo_error");
  const Sample& held_out = train[i];
  auto nbrs = gather(train, held_out.point(), cfg.neighbor_limit, i);
  return std::abs(held_out.value -
                  weighted_average(train, nbrs, power, cfg.zero_distance_epsilon));
}

}  // namespace dsp
