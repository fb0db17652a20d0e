#pragma once

#include <stdexcept>
#include <string>

namespace dsp {

/// Raised for every contract violation in the library (bad input, bad config,
/// malformed files). The CLI turns these into `error: <message>` lines.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dsp
