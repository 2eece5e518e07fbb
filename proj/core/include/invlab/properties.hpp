#pragma once

// Built-in property suite behind `invlab verify`: every module invariant as a named,
// self-contained numerical check.

#include <cstdint>
#include <string>
#include <vector>

namespace invlab {

struct PropertyResult {
  std::string module;
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct PropertyOptions {
  std::uint64_t seed = 1;
  /// Empty runs everything; otherwise only properties whose module or name matches.
  std::vector<std::string> only;
};

std::vector<std::string> property_names();

/// Never throws for a failing check: exceptions inside a property become a failed result
/// carrying the message.
std::vector<PropertyResult> run_property_suite(const PropertyOptions& options = {});

}  // namespace invlab
