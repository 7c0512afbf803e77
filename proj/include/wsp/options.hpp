#pragma once

#include <cstdint>

namespace wsp {

/// Enumeration caps shared by the solvers. Exceeding a cap raises
/// ResourceLimitError; nothing is ever silently truncated.
struct Caps {
  std::uint64_t max_plans = 10'000'000;
  std::uint64_t max_simple_expressions = std::uint64_t{1} << 24;
  std::uint64_t max_partitions = 4'213'597;  // Bell(12)
  std::uint64_t max_linear_extensions = 1'000'000;
  std::uint64_t max_execution_sets = 1'000'000;
  /// Worker threads for the simple-expression search; 1 keeps results
  /// bit-reproducible.
  int threads = 1;
};

}  // namespace wsp
