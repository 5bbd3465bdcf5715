#pragma once

#include <cstddef>
#include <functional>

#include "sphds/types.hpp"

namespace sphds {

/// Rectangular evaluation grid. Points are indexed lexicographically with
/// dimension 0 slowest, so index order is the documented witness
/// tie-breaking order.
struct GridSpec {
  Vector lo, hi;
  std::vector<int> counts;

  static GridSpec uniform(Vector lo, Vector hi, int points_per_dim);
  void validate() const;
  std::size_t size() const;
  Vector point(std::size_t flat_index) const;
  /// Grid restricted to the leading `dims` dimensions.
  GridSpec prefix(int dims) const;
};

using IndexedKernel = std::function<void(std::size_t)>;

/// Serial reference: evaluates kernel(i) for i in [0, n) in index order.
void map_indexed_serial(std::size_t n, const IndexedKernel& kernel);

/// OpenMP version. Each index writes only its own output slot, so results
/// are identical to the serial reference for any worker count.
/// workers <= 0 uses the runtime default.
void map_indexed_parallel(std::size_t n, int workers, const IndexedKernel& kernel);

/// Dispatches on workers: 1 runs the serial reference, anything else the
/// parallel kernel.
void map_indexed(std::size_t n, int workers, const IndexedKernel& kernel);

int hardware_workers();

}  // namespace sphds
