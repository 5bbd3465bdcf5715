#include "sphds/grid.hpp"

#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sphds {

GridSpec GridSpec::uniform(Vector lo, Vector hi, int points_per_dim) {
  GridSpec g;
  g.counts.assign(lo.size(), points_per_dim);
  g.lo = std::move(lo);
  g.hi = std::move(hi);
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (lo.empty() || lo.size() != hi.size() || lo.size() != counts.size())
    throw std::invalid_argument("grid bounds and counts must share a nonzero dimension");
  for (std::size_t d = 0; d < lo.size(); ++d) {
    if (counts[d] < 1) throw std::invalid_argument("grid counts must be >= 1");
    if (!(lo[d] <= hi[d])) throw std::invalid_argument("grid bounds must be ordered");
  }
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (int c : counts) n *= static_cast<std::size_t>(c);
  return n;
}

Vector GridSpec::point(std::size_t flat_index) const {
  Vector p(lo.size());
  for (std::size_t d = lo.size(); d-- > 0;) {
    const std::size_t c = static_cast<std::size_t>(counts[d]);
    const std::size_t i = flat_index % c;
    flat_index /= c;
    p[d] = (c == 1) ? lo[d]
                    : lo[d] + static_cast<double>(i) * (hi[d] - lo[d]) / static_cast<double>(c - 1);
  }
  return p;
}

GridSpec GridSpec::prefix(int dims) const {
  GridSpec g;
  g.lo = Vector(lo.begin(), lo.begin() + dims);
  g.hi = Vector(hi.begin(), hi.begin() + dims);
  g.counts = std::vector<int>(counts.begin(), counts.begin() + dims);
  return g;
}

void map_indexed_serial(std::size_t n, const IndexedKernel& kernel) {
  for (std::size_t i = 0; i < n; ++i) kernel(i);
}

void map_indexed_parallel(std::size_t n, int workers, const IndexedKernel& kernel) {
#ifdef _OPENMP
  const int nt = workers > 0 ? workers : omp_get_max_threads();
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(nt)
  for (long long i = 0; i < nn; ++i) kernel(static_cast<std::size_t>(i));
#else
  (void)workers;
  map_indexed_serial(n, kernel);
#endif
}

void map_indexed(std::size_t n, int workers, const IndexedKernel& kernel) {
  if (workers == 1)
    map_indexed_serial(n, kernel);
  else
    map_indexed_parallel(n, workers, kernel);
}

int hardware_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace sphds
