#include "adaflow/random.hpp"

namespace adaflow {

std::uint64_t RandomStream::below(std::uint64_t n) {
  // Lemire's nearly-divisionless method, with rejection for exact uniformity.
  unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * n;
  auto low = static_cast<std::uint64_t>(product);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      product = static_cast<unsigned __int128>((*this)()) * n;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

}  // namespace adaflow
