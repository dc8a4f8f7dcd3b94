#include "corrl/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace corrl {

std::size_t Dataset::corrupted_count() const {
  return static_cast<std::size_t>(std::count(corrupted_mask.begin(), corrupted_mask.end(), true));
}

std::vector<std::size_t> diff_indices(std::span<const Transition> a, std::span<const Transition> b) {
  if (a.size() != b.size()) throw std::invalid_argument("diff_indices: datasets differ in length");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] == b[i])) out.push_back(i);
  }
  return out;
}

}  // namespace corrl
