#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace corrl {

struct StateAction {
  int state = 0;
  int action = 0;
  friend bool operator==(const StateAction&, const StateAction&) = default;
};

/// One offline tuple (s, a, r, s').
struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Offline dataset. The mask records which tuples an adversary replaced; it
/// is debug provenance only and never reaches a learner (learners take
/// `std::span<const Transition>`).
struct Dataset {
  std::vector<Transition> tuples;
  std::vector<bool> corrupted_mask;

  Dataset() = default;
  explicit Dataset(std::vector<Transition> t)
      : tuples(std::move(t)), corrupted_mask(tuples.size(), false) {}

  std::size_t size() const { return tuples.size(); }
  std::span<const Transition> view() const { return tuples; }
  std::size_t corrupted_count() const;
};

/// Indices on which two equal-length datasets differ (tuple-wise).
std::vector<std::size_t> diff_indices(std::span<const Transition> a, std::span<const Transition> b);

}  // namespace corrl
