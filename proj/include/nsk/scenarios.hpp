#pragma once

#include <cstdint>

#include "nsk/evolution.hpp"
#include "nsk/random_fields.hpp"

namespace nsk {

/// Stream ids under the scenario seed; each consumer draws from its own stream.
inline constexpr std::uint64_t kStreamMms = 0x6D6D73ULL;       // manufactured states
inline constexpr std::uint64_t kStreamInit = 0x696E6974ULL;    // initial perturbations
inline constexpr std::uint64_t kStreamPairs = 0x70616972ULL;   // contraction trial pairs

/// Smooth half-band stationary state with every component of peak `amp` and envelope width `width`.
inline StationaryState random_stationary_state(const GridPtr& g, const Model& m, CounterRng rng, double amp, double width) {
  ScalarField sigma = random_smooth(g, rng, amp, width, true);
  VectorField v = random_smooth_vector(g, rng, amp, width, true);
  ScalarField theta = random_smooth(g, rng, amp, width, true);
  return make_state(m, std::move(sigma), std::move(v), std::move(theta));
}

/// Smooth half-band perturbation rescaled to ||(sigma, w, theta)||_{4,3,3} = norm.
inline PerturbationState random_perturbation(const GridPtr& g, CounterRng rng, double norm, double width) {
  PerturbationState x;
  x.sigma = random_smooth(g, rng, 1.0, width, true);
  x.w = random_smooth_vector(g, rng, 1.0, width, true);
  x.theta = random_smooth(g, rng, 1.0, width, true);
  const double n = h433(x);
  const double c = n > 0.0 ? norm / n : 0.0;
  x.sigma *= c;
  x.w *= c;
  x.theta *= c;
  return x;
}

}  // namespace nsk
