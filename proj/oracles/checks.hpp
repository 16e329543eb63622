#pragma once

// Property and oracle checks shared by the selftest command, the unit tests
// and the acceptance suite. Sizes are parameters so quick and full-strength
// runs use the same code.

#include <cstddef>
#include <cstdint>
#include <string>

#include "mqf/learners.hpp"

namespace mqf::oracle {

struct CheckResult {
  bool pass = true;
  std::string detail;
};

/// Basis size against Pascal's triangle and the exponent set against
/// exhaustive enumeration, for d in [1, max_d], r in [0, max_r].
CheckResult check_basis_cardinality(std::size_t max_d, std::size_t max_r);
/// phi on random actions against per-entry monomial evaluation (exact).
CheckResult check_phi(std::uint64_t seed, std::size_t cases);
/// Dense-network backward against central differences.
CheckResult check_network_gradients(std::uint64_t seed, std::size_t fixtures, double tolerance);
/// Full TD-loss gradient (basis, agent networks and mixer) against central
/// differences of an independently computed loss. Agent counts cycle
/// through 2 and 3.
CheckResult check_td_gradients(std::uint64_t seed, std::size_t fixtures, LearnerKind kind, MixerKind mixer,
                               double tolerance);
/// Sum mixer bit-exact against a summation loop; monotonic mixer with
/// non-negative agent gradients and non-decreasing q_tot under single-agent
/// increases.
CheckResult check_mixer(std::uint64_t seed, std::size_t draws);
/// select_best and greedy_action against an argmax re-scan of the same
/// samples, including constructed ties.
CheckResult check_selection(std::uint64_t seed, std::size_t cases);
/// soft_update within one ulp of tau * p + (1 - tau) * t; exact copy at tau = 1.
CheckResult check_soft_update(std::uint64_t seed, double tau);
/// The prey's chosen candidate against a re-simulation of every candidate.
CheckResult check_prey(std::uint64_t seed, std::size_t states);
/// MQF with a sum mixer and IQF on a one-agent landmark scenario: identical
/// losses and parameters for `steps` updates from equal seeds.
CheckResult check_single_agent_degeneracy(std::uint64_t seed, std::size_t steps);

}  // namespace mqf::oracle
