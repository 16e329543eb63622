#include <chrono>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "oracles.hpp"

namespace mqf::oracle {

int run_selftest(std::ostream& out, std::uint64_t seed) {
  struct Suite {
    std::string name;
    std::function<CheckResult()> run;
  };
  const std::vector<Suite> suites = {
      {"basis cardinality", [] { return check_basis_cardinality(4, 3); }},
      {"basis features", [&] { return check_phi(seed, 50); }},
      {"network gradients", [&] { return check_network_gradients(seed, 4, 1e-4); }},
      {"mqf sum gradients", [&] { return check_td_gradients(seed, 2, LearnerKind::mqf, MixerKind::sum, 1e-4); }},
      {"mqf monotonic gradients",
       [&] { return check_td_gradients(seed, 2, LearnerKind::mqf, MixerKind::monotonic, 1e-4); }},
      {"iqf gradients", [&] { return check_td_gradients(seed, 2, LearnerKind::iqf, MixerKind::sum, 1e-4); }},
      {"cqf gradients", [&] { return check_td_gradients(seed, 2, LearnerKind::cqf, MixerKind::sum, 1e-4); }},
      {"mixer monotonicity", [&] { return check_mixer(seed, 1000); }},
      {"greedy selection", [&] { return check_selection(seed, 500); }},
      {"soft update", [&] { return check_soft_update(seed, 0.005); }},
      {"prey heuristic", [&] { return check_prey(seed, 200); }},
  };
  int failed = 0;
  for (const auto& s : suites) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = s.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    out << (r.pass ? "PASS " : "FAIL ") << s.name << " (" << static_cast<long>(ms) << " ms): " << r.detail << '\n';
    failed += r.pass ? 0 : 1;
  }
  out << (failed == 0 ? "selftest passed" : "selftest FAILED: " + std::to_string(failed) + " suite(s)") << '\n';
  return failed;
}

}  // namespace mqf::oracle
