#pragma once

// Independent scalar reimplementations used to check the optimized code.
// Nothing here calls the kernels, the basis evaluator or the learners'
// loss code; every quantity is recomputed with plain loops.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mqf/envs.hpp"
#include "mqf/learners.hpp"
#include "mqf/matrix.hpp"
#include "mqf/network.hpp"

namespace mqf::oracle {

/// Forward pass of one input vector through `net`, one multiply-add at a time.
std::vector<double> scalar_forward(const DenseNetwork& net, const std::vector<double>& x);

/// i-th row of a matrix as a vector.
std::vector<double> row_vector(const Matrix2D& m, std::size_t r);

/// Triple-loop matrix product.
Matrix2D matmul(const Matrix2D& a, const Matrix2D& b);

/// Index of the first maximum.
std::size_t argmax(const std::vector<double>& v);

/// C(n, k) from Pascal's triangle.
std::size_t binomial(std::size_t n, std::size_t k);

/// Every exponent tuple of length d with entries in [0, r] and sum <= r, by
/// exhaustive counting over (r + 1)^d candidates.
std::vector<std::vector<unsigned>> brute_force_monomials(std::size_t d, std::size_t r);

/// Product over dimensions of a[dim]^e[dim] by repeated multiplication.
double monomial(const std::vector<unsigned>& exponents, const std::vector<double>& action);

/// Q-value of `action` for an agent in state `obs`: scalar forward of the
/// coefficient network, dotted with loop-evaluated monomials.
double q_value(const QFunctionalAgent& agent, NetworkRole role, const std::vector<double>& obs,
               const std::vector<double>& action);

/// TD loss of a learner on a batch against fixed targets, recomputed from
/// scratch (MQF: mean over rows of (mix(q) - y)^2; IQF: sum over agents of
/// the per-agent mean squared error; CQF: mean squared error of the joint Q).
double td_loss(const Learner& learner, const TransitionBatch& batch, const Matrix2D& targets);

/// Central difference of `f` with respect to the parameter `p`.
double central_difference(const std::function<double()>& f, double& p, double h);

/// |a - b| / max(|a|, |b|, floor). The floor keeps vanishing derivatives
/// from turning round-off into large relative errors.
double relative_error(double a, double b, double floor = 1e-6);

/// Worst relative error between analytic gradients and central differences
/// over every parameter of `nets`, where `loss` recomputes the scalar loss.
double gradient_check(const std::vector<DenseNetwork*>& nets, const std::vector<NetworkGradients>& analytic,
                      const std::function<double()>& loss, double h = 1e-5);

/// Scalar step of one movable entity with the world's integration rule.
void integrate(Vec2& pos, Vec2& vel, Vec2 action, double accel, double max_speed, double dt, double damping);

/// Landmark reward recomputed from its definition.
double landmark_reward(Vec2 agent, const std::vector<Vec2>& landmarks, double threshold, double scale);

struct PreyCandidate {
  Vec2 direction;
  Vec2 position;
  double nearest = 0.0;
  bool feasible = true;
};

/// Every prey candidate re-simulated one step ahead.
std::vector<PreyCandidate> prey_rescan(const ScenarioWorld& world, const EnvParams& params);

/// Random fixtures.
DenseNetwork random_network(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out, Activation act,
                            Rng& rng, double scale = 1.0);
TransitionBatch random_batch(const std::vector<AgentDims>& dims, std::size_t b, Rng& rng);

/// Runs the property and oracle suites; prints one line per suite and
/// returns the number of failed suites.
int run_selftest(std::ostream& out, std::uint64_t seed = 1);

}  // namespace mqf::oracle
