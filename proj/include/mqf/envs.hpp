#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqf/replay.hpp"
#include "mqf/rng.hpp"

namespace mqf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

enum class EntityKind { agent, landmark, obstacle, prey };

struct Entity {
  Vec2 pos;
  Vec2 vel;
  double radius = 0.0;
  EntityKind kind = EntityKind::agent;
  double accel = 0.0;      // acceleration per unit action
  double max_speed = 0.0;  // 0 for static entities
};

/// Physics and reward constants of the particle scenarios.
struct EnvParams {
  double dt = 0.1;
  double damping = 0.25;
  double agent_accel = 3.0;
  double prey_accel = 4.0;
  double agent_max_speed = 1.0;
  double prey_max_speed = 1.3;
  double spawn_half_width = 1.0;
  double arena_half_width = 1.0;  // prey stays inside this box
  double agent_radius = 0.075;
  double prey_radius = 0.05;
  double landmark_radius = 0.05;
  double obstacle_radius = 0.2;
  double capture_threshold = 0.3;  // d_th of the landmark reward
  double reward_scale = 0.1;       // c in exp(-d^2 / c)
  double distance_penalty = 0.1;   // alpha of the predator penalty
  double capture_bonus = 10.0;
  double fov_half_angle_deg = 60.0;
  double fov_range = 0.75;
  std::size_t prey_directions = 16;
  std::size_t episode_length = 50;
};

struct ScenarioWorld {
  std::vector<Entity> agents;  // controlled agents (predators in PP)
  std::vector<Entity> landmarks;
  std::vector<Entity> obstacles;
  std::optional<Entity> prey;
  std::vector<Vec2> facing;  // per agent, last nonzero velocity direction
  double dt = 0.1;
  double damping = 0.25;
  std::size_t step_index = 0;
  std::size_t episode_length = 50;
};

/// Semi-implicit Euler step: damp, accelerate, clip speed, move.
void integrate(Entity& e, Vec2 action, double dt, double damping);

/// exp(-d^2/c) for the nearest landmark within d_th, else minus the summed
/// distance to all landmarks.
double landmark_reward(Vec2 agent_pos, std::span<const Entity> landmarks, const EnvParams& params);

struct CaptureOutcome {
  std::vector<double> rewards;
  std::vector<bool> bonus;  // predator received the capture bonus
  bool captured = false;
  bool three_agent = false;
};

/// Standard predator-prey: capture when >= 2 predators overlap the prey.
CaptureOutcome spp_reward(const ScenarioWorld& world, const EnvParams& params);
/// Increased-cooperation predator-prey: capture when >= 1 predator overlaps
/// the prey; every predator seeing the prey at that moment is rewarded.
CaptureOutcome icpp_reward(const ScenarioWorld& world, const EnvParams& params);
bool prey_in_view(const ScenarioWorld& world, std::size_t predator, const EnvParams& params);

/// Candidate prey directions: prey_directions unit vectors at angles
/// 2*pi*j/n (j = 0 is +x), followed by the null action.
std::vector<Vec2> prey_candidates(const EnvParams& params);

struct PreyDecision {
  std::size_t candidate = 0;
  Vec2 direction;
  double nearest_distance = 0.0;  // after the one-step lookahead
  bool feasible = true;
};

/// Candidate maximizing the post-step distance to the nearest predator among
/// candidates that keep the prey out of obstacles and inside the arena; ties
/// go to the lowest index. Falls back to all candidates if none is feasible.
PreyDecision prey_policy(const ScenarioWorld& world, const EnvParams& params);
/// Post-step prey position for one candidate and whether it is feasible.
std::pair<Vec2, bool> prey_lookahead(const ScenarioWorld& world, Vec2 direction, const EnvParams& params);

enum class ScenarioFamily { landmark, predator_prey };

struct StepInfo {
  std::size_t captures = 0;
  std::size_t captures3 = 0;
  std::size_t landmarks_covered = 0;
};

struct StepResult {
  JointVector observations;
  std::vector<double> rewards;
  bool done = false;
  StepInfo info;
};

struct EpisodeInfo {
  std::size_t captures = 0;
  std::size_t captures3 = 0;
  std::size_t landmarks_covered = 0;  // at the latest step
  std::size_t n_landmarks = 0;
  std::size_t steps = 0;
};

struct EpisodeMetrics {
  ScenarioFamily family = ScenarioFamily::landmark;
  bool success = false;
  std::size_t captures = 0;
  std::size_t captures3 = 0;
};

EpisodeMetrics success(const EpisodeInfo& info, ScenarioFamily family);

class Scenario {
 public:
  virtual ~Scenario() = default;

  virtual std::string name() const = 0;
  virtual ScenarioFamily family() const = 0;
  std::size_t n_agents() const noexcept { return world_.agents.size(); }
  virtual std::size_t obs_dim() const = 0;
  std::size_t action_dim() const noexcept { return 2; }
  std::vector<AgentDims> agent_dims() const;

  virtual JointVector reset(Rng& rng) = 0;
  StepResult step(const JointVector& actions);
  virtual JointVector observations() const = 0;

  const ScenarioWorld& world() const noexcept { return world_; }
  ScenarioWorld& mutable_world() noexcept { return world_; }
  const EnvParams& params() const noexcept { return params_; }
  const EpisodeInfo& episode_info() const noexcept { return info_; }

 protected:
  Scenario(const EnvParams& params);
  virtual StepInfo advance(const JointVector& actions, std::vector<double>& rewards) = 0;

  EnvParams params_;
  ScenarioWorld world_;
  EpisodeInfo info_;
  Rng respawn_rng_;
};

/// N agents cover N landmarks. Observation: own velocity, then each
/// landmark's position relative to the agent (2 + 2N values).
class LandmarkScenario final : public Scenario {
 public:
  LandmarkScenario(std::size_t n, const EnvParams& params);
  std::string name() const override;
  ScenarioFamily family() const override { return ScenarioFamily::landmark; }
  std::size_t obs_dim() const override { return 2 + 2 * world_.landmarks.size(); }
  JointVector reset(Rng& rng) override;
  JointVector observations() const override;
  std::size_t landmarks_covered() const;

 private:
  StepInfo advance(const JointVector& actions, std::vector<double>& rewards) override;
};

/// Three predators, one scripted prey, two obstacles. Observation (16):
/// own velocity, own position, obstacle positions, other predators'
/// positions, prey position (all relative), prey velocity.
class PredatorPreyScenario final : public Scenario {
 public:
  enum class Variant { standard, increased_cooperation };

  PredatorPreyScenario(Variant variant, const EnvParams& params);
  std::string name() const override;
  ScenarioFamily family() const override { return ScenarioFamily::predator_prey; }
  std::size_t obs_dim() const override { return 16; }
  Variant variant() const noexcept { return variant_; }
  JointVector reset(Rng& rng) override;
  JointVector observations() const override;

 private:
  StepInfo advance(const JointVector& actions, std::vector<double>& rewards) override;
  void respawn_prey(Rng& rng);

  Variant variant_;
};

/// `lc-2a2l`, `lc-5a5l`, any `lc-<n>a<n>l`, `spp`, `icpp`.
std::unique_ptr<Scenario> make_scenario(std::string_view name, const EnvParams& params = {});

}  // namespace mqf
