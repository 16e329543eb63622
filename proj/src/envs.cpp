#include "mqf/envs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <regex>

#include "mqf/errors.hpp"

namespace mqf {

double Vec2::norm() const { return std::hypot(x, y); }

double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

void integrate(Entity& e, Vec2 action, double dt, double damping) {
  e.vel = e.vel * (1.0 - damping) + action * (e.accel * dt);
  const double speed = e.vel.norm();
  if (speed > e.max_speed) e.vel = e.vel * (e.max_speed / speed);
  e.pos = e.pos + e.vel * dt;
}

double landmark_reward(Vec2 agent_pos, std::span<const Entity> landmarks, const EnvParams& params) {
  double nearest = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& l : landmarks) {
    const double d = distance(agent_pos, l.pos);
    nearest = std::min(nearest, d);
    total += d;
  }
  if (nearest <= params.capture_threshold) return std::exp(-nearest * nearest / params.reward_scale);
  return -total;
}

namespace {

bool overlaps(const Entity& a, const Entity& b) { return distance(a.pos, b.pos) < a.radius + b.radius; }

double penalty(const Entity& predator, const Entity& prey, const EnvParams& params) {
  return -params.distance_penalty * distance(predator.pos, prey.pos);
}

void check_actions(const JointVector& actions, std::size_t n) {
  if (actions.size() != n) throw DomainError("step: expected one action per agent");
  for (const auto& a : actions) {
    if (a.size() != 2) throw DomainError("step: actions are 2-vectors");
    for (double v : a)
      if (!(v >= -1.0 && v <= 1.0)) throw DomainError("step: action component outside [-1, 1]");
  }
}

Vec2 uniform_in_box(Rng& rng, double half_width) {
  const double x = rng.uniform(-half_width, half_width);
  const double y = rng.uniform(-half_width, half_width);
  return {x, y};
}

Entity make_entity(EntityKind kind, Vec2 pos, double radius, double accel, double max_speed) {
  Entity e;
  e.kind = kind;
  e.pos = pos;
  e.radius = radius;
  e.accel = accel;
  e.max_speed = max_speed;
  return e;
}

}  // namespace

bool prey_in_view(const ScenarioWorld& world, std::size_t predator, const EnvParams& params) {
  const Entity& p = world.agents.at(predator);
  const Vec2 rel = world.prey->pos - p.pos;
  const double d = rel.norm();
  if (d > params.fov_range) return false;
  if (d < 1e-12) return true;
  const Vec2 face = world.facing.at(predator);
  const double cos_angle = face.dot(rel) / (face.norm() * d);
  return cos_angle >= std::cos(params.fov_half_angle_deg * std::numbers::pi / 180.0);
}

CaptureOutcome spp_reward(const ScenarioWorld& world, const EnvParams& params) {
  const Entity& prey = world.prey.value();
  const std::size_t n = world.agents.size();
  CaptureOutcome out;
  out.rewards.assign(n, 0.0);
  out.bonus.assign(n, false);
  std::size_t touching = 0;
  for (std::size_t k = 0; k < n; ++k) {
    out.bonus[k] = overlaps(world.agents[k], prey);
    touching += out.bonus[k] ? 1 : 0;
  }
  out.captured = touching >= 2;
  if (!out.captured) out.bonus.assign(n, false);
  out.three_agent = out.captured && touching == n;
  for (std::size_t k = 0; k < n; ++k)
    out.rewards[k] = out.bonus[k] ? params.capture_bonus : penalty(world.agents[k], prey, params);
  return out;
}

CaptureOutcome icpp_reward(const ScenarioWorld& world, const EnvParams& params) {
  const Entity& prey = world.prey.value();
  const std::size_t n = world.agents.size();
  CaptureOutcome out;
  out.rewards.assign(n, 0.0);
  out.bonus.assign(n, false);
  for (const auto& a : world.agents) out.captured = out.captured || overlaps(a, prey);
  std::size_t seeing = 0;
  if (out.captured) {
    for (std::size_t k = 0; k < n; ++k) {
      out.bonus[k] = prey_in_view(world, k, params);
      seeing += out.bonus[k] ? 1 : 0;
    }
  }
  out.three_agent = out.captured && seeing == n;
  for (std::size_t k = 0; k < n; ++k)
    out.rewards[k] = out.bonus[k] ? params.capture_bonus : penalty(world.agents[k], prey, params);
  return out;
}

std::vector<Vec2> prey_candidates(const EnvParams& params) {
  std::vector<Vec2> c;
  for (std::size_t j = 0; j < params.prey_directions; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(params.prey_directions);
    c.push_back({std::cos(angle), std::sin(angle)});
  }
  c.push_back({0.0, 0.0});
  return c;
}

std::pair<Vec2, bool> prey_lookahead(const ScenarioWorld& world, Vec2 direction, const EnvParams& params) {
  Entity next = world.prey.value();
  integrate(next, direction, world.dt, world.damping);
  bool feasible = std::fabs(next.pos.x) <= params.arena_half_width && std::fabs(next.pos.y) <= params.arena_half_width;
  for (const auto& o : world.obstacles) feasible = feasible && !overlaps(next, o);
  return {next.pos, feasible};
}

PreyDecision prey_policy(const ScenarioWorld& world, const EnvParams& params) {
  const std::vector<Vec2> candidates = prey_candidates(params);
  PreyDecision best_feasible;
  PreyDecision best_any;
  bool have_feasible = false;
  bool have_any = false;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const auto [pos, feasible] = prey_lookahead(world, candidates[j], params);
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& p : world.agents) nearest = std::min(nearest, distance(pos, p.pos));
    const PreyDecision d{j, candidates[j], nearest, feasible};
    if (!have_any || nearest > best_any.nearest_distance) {
      best_any = d;
      have_any = true;
    }
    if (feasible && (!have_feasible || nearest > best_feasible.nearest_distance)) {
      best_feasible = d;
      have_feasible = true;
    }
  }
  return have_feasible ? best_feasible : best_any;
}

EpisodeMetrics success(const EpisodeInfo& info, ScenarioFamily family) {
  EpisodeMetrics m;
  m.family = family;
  if (family == ScenarioFamily::landmark) {
    m.success = info.n_landmarks > 0 && info.landmarks_covered == info.n_landmarks;
  } else {
    m.captures = info.captures;
    m.captures3 = info.captures3;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Scenario

Scenario::Scenario(const EnvParams& params) : params_(params) {
  world_.dt = params.dt;
  world_.damping = params.damping;
  world_.episode_length = params.episode_length;
}

std::vector<AgentDims> Scenario::agent_dims() const {
  return std::vector<AgentDims>(n_agents(), AgentDims{obs_dim(), action_dim()});
}

StepResult Scenario::step(const JointVector& actions) {
  if (world_.step_index >= world_.episode_length) throw UsageError("step: episode already finished; call reset");
  check_actions(actions, n_agents());
  StepResult result;
  result.info = advance(actions, result.rewards);
  ++world_.step_index;
  info_.captures += result.info.captures;
  info_.captures3 += result.info.captures3;
  info_.landmarks_covered = result.info.landmarks_covered;
  info_.steps = world_.step_index;
  result.done = world_.step_index == world_.episode_length;
  result.observations = observations();
  return result;
}

LandmarkScenario::LandmarkScenario(std::size_t n, const EnvParams& params) : Scenario(params) {
  if (n == 0) throw DomainError("LandmarkScenario: need at least one agent");
  for (std::size_t i = 0; i < n; ++i) {
    world_.agents.push_back(
        make_entity(EntityKind::agent, {}, params.agent_radius, params.agent_accel, params.agent_max_speed));
    world_.landmarks.push_back(make_entity(EntityKind::landmark, {}, params.landmark_radius, 0.0, 0.0));
  }
  world_.facing.assign(n, Vec2{1.0, 0.0});
  info_.n_landmarks = n;
}

std::string LandmarkScenario::name() const {
  const auto n = std::to_string(world_.agents.size());
  return "lc-" + n + "a" + n + "l";
}

JointVector LandmarkScenario::reset(Rng& rng) {
  for (auto& a : world_.agents) {
    a.pos = uniform_in_box(rng, params_.spawn_half_width);
    a.vel = {};
  }
  for (auto& l : world_.landmarks) l.pos = uniform_in_box(rng, params_.spawn_half_width);
  world_.facing.assign(world_.agents.size(), Vec2{1.0, 0.0});
  world_.step_index = 0;
  info_ = EpisodeInfo{};
  info_.n_landmarks = world_.landmarks.size();
  info_.landmarks_covered = landmarks_covered();
  respawn_rng_ = Rng(rng.next_u64());
  return observations();
}

JointVector LandmarkScenario::observations() const {
  JointVector obs;
  for (const auto& a : world_.agents) {
    std::vector<double> o{a.vel.x, a.vel.y};
    for (const auto& l : world_.landmarks) {
      o.push_back(l.pos.x - a.pos.x);
      o.push_back(l.pos.y - a.pos.y);
    }
    obs.push_back(std::move(o));
  }
  return obs;
}

std::size_t LandmarkScenario::landmarks_covered() const {
  std::size_t covered = 0;
  for (const auto& l : world_.landmarks) {
    const bool hit = std::any_of(world_.agents.begin(), world_.agents.end(), [&](const Entity& a) {
      return distance(a.pos, l.pos) <= params_.capture_threshold;
    });
    covered += hit ? 1 : 0;
  }
  return covered;
}

StepInfo LandmarkScenario::advance(const JointVector& actions, std::vector<double>& rewards) {
  for (std::size_t i = 0; i < world_.agents.size(); ++i) {
    integrate(world_.agents[i], {actions[i][0], actions[i][1]}, world_.dt, world_.damping);
  }
  rewards.clear();
  for (const auto& a : world_.agents) rewards.push_back(landmark_reward(a.pos, world_.landmarks, params_));
  StepInfo info;
  info.landmarks_covered = landmarks_covered();
  return info;
}

PredatorPreyScenario::PredatorPreyScenario(Variant variant, const EnvParams& params)
    : Scenario(params), variant_(variant) {
  for (int i = 0; i < 3; ++i)
    world_.agents.push_back(
        make_entity(EntityKind::agent, {}, params.agent_radius, params.agent_accel, params.agent_max_speed));
  for (int i = 0; i < 2; ++i)
    world_.obstacles.push_back(make_entity(EntityKind::obstacle, {}, params.obstacle_radius, 0.0, 0.0));
  world_.prey = make_entity(EntityKind::prey, {}, params.prey_radius, params.prey_accel, params.prey_max_speed);
  world_.facing.assign(3, Vec2{1.0, 0.0});
}

std::string PredatorPreyScenario::name() const { return variant_ == Variant::standard ? "spp" : "icpp"; }

void PredatorPreyScenario::respawn_prey(Rng& rng) {
  Entity& prey = *world_.prey;
  prey.vel = {};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    prey.pos = uniform_in_box(rng, params_.spawn_half_width);
    const bool clear = std::none_of(world_.obstacles.begin(), world_.obstacles.end(),
                                    [&](const Entity& o) { return overlaps(prey, o); }) &&
                       std::none_of(world_.agents.begin(), world_.agents.end(),
                                    [&](const Entity& a) { return overlaps(prey, a); });
    if (clear) return;
  }
}

JointVector PredatorPreyScenario::reset(Rng& rng) {
  for (auto& o : world_.obstacles) o.pos = uniform_in_box(rng, params_.spawn_half_width);
  for (auto& a : world_.agents) {
    a.pos = uniform_in_box(rng, params_.spawn_half_width);
    a.vel = {};
  }
  respawn_prey(rng);
  world_.facing.assign(world_.agents.size(), Vec2{1.0, 0.0});
  world_.step_index = 0;
  info_ = EpisodeInfo{};
  respawn_rng_ = Rng(rng.next_u64());
  return observations();
}

JointVector PredatorPreyScenario::observations() const {
  const Entity& prey = *world_.prey;
  JointVector obs;
  for (std::size_t i = 0; i < world_.agents.size(); ++i) {
    const Entity& a = world_.agents[i];
    std::vector<double> o{a.vel.x, a.vel.y, a.pos.x, a.pos.y};
    for (const auto& l : world_.obstacles) {
      o.push_back(l.pos.x - a.pos.x);
      o.push_back(l.pos.y - a.pos.y);
    }
    for (std::size_t j = 0; j < world_.agents.size(); ++j) {
      if (j == i) continue;
      o.push_back(world_.agents[j].pos.x - a.pos.x);
      o.push_back(world_.agents[j].pos.y - a.pos.y);
    }
    o.push_back(prey.pos.x - a.pos.x);
    o.push_back(prey.pos.y - a.pos.y);
    o.push_back(prey.vel.x);
    o.push_back(prey.vel.y);
    obs.push_back(std::move(o));
  }
  return obs;
}

StepInfo PredatorPreyScenario::advance(const JointVector& actions, std::vector<double>& rewards) {
  for (std::size_t i = 0; i < world_.agents.size(); ++i) {
    Entity& a = world_.agents[i];
    integrate(a, {actions[i][0], actions[i][1]}, world_.dt, world_.damping);
    const double speed = a.vel.norm();
    if (speed > 1e-12) world_.facing[i] = a.vel * (1.0 / speed);
  }
  const PreyDecision decision = prey_policy(world_, params_);
  integrate(*world_.prey, decision.direction, world_.dt, world_.damping);

  const CaptureOutcome outcome =
      variant_ == Variant::standard ? spp_reward(world_, params_) : icpp_reward(world_, params_);
  rewards = outcome.rewards;
  StepInfo info;
  if (outcome.captured) {
    info.captures = 1;
    info.captures3 = outcome.three_agent ? 1 : 0;
    respawn_prey(respawn_rng_);
  }
  return info;
}

std::unique_ptr<Scenario> make_scenario(std::string_view name, const EnvParams& params) {
  if (name == "spp") return std::make_unique<PredatorPreyScenario>(PredatorPreyScenario::Variant::standard, params);
  if (name == "icpp")
    return std::make_unique<PredatorPreyScenario>(PredatorPreyScenario::Variant::increased_cooperation, params);
  static const std::regex landmark(R"(lc-(\d+)a(\d+)l)");
  std::cmatch m;
  const std::string s(name);
  if (std::regex_match(s.c_str(), m, landmark) && m[1] == m[2]) {
    const auto n = static_cast<std::size_t>(std::stoul(m[1]));
    if (n >= 1 && n <= 64) return std::make_unique<LandmarkScenario>(n, params);
  }
  throw DomainError("unknown scenario '" + s + "' (expected lc-<n>a<n>l, spp or icpp)");
}

}  // namespace mqf
