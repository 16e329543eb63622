#include "checks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "mqf/basis.hpp"
#include "mqf/envs.hpp"
#include "mqf/mixer.hpp"
#include "mqf/qfunctional.hpp"
#include "oracles.hpp"

namespace mqf::oracle {

namespace {

CheckResult fail(const std::string& what) { return {false, what}; }

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream s;
  s.precision(17);
  (s << ... << args);
  return s.str();
}

std::uint64_t ulp_distance(double a, double b) {
  if (a == b) return 0;
  auto key = [](double x) {
    const auto bits = std::bit_cast<std::int64_t>(x);
    return bits < 0 ? std::numeric_limits<std::int64_t>::min() - bits : bits;
  };
  const std::int64_t ka = key(a);
  const std::int64_t kb = key(b);
  return ka > kb ? static_cast<std::uint64_t>(ka) - static_cast<std::uint64_t>(kb)
                 : static_cast<std::uint64_t>(kb) - static_cast<std::uint64_t>(ka);
}

void randomize_biases(DenseNetwork& net, Rng& rng) {
  for (auto& l : net.mutable_layers())
    for (double& b : l.bias) b = rng.uniform(-0.5, 0.5);
}

}  // namespace

CheckResult check_basis_cardinality(std::size_t max_d, std::size_t max_r) {
  for (std::size_t d = 1; d <= max_d; ++d) {
    for (std::size_t r = 0; r <= max_r; ++r) {
      const MonomialBasis basis = enumerate_monomials(d, r);
      if (basis.size() != binomial(r + d, d)) return fail(cat("d=", d, " r=", r, ": size ", basis.size()));
      auto got = basis.exponents();
      auto want = brute_force_monomials(d, r);
      if (got.front() != std::vector<unsigned>(d, 0)) return fail(cat("d=", d, " r=", r, ": first term not constant"));
      for (std::size_t j = 1; j < got.size(); ++j) {
        unsigned a = 0, b = 0;
        for (unsigned e : got[j - 1]) a += e;
        for (unsigned e : got[j]) b += e;
        if (a > b) return fail(cat("d=", d, " r=", r, ": degrees not ascending"));
      }
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      if (got != want) return fail(cat("d=", d, " r=", r, ": exponent set differs from brute force"));
      if (!(enumerate_monomials(d, r) == basis)) return fail("enumeration not deterministic");
    }
  }
  if (enumerate_monomials(2, 2).size() != 6) return fail("d=2 r=2 does not give 6 coefficients");
  return {true, cat("d<=", max_d, " r<=", max_r)};
}

CheckResult check_phi(std::uint64_t seed, std::size_t cases) {
  Rng rng(seed);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t d = 1 + rng.index(4);
    const std::size_t r = rng.index(4);
    const std::size_t k = 1 + rng.index(300);
    const MonomialBasis basis(d, r);
    const Matrix2D actions = sample_uniform_actions(k, d, -1.0, 1.0, rng);
    const Matrix2D f = phi(basis, actions);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < basis.size(); ++j)
        if (f(j, i) != monomial(basis.exponents()[j], row_vector(actions, i)))
          return fail(cat("case ", c, ": entry (", j, ",", i, ") differs"));
  }
  return {true, cat(cases, " random batches")};
}

CheckResult check_network_gradients(std::uint64_t seed, std::size_t fixtures, double tolerance) {
  double worst = 0.0;
  for (std::size_t f = 0; f < fixtures; ++f) {
    Rng rng(split_seed(seed, f));
    const std::size_t in = 2 + rng.index(6);
    const std::size_t out = 1 + rng.index(6);
    DenseNetwork net = random_network(in, {16, 16}, out, f % 2 ? Activation::relu : Activation::tanh, rng);
    if (f % 2) {
      // keep relu pre-activations away from the kink
      for (auto& l : net.mutable_layers())
        for (double& b : l.bias) b = b > 0 ? b + 0.1 : b - 0.1;
    }
    Matrix2D x(4, in);
    for (double& v : x.flat()) v = rng.uniform(-1.0, 1.0);
    Matrix2D upstream(4, out);
    for (double& v : upstream.flat()) v = rng.uniform(-1.0, 1.0);
    ForwardTape tape;
    net.forward(x, tape);
    const NetworkGradients g = net.backward(tape, upstream);
    auto loss = [&] {
      double s = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto y = scalar_forward(net, row_vector(x, r));
        for (std::size_t c = 0; c < out; ++c) s += upstream(r, c) * y[c];
      }
      return s;
    };
    worst = std::max(worst, gradient_check({&net}, {g}, loss));
  }
  if (worst > tolerance) return fail(cat("worst relative error ", worst));
  return {true, cat(fixtures, " fixtures, worst relative error ", worst)};
}

CheckResult check_td_gradients(std::uint64_t seed, std::size_t fixtures, LearnerKind kind, MixerKind mixer,
                               double tolerance) {
  double worst = 0.0;
  for (std::size_t f = 0; f < fixtures; ++f) {
    Rng rng(split_seed(seed, f));
    const std::size_t n = 2 + f % 2;
    std::vector<AgentDims> dims;
    for (std::size_t i = 0; i < n; ++i) dims.push_back({2 + rng.index(4), kind == LearnerKind::cqf ? 1 : 1 + rng.index(2)});
    LearnerConfig c;
    c.kind = kind;
    c.mixer = mixer;
    c.hidden = {16, 16};
    c.sample_size = 32;
    c.batch_size = 8;
    c.buffer_size = 8;
    c.mixer_hidden_dim = 8;
    c.gamma = 0.9;
    auto learner = make_learner(c, dims, rng);
    for (DenseNetwork* net : learner->trainable_networks()) randomize_biases(*net, rng);
    const TransitionBatch batch = random_batch(dims, c.batch_size, rng);
    const Matrix2D targets = learner->td_target(batch, rng);
    const LossAndGradients lg = learner->loss_and_gradients(batch, targets);
    const double reference = td_loss(*learner, batch, targets);
    if (relative_error(lg.loss, reference, 1e-12) > 1e-9)
      return fail(cat("fixture ", f, ": loss ", lg.loss, " vs oracle ", reference));
    worst = std::max(worst, gradient_check(learner->trainable_networks(), lg.grads,
                                           [&] { return td_loss(*learner, batch, targets); }));
  }
  if (worst > tolerance) return fail(cat("worst relative error ", worst));
  return {true, cat(fixtures, " fixtures, worst relative error ", worst)};
}

CheckResult check_mixer(std::uint64_t seed, std::size_t draws) {
  Rng rng(seed);
  for (std::size_t n = 1; n <= 5; ++n) {
    const Mixer sum = Mixer::sum(n);
    Matrix2D qs(draws, n);
    for (double& v : qs.flat()) v = rng.uniform(-100.0, 100.0);
    const auto mixed = sum.mix(qs, Matrix2D(draws, 0));
    for (std::size_t j = 0; j < draws; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += qs(j, i);
      if (mixed[j] != s) return fail(cat("sum mixer row ", j, " differs from summation"));
    }
    const auto g = sum.mix_gradient(qs, Matrix2D(draws, 0), std::vector<double>(draws, 1.0));
    for (double v : g.agent_qs.flat())
      if (v != 1.0) return fail("sum mixer gradient is not exactly one");
  }

  const std::size_t n = 3;
  const std::size_t joint = 7;
  Mixer mono = Mixer::monotonic(n, joint, 32, rng);
  Matrix2D obs(draws, joint), qs(draws, n);
  for (double& v : obs.flat()) v = rng.uniform(-2.0, 2.0);
  for (double& v : qs.flat()) v = rng.uniform(-10.0, 10.0);
  const auto base = mono.mix(qs, obs);
  const auto g = mono.mix_gradient(qs, obs, std::vector<double>(draws, 1.0));
  for (double v : g.agent_qs.flat())
    if (!(v >= 0.0)) return fail("monotonic mixer produced a negative agent gradient");
  Matrix2D bumped = qs;
  for (std::size_t j = 0; j < draws; ++j) bumped(j, j % n) += rng.uniform(0.0, 1.0);
  const auto after = mono.mix(bumped, obs);
  for (std::size_t j = 0; j < draws; ++j)
    if (after[j] < base[j]) return fail(cat("q_tot decreased at draw ", j));

  // parameter gradients of sum_j u_j q_tot_j
  const std::size_t b = 6;
  Matrix2D so(b, joint), sq(b, n);
  for (double& v : so.flat()) v = rng.uniform(-1.0, 1.0);
  for (double& v : sq.flat()) v = rng.uniform(-1.0, 1.0);
  std::vector<double> up(b);
  for (double& v : up) v = rng.uniform(-1.0, 1.0);
  const auto pg = mono.mix_gradient(sq, so, up);
  auto loss = [&] {
    double s = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      const auto row = row_vector(so, j);
      const auto w = scalar_forward(mono.hyper_w(), row);
      double q = scalar_forward(mono.hyper_b(), row)[0];
      for (std::size_t i = 0; i < n; ++i) q += std::fabs(w[i]) * sq(j, i);
      s += up[j] * q;
    }
    return s;
  };
  const double worst =
      gradient_check({&mono.mutable_hyper_w(), &mono.mutable_hyper_b()}, {pg.hyper_w, pg.hyper_b}, loss);
  if (worst > 1e-4) return fail(cat("mixer parameter gradient relative error ", worst));
  return {true, cat(draws, " draws, parameter gradient relative error ", worst)};
}

CheckResult check_selection(std::uint64_t seed, std::size_t cases) {
  std::size_t ties = 0;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng(split_seed(seed, c));
    AgentShape shape;
    shape.obs_dim = 3;
    shape.action_dim = 1 + rng.index(3);
    shape.sample_size = 1 + rng.index(64);
    shape.hidden = {8};
    QFunctionalAgent agent(shape, rng);
    std::vector<double> obs(shape.obs_dim);
    for (double& v : obs) v = rng.uniform(-1.0, 1.0);
    Matrix2D actions = agent.sample_actions(rng);
    const std::size_t k = actions.rows();
    std::size_t expect_index = k;  // set when the construction forces the answer
    switch (c % 4) {
      case 1: {  // constant Q-function
        auto& out = agent.mutable_prediction().mutable_layers().back();
        out.weight.fill(0.0);
        std::fill(out.bias.begin(), out.bias.end(), 0.0);
        out.bias[0] = rng.uniform(-1.0, 1.0);
        expect_index = 0;
        break;
      }
      case 2:  // every sample duplicated
        for (std::size_t i = 1; i < k; i += 2)
          for (std::size_t d = 0; d < shape.action_dim; ++d) actions(i, d) = actions(i - 1, d);
        break;
      case 3:  // coarse grid, many identical samples
        for (double& v : actions.flat()) v = std::round(v);
        break;
      default: break;
    }
    const std::vector<double> q = agent.evaluate_actions(obs, actions, NetworkRole::prediction);
    const std::size_t want = argmax(q);
    if (expect_index < k && want != expect_index) return fail(cat("case ", c, ": constant Q did not favor index 0"));
    if (std::count(q.begin(), q.end(), q[want]) > 1) ++ties;
    const GreedyChoice got = agent.select_best(obs, actions);
    if (got.index != want || got.q != q[want] || got.action != row_vector(actions, want))
      return fail(cat("case ", c, ": selected ", got.index, " (q ", got.q, "), re-scan says ", want, " (q ", q[want],
                      ")"));
    for (std::size_t i = 0; i < k; ++i) {
      const double o = q_value(agent, NetworkRole::prediction, obs, row_vector(actions, i));
      if (relative_error(q[i], o, 1e-9) > 1e-9) return fail(cat("case ", c, ": Q[", i, "] differs from oracle"));
    }
    Rng draw(rng.next_u64());
    Rng replay = draw;
    const GreedyChoice g = agent.greedy_action(obs, draw);
    const Matrix2D same = agent.sample_actions(replay);
    const std::size_t want2 = argmax(agent.evaluate_actions(obs, same, NetworkRole::prediction));
    if (g.index != want2 || g.action != row_vector(same, want2))
      return fail(cat("case ", c, ": greedy_action disagrees with re-scan"));
  }
  return {true, cat(cases, " cases, ", ties, " with tied maxima")};
}

CheckResult check_soft_update(std::uint64_t seed, double tau) {
  Rng rng(seed);
  const DenseNetwork pred = random_network(5, {32, 32}, 6, Activation::tanh, rng);
  DenseNetwork target = random_network(5, {32, 32}, 6, Activation::tanh, rng);
  const DenseNetwork before = target;
  soft_update(target, pred, tau);
  std::uint64_t worst = 0;
  for (std::size_t k = 0; k < pred.layers().size(); ++k) {
    const auto& p = pred.layers()[k];
    const auto& t0 = before.layers()[k];
    const auto& t1 = target.layers()[k];
    for (std::size_t i = 0; i < p.weight.size(); ++i)
      worst = std::max(worst, ulp_distance(t1.weight.flat()[i], tau * p.weight.flat()[i] +
                                                                      (1.0 - tau) * t0.weight.flat()[i]));
    for (std::size_t i = 0; i < p.bias.size(); ++i)
      worst = std::max(worst, ulp_distance(t1.bias[i], tau * p.bias[i] + (1.0 - tau) * t0.bias[i]));
  }
  if (worst > 1) return fail(cat("tau=", tau, ": ", worst, " ulp"));
  DenseNetwork copy = before;
  soft_update(copy, pred, 1.0);
  if (!(copy == pred)) return fail("tau=1 is not an exact copy");
  return {true, cat("tau=", tau, ": max ", worst, " ulp; tau=1 exact copy")};
}

CheckResult check_prey(std::uint64_t seed, std::size_t states) {
  Rng rng(seed);
  const EnvParams params;
  PredatorPreyScenario scenario(PredatorPreyScenario::Variant::standard, params);
  std::size_t infeasible = 0;
  for (std::size_t s = 0; s < states; ++s) {
    scenario.reset(rng);
    ScenarioWorld& w = scenario.mutable_world();
    auto random_velocity = [&](double max_speed) {
      const double angle = rng.uniform(0.0, 6.283185307179586);
      const double speed = rng.uniform(0.0, max_speed);
      return Vec2{speed * std::cos(angle), speed * std::sin(angle)};
    };
    for (auto& a : w.agents) {
      a.pos = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      a.vel = random_velocity(a.max_speed);
    }
    w.prey->pos = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    w.prey->vel = random_velocity(w.prey->max_speed);
    const PreyDecision d = prey_policy(w, params);
    const auto scan = prey_rescan(w, params);
    const bool any_feasible = std::any_of(scan.begin(), scan.end(), [](const PreyCandidate& c) { return c.feasible; });
    std::size_t best = scan.size();
    for (std::size_t j = 0; j < scan.size(); ++j) {
      if (any_feasible && !scan[j].feasible) continue;
      if (best == scan.size() || scan[j].nearest > scan[best].nearest) best = j;
    }
    infeasible += scan.size() - static_cast<std::size_t>(std::count_if(
                                    scan.begin(), scan.end(), [](const PreyCandidate& c) { return c.feasible; }));
    if (d.candidate != best)
      return fail(cat("state ", s, ": chose candidate ", d.candidate, " (", scan[d.candidate].nearest,
                      "), re-scan best ", best, " (", scan[best].nearest, ")"));
    if (d.nearest_distance != scan[best].nearest) return fail(cat("state ", s, ": reported distance differs"));
  }
  return {true, cat(states, " states, ", infeasible, " infeasible candidates discarded")};
}

CheckResult check_single_agent_degeneracy(std::uint64_t seed, std::size_t steps) {
  auto scenario = make_scenario("lc-1a1l");
  const auto dims = scenario->agent_dims();
  LearnerConfig mc;
  mc.kind = LearnerKind::mqf;
  mc.mixer = MixerKind::sum;
  LearnerConfig ic = mc;
  ic.kind = LearnerKind::iqf;
  Rng init_a(split_seed(seed, 4)), init_b(split_seed(seed, 4));
  auto mqf = make_learner(mc, dims, init_a);
  auto iqf = make_learner(ic, dims, init_b);

  Rng env_rng(split_seed(seed, 0));
  Rng act_rng(split_seed(seed, 1));
  JointVector obs = scenario->reset(env_rng);
  while (mqf->buffer().size() < 2 * mc.batch_size) {
    JointVector a(1, {act_rng.uniform(-1.0, 1.0), act_rng.uniform(-1.0, 1.0)});
    StepResult r = scenario->step(a);
    const Transition t{obs, a, r.rewards, r.observations, r.done};
    mqf->observe(t);
    iqf->observe(t);
    obs = r.done ? scenario->reset(env_rng) : r.observations;
  }

  Rng buf_a(split_seed(seed, 3)), buf_b(split_seed(seed, 3));
  Rng smp_a(split_seed(seed, 1)), smp_b(split_seed(seed, 1));
  double last = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto la = mqf->train_step(buf_a, smp_a);
    const auto lb = iqf->train_step(buf_b, smp_b);
    if (!la || !lb) return fail("buffer not ready");
    if (*la != *lb) return fail(cat("step ", t, ": loss ", *la, " vs ", *lb));
    mqf->update_targets();
    iqf->update_targets();
    const auto& a = mqf->agents()[0];
    const auto& b = iqf->agents()[0];
    if (!(a.prediction() == b.prediction()) || !(a.target() == b.target()))
      return fail(cat("step ", t, ": parameters diverged"));
    last = *la;
  }
  return {true, cat(steps, " steps identical, final loss ", last)};
}

}  // namespace mqf::oracle
