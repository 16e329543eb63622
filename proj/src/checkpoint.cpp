#include "mqf/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mqf/errors.hpp"

namespace mqf {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json matrix_json(const Matrix2D& m) { return json(m.to_vector()); }

json network_json(const DenseNetwork& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"in", l.input_dim()},
                      {"out", l.output_dim()},
                      {"activation", to_string(l.activation)},
                      {"weight", matrix_json(l.weight)},
                      {"bias", l.bias}});
  }
  return {{"layers", layers}};
}

json gradients_json(const NetworkGradients& g) {
  json out = json::array();
  for (const auto& l : g) out.push_back({{"weight", matrix_json(l.weight)}, {"bias", l.bias}});
  return out;
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw LoadError(std::string("checkpoint: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw LoadError(std::string("checkpoint: bad field '") + key + "': " + e.what());
  }
}

DenseNetwork network_from_json(const json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& lj : j.at("layers")) {
    const auto in = field<std::size_t>(lj, "in");
    const auto out = field<std::size_t>(lj, "out");
    auto weight = field<std::vector<double>>(lj, "weight");
    auto bias = field<std::vector<double>>(lj, "bias");
    if (weight.size() != in * out || bias.size() != out) throw LoadError("checkpoint: layer array length mismatch");
    DenseLayer layer;
    layer.weight = Matrix2D(out, in, std::move(weight));
    layer.bias = std::move(bias);
    try {
      layer.activation = parse_activation(field<std::string>(lj, "activation"));
    } catch (const DomainError& e) {
      throw LoadError(std::string("checkpoint: ") + e.what());
    }
    layers.push_back(std::move(layer));
  }
  try {
    return DenseNetwork(std::move(layers));
  } catch (const ShapeError& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
}

void assign_network(DenseNetwork& into, const json& j, const char* what) {
  DenseNetwork loaded = network_from_json(j);
  if (!into.same_shape(loaded)) throw LoadError(std::string("checkpoint: ") + what + " has unexpected dimensions");
  auto& dst = into.mutable_layers();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (dst[k].activation != loaded.layers()[k].activation)
      throw LoadError(std::string("checkpoint: ") + what + " activation mismatch");
    dst[k] = loaded.layers()[k];
  }
}

NetworkGradients gradients_from_json(const json& j, const NetworkGradients& like) {
  if (!j.is_array() || j.size() != like.size()) throw LoadError("checkpoint: optimizer moment layer count mismatch");
  NetworkGradients out;
  for (std::size_t k = 0; k < like.size(); ++k) {
    auto weight = field<std::vector<double>>(j[k], "weight");
    auto bias = field<std::vector<double>>(j[k], "bias");
    if (weight.size() != like[k].weight.size() || bias.size() != like[k].bias.size())
      throw LoadError("checkpoint: optimizer moment shape mismatch");
    out.push_back({Matrix2D(like[k].weight.rows(), like[k].weight.cols(), std::move(weight)), std::move(bias)});
  }
  return out;
}

json learner_config_json(const LearnerConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"mixer", to_string(c.mixer)},
          {"mixer_hidden_dim", c.mixer_hidden_dim},
          {"gamma", c.gamma},
          {"tau", c.tau},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"buffer_size", c.buffer_size},
          {"sample_size", c.sample_size},
          {"rank", c.rank},
          {"hidden", c.hidden},
          {"activation", to_string(c.activation)},
          {"grad_clip_norm", c.grad_clip_norm}};
}

LearnerConfig learner_config_from_json(const json& j) {
  LearnerConfig c;
  try {
    c.kind = parse_learner_kind(field<std::string>(j, "kind"));
    c.mixer = parse_mixer_kind(field<std::string>(j, "mixer"));
    c.activation = parse_activation(field<std::string>(j, "activation"));
  } catch (const DomainError& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
  c.mixer_hidden_dim = field<std::size_t>(j, "mixer_hidden_dim");
  c.gamma = field<double>(j, "gamma");
  c.tau = field<double>(j, "tau");
  c.learning_rate = field<double>(j, "learning_rate");
  c.batch_size = field<std::size_t>(j, "batch_size");
  c.buffer_size = field<std::size_t>(j, "buffer_size");
  c.sample_size = field<std::size_t>(j, "sample_size");
  c.rank = field<std::size_t>(j, "rank");
  c.hidden = field<std::vector<std::size_t>>(j, "hidden");
  c.grad_clip_norm = field<double>(j, "grad_clip_norm");
  return c;
}

json mixer_json(const Mixer& m) {
  if (m.kind() == MixerKind::sum) return {{"kind", "sum"}};
  return {{"kind", "monotonic"}, {"hyper_w", network_json(m.hyper_w())}, {"hyper_b", network_json(m.hyper_b())}};
}

void assign_mixer(Mixer& into, const json& j, const char* what) {
  if (field<std::string>(j, "kind") != to_string(into.kind()))
    throw LoadError(std::string("checkpoint: ") + what + " kind mismatch");
  if (into.kind() == MixerKind::sum) return;
  assign_network(into.mutable_hyper_w(), j.at("hyper_w"), what);
  assign_network(into.mutable_hyper_b(), j.at("hyper_b"), what);
}

}  // namespace

std::string checkpoint_to_string(const Learner& learner, const CheckpointMeta& meta) {
  json dims = json::array();
  for (const auto& d : learner.agent_dims()) dims.push_back({{"obs_dim", d.obs_dim}, {"action_dim", d.action_dim}});

  json agents = json::array();
  for (const auto& a : learner.agents()) {
    const AgentShape& s = a.shape();
    agents.push_back({{"obs_dim", s.obs_dim},
                      {"action_dim", s.action_dim},
                      {"rank", s.rank},
                      {"sample_size", s.sample_size},
                      {"action_low", s.action_low},
                      {"action_high", s.action_high},
                      {"prediction", network_json(a.prediction())},
                      {"target", network_json(a.target())}});
  }

  json optimizers = json::array();
  for (const auto& o : learner.optimizers()) {
    optimizers.push_back({{"step_count", o.step_count},
                          {"learning_rate", o.learning_rate},
                          {"beta1", o.beta1},
                          {"beta2", o.beta2},
                          {"epsilon", o.epsilon},
                          {"first_moment", gradients_json(o.first_moment)},
                          {"second_moment", gradients_json(o.second_moment)}});
  }

  json config = json::array();
  for (const auto& [k, v] : meta.config) config.push_back({k, v});

  json doc = {{"format", "mqf-checkpoint"},
              {"version", kFormatVersion},
              {"learner", learner_config_json(learner.config())},
              {"agent_dims", dims},
              {"agents", agents},
              {"optimizers", optimizers},
              {"gradient_updates", learner.gradient_updates()},
              {"scenario", meta.scenario},
              {"seed", meta.seed},
              {"total_steps", meta.total_steps},
              {"episodes", meta.episodes},
              {"config", config}};
  if (const auto* mqf = dynamic_cast<const MqfLearner*>(&learner)) {
    doc["mixer"] = {{"prediction", mixer_json(mqf->mixer_prediction())}, {"target", mixer_json(mqf->mixer_target())}};
  }
  return doc.dump(1);
}

LoadedCheckpoint checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  if (field<std::string>(doc, "format") != "mqf-checkpoint") throw LoadError("checkpoint: unrecognized format");
  if (field<int>(doc, "version") != kFormatVersion) throw LoadError("checkpoint: unsupported version");

  const LearnerConfig config = learner_config_from_json(doc.at("learner"));
  std::vector<AgentDims> dims;
  for (const auto& d : doc.at("agent_dims"))
    dims.push_back({field<std::size_t>(d, "obs_dim"), field<std::size_t>(d, "action_dim")});
  if (dims.empty()) throw LoadError("checkpoint: no agents");

  LoadedCheckpoint out;
  Rng scratch(0);
  try {
    out.learner = make_learner(config, dims, scratch);
  } catch (const std::exception& e) {
    throw LoadError(std::string("checkpoint: cannot rebuild learner: ") + e.what());
  }
  Learner& learner = *out.learner;

  const json& agents = doc.at("agents");
  if (agents.size() != learner.agents().size()) throw LoadError("checkpoint: agent count mismatch");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    QFunctionalAgent& a = learner.mutable_agents()[i];
    if (field<std::size_t>(agents[i], "obs_dim") != a.shape().obs_dim ||
        field<std::size_t>(agents[i], "action_dim") != a.shape().action_dim ||
        field<std::size_t>(agents[i], "rank") != a.shape().rank)
      throw LoadError("checkpoint: agent shape mismatch");
    assign_network(a.mutable_prediction(), agents[i].at("prediction"), "prediction network");
    assign_network(a.mutable_target(), agents[i].at("target"), "target network");
  }

  if (auto* mqf = dynamic_cast<MqfLearner*>(&learner)) {
    if (!doc.contains("mixer")) throw LoadError("checkpoint: missing mixer");
    assign_mixer(mqf->mutable_mixer_prediction(), doc["mixer"].at("prediction"), "mixer prediction");
    assign_mixer(mqf->mutable_mixer_target(), doc["mixer"].at("target"), "mixer target");
  }

  const json& opts = doc.at("optimizers");
  auto& states = learner.optimizers();
  if (opts.size() != states.size()) throw LoadError("checkpoint: optimizer count mismatch");
  for (std::size_t k = 0; k < states.size(); ++k) {
    AdamState& s = states[k];
    s.step_count = field<std::uint64_t>(opts[k], "step_count");
    s.learning_rate = field<double>(opts[k], "learning_rate");
    s.beta1 = field<double>(opts[k], "beta1");
    s.beta2 = field<double>(opts[k], "beta2");
    s.epsilon = field<double>(opts[k], "epsilon");
    s.first_moment = gradients_from_json(opts[k].at("first_moment"), s.first_moment);
    s.second_moment = gradients_from_json(opts[k].at("second_moment"), s.second_moment);
  }
  learner.set_gradient_updates(field<std::size_t>(doc, "gradient_updates"));

  out.meta.scenario = field<std::string>(doc, "scenario");
  out.meta.seed = field<std::uint64_t>(doc, "seed");
  out.meta.total_steps = field<std::size_t>(doc, "total_steps");
  out.meta.episodes = field<std::size_t>(doc, "episodes");
  for (const auto& kv : doc.at("config")) out.meta.config.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Learner& learner, const CheckpointMeta& meta) {
  const std::string text = checkpoint_to_string(learner, meta);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace mqf
