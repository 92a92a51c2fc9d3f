/*
 * Copyright 2026 The SLADV Bench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sladv/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "sladv/errors.hpp"

namespace sladv::experiment {

using json = nlohmann::json;
using nn::LayerSpec;

namespace {

// ------------------------------------------------------------ layer lists

json layer_to_json(const LayerSpec& l) {
  json j{{"kind", std::string(nn::kind_name(l.kind))}};
  switch (l.kind) {
    case nn::LayerKind::dense:
      j["in"] = l.in;
      j["out"] = l.out;
      break;
    case nn::LayerKind::conv2d:
      j["in"] = l.in;
      j["out"] = l.out;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      j["padding"] = l.padding;
      break;
    case nn::LayerKind::avgpool2d:
      j["window"] = l.kernel;
      j["stride"] = l.stride;
      break;
    case nn::LayerKind::residual_block:
      j["channels"] = l.in;
      j["kernel"] = l.kernel;
      break;
    case nn::LayerKind::relu:
    case nn::LayerKind::flatten:
      break;
  }
  return j;
}

json layers_to_json(const std::vector<LayerSpec>& layers) {
  json arr = json::array();
  for (const auto& l : layers) arr.push_back(layer_to_json(l));
  return arr;
}

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  std::string at(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  const json* find(std::string_view key) {
    const std::string k(key);
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(std::string_view key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError("expected a boolean", at(key));
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer() || (std::is_unsigned_v<T> && v->get<long long>() < 0)) {
          throw ConfigError("expected a non-negative integer", at(key));
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError("expected a number", at(key));
      } else {
        if (!v->is_string()) throw ConfigError("expected a string", at(key));
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(e.what(), at(key));
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError("unknown key", at(it.key()));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::size_t read_size(ObjectReader& r, std::string_view key, std::size_t fallback) {
  std::size_t v = fallback;
  r.read(key, v);
  return v;
}

LayerSpec layer_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  std::string kind_text;
  r.read("kind", kind_text);
  if (kind_text.empty()) throw ConfigError("layer kind is required", r.at("kind"));
  nn::LayerKind kind;
  try {
    kind = nn::kind_from_name(kind_text);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), r.at("kind"));
  }
  LayerSpec l;
  switch (kind) {
    case nn::LayerKind::dense:
      l = LayerSpec::dense(read_size(r, "in", 0), read_size(r, "out", 0));
      break;
    case nn::LayerKind::conv2d: {
      const std::size_t in = read_size(r, "in", 0), out = read_size(r, "out", 0), k = read_size(r, "kernel", 0);
      l = LayerSpec::conv2d(in, out, k, read_size(r, "stride", 1), read_size(r, "padding", 0));
      break;
    }
    case nn::LayerKind::relu:
      l = LayerSpec::relu();
      break;
    case nn::LayerKind::avgpool2d: {
      const std::size_t window = read_size(r, "window", 0);
      l = LayerSpec::avgpool2d(window, read_size(r, "stride", window));
      break;
    }
    case nn::LayerKind::flatten:
      l = LayerSpec::flatten();
      break;
    case nn::LayerKind::residual_block: {
      const std::size_t ch = read_size(r, "channels", 0);
      l = LayerSpec::residual_block(ch, read_size(r, "kernel", 3));
      break;
    }
  }
  r.finish();
  return l;
}

std::vector<LayerSpec> layers_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError("expected an array of layers", path);
  std::vector<LayerSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(layer_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::size_t> sizes_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError("expected an array of integers", path);
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("expected non-negative integers", path);
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

std::string_view scheme_name(data::PartitionScheme s) {
  switch (s) {
    case data::PartitionScheme::iid:
      return "iid";
    case data::PartitionScheme::label_shards:
      return "label-shards";
    case data::PartitionScheme::dirichlet:
      return "dirichlet";
  }
  return "iid";
}

data::PartitionScheme scheme_from_name(const std::string& s, const std::string& path) {
  if (s == "iid") return data::PartitionScheme::iid;
  if (s == "label-shards") return data::PartitionScheme::label_shards;
  if (s == "dirichlet") return data::PartitionScheme::dirichlet;
  throw ConfigError("unknown partition scheme '" + s + "'", path);
}

std::string_view source_name(data::AttackerSource s) {
  return s == data::AttackerSource::same_distribution ? "same" : "shifted";
}

data::AttackerSource source_from_name(const std::string& s, const std::string& path) {
  if (s == "same") return data::AttackerSource::same_distribution;
  if (s == "shifted") return data::AttackerSource::shifted_distribution;
  throw ConfigError("unknown attacker source '" + s + "'", path);
}

template <typename F>
auto with_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    if (!e.field().empty()) throw;
    throw ConfigError(e.what(), field);
  }
}

// The desk target: a small residual CNN on 1x12x12 inputs.
std::vector<LayerSpec> desk_layers() {
  // No bare ReLUs before the downsampling conv, so cuts after layers 1..3 all
  // give o_1 of shape [4,12,12] and one shadow fits every input depth.
  return {
      LayerSpec::conv2d(1, 4, 3, 1, 1), LayerSpec::residual_block(4), LayerSpec::residual_block(4),
      LayerSpec::conv2d(4, 8, 3, 2, 1), LayerSpec::residual_block(8), LayerSpec::residual_block(8),
      LayerSpec::relu(),                LayerSpec::flatten(),         LayerSpec::dense(288, 10),
  };
}

}  // namespace

// ------------------------------------------------------------------ presets

std::vector<std::string> preset_names() { return {"paper-desk"}; }

RunConfig preset(std::string_view name) {
  if (name != "paper-desk") throw ConfigError("unknown preset '" + std::string(name) + "'", "preset");
  RunConfig c;
  c.task.source = "synth";
  c.task.synth = data::SynthSpec{};
  c.task.test_samples_per_class = 100;
  c.model.input_shape = {1, c.task.synth.size, c.task.synth.size};
  c.model.layers = desk_layers();
  c.model.split = {2, c.model.layers.size() - 3, 1};
  c.training.iterations = 3000;
  c.training.optimizer = {0.01, 0.0};
  c.training.batch_size = 32;
  c.training.partition.n_clients = 10;
  c.training.partition.scheme = data::PartitionScheme::iid;
  c.training.partition.client_fraction = 0.8;
  c.training.partition.attacker_source = data::AttackerSource::shifted_distribution;
  c.training.partition.attacker_pool_size = 2048;
  c.training.partition.shifted_spec.generator = data::Generator::bars;
  c.shadow = ShadowSettings{};
  c.attack = attack::AttackConfig{};
  c.seed = 1;
  return c;
}

RunConfig with_input_depth(RunConfig config, std::size_t n_input) {
  const std::size_t total = config.model.layers.size();
  const std::size_t n_output = config.model.split.n_output;
  if (n_input == 0 || n_input + n_output >= total) {
    throw ConfigError("input depth " + std::to_string(n_input) + " leaves no server layers", "model.split");
  }
  config.model.split = {n_input, total - n_input - n_output, n_output};
  return config;
}

// --------------------------------------------------------------- validation

nn::Network build_network(const RunConfig& config) {
  return with_field("model.layers", [&] { return nn::Network(config.model.input_shape, config.model.layers); });
}

void RunConfig::validate() const {
  // task
  if (task.source != "synth" && task.source != "idx") {
    throw ConfigError("source must be 'synth' or 'idx'", "task.source");
  }
  if (task.source == "synth") {
    if (task.synth.classes < 2) throw ConfigError("at least two classes are required", "task.synth.classes");
    if (task.synth.size < 6) throw ConfigError("image side must be at least 6", "task.synth.size");
    if (task.synth.samples_per_class == 0) {
      throw ConfigError("samples_per_class must be positive", "task.synth.samples_per_class");
    }
    if (!(task.synth.noise >= 0.0)) throw ConfigError("noise must be non-negative", "task.synth.noise");
    if (task.test_samples_per_class == 0) {
      throw ConfigError("test_samples_per_class must be positive", "task.test_samples_per_class");
    }
    const nn::Shape expected{1, task.synth.size, task.synth.size};
    if (model.input_shape != expected) {
      throw ConfigError("synthetic images are " + nn::shape_string(expected) + " but the model expects " +
                            nn::shape_string(model.input_shape),
                        "model.input_shape");
    }
  } else {
    if (task.train_images.empty()) throw ConfigError("path required", "task.idx.train_images");
    if (task.train_labels.empty()) throw ConfigError("path required", "task.idx.train_labels");
    if (task.test_images.empty()) throw ConfigError("path required", "task.idx.test_images");
    if (task.test_labels.empty()) throw ConfigError("path required", "task.idx.test_labels");
  }

  // model
  if (model.input_shape.size() != 3) throw ConfigError("input shape must be [C,H,W]", "model.input_shape");
  if (model.layers.empty()) throw ConfigError("at least one layer is required", "model.layers");
  const nn::Network net = build_network(*this);
  if (model.split.n_input == 0 || model.split.n_server == 0 || model.split.n_output == 0) {
    throw ConfigError("every segment needs at least one layer", "model.split");
  }
  if (model.split.total() != net.layer_count()) {
    throw ConfigError("split counts sum to " + std::to_string(model.split.total()) + " but the model has " +
                          std::to_string(net.layer_count()) + " layers",
                      "model.split");
  }

  // training
  if (!(training.optimizer.learning_rate > 0.0)) {
    throw ConfigError("learning rate must be positive", "training.learning_rate");
  }
  if (!(training.optimizer.momentum >= 0.0 && training.optimizer.momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)", "training.momentum");
  }
  if (training.batch_size == 0) throw ConfigError("batch size must be positive", "training.batch_size");
  const auto& p = training.partition;
  if (p.n_clients == 0) throw ConfigError("at least one client is required", "training.partition.n_clients");
  if (!(p.client_fraction > 0.0 && p.client_fraction <= 1.0)) {
    throw ConfigError("client_fraction must lie in (0, 1]", "training.partition.client_fraction");
  }
  if (p.scheme == data::PartitionScheme::label_shards && p.labels_per_client == 0) {
    throw ConfigError("labels_per_client must be positive", "training.partition.labels_per_client");
  }
  if (p.scheme == data::PartitionScheme::dirichlet && !(p.concentration > 0.0)) {
    throw ConfigError("concentration must be positive", "training.partition.concentration");
  }

  // shadow
  if (shadow.enabled) {
    if (!(shadow.alpha >= 0.0)) throw ConfigError("alpha must be non-negative", "shadow.alpha");
    if (!(shadow.learning_rate > 0.0)) throw ConfigError("learning rate must be positive", "shadow.learning_rate");
    if (p.attacker_pool_size == 0) throw ConfigError("the attacker pool must not be empty", "shadow.attacker.pool_size");
    if (p.attacker_source == data::AttackerSource::shifted_distribution && model.input_shape[0] != 1) {
      throw ConfigError("shifted attacker pools are single-channel", "shadow.attacker.source");
    }
    const nn::Shape o1 = net.shape_at(model.split.n_input);
    with_field("shadow.layers", [&] {
      auto layers = shadow.layers.empty() ? shadow::default_shadow_layers(model.input_shape, o1) : shadow.layers;
      const nn::Network s(model.input_shape, std::move(layers));
      if (s.output_shape() != o1) {
        throw ConfigError("shadow output " + nn::shape_string(s.output_shape()) + " does not match o_1 " +
                          nn::shape_string(o1));
      }
      return 0;
    });
  }

  attack.validate();
  if (probes.alignment_samples == 0) {
    throw ConfigError("alignment_samples must be positive", "probes.alignment_samples");
  }
}

// ---------------------------------------------------------------- JSON I/O

std::string config_to_json(const RunConfig& c) {
  const auto& p = c.training.partition;
  json j;
  j["seed"] = c.seed;
  j["task"] = {{"source", c.task.source},
               {"synth",
                {{"classes", c.task.synth.classes},
                 {"size", c.task.synth.size},
                 {"samples_per_class", c.task.synth.samples_per_class},
                 {"generator", std::string(data::generator_name(c.task.synth.generator))},
                 {"noise", c.task.synth.noise}}},
               {"test_samples_per_class", c.task.test_samples_per_class},
               {"idx",
                {{"train_images", c.task.train_images},
                 {"train_labels", c.task.train_labels},
                 {"test_images", c.task.test_images},
                 {"test_labels", c.task.test_labels}}}};
  j["model"] = {{"input_shape", c.model.input_shape},
                {"layers", layers_to_json(c.model.layers)},
                {"split", {c.model.split.n_input, c.model.split.n_server, c.model.split.n_output}}};
  j["training"] = {{"iterations", c.training.iterations},
                   {"learning_rate", c.training.optimizer.learning_rate},
                   {"momentum", c.training.optimizer.momentum},
                   {"batch_size", c.training.batch_size},
                   {"partition",
                    {{"n_clients", p.n_clients},
                     {"scheme", std::string(scheme_name(p.scheme))},
                     {"labels_per_client", p.labels_per_client},
                     {"concentration", p.concentration},
                     {"client_fraction", p.client_fraction}}}};
  j["shadow"] = {{"enabled", c.shadow.enabled},
                 {"alpha", c.shadow.alpha},
                 {"learning_rate", c.shadow.learning_rate},
                 {"layers", layers_to_json(c.shadow.layers)},
                 {"attacker",
                  {{"source", std::string(source_name(p.attacker_source))},
                   {"pool_size", p.attacker_pool_size},
                   {"generator", std::string(data::generator_name(p.shifted_spec.generator))}}}};
  j["attack"] = {{"epsilon", c.attack.epsilon},
                 {"beta", c.attack.beta},
                 {"iterations", c.attack.iterations},
                 {"input_range", {c.attack.lo, c.attack.hi}},
                 {"step", std::string(attack::step_rule_name(c.attack.step))},
                 {"gradient", std::string(attack::cosine_gradient_name(c.attack.gradient))}};
  j["probes"] = {{"output_distance", c.probes.output_distance},
                 {"alignment", c.probes.alignment},
                 {"loss_sign", c.probes.loss_sign},
                 {"transfer", c.probes.transfer},
                 {"alignment_samples", c.probes.alignment_samples}};
  return j.dump(2);
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "<root>");
  }
  ObjectReader r(root, "");
  std::string preset_name = "paper-desk";
  r.read("preset", preset_name);
  RunConfig c = preset(preset_name);
  r.read("seed", c.seed);

  if (const json* t = r.find("task")) {
    ObjectReader tr(*t, "task");
    tr.read("source", c.task.source);
    tr.read("test_samples_per_class", c.task.test_samples_per_class);
    if (const json* s = tr.find("synth")) {
      ObjectReader sr(*s, "task.synth");
      sr.read("classes", c.task.synth.classes);
      sr.read("size", c.task.synth.size);
      sr.read("samples_per_class", c.task.synth.samples_per_class);
      sr.read("noise", c.task.synth.noise);
      std::string gen(data::generator_name(c.task.synth.generator));
      sr.read("generator", gen);
      c.task.synth.generator = with_field("task.synth.generator", [&] { return data::generator_from_name(gen); });
      sr.finish();
      // Keep the model input in step with the image side unless the model
      // section says otherwise.
      c.model.input_shape = {1, c.task.synth.size, c.task.synth.size};
    }
    if (const json* i = tr.find("idx")) {
      ObjectReader ir(*i, "task.idx");
      ir.read("train_images", c.task.train_images);
      ir.read("train_labels", c.task.train_labels);
      ir.read("test_images", c.task.test_images);
      ir.read("test_labels", c.task.test_labels);
      ir.finish();
    }
    tr.finish();
  }

  if (const json* m = r.find("model")) {
    ObjectReader mr(*m, "model");
    if (const json* s = mr.find("input_shape")) c.model.input_shape = sizes_from_json(*s, "model.input_shape");
    if (const json* l = mr.find("layers")) c.model.layers = layers_from_json(*l, "model.layers");
    if (const json* s = mr.find("split")) {
      const auto v = sizes_from_json(*s, "model.split");
      if (v.size() != 3) throw ConfigError("split needs three counts", "model.split");
      c.model.split = {v[0], v[1], v[2]};
    }
    mr.finish();
  }

  if (const json* t = r.find("training")) {
    ObjectReader tr(*t, "training");
    tr.read("iterations", c.training.iterations);
    tr.read("learning_rate", c.training.optimizer.learning_rate);
    tr.read("momentum", c.training.optimizer.momentum);
    tr.read("batch_size", c.training.batch_size);
    if (const json* p = tr.find("partition")) {
      ObjectReader pr(*p, "training.partition");
      auto& plan = c.training.partition;
      pr.read("n_clients", plan.n_clients);
      std::string scheme(scheme_name(plan.scheme));
      pr.read("scheme", scheme);
      plan.scheme = scheme_from_name(scheme, "training.partition.scheme");
      pr.read("labels_per_client", plan.labels_per_client);
      pr.read("concentration", plan.concentration);
      pr.read("client_fraction", plan.client_fraction);
      pr.finish();
    }
    tr.finish();
  }

  if (const json* s = r.find("shadow")) {
    ObjectReader sr(*s, "shadow");
    sr.read("enabled", c.shadow.enabled);
    sr.read("alpha", c.shadow.alpha);
    sr.read("learning_rate", c.shadow.learning_rate);
    if (const json* l = sr.find("layers")) c.shadow.layers = layers_from_json(*l, "shadow.layers");
    if (const json* a = sr.find("attacker")) {
      ObjectReader ar(*a, "shadow.attacker");
      auto& plan = c.training.partition;
      std::string source(source_name(plan.attacker_source));
      ar.read("source", source);
      plan.attacker_source = source_from_name(source, "shadow.attacker.source");
      ar.read("pool_size", plan.attacker_pool_size);
      std::string gen(data::generator_name(plan.shifted_spec.generator));
      ar.read("generator", gen);
      plan.shifted_spec.generator =
          with_field("shadow.attacker.generator", [&] { return data::generator_from_name(gen); });
      ar.finish();
    }
    sr.finish();
  }

  if (const json* a = r.find("attack")) {
    ObjectReader ar(*a, "attack");
    ar.read("epsilon", c.attack.epsilon);
    ar.read("beta", c.attack.beta);
    ar.read("iterations", c.attack.iterations);
    if (const json* range = ar.find("input_range")) {
      if (!range->is_array() || range->size() != 2 || !(*range)[0].is_number() || !(*range)[1].is_number()) {
        throw ConfigError("expected [lo, hi]", "attack.input_range");
      }
      c.attack.lo = (*range)[0].get<double>();
      c.attack.hi = (*range)[1].get<double>();
    }
    std::string step(attack::step_rule_name(c.attack.step));
    ar.read("step", step);
    c.attack.step = with_field("attack.step", [&] { return attack::step_rule_from_name(step); });
    std::string grad(attack::cosine_gradient_name(c.attack.gradient));
    ar.read("gradient", grad);
    c.attack.gradient = with_field("attack.gradient", [&] { return attack::cosine_gradient_from_name(grad); });
    ar.finish();
  }

  if (const json* p = r.find("probes")) {
    ObjectReader pr(*p, "probes");
    pr.read("output_distance", c.probes.output_distance);
    pr.read("alignment", c.probes.alignment);
    pr.read("loss_sign", c.probes.loss_sign);
    pr.read("transfer", c.probes.transfer);
    pr.read("alignment_samples", c.probes.alignment_samples);
    pr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

// -------------------------------------------------------------------- runs

std::uint64_t stream_seed(const RunConfig& config, Stream stream) {
  return Rng::derive(config.seed, static_cast<std::uint64_t>(stream));
}

Task build_task(const RunConfig& config) {
  Task task;
  if (config.task.source == "synth") {
    task.train = data::synth_task(config.task.synth, stream_seed(config, Stream::train_data));
    data::SynthSpec test_spec = config.task.synth;
    test_spec.samples_per_class = config.task.test_samples_per_class;
    task.test = data::synth_task(test_spec, stream_seed(config, Stream::test_data));
  } else {
    task.train = data::load_idx(config.task.train_images, config.task.train_labels);
    task.test = data::load_idx(config.task.test_images, config.task.test_labels);
  }
  if (task.train.image_shape() != config.model.input_shape) {
    throw ConfigError("training images are " + nn::shape_string(task.train.image_shape()) +
                          " but the model expects " + nn::shape_string(config.model.input_shape),
                      "model.input_shape");
  }
  data::PartitionPlan plan = config.training.partition;
  plan.seed = stream_seed(config, Stream::partition);
  plan.shifted_spec.size = config.model.input_shape[1];
  plan.shifted_spec.classes = std::max<std::size_t>(2, task.train.class_count);
  if (!config.shadow.enabled) plan.attacker_pool_size = 0;
  task.partition = data::partition(task.train, plan);
  return task;
}

const std::vector<double>& TrainedRun::sim_history() const {
  static const std::vector<double> empty;
  return shadow ? shadow->sim_history : empty;
}

TrainedRun train(const RunConfig& config, const Task& task, split::Transport* transport) {
  const auto start = std::chrono::steady_clock::now();
  nn::Network net = build_network(config);
  Rng init(stream_seed(config, Stream::init));
  nn::initialize(net, init);
  TrainedRun run{split::partition(std::move(net), config.model.split, config.training.optimizer),
                 std::nullopt, {}, 0.0, std::nullopt};
  const split::TrainSchedule schedule{config.training.iterations, config.training.batch_size,
                                      stream_seed(config, Stream::schedule)};
  if (config.shadow.enabled) {
    shadow::ShadowConfig sc{config.shadow.alpha, config.shadow.layers, config.shadow.learning_rate,
                            task.partition.attacker_pool};
    run.shadow = shadow::ShadowState::create(sc, config.model.input_shape, run.model.input.net.output_shape(),
                                             stream_seed(config, Stream::shadow));
    run.rounds = shadow::train_shadow(run.model, *run.shadow, sc, task.partition.clients, schedule, transport);
  } else {
    run.rounds = split::train_honest(run.model, task.partition.clients, schedule, transport);
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& sim = run.sim_history();
  for (std::size_t i = 0; i < run.rounds.size() && !run.diverged_at; ++i) {
    if (!std::isfinite(run.rounds[i].task_loss) || (i < sim.size() && !std::isfinite(sim[i]))) run.diverged_at = i;
  }
  if (!run.diverged_at) {
    const split::Segment* segments[] = {&run.model.input, &run.model.server, &run.model.output};
    for (const auto* seg : segments) {
      for (std::size_t l = 0; l < seg->net.layer_count(); ++l) {
        for (const auto& p : seg->net.params(l)) {
          if (!p.all_finite()) run.diverged_at = run.rounds.size();
        }
      }
    }
  }
  return run;
}

probes::ProbeReport run_probes(const RunConfig& config, const Task& task, const nn::Network& theta1,
                               const nn::Network& theta2, const nn::Network& theta3, const nn::Network& theta1p,
                               const std::vector<attack::AdversarialBatch>* adversarial) {
  probes::ProbeReport report;
  const auto& pool = task.partition.attacker_pool;
  if (config.probes.output_distance) {
    // Surrogate for the supremum: test set and attacker pool together.
    report.d_hat = probes::probe_output_distance(theta1, theta1p, task.test.images);
    if (pool.size() > 0) {
      report.d_hat = std::max(report.d_hat, probes::probe_output_distance(theta1, theta1p, pool.images));
    }
  }
  if (config.probes.alignment) {
    std::vector<std::size_t> idx(std::min(config.probes.alignment_samples, task.test.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    report.alignment_cos =
        probes::probe_alignment(theta1, theta1p, theta2, task.test.batch_images(idx), config.attack.gradient);
  }
  if (config.probes.loss_sign) report.sign_fraction = probes::probe_loss_sign(theta1, theta2, theta3, task.test);
  if (config.probes.transfer) {
    std::vector<attack::AdversarialBatch> crafted;
    if (!adversarial) {
      const nn::Pipeline proxy{&theta1p, &theta2};
      crafted.push_back(attack::craft(proxy, task.test.images, config.attack));
      adversarial = &crafted;
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& b : *adversarial) {
      sum += probes::transfer_cos(theta1, theta2, b.clean, b.adversarial) * static_cast<double>(b.clean.batch());
      n += b.clean.batch();
    }
    report.transfer_cos = n ? sum / static_cast<double>(n) : 0.0;
  }
  return report;
}

Evaluation evaluate(const RunConfig& config, const Task& task, const nn::Network& theta1, const nn::Network& theta2,
                    const nn::Network& theta3, const nn::Network& theta1p, bool keep_adversarial) {
  const auto start = std::chrono::steady_clock::now();
  Evaluation out;
  const nn::Pipeline target{&theta1, &theta2, &theta3};
  const nn::Pipeline proxy{&theta1p, &theta2};
  const bool keep = keep_adversarial || config.probes.transfer;
  out.attack = attack::evaluate_attack(target, task.test, proxy, config.attack, stream_seed(config, Stream::noise),
                                       250, keep ? &out.adversarial : nullptr);
  out.probes = run_probes(config, task, theta1, theta2, theta3, theta1p, keep ? &out.adversarial : nullptr);
  if (!keep_adversarial) out.adversarial.clear();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Outcome run(const RunConfig& config) {
  config.validate();
  if (!config.shadow.enabled) throw ConfigError("attacking needs shadow training", "shadow.enabled");
  const Task task = build_task(config);
  TrainedRun trained = train(config, task);
  const Evaluation eval = evaluate(config, task, trained.model.input.net, trained.model.server.net,
                                   trained.model.output.net, trained.shadow->layers);
  Outcome out{eval.attack, eval.probes, 0.0, 0.0, trained.seconds, eval.seconds, trained.diverged_at};
  const auto& sim = trained.sim_history();
  if (!sim.empty()) {
    const std::size_t w = std::min<std::size_t>(100, sim.size());
    out.first_sim = trained.shadow->window_mean(0, w);
    out.last_sim = trained.shadow->window_mean(sim.size() - w, sim.size());
  }
  return out;
}

// ----------------------------------------------------------------- reports

std::string report_to_json(const RunReport& r, bool include_timing) {
  json j;
  j["format"] = "sladv-report v1";
  j["seed"] = r.seed;
  j["samples"] = r.attack.samples;
  j["skipped"] = r.attack.skipped;
  j["clean_accuracy"] = r.attack.clean_accuracy;
  j["adversarial_accuracy"] = r.attack.adversarial_accuracy;
  j["accuracy_drop"] = r.attack.accuracy_drop;
  j["random_noise_accuracy"] = r.attack.random_noise_accuracy;
  j["random_noise_drop"] = r.attack.random_noise_drop;
  j["random_sign_accuracy"] = r.attack.random_sign_accuracy;
  j["random_sign_drop"] = r.attack.random_sign_drop;
  j["mean_proxy_cosine"] = r.attack.mean_proxy_cosine;
  if (r.probes) {
    j["probes"] = {{"d_hat", r.probes->d_hat},
                   {"alignment_cos", r.probes->alignment_cos},
                   {"sign_fraction", r.probes->sign_fraction},
                   {"transfer_cos", r.probes->transfer_cos}};
  } else {
    j["probes"] = nullptr;
  }
  j["sim_series"] = r.sim_series;
  j["diverged_at"] = r.diverged_at ? json(*r.diverged_at) : json(nullptr);
  j["config"] = r.config_json.empty() ? json(nullptr) : json::parse(r.config_json);
  if (include_timing) j["timing"] = {{"train_seconds", r.train_seconds}, {"attack_seconds", r.attack_seconds}};
  return j.dump(2) + "\n";
}

void write_metrics_csv(std::ostream& out, const std::vector<split::RoundLog>& rounds,
                       const std::vector<double>& sim_history) {
  out << kMetricsHeader << "\nround,task_loss,L_sim\n";
  char buf[96];
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,", rounds[i].round, rounds[i].task_loss);
    out << buf;
    if (i < sim_history.size()) {
      std::snprintf(buf, sizeof buf, "%.17g", sim_history[i]);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<double> read_sim_series(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw FormatError("missing metrics header", 0);
  if (!std::getline(in, line) || line != "round,task_loss,L_sim") throw FormatError("unexpected metrics columns", 0);
  std::vector<double> out;
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    if (last == std::string::npos) throw FormatError("malformed metrics row: " + line, 0);
    if (last + 1 == line.size()) continue;
    out.push_back(std::stod(line.substr(last + 1)));
  }
  return out;
}

}  // namespace sladv::experiment
