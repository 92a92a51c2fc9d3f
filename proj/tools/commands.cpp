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

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sladv/checkpoint.hpp"
#include "sladv/errors.hpp"

namespace sladv::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using experiment::RunConfig;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Checkpoints {
  nn::Network theta1, theta2, theta3, shadow;
  bool has_shadow = false;
};

fs::path checkpoint_dir(const CommonOptions& o) { return o.out / "checkpoints"; }

Checkpoints load_checkpoints(const CommonOptions& o, bool need_shadow) {
  const fs::path dir = checkpoint_dir(o);
  for (const char* name : {"theta1.slnn", "theta2.slnn", "theta3.slnn"}) {
    if (!fs::exists(dir / name)) throw MissingArtifactError((dir / name).string() + " not found; run train first");
  }
  if (need_shadow && !fs::exists(dir / "shadow.slnn")) {
    throw MissingArtifactError((dir / "shadow.slnn").string() + " not found; train with the shadow enabled");
  }
  Checkpoints c;
  c.theta1 = nn::load_network(dir / "theta1.slnn");
  c.theta2 = nn::load_network(dir / "theta2.slnn");
  c.theta3 = nn::load_network(dir / "theta3.slnn");
  if (need_shadow || fs::exists(dir / "shadow.slnn")) {
    c.shadow = nn::load_network(dir / "shadow.slnn");
    c.has_shadow = true;
  }
  // Throws ConfigError when the segments do not compose.
  (void)nn::Network::concat({&c.theta1, &c.theta2, &c.theta3});
  if (c.has_shadow && c.shadow.output_shape() != c.theta1.output_shape()) {
    throw ConfigError("shadow checkpoint output " + nn::shape_string(c.shadow.output_shape()) +
                      " does not match theta1 output " + nn::shape_string(c.theta1.output_shape()));
  }
  return c;
}

double accuracy(const nn::Network& t1, const nn::Network& t2, const nn::Network& t3, const data::Dataset& test) {
  const nn::Pipeline model{&t1, &t2, &t3};
  const auto pred = attack::predict(model, test.images);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == test.labels[i];
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

json probes_json(const probes::ProbeReport& p) {
  return {{"d_hat", p.d_hat},
          {"alignment_cos", p.alignment_cos},
          {"sign_fraction", p.sign_fraction},
          {"transfer_cos", p.transfer_cos}};
}

}  // namespace

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig c;
  if (!o.config_path.empty()) {
    c = experiment::parse_config(read_text(o.config_path));
  } else if (!o.preset.empty()) {
    c = experiment::preset(o.preset);
  } else if (fs::exists(o.out / "config.json")) {
    c = experiment::parse_config(read_text(o.out / "config.json"));
  } else {
    c = experiment::preset("paper-desk");
  }
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

int cmd_train(const CommonOptions& o) {
  const RunConfig c = resolve_config(o);
  const experiment::Task task = experiment::build_task(c);
  make_dirs(checkpoint_dir(o));

  experiment::TrainedRun run = experiment::train(c, task);
  const auto& m = run.model;
  nn::save_network(checkpoint_dir(o) / "theta1.slnn", m.input.net);
  nn::save_network(checkpoint_dir(o) / "theta2.slnn", m.server.net);
  nn::save_network(checkpoint_dir(o) / "theta3.slnn", m.output.net);
  if (run.shadow) nn::save_network(checkpoint_dir(o) / "shadow.slnn", run.shadow->layers);

  std::ostringstream csv;
  experiment::write_metrics_csv(csv, run.rounds, run.sim_history());
  write_text(o.out / "metrics.csv", csv.str());
  write_text(o.out / "config.json", experiment::config_to_json(c) + "\n");

  const double clean = accuracy(m.input.net, m.server.net, m.output.net, task.test);
  json summary{{"format", "sladv-train v1"},
               {"seed", c.seed},
               {"rounds", run.rounds.size()},
               {"final_task_loss", run.rounds.empty() ? 0.0 : run.rounds.back().task_loss},
               {"clean_accuracy", clean},
               {"diverged_at", run.diverged_at ? json(*run.diverged_at) : json(nullptr)},
               {"timing", {{"train_seconds", run.seconds}}}};
  write_text(o.out / "train.json", summary.dump(2) + "\n");
  std::cout << "trained " << run.rounds.size() << " rounds in " << fmt(run.seconds, "%.1f")
            << " s; clean accuracy " << fmt(clean) << "\n";
  return kOk;
}

int cmd_attack(const CommonOptions& o) {
  const RunConfig c = resolve_config(o);
  const Checkpoints ck = load_checkpoints(o, true);
  const experiment::Task task = experiment::build_task(c);
  const experiment::Evaluation eval =
      experiment::evaluate(c, task, ck.theta1, ck.theta2, ck.theta3, ck.shadow, true);

  experiment::RunReport report;
  report.seed = c.seed;
  report.attack = eval.attack;
  const bool any_probe = c.probes.output_distance || c.probes.alignment || c.probes.loss_sign || c.probes.transfer;
  if (any_probe) report.probes = eval.probes;
  if (fs::exists(o.out / "metrics.csv")) {
    std::ifstream in(o.out / "metrics.csv");
    report.sim_series = experiment::read_sim_series(in);
  }
  report.config_json = experiment::config_to_json(c);
  if (fs::exists(o.out / "train.json")) {
    const json summary = json::parse(read_text(o.out / "train.json"));
    report.train_seconds = summary["timing"]["train_seconds"].get<double>();
    if (summary.contains("diverged_at") && !summary["diverged_at"].is_null()) {
      report.diverged_at = summary["diverged_at"].get<std::size_t>();
    }
  }
  report.attack_seconds = eval.seconds;

  make_dirs(o.out / "adv");
  for (std::size_t b = 0; b < eval.adversarial.size(); ++b) {
    const auto& batch = eval.adversarial[b];
    char name[32];
    std::snprintf(name, sizeof name, "batch_%03zu", b);
    nn::save_tensors(o.out / "adv" / (std::string(name) + ".slnn"), {batch.clean, batch.delta, batch.adversarial});
    json sidecar{{"epsilon", c.attack.epsilon},
                 {"beta", c.attack.beta},
                 {"K", c.attack.iterations},
                 {"seed", c.seed},
                 {"tensors", {"clean", "delta", "adversarial"}},
                 {"skipped", batch.skipped_count()}};
    write_text(o.out / "adv" / (std::string(name) + ".json"), sidecar.dump(2) + "\n");
  }
  write_text(o.out / "report.json", experiment::report_to_json(report));
  const auto& a = eval.attack;
  std::cout << "clean " << fmt(a.clean_accuracy) << "  adversarial " << fmt(a.adversarial_accuracy) << "  drop "
            << fmt(a.accuracy_drop, "%.2f") << " pts  (uniform noise " << fmt(a.random_noise_drop, "%.2f")
            << ", random sign " << fmt(a.random_sign_drop, "%.2f") << ")\n";
  if (a.skipped) std::cerr << "warning: skipped " << a.skipped << " samples with zero clean activation\n";
  return kOk;
}

int cmd_probe(const CommonOptions& o) {
  const RunConfig c = resolve_config(o);
  const Checkpoints ck = load_checkpoints(o, true);
  const experiment::Task task = experiment::build_task(c);
  const probes::ProbeReport p = experiment::run_probes(c, task, ck.theta1, ck.theta2, ck.theta3, ck.shadow, nullptr);
  json j = probes_json(p);
  j["format"] = "sladv-probes v1";
  j["seed"] = c.seed;
  make_dirs(o.out);
  write_text(o.out / "probes.json", j.dump(2) + "\n");
  std::cout << "d_hat " << fmt(p.d_hat) << "  alignment_cos " << fmt(p.alignment_cos) << "  sign_fraction "
            << fmt(p.sign_fraction) << "  transfer_cos " << fmt(p.transfer_cos) << "\n";
  return kOk;
}

std::vector<double> default_sweep_values(const std::string& parameter) {
  if (parameter == "alpha") return {0, 0.01, 0.1, 1, 10, 100};
  if (parameter == "pool") return {128, 256, 1024, 2048, 4096};
  if (parameter == "depth") return {1, 2, 3};
  if (parameter == "epsilon") return {0, 0.05, 0.1, 0.2, 0.3};
  throw ConfigError("unknown sweep parameter '" + parameter + "'", "sweep.param");
}

namespace {

RunConfig sweep_variant(RunConfig c, const std::string& parameter, double value, std::uint64_t seed) {
  c.seed = seed;
  if (parameter == "alpha") {
    c.shadow.alpha = value;
  } else if (parameter == "pool") {
    c.training.partition.attacker_pool_size = static_cast<std::size_t>(value);
  } else if (parameter == "depth") {
    c = experiment::with_input_depth(std::move(c), static_cast<std::size_t>(value));
  } else {
    c.attack.epsilon = value;
  }
  c.validate();
  return c;
}

}  // namespace

int cmd_sweep(const CommonOptions& o, const SweepOptions& s) {
  const RunConfig base = resolve_config(o);
  const std::vector<double> values = s.values.empty() ? default_sweep_values(s.parameter) : s.values;
  if (s.seeds.empty()) throw ConfigError("at least one seed is required", "sweep.seeds");
  // Fail fast on every grid point before training anything.
  for (double v : values) {
    for (auto seed : s.seeds) (void)sweep_variant(base, s.parameter, v, seed);
  }
  make_dirs(o.out);

  std::ostringstream rows;
  rows << "# sladv-sweep v1\n"
       << "param,value,seed,clean_accuracy,adversarial_accuracy,accuracy_drop,random_noise_drop,random_sign_drop,"
          "d_hat,alignment_cos,sign_fraction,transfer_cos,first_L_sim,last_L_sim,diverged_at\n";
  std::map<double, std::vector<experiment::Outcome>> by_value;
  for (double v : values) {
    for (auto seed : s.seeds) {
      const RunConfig c = sweep_variant(base, s.parameter, v, seed);
      const experiment::Outcome r = experiment::run(c);
      by_value[v].push_back(r);
      char line[512];
      std::snprintf(line, sizeof line, "%s,%.17g,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n",
                    s.parameter.c_str(), v, static_cast<unsigned long long>(seed), r.attack.clean_accuracy,
                    r.attack.adversarial_accuracy, r.attack.accuracy_drop, r.attack.random_noise_drop,
                    r.attack.random_sign_drop, r.probes.d_hat, r.probes.alignment_cos, r.probes.sign_fraction,
                    r.probes.transfer_cos, r.first_sim, r.last_sim,
                    r.diverged_at ? std::to_string(*r.diverged_at).c_str() : "");
      rows << line;
      std::cerr << s.parameter << "=" << v << " seed " << seed << ": drop " << fmt(r.attack.accuracy_drop, "%.1f")
                << " clean " << fmt(r.attack.clean_accuracy, "%.3f")
                << (r.diverged_at ? " diverged at " + std::to_string(*r.diverged_at) : std::string()) << " ("
                << fmt(r.train_seconds + r.eval_seconds, "%.1f") << " s)\n";
    }
  }
  write_text(o.out / ("sweep_" + s.parameter + ".csv"), rows.str());

  std::ostringstream summary;
  summary << "# sladv-sweep-summary v1\n"
          << s.parameter << ",seeds,median_clean_accuracy,median_accuracy_drop,median_random_noise_drop,"
          << "median_random_sign_drop,median_d_hat,median_alignment_cos\n";
  for (const auto& [v, runs] : by_value) {
    auto pick = [&](auto f) {
      std::vector<double> xs;
      for (const auto& r : runs) xs.push_back(f(r));
      return median(xs);
    };
    char line[256];
    std::snprintf(line, sizeof line, "%g,%zu,%.6f,%.4f,%.4f,%.4f,%.6f,%.6f\n", v, runs.size(),
                  pick([](const auto& r) { return r.attack.clean_accuracy; }),
                  pick([](const auto& r) { return r.attack.accuracy_drop; }),
                  pick([](const auto& r) { return r.attack.random_noise_drop; }),
                  pick([](const auto& r) { return r.attack.random_sign_drop; }),
                  pick([](const auto& r) { return r.probes.d_hat; }),
                  pick([](const auto& r) { return r.probes.alignment_cos; }));
    summary << line;
  }
  write_text(o.out / ("sweep_" + s.parameter + "_summary.csv"), summary.str());
  std::cout << summary.str();
  return kOk;
}

int cmd_report(const CommonOptions& o) {
  bool found = false;
  if (fs::exists(o.out / "report.json")) {
    found = true;
    const json r = json::parse(read_text(o.out / "report.json"));
    std::cout << "run " << o.out.string() << " (seed " << r["seed"].get<std::uint64_t>() << ")\n"
              << "  clean accuracy        " << fmt(r["clean_accuracy"].get<double>()) << "\n"
              << "  adversarial accuracy  " << fmt(r["adversarial_accuracy"].get<double>()) << "\n"
              << "  accuracy drop         " << fmt(r["accuracy_drop"].get<double>(), "%.2f") << " pts\n"
              << "  uniform-noise drop    " << fmt(r["random_noise_drop"].get<double>(), "%.2f") << " pts\n"
              << "  random-sign drop      " << fmt(r["random_sign_drop"].get<double>(), "%.2f") << " pts\n";
    if (!r["probes"].is_null()) {
      const auto& p = r["probes"];
      std::cout << "  d_hat " << fmt(p["d_hat"].get<double>()) << "  alignment_cos "
                << fmt(p["alignment_cos"].get<double>()) << "  sign_fraction " << fmt(p["sign_fraction"].get<double>())
                << "  transfer_cos " << fmt(p["transfer_cos"].get<double>()) << "\n";
    }
    const auto& sim = r["sim_series"];
    if (!sim.empty()) {
      std::cout << "  L_sim first " << fmt(sim.front().get<double>()) << " last " << fmt(sim.back().get<double>())
                << " over " << sim.size() << " rounds\n";
    }
  }
  if (fs::exists(o.out / "probes.json")) {
    found = true;
    std::cout << "probes: " << json::parse(read_text(o.out / "probes.json")).dump() << "\n";
  }
  if (fs::is_directory(o.out)) {
    std::vector<fs::path> tables;
    for (const auto& e : fs::directory_iterator(o.out)) {
      const auto name = e.path().filename().string();
      if (name.starts_with("sweep_") && name.ends_with("_summary.csv")) tables.push_back(e.path());
    }
    std::sort(tables.begin(), tables.end());
    for (const auto& t : tables) {
      found = true;
      std::cout << "\n" << t.filename().string() << "\n" << read_text(t);
    }
  }
  if (!found) throw MissingArtifactError("nothing to report in " + o.out.string());
  return kOk;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfig;
  } catch (const MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace sladv::cli
