// Command-line front end: train policies on bundled or file-based maps,
// evaluate them, compose several into one, and cross-validate the lot.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "knaf/knaf.hpp"

namespace {

using nlohmann::json;

Eigen::VectorXd json_vector(const json& j, int dim, const std::string& key) {
  Eigen::VectorXd v(dim);
  if (j.is_number()) {
    v.setConstant(j.get<double>());
    return v;
  }
  if (j.is_array() && static_cast<int>(j.size()) == dim) {
    for (int i = 0; i < dim; ++i) v(i) = j[i].get<double>();
    return v;
  }
  throw std::runtime_error("config: '" + key + "' must be a number or an array of " +
                           std::to_string(dim));
}

knaf::TrainConfig load_train_config(const std::string& path, int state_dim,
                                    int action_dim) {
  knaf::TrainConfig cfg;
  cfg.bandwidth = Eigen::VectorXd::Constant(state_dim, 0.75);
  cfg.sigma_explore = Eigen::VectorXd::Constant(action_dim, 0.2);
  if (path.empty()) return cfg;

  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config file '" + path + "'");
  json j = json::parse(f);
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("beta")) cfg.beta = j["beta"].get<double>();
  if (j.contains("zeta")) cfg.zeta = j["zeta"].get<double>();
  if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
  if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
  if (j.contains("l0")) cfg.l0 = j["l0"].get<double>();
  if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
  if (j.contains("max_steps")) cfg.max_steps = j["max_steps"].get<long>();
  if (j.contains("episode_max_len")) {
    cfg.episode_max_len = j["episode_max_len"].get<long>();
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("sigma_explore")) {
    cfg.sigma_explore = json_vector(j["sigma_explore"], action_dim, "sigma_explore");
  }
  if (j.contains("bandwidth")) {
    cfg.bandwidth = json_vector(j["bandwidth"], state_dim, "bandwidth");
  }
  if (j.contains("enable_compression")) {
    cfg.enable_compression = j["enable_compression"].get<bool>();
  }
  return cfg;
}

knaf::sim::WorldMap load_map(const std::string& spec) {
  for (const auto& m : knaf::sim::builtin_maps()) {
    if (m.name == spec) return m;
  }
  std::ifstream f(spec);
  if (!f) {
    throw std::runtime_error("'" + spec +
                             "' is neither a builtin map nor a readable file");
  }
  std::string name = spec;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.rfind('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return knaf::sim::parse_map(f, name);
}

std::unique_ptr<std::ofstream> open_out(const std::string& path,
                                        std::ostream*& out) {
  if (path.empty() || path == "-") {
    out = &std::cout;
    return nullptr;
  }
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw std::runtime_error("cannot write '" + path + "'");
  out = f.get();
  return f;
}

int cmd_train(const std::string& map_spec, const std::string& config_path,
              const std::string& out_path, const std::string& metrics_path) {
  knaf::sim::LidarSim env(load_map(map_spec));
  knaf::TrainConfig cfg =
      load_train_config(config_path, env.state_dim(), env.action_dim());
  knaf::TrainResult result = knaf::train(env, cfg);

  knaf::io::Provenance prov{env.map().name, cfg.max_steps, cfg.seed};
  knaf::io::save_policy_file(out_path, result.policy, prov);

  if (!metrics_path.empty()) {
    std::ostream* out = nullptr;
    auto file = open_out(metrics_path, out);
    knaf::write_metrics_csv(*out, result.steps);
  }
  long long total = 0;
  for (const auto& e : result.episodes) total += static_cast<long long>(e.reward);
  std::cerr << "trained " << cfg.max_steps << " steps on '" << env.map().name
            << "': model order " << result.policy.order() << ", "
            << result.episodes.size() << " episodes\n";
  return 0;
}

int cmd_eval(const std::string& policy_path, const std::string& map_spec,
             long steps, std::uint64_t seed, const std::string& out_path,
             bool as_json) {
  knaf::io::LoadedPolicy lp = knaf::io::load_policy_file(policy_path);
  knaf::sim::WorldMap map = load_map(map_spec);
  knaf::EvalReport r = knaf::evaluate(lp.policy, map, steps, seed);

  std::ostream* out = nullptr;
  auto file = open_out(out_path, out);
  if (as_json) {
    json j{{"policy", policy_path}, {"map", map.name}, {"steps", r.steps},
           {"crashes", r.crashes}, {"total_reward", r.total_reward}};
    *out << j.dump() << "\n";
  } else {
    *out << "policy,map,steps,crashes,total_reward\n";
    *out << policy_path << "," << map.name << "," << r.steps << ","
         << r.crashes << "," << r.total_reward << "\n";
  }
  return 0;
}

int cmd_compose(const std::vector<std::string>& policy_paths,
                const std::string& out_path, double epsilon,
                const std::string& density, std::uint64_t seed,
                bool multipass) {
  std::vector<knaf::NAFPolicy> policies;
  std::string lineage;
  for (const std::string& p : policy_paths) {
    knaf::io::LoadedPolicy lp = knaf::io::load_policy_file(p);
    policies.push_back(std::move(lp.policy));
    lineage += (lineage.empty() ? "" : "/") + lp.provenance.map_name;
  }
  knaf::ComposeOptions opts;
  opts.epsilon = epsilon;
  opts.seed = seed;
  opts.multipass = multipass;
  if (density == "kme") {
    opts.mode = knaf::DensityMode::kKme;
  } else if (density == "dict") {
    opts.mode = knaf::DensityMode::kDict;
  } else {
    throw std::runtime_error("--density must be 'kme' or 'dict'");
  }
  knaf::ComposeResult r = knaf::compose(policies, opts);
  knaf::io::save_policy_file(out_path, r.policy, {lineage, 0, seed});

  long accepted = 0;
  for (const auto& e : r.log) accepted += e.accepted ? 1 : 0;
  std::cerr << "composed " << policies.size() << " policies: " << accepted
            << "/" << r.log.size() << " points accepted, final order "
            << r.policy.order() << "\n";
  return 0;
}

int cmd_crossval(const std::vector<std::string>& policy_paths,
                 const std::vector<std::string>& map_specs, long steps,
                 std::uint64_t seed, const std::string& out_path) {
  std::vector<knaf::NAFPolicy> policies;
  std::vector<std::string> names;
  for (const std::string& p : policy_paths) {
    knaf::io::LoadedPolicy lp = knaf::io::load_policy_file(p);
    policies.push_back(std::move(lp.policy));
    names.push_back(p);
  }
  std::vector<knaf::sim::WorldMap> maps;
  for (const std::string& m : map_specs) maps.push_back(load_map(m));

  knaf::CrossvalResult r = knaf::cross_validate(policies, names, maps, steps, seed);
  std::ostream* out = nullptr;
  auto file = open_out(out_path, out);
  knaf::write_crossval_csv(*out, r);
  return 0;
}

int cmd_maps(const std::string& export_dir) {
  for (const auto& m : knaf::sim::builtin_maps()) {
    std::cout << m.name << " segments=" << m.segments.size()
              << " spawns=" << m.spawns.size() << "\n";
    if (!export_dir.empty()) {
      const std::string path = export_dir + "/" + m.name + ".map";
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot write '" + path + "'");
      f << knaf::sim::format_map(m);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse kernel NAF policies: train, evaluate, compose"};
  app.require_subcommand(1);

  std::string map_spec, config_path, out_path, metrics_path, policy_path;
  std::string density = "kme", export_dir;
  std::vector<std::string> policy_paths, map_specs;
  long steps = 1000;
  std::uint64_t seed = 0;
  double epsilon = 3.0;
  bool multipass = false, as_json = false;

  auto* train = app.add_subcommand("train", "train a policy on one map");
  train->add_option("--map", map_spec, "builtin map name or map file")->required();
  train->add_option("--config", config_path, "JSON training config");
  train->add_option("--out", out_path, "output policy file")->required();
  train->add_option("--metrics", metrics_path, "per-step CSV metrics");

  auto* eval = app.add_subcommand("eval", "greedy rollout of a stored policy");
  eval->add_option("--policy", policy_path)->required();
  eval->add_option("--map", map_spec)->required();
  eval->add_option("--steps", steps);
  eval->add_option("--seed", seed);
  eval->add_option("--out", out_path, "output file ('-' for stdout)");
  eval->add_flag("--json", as_json, "emit a JSON line instead of CSV");

  auto* compose = app.add_subcommand("compose", "merge trained policies");
  compose->add_option("policies", policy_paths, "input policy files")
      ->required()->expected(-1);
  compose->add_option("--out", out_path)->required();
  compose->add_option("--epsilon", epsilon, "final KOMP budget");
  compose->add_option("--density", density, "conflict metric: kme or dict");
  compose->add_option("--seed", seed, "visitation order seed");
  compose->add_flag("--multipass", multipass, "iterate interpolation passes");

  auto* crossval = app.add_subcommand("crossval", "all policies on all maps");
  crossval->add_option("--policies", policy_paths)->required()->expected(-1);
  crossval->add_option("--maps", map_specs)->required()->expected(-1);
  crossval->add_option("--steps", steps);
  crossval->add_option("--seed", seed);
  crossval->add_option("--out", out_path);

  auto* maps = app.add_subcommand("maps", "list bundled maps");
  maps->add_option("--export", export_dir, "write .map files to a directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) {
      return cmd_train(map_spec, config_path, out_path, metrics_path);
    }
    if (app.got_subcommand(eval)) {
      return cmd_eval(policy_path, map_spec, steps, seed, out_path, as_json);
    }
    if (app.got_subcommand(compose)) {
      return cmd_compose(policy_paths, out_path, epsilon, density, seed,
                         multipass);
    }
    if (app.got_subcommand(crossval)) {
      return cmd_crossval(policy_paths, map_specs, steps, seed, out_path);
    }
    if (app.got_subcommand(maps)) {
      return cmd_maps(export_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
