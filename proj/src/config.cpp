#include "navfield/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace navfield {

namespace {

struct Binding {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for " + key + ": " + v);
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": " + v);
}

std::vector<Binding> bindings(RunConfig& c) {
  std::vector<Binding> b;
  auto add_u64 = [&](const std::string& k, std::uint64_t* p) {
    b.push_back({k, [p] { return std::to_string(*p); },
                 [p, k](const std::string& v) {
                   *p = static_cast<std::uint64_t>(parse_int(k, v));
                 }});
  };
  auto add_int = [&](const std::string& k, int* p) {
    b.push_back({k, [p] { return std::to_string(*p); },
                 [p, k](const std::string& v) {
                   *p = static_cast<int>(parse_int(k, v));
                 }});
  };
  auto add_size = [&](const std::string& k, std::size_t* p) {
    b.push_back({k, [p] { return std::to_string(*p); },
                 [p, k](const std::string& v) {
                   const long long i = parse_int(k, v);
                   if (i < 0) throw std::runtime_error("config: negative " + k);
                   *p = static_cast<std::size_t>(i);
                 }});
  };
  auto add_dbl = [&](const std::string& k, double* p) {
    b.push_back({k, [p] { return fmt_double(*p); },
                 [p, k](const std::string& v) { *p = parse_double(k, v); }});
  };
  auto add_bool = [&](const std::string& k, bool* p) {
    b.push_back({k, [p] { return *p ? std::string("true") : "false"; },
                 [p, k](const std::string& v) { *p = parse_bool(k, v); }});
  };
  auto add_str = [&](const std::string& k, std::string* p) {
    b.push_back({k, [p] { return *p; },
                 [p](const std::string& v) { *p = v; }});
  };

  add_u64("seed", &c.seed);
  add_str("out_dir", &c.out_dir);
  add_int("scene.train_count", &c.scene_train);
  add_int("scene.val_count", &c.scene_val);
  add_int("scene.height", &c.scene.height);
  add_int("scene.width", &c.scene.width);
  add_dbl("scene.wall_density", &c.scene.wall_density);
  add_int("field.pos_freqs", &c.field.pos_freqs);
  add_int("field.dir_freqs", &c.field.dir_freqs);
  add_int("field.hidden", &c.field.hidden);
  add_int("field.feat_dim", &c.field.feat_dim);
  add_int("field.samples_per_ray", &c.field.samples_per_ray);
  add_dbl("field.near", &c.field.near);
  add_dbl("field.beta_min", &c.field.beta_min);
  add_dbl("field.lr", &c.field.lr);
  add_int("policy.strip_w", &c.policy.strip_w);
  add_dbl("policy.fov", &c.policy.fov);
  add_int("policy.feat_dim", &c.policy.feat_dim);
  add_dbl("policy.lambda_aux", &c.policy.lambda_aux);
  add_bool("policy.detach_field", &c.policy.detach_field);
  add_bool("ablation.use_fu", &c.policy.ablation.use_fu);
  add_bool("ablation.use_at", &c.policy.ablation.use_at);
  add_bool("ablation.use_cbam", &c.policy.ablation.use_cbam);
  add_int("train.episodes", &c.train.episodes);
  add_int("train.max_steps", &c.train.max_steps);
  add_int("train.field_steps_per_action", &c.train.field_steps_per_action);
  add_int("train.field_batch", &c.train.field_batch);
  add_size("train.replay_capacity", &c.train.replay_capacity);
  add_dbl("train.expert_floor", &c.train.expert_floor);
  add_dbl("train.anneal_fraction", &c.train.anneal_fraction);
  add_dbl("train.lr", &c.train.lr);
  add_dbl("train.tier_weight_easy", &c.train.tier_weights[0]);
  add_dbl("train.tier_weight_medium", &c.train.tier_weights[1]);
  add_dbl("train.tier_weight_hard", &c.train.tier_weights[2]);
  add_int("eval.episodes_per_tier", &c.eval_episodes_per_tier);
  add_int("eval.max_steps", &c.eval_max_steps);
  add_int("eval.workers", &c.eval_workers);
  return b;
}

}  // namespace

void RunConfig::validate() const {
  if (scene_train < 1 || scene_val < 1)
    throw std::runtime_error("config: scene counts must be positive");
  if (scene.height < 5 || scene.width < 5)
    throw std::runtime_error("config: scene must be at least 5x5");
  if (scene.wall_density < 0.0 || scene.wall_density > 1.0)
    throw std::runtime_error("config: wall density outside [0,1]");
  field.validate();
  policy.extractor_cfg().validate();
  if (policy.lambda_aux < 0.0)
    throw std::runtime_error("config: lambda_aux must be >= 0");
  if (train.episodes < 1 || train.max_steps < 1)
    throw std::runtime_error("config: training budgets must be positive");
  if (train.field_steps_per_action < 0 || train.field_batch < 1)
    throw std::runtime_error("config: bad field training budget");
  if (train.expert_floor < 0.0 || train.expert_floor > 1.0)
    throw std::runtime_error("config: expert floor outside [0,1]");
  if (train.anneal_fraction <= 0.0 || train.anneal_fraction > 1.0)
    throw std::runtime_error("config: anneal fraction outside (0,1]");
  const double wsum = train.tier_weights[0] + train.tier_weights[1] +
                      train.tier_weights[2];
  if (wsum <= 0.0) throw std::runtime_error("config: tier weights sum to 0");
  if (eval_episodes_per_tier < 1 || eval_max_steps < 1 || eval_workers < 1)
    throw std::runtime_error("config: evaluation settings must be positive");
  if (policy.feat_dim != field.feat_dim)
    throw std::runtime_error(
        "config: policy.feat_dim must match field.feat_dim");
}

std::string RunConfig::to_text() const {
  auto& self = const_cast<RunConfig&>(*this);
  std::string out;
  for (const auto& b : bindings(self)) out += b.key + "=" + b.get() + "\n";
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (auto& b : bindings(*this)) {
    if (b.key == key) {
      b.set(value);
      return;
    }
  }
  throw std::runtime_error("config: unknown key: " + key);
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t z = line.find_last_not_of(" \t\r");
    line = line.substr(a, z - a + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not key=value: " + line);
    c.set(line.substr(0, eq), line.substr(eq + 1));
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << to_text();
  if (!out) throw std::runtime_error("config: write failed for " + path);
}

RolloutConfig RunConfig::rollout_cfg() const {
  RolloutConfig r;
  r.max_steps = eval_max_steps;
  r.strip_w = policy.strip_w;
  r.fov = policy.fov;
  r.field_steps_per_action = train.field_steps_per_action;
  r.field_batch = train.field_batch;
  r.replay_capacity = train.replay_capacity;
  r.field_cfg = field;
  return r;
}

}  // namespace navfield
