#include "dexforge/config.hpp"

#include <cstdio>
#include <fstream>

#ifndef DEXFORGE_DATA_DIR
#define DEXFORGE_DATA_DIR "data"
#endif

namespace dexforge {

namespace {

using nlohmann::json;

// Consumes keys from a section so leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string name) : name_(std::move(name)) {
    if (!j.is_object()) throw InputError("config section '" + name_ + "' must be an object");
    rest_ = j;
  }

  template <typename T>
  void read(const char* key, T& field) {
    auto it = rest_.find(key);
    if (it == rest_.end()) return;
    try {
      field = it->template get<T>();
    } catch (const json::exception&) {
      throw InputError("config key '" + name_ + "." + key + "' has the wrong type");
    }
    rest_.erase(it);
  }

  json take(const char* key) {
    auto it = rest_.find(key);
    if (it == rest_.end()) return json::object();
    json out = *it;
    rest_.erase(it);
    return out;
  }

  void finish() const {
    if (!rest_.empty()) throw InputError("unknown config key '" + name_ + "." + rest_.begin().key() + "'");
  }

 private:
  std::string name_;
  json rest_;
};

}  // namespace

void PipelineConfig::validate() const {
  energy.validate();
  optimizer.validate();
  if (batch < 1) throw InputError("batch must be >= 1");
  if (jitter.lid_rolls < 1 || jitter.sideways_samples < 1) throw InputError("jitter multiplicities must be >= 1");
  if (jitter.retreat <= 0.0) throw InputError("retreat must be positive");
  if (classify.obb_samples < 3) throw InputError("obb_samples must be >= 3");
  const auto& v = validation;
  if (v.contact_eps <= 0.0 || v.pen_threshold <= 0.0 || v.spen_threshold <= 0.0 || v.finger_distance <= 0.0) {
    throw InputError("validation thresholds must be positive");
  }
  if (v.gravity.mu < 0.0 || v.gravity.mass <= 0.0 || v.gravity.g <= 0.0 || v.gravity.cone_edges < 1 ||
      v.gravity.force_cap_factor <= 0.0) {
    throw InputError("invalid gravity proxy parameters");
  }
  if (!std::filesystem::exists(hand_file)) throw InputError("hand file not found: " + hand_file);
}

PipelineConfig default_config() {
  PipelineConfig c;
  c.hand_file = (std::filesystem::path(DEXFORGE_DATA_DIR) / "simple_hand.json").string();
  return c;
}

PipelineConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c = default_config();
  Section top(j, "config");
  std::string hand;
  top.read("hand_file", hand);
  if (!hand.empty()) {
    std::filesystem::path p(hand);
    if (p.is_relative()) p = base_dir / p;
    c.hand_file = p.lexically_normal().string();
  }
  top.read("batch", c.batch);
  top.read("seed", c.seed);

  Section e(top.take("energy"), "energy");
  e.read("w_fc", c.energy.w_fc);
  e.read("w_bar", c.energy.w_bar);
  e.read("w_dis", c.energy.w_dis);
  e.read("w_palm", c.energy.w_palm);
  e.read("w_limit", c.energy.w_limit);
  e.read("w_pen", c.energy.w_pen);
  e.read("w_spen", c.energy.w_spen);
  e.read("w_dir", c.energy.w_dir);
  e.read("d_thr", c.energy.d_thr);
  e.read("d_0", c.energy.d_0);
  e.read("tau_fc", c.energy.tau_fc);
  e.read("tau_f", c.energy.tau_f);
  e.read("off_part_samples", c.energy.off_part_samples);
  e.read("use_lp_dfc", c.energy.use_lp_dfc);
  e.finish();

  Section o(top.take("optimizer"), "optimizer");
  o.read("steps", c.optimizer.steps);
  o.read("step_translation", c.optimizer.step_translation);
  o.read("step_rotation", c.optimizer.step_rotation);
  o.read("step_joints", c.optimizer.step_joints);
  o.read("grad_clip", c.optimizer.grad_clip);
  o.read("anneal_every", c.optimizer.anneal_every);
  o.read("anneal_factor", c.optimizer.anneal_factor);
  o.finish();

  Section in(top.take("init"), "init");
  in.read("retreat", c.jitter.retreat);
  in.read("lid_rolls", c.jitter.lid_rolls);
  in.read("sideways_samples", c.jitter.sideways_samples);
  in.read("sideways_angle_deg", c.jitter.sideways_angle_deg);
  in.read("retreat_noise", c.jitter.retreat_noise);
  in.read("cone_half_angle_deg", c.jitter.cone_half_angle_deg);
  in.read("corner_margin_fraction", c.classify.corner_margin_fraction);
  in.read("adjacency_distance", c.classify.adjacency_distance);
  in.read("obb_samples", c.classify.obb_samples);
  in.finish();

  Section v(top.take("validation"), "validation");
  v.read("contact_eps", c.validation.contact_eps);
  v.read("pen_threshold", c.validation.pen_threshold);
  v.read("spen_threshold", c.validation.spen_threshold);
  v.read("finger_distance", c.validation.finger_distance);
  v.read("mu", c.validation.gravity.mu);
  v.read("mass", c.validation.gravity.mass);
  v.read("g", c.validation.gravity.g);
  v.read("cone_edges", c.validation.gravity.cone_edges);
  v.read("force_cap_factor", c.validation.gravity.force_cap_factor);
  v.read("residual_factor", c.validation.gravity.residual_factor);
  v.finish();

  top.finish();
  c.optimizer.seed = c.seed;
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json config_to_json(const PipelineConfig& c) {
  const auto& e = c.energy;
  const auto& o = c.optimizer;
  const auto& v = c.validation;
  return {
      {"hand_file", c.hand_file},
      {"batch", c.batch},
      {"seed", c.seed},
      {"energy",
       {{"w_fc", e.w_fc}, {"w_bar", e.w_bar}, {"w_dis", e.w_dis}, {"w_palm", e.w_palm},
        {"w_limit", e.w_limit}, {"w_pen", e.w_pen}, {"w_spen", e.w_spen}, {"w_dir", e.w_dir},
        {"d_thr", e.d_thr}, {"d_0", e.d_0}, {"tau_fc", e.tau_fc}, {"tau_f", e.tau_f},
        {"off_part_samples", e.off_part_samples}, {"use_lp_dfc", e.use_lp_dfc}}},
      {"optimizer",
       {{"steps", o.steps}, {"step_translation", o.step_translation}, {"step_rotation", o.step_rotation},
        {"step_joints", o.step_joints}, {"grad_clip", o.grad_clip}, {"anneal_every", o.anneal_every},
        {"anneal_factor", o.anneal_factor}}},
      {"init",
       {{"retreat", c.jitter.retreat}, {"lid_rolls", c.jitter.lid_rolls},
        {"sideways_samples", c.jitter.sideways_samples}, {"sideways_angle_deg", c.jitter.sideways_angle_deg},
        {"retreat_noise", c.jitter.retreat_noise}, {"cone_half_angle_deg", c.jitter.cone_half_angle_deg},
        {"corner_margin_fraction", c.classify.corner_margin_fraction},
        {"adjacency_distance", c.classify.adjacency_distance}, {"obb_samples", c.classify.obb_samples}}},
      {"validation",
       {{"contact_eps", v.contact_eps}, {"pen_threshold", v.pen_threshold}, {"spen_threshold", v.spen_threshold},
        {"finger_distance", v.finger_distance}, {"mu", v.gravity.mu}, {"mass", v.gravity.mass},
        {"g", v.gravity.g}, {"cone_edges", v.gravity.cone_edges},
        {"force_cap_factor", v.gravity.force_cap_factor}, {"residual_factor", v.gravity.residual_factor}}},
  };
}

std::string config_hash(const PipelineConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dexforge
