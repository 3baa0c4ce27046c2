#include "dexforge/pipeline.hpp"

#include "dexforge/flow_match.hpp"
#include "dexforge/parallel.hpp"
#include "dexforge/random.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace dexforge {

using nlohmann::json;

namespace {

constexpr std::uint64_t kObbStream = 0x0bb;
constexpr std::uint64_t kSceneStream = 0x5ce;

json vec_json(const VecX& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

VecX read_vec(const json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array");
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(std::string(what) + " must hold numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

double mean_of(const std::vector<GraspRecord>& records, double EnergyBreakdown::*field) {
  if (records.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : records) s += r.energy.*field;
  return s / static_cast<double>(records.size());
}

}  // namespace

json record_to_json(const GraspRecord& r) {
  json fingers = json::array();
  for (FingerTag t : r.contacting_fingers) fingers.push_back(std::string(to_string(t)));
  const auto& e = r.energy;
  return {
      {"schema", kRecordSchema},
      {"object_id", r.object_id},
      {"part_id", r.part_id},
      {"part_name", r.part_name},
      {"split", std::string(to_string(r.split))},
      {"batch_index", r.batch_index},
      {"pose",
       {{"t", vec3_json(r.pose.translation)},
        {"quat_wxyz", json::array({r.pose.rotation.w(), r.pose.rotation.x(), r.pose.rotation.y(), r.pose.rotation.z()})},
        {"theta", vec_json(r.pose.theta)}}},
      {"energy",
       {{"total", e.total}, {"fc", e.fc}, {"bar", e.bar}, {"dis", e.dis}, {"dir", e.dir}, {"pen", e.pen},
        {"spen", e.spen}, {"limit", e.limit}, {"lp_stable", e.lp_stable}}},
      {"flags",
       {{"valid", r.flags.valid()}, {"pen_ok", r.flags.pen_ok}, {"spen_ok", r.flags.spen_ok},
        {"gravity_ok", r.flags.gravity_ok}, {"part_ok", r.flags.part_ok}, {"max_pen", r.flags.max_pen},
        {"max_spen", r.flags.max_spen}, {"gravity_fail_axes", r.flags.gravity_fail_axes}}},
      {"gravity_check", "quasi_static_proxy"},
      {"suc_proxy", r.flags.gravity_ok},
      {"caption", r.caption},
      {"contacting_fingers", fingers},
      {"metrics", {{"pta", r.pta}, {"pga", r.pga}}},
      {"provenance", {{"seed", r.seed}, {"config_hash", r.config_hash}, {"tool_version", r.tool_version}}},
  };
}

GraspRecord record_from_json(const json& j, int dof) {
  try {
    if (j.at("schema").get<int>() != kRecordSchema) throw InputError("unsupported record schema");
    GraspRecord r;
    r.object_id = j.at("object_id").get<std::string>();
    r.part_id = j.at("part_id").get<int>();
    r.part_name = j.at("part_name").get<std::string>();
    r.split = split_from_string(j.at("split").get<std::string>());
    r.batch_index = j.value("batch_index", -1);
    const json& pose = j.at("pose");
    const VecX t = read_vec(pose.at("t"), "pose.t");
    const VecX q = read_vec(pose.at("quat_wxyz"), "pose.quat_wxyz");
    if (t.size() != 3 || q.size() != 4) throw InputError("pose has the wrong shape");
    if (std::abs(q.norm() - 1.0) > 1e-6) throw InputError("pose quaternion is not unit");
    r.pose.translation = t;
    r.pose.rotation = Quat(q[0], q[1], q[2], q[3]);
    r.pose.theta = read_vec(pose.at("theta"), "pose.theta");
    if (dof >= 0 && r.pose.theta.size() != dof) throw InputError("theta length does not match the hand");
    const json& e = j.at("energy");
    r.energy.total = e.at("total").get<double>();
    r.energy.fc = e.at("fc").get<double>();
    r.energy.bar = e.at("bar").get<double>();
    r.energy.dis = e.at("dis").get<double>();
    r.energy.dir = e.at("dir").get<double>();
    r.energy.pen = e.at("pen").get<double>();
    r.energy.spen = e.at("spen").get<double>();
    r.energy.limit = e.at("limit").get<double>();
    r.energy.lp_stable = e.at("lp_stable").get<bool>();
    const json& f = j.at("flags");
    r.flags.pen_ok = f.at("pen_ok").get<bool>();
    r.flags.spen_ok = f.at("spen_ok").get<bool>();
    r.flags.gravity_ok = f.at("gravity_ok").get<bool>();
    r.flags.part_ok = f.at("part_ok").get<bool>();
    r.flags.max_pen = f.at("max_pen").get<double>();
    r.flags.max_spen = f.at("max_spen").get<double>();
    r.flags.gravity_fail_axes = f.at("gravity_fail_axes").get<std::vector<std::string>>();
    r.caption = j.at("caption").get<std::string>();
    for (const auto& name : j.at("contacting_fingers")) {
      r.contacting_fingers.push_back(finger_tag_from_string(name.get<std::string>()));
    }
    r.pta = j.at("metrics").at("pta").get<bool>();
    r.pga = j.at("metrics").at("pga").get<bool>();
    const json& p = j.at("provenance");
    r.seed = p.at("seed").get<std::uint64_t>();
    r.config_hash = p.at("config_hash").get<std::string>();
    r.tool_version = p.at("tool_version").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("record schema mismatch: ") + e.what());
  }
}

const PartAnalysis& ObjectContext::part(int id) const {
  for (const auto& p : parts) {
    if (p.part == id) return p;
  }
  throw InputError("unknown part id " + std::to_string(id));
}

ObjectContext analyze_object(const PartLabeledMesh& mesh, const PipelineConfig& config, std::uint64_t seed) {
  const std::uint64_t s = stream_seed(seed, kObbStream);
  ObjectContext ctx;
  ctx.object_obb = fit_object_obb(mesh, config.classify.obb_samples, s);
  ctx.parts = analyze_parts(mesh, config.classify, s);
  return ctx;
}

int resolve_part(const PartLabeledMesh& mesh, const std::string& part) {
  try {
    std::size_t used = 0;
    const int id = std::stoi(part, &used);
    if (used == part.size() && mesh.has_part(id)) return id;
  } catch (const std::exception&) {
  }
  for (const auto& [id, name] : mesh.part_names) {
    if (name == part) return id;
  }
  throw InputError("unknown part id '" + part + "'");
}

namespace {

void fill_validation(GraspRecord& r, const ValidationResult& v) {
  r.flags = v.flags;
  r.caption = v.caption;
  r.contacting_fingers = v.contacts.contacting_fingers;
  r.pta = v.pta;
  r.pga = v.pga;
}

}  // namespace

SynthResult synthesize(const PipelineConfig& config, const HandModel& hand, const MeshIndex& mesh, int part,
                       Split split, int batch, std::uint64_t seed) {
  const PartLabeledMesh& m = mesh.mesh();
  if (!m.has_part(part)) throw InputError("unknown part id " + std::to_string(part));
  const ObjectContext object = analyze_object(m, config, seed);
  const PartAnalysis& analysis = object.part(part);
  const auto inits = make_init_batch(analysis, m, hand, split, config.jitter, batch, seed);
  const GraspScene scene = make_scene(hand, mesh, part, object.object_obb.center,
                                      0.5 * object.object_obb.diagonal(), config.energy.off_part_samples,
                                      stream_seed(seed, kSceneStream, static_cast<std::uint64_t>(part)));
  OptimizerConfig opt = config.optimizer;
  opt.seed = seed;
  const OptimizationResult result = optimize_batch(inits, scene, config.energy, opt);

  SynthResult out;
  out.requested = static_cast<int>(inits.size());
  out.dropped = result.report.failed_count();
  out.records.resize(result.poses.size());
  const std::string hash = config_hash(config);
  parallel_for(result.poses.size(), [&](std::size_t i) {
    GraspRecord& r = out.records[i];
    r.object_id = m.object_name;
    r.part_id = part;
    r.part_name = m.part_name(part);
    r.split = split;
    r.batch_index = result.source_index[i];
    r.pose = result.poses[i];
    r.energy = result.report.per_pose[static_cast<std::size_t>(r.batch_index)].final;
    r.seed = seed;
    r.config_hash = hash;
    fill_validation(r, validate(r.pose, hand, mesh, part, config.validation, object.object_obb.center));
  });
  return out;
}

void revalidate(GraspRecord& record, const PipelineConfig& config, const HandModel& hand, const MeshIndex& mesh,
                const ObjectContext& object) {
  if (!mesh.mesh().has_part(record.part_id)) throw InputError("unknown part id " + std::to_string(record.part_id));
  fill_validation(record, validate(record.pose, hand, mesh, record.part_id, config.validation, object.object_obb.center));
  PipelineConfig effective = config;
  effective.seed = record.seed;
  record.config_hash = config_hash(effective);
  record.tool_version = kToolVersion;
}

std::vector<GraspRecord> read_records(const std::filesystem::path& path, int dof, int& skipped) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<GraspRecord> out;
  skipped = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line), dof));
    } catch (const std::exception&) {
      ++skipped;
    }
  }
  return out;
}

void write_records(const std::filesystem::path& path, const std::vector<GraspRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

namespace {

PipelineConfig config_from(const std::filesystem::path& path) {
  return path.empty() ? [] {
    PipelineConfig c = default_config();
    c.validate();
    return c;
  }()
                      : load_config(path);
}

}  // namespace

int cmd_synth(const SynthArgs& args, std::ostream& log) {
  PipelineConfig config = config_from(args.config);
  if (args.seed) config.seed = *args.seed;
  const int batch = args.batch.value_or(config.batch);
  if (batch < 1) throw InputError("batch must be >= 1");
  const Split split = split_from_string(args.split);
  const HandModel hand = load_hand(config.hand_file);
  const MeshIndex mesh(load_mesh(args.mesh, args.parts));
  const int part = resolve_part(mesh.mesh(), args.part);

  const SynthResult result = synthesize(config, hand, mesh, part, split, batch, config.seed);
  write_records(args.out, result.records);

  int valid = 0;
  for (const auto& r : result.records) valid += r.flags.valid() ? 1 : 0;
  const auto n = result.records.size();
  log << "synth: object=" << mesh.mesh().object_name << " part=" << mesh.mesh().part_name(part)
      << " split=" << to_string(split) << " requested=" << result.requested << " survived=" << n
      << " dropped=" << result.dropped << " valid=" << valid;
  if (n > 0) {
    log << " validity_rate=" << std::setprecision(4) << static_cast<double>(valid) / static_cast<double>(n)
        << " mean_total=" << mean_of(result.records, &EnergyBreakdown::total)
        << " mean_fc=" << mean_of(result.records, &EnergyBreakdown::fc)
        << " mean_dis=" << mean_of(result.records, &EnergyBreakdown::dis)
        << " mean_pen=" << mean_of(result.records, &EnergyBreakdown::pen);
  } else {
    log << " validity_rate=n/a";
  }
  log << '\n';
  return 0;
}

int cmd_validate(const ValidateArgs& args, std::ostream& log) {
  const PipelineConfig config = config_from(args.config);
  const HandModel hand = load_hand(config.hand_file);
  const MeshIndex mesh(load_mesh(args.mesh, args.parts));
  int skipped = 0;
  std::vector<GraspRecord> records = read_records(args.grasps, hand.dof(), skipped);

  // The wrench center depends on the object box, which is fitted with the record's seed.
  std::map<std::uint64_t, ObjectContext> objects;
  for (const auto& r : records) {
    if (!objects.count(r.seed)) objects.emplace(r.seed, analyze_object(mesh.mesh(), config, r.seed));
  }
  std::vector<int> ok(records.size(), 1);
  parallel_for(records.size(), [&](std::size_t i) {
    try {
      revalidate(records[i], config, hand, mesh, objects.at(records[i].seed));
    } catch (const InputError&) {
      ok[i] = 0;
    }
  });
  std::vector<GraspRecord> kept;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (ok[i]) kept.push_back(records[i]);
    else ++skipped;
  }
  write_records(args.out, kept);
  int valid = 0;
  for (const auto& r : kept) valid += r.flags.valid() ? 1 : 0;
  log << "validate: records=" << kept.size() << " valid=" << valid << " skipped=" << skipped << '\n';
  return 0;
}

std::vector<PartMetrics> eval_metrics(const std::vector<GraspRecord>& records) {
  std::map<int, PartMetrics> by_part;
  PartMetrics all;
  all.part_name = "all";
  for (const auto& r : records) {
    PartMetrics& m = by_part[r.part_id];
    m.part_id = r.part_id;
    m.part_name = r.part_name;
    for (PartMetrics* t : {&m, &all}) {
      ++t->count;
      t->valid += r.flags.valid() ? 1 : 0;
      t->pta += r.pta ? 1 : 0;
      t->pga += r.pga ? 1 : 0;
      t->suc_proxy += r.flags.gravity_ok ? 1 : 0;
    }
  }
  std::vector<PartMetrics> out;
  for (const auto& [id, m] : by_part) out.push_back(m);
  if (!records.empty()) out.push_back(all);
  return out;
}

namespace {

json rate(int k, int n) { return n == 0 ? json("n/a") : json(static_cast<double>(k) / n); }

std::string rate_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v.get<double>();
  return s.str();
}

}  // namespace

json metrics_to_json(const std::vector<PartMetrics>& metrics) {
  json rows = json::array();
  for (const auto& m : metrics) {
    if (m.pga > m.pta) throw Error("internal: PGA count exceeds PTA count");
    rows.push_back({{"part_id", m.part_id},
                    {"part_name", m.part_name},
                    {"count", m.count},
                    {"validity_rate", rate(m.valid, m.count)},
                    {"pta_rate", rate(m.pta, m.count)},
                    {"pga_rate", rate(m.pga, m.count)},
                    {"suc_proxy_rate", rate(m.suc_proxy, m.count)}});
  }
  if (metrics.empty()) {
    rows.push_back({{"part_id", -1}, {"part_name", "all"}, {"count", 0}, {"validity_rate", "n/a"},
                    {"pta_rate", "n/a"}, {"pga_rate", "n/a"}, {"suc_proxy_rate", "n/a"}});
  }
  return {{"metrics", rows}};
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& log) {
  int skipped = 0;
  const std::vector<GraspRecord> records = read_records(args.grasps, -1, skipped);
  if (!args.mesh.empty()) {
    const PartLabeledMesh mesh = load_mesh(args.mesh, args.parts);
    for (const auto& r : records) {
      if (!mesh.has_part(r.part_id)) throw InputError("record refers to unknown part id " + std::to_string(r.part_id));
    }
  }
  const auto metrics = eval_metrics(records);
  const json j = metrics_to_json(metrics);
  out << std::left << std::setw(14) << "part" << std::setw(8) << "count" << std::setw(10) << "valid"
      << std::setw(10) << "pta" << std::setw(10) << "pga" << "suc_proxy\n";
  for (const auto& row : j.at("metrics")) {
    out << std::left << std::setw(14) << row.at("part_name").get<std::string>() << std::setw(8)
        << row.at("count").get<int>() << std::setw(10) << rate_text(row.at("validity_rate")) << std::setw(10)
        << rate_text(row.at("pta_rate")) << std::setw(10) << rate_text(row.at("pga_rate")) << rate_text(row.at("suc_proxy_rate"))
        << '\n';
  }
  if (!args.json_out.empty()) {
    std::ofstream f(args.json_out);
    if (!f) throw InputError("cannot write " + args.json_out.string());
    f << j.dump(2) << '\n';
  } else {
    out << j.dump() << '\n';
  }
  if (skipped > 0) log << "eval: skipped " << skipped << " malformed records\n";
  return 0;
}

std::vector<ExportPoint> export_points(const HandModel& hand, const GraspPose& pose, int sphere_samples) {
  const HandFrames frames = forward_kinematics(hand, pose);
  const auto dirs = fibonacci_directions(sphere_samples);
  std::vector<ExportPoint> out;
  for (const auto& s : collision_spheres_world(hand, frames)) {
    for (const Vec3& d : dirs) out.push_back({s.center + s.radius * d, 0});
  }
  for (const auto& c : all_contact_candidates_world(hand, frames)) out.push_back({c.point, 1});
  return out;
}

void write_ply(const std::filesystem::path& path, const std::vector<ExportPoint>& points) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nproperty uchar kind\nend_header\n";
  out << std::setprecision(17);
  for (const auto& p : points) out << p.p.x() << ' ' << p.p.y() << ' ' << p.p.z() << ' ' << p.kind << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

int cmd_export(const ExportArgs& args, std::ostream& log) {
  if (args.format != "ply") throw InputError("unsupported export format '" + args.format + "'");
  const HandModel hand = load_hand(args.hand);
  int skipped = 0;
  const auto records = read_records(args.grasps, hand.dof(), skipped);
  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  if (ec || !std::filesystem::is_directory(args.out_dir)) {
    throw InputError("cannot create output directory " + args.out_dir.string());
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "grasp_%05zu.ply", i);
    write_ply(args.out_dir / name, export_points(hand, records[i].pose, args.sphere_samples));
  }
  log << "export: wrote " << records.size() << " files, skipped " << skipped << '\n';
  return 0;
}

json obb_report(const PartLabeledMesh& mesh, const ObjectContext& object) {
  auto box_json = [](const Obb& b) {
    json axes = json::array();
    for (int i = 0; i < 3; ++i) axes.push_back(vec3_json(b.axis(i)));
    return json{{"center", vec3_json(b.center)}, {"axes", axes}, {"half_extents", vec3_json(b.half_extents)}};
  };
  json parts = json::array();
  for (const auto& p : object.parts) {
    json row = box_json(p.obb);
    row["part_id"] = p.part;
    row["part_name"] = mesh.part_name(p.part);
    row["category"] = std::string(to_string(p.category));
    row["principal_direction"] = vec3_json(p.principal_direction);
    parts.push_back(row);
  }
  return {{"object_id", mesh.object_name}, {"object_obb", box_json(object.object_obb)}, {"parts", parts}};
}

int cmd_obb(const ObbArgs& args, std::ostream& out, std::ostream& log) {
  PipelineConfig config = config_from(args.config);
  if (args.seed) config.seed = *args.seed;
  const PartLabeledMesh mesh = load_mesh(args.mesh, args.parts);
  const ObjectContext object = analyze_object(mesh, config, config.seed);
  const json j = obb_report(mesh, object);
  if (args.out.empty()) {
    out << j.dump(2) << '\n';
  } else {
    std::ofstream f(args.out);
    if (!f) throw InputError("cannot write " + args.out.string());
    f << j.dump(2) << '\n';
  }
  for (const auto& p : object.parts) {
    log << "obb: " << mesh.part_name(p.part) << " -> " << to_string(p.category) << '\n';
  }
  return 0;
}

int cmd_flow_demo(const FlowDemoArgs& args, std::ostream& out) {
  if (args.dim < 1 || args.pairs < 1 || args.steps < 1) throw InputError("flow-demo parameters must be positive");
  Rng rng(args.seed);
  const int d = args.dim;
  // Data: x1 = A x0 + b for a fixed random affine map; t uniform.
  MatX A = MatX::Identity(d, d);
  VecX b(d);
  for (int i = 0; i < d; ++i) {
    b[i] = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < d; ++k) A(i, k) += 0.3 * rng.uniform(-1.0, 1.0);
  }
  std::vector<FlowSamplePair> pairs(static_cast<std::size_t>(args.pairs));
  for (auto& p : pairs) {
    p.x0 = VecX(d);
    for (int i = 0; i < d; ++i) p.x0[i] = rng.normal();
    p.x1 = A * p.x0 + b;
    p.t = rng.uniform();
  }
  const LinearField field = fit_linear_field(pairs);
  const VelocityField v = [&](const VecX& x, double t) { return field(x, t); };
  const double loss = cfm_loss(v, pairs);
  const double zero_loss = cfm_loss([&](const VecX& x, double) { return VecX(VecX::Zero(x.size())); }, pairs);
  double err = 0.0;
  for (const auto& p : pairs) err += (euler_sample(v, p.x0, args.steps) - p.x1).norm();
  err /= static_cast<double>(pairs.size());
  out << json{{"dim", d}, {"pairs", args.pairs}, {"steps", args.steps}, {"linear_field_loss", loss},
              {"zero_field_loss", zero_loss}, {"mean_endpoint_error", err}}
             .dump()
      << '\n';
  return 0;
}

}  // namespace dexforge
