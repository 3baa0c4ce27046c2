#pragma once

#include "dexforge/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dexforge {

inline constexpr int kRecordSchema = 1;

struct GraspRecord {
  std::string object_id;
  int part_id = -1;
  std::string part_name;
  Split split = Split::Wrap;
  int batch_index = -1;
  GraspPose pose;
  EnergyBreakdown energy;
  ValidationFlags flags;
  std::string caption;
  std::vector<FingerTag> contacting_fingers;
  bool pta = false;
  bool pga = false;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string tool_version = kToolVersion;
};

nlohmann::json record_to_json(const GraspRecord& record);
/// Throws InputError when a field is missing, mistyped, or theta does not have `dof` entries.
GraspRecord record_from_json(const nlohmann::json& j, int dof);

/// Object-level state shared by every part of one mesh.
struct ObjectContext {
  Obb object_obb;
  std::vector<PartAnalysis> parts;
  const PartAnalysis& part(int id) const;
};
ObjectContext analyze_object(const PartLabeledMesh& mesh, const PipelineConfig& config, std::uint64_t seed);

struct SynthResult {
  std::vector<GraspRecord> records;
  int requested = 0;
  int dropped = 0;
};

/// OBB, classification, initialisation, optimisation, validation and captioning for one part.
SynthResult synthesize(const PipelineConfig& config, const HandModel& hand, const MeshIndex& mesh, int part,
                       Split split, int batch, std::uint64_t seed);

/// Recompute flags, contacts, caption and metrics of a record in place; the pose is untouched. The
/// record is re-stamped with the hash of `config` under its own seed.
void revalidate(GraspRecord& record, const PipelineConfig& config, const HandModel& hand, const MeshIndex& mesh,
                const ObjectContext& object);

/// Accepts a numeric id or a part name.
int resolve_part(const PartLabeledMesh& mesh, const std::string& part);

// Subcommands. Each returns the process exit code; data goes to files, summaries to `log`.
struct SynthArgs {
  std::filesystem::path mesh, parts, config, out;
  std::string part;
  std::string split = "wrap";
  std::optional<int> batch;
  std::optional<std::uint64_t> seed;
};
int cmd_synth(const SynthArgs& args, std::ostream& log);

struct ValidateArgs {
  std::filesystem::path mesh, parts, grasps, config, out;
};
int cmd_validate(const ValidateArgs& args, std::ostream& log);

struct EvalArgs {
  std::filesystem::path grasps, mesh, parts, json_out;
};
struct PartMetrics {
  int part_id = -1;
  std::string part_name;
  int count = 0;
  int valid = 0;
  int pta = 0;
  int pga = 0;
  int suc_proxy = 0;
};
/// Per-part counts in ascending part id order, plus an "all" row (part_id -1) last when non-empty.
std::vector<PartMetrics> eval_metrics(const std::vector<GraspRecord>& records);
nlohmann::json metrics_to_json(const std::vector<PartMetrics>& metrics);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& log);

struct ExportArgs {
  std::filesystem::path grasps, hand, out_dir;
  std::string format = "ply";
  int sphere_samples = 32;
};
/// Vertices of one exported grasp: sphere surface samples (kind 0) then contact candidates (kind 1).
struct ExportPoint {
  Vec3 p;
  int kind = 0;
};
std::vector<ExportPoint> export_points(const HandModel& hand, const GraspPose& pose, int sphere_samples);
void write_ply(const std::filesystem::path& path, const std::vector<ExportPoint>& points);
int cmd_export(const ExportArgs& args, std::ostream& log);

struct ObbArgs {
  std::filesystem::path mesh, parts, config, out;
  std::optional<std::uint64_t> seed;
};
nlohmann::json obb_report(const PartLabeledMesh& mesh, const ObjectContext& object);
int cmd_obb(const ObbArgs& args, std::ostream& out, std::ostream& log);

struct FlowDemoArgs {
  int dim = 4;
  int pairs = 1000;
  int steps = 50;
  std::uint64_t seed = 0;
};
int cmd_flow_demo(const FlowDemoArgs& args, std::ostream& out);

/// Reads JSONL records, skipping (and counting) lines that fail to parse or validate.
std::vector<GraspRecord> read_records(const std::filesystem::path& path, int dof, int& skipped);
void write_records(const std::filesystem::path& path, const std::vector<GraspRecord>& records);

}  // namespace dexforge
