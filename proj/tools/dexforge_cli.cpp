// dexforge command-line entry point.
#include "dexforge/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace dexforge;

int main(int argc, char** argv) {
  CLI::App app{"dexforge: part-aware dexterous grasp synthesis"};
  app.require_subcommand(1);

  SynthArgs synth;
  std::uint64_t synth_seed = 0;
  int synth_batch = 0;
  auto* s = app.add_subcommand("synth", "optimise and validate grasps for one object part");
  s->add_option("--mesh", synth.mesh, "triangle mesh (.obj)")->required();
  s->add_option("--parts", synth.parts, "part labels (.json)")->required();
  s->add_option("--part", synth.part, "part id or name")->required();
  s->add_option("--split", synth.split, "wrap or pinch")->check(CLI::IsMember({"wrap", "pinch"}));
  auto* batch_opt = s->add_option("--batch", synth_batch, "initial poses per part");
  s->add_option("--config", synth.config, "pipeline config (.json)");
  s->add_option("--out", synth.out, "output JSONL")->required();
  auto* seed_opt = s->add_option("--seed", synth_seed, "random seed");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "recompute validation flags of existing records");
  v->add_option("--mesh", val.mesh)->required();
  v->add_option("--parts", val.parts)->required();
  v->add_option("--grasps", val.grasps, "input JSONL")->required();
  v->add_option("--config", val.config);
  v->add_option("--out", val.out, "output JSONL")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "validity / PTA / PGA / suc_proxy rates per part");
  e->add_option("--grasps", ev.grasps)->required();
  e->add_option("--mesh", ev.mesh);
  e->add_option("--parts", ev.parts);
  e->add_option("--json-out", ev.json_out, "write the metrics JSON here instead of stdout");

  ExportArgs ex;
  auto* x = app.add_subcommand("export", "write per-grasp point clouds");
  x->add_option("--grasps", ex.grasps)->required();
  x->add_option("--hand", ex.hand, "hand description (.json)")->required();
  x->add_option("--out-dir", ex.out_dir)->required();
  x->add_option("--format", ex.format)->check(CLI::IsMember({"ply"}));
  x->add_option("--sphere-samples", ex.sphere_samples)->check(CLI::PositiveNumber);

  ObbArgs ob;
  std::uint64_t obb_seed = 0;
  auto* o = app.add_subcommand("obb", "per-part boxes, categories and principal directions");
  o->add_option("--mesh", ob.mesh)->required();
  o->add_option("--parts", ob.parts)->required();
  o->add_option("--config", ob.config);
  o->add_option("--out", ob.out);
  auto* obb_seed_opt = o->add_option("--seed", obb_seed);

  FlowDemoArgs fd;
  auto* f = app.add_subcommand("flow-demo", "fit and sample a linear flow-matching field");
  f->add_option("--dim", fd.dim);
  f->add_option("--pairs", fd.pairs);
  f->add_option("--steps", fd.steps);
  f->add_option("--seed", fd.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) {
      if (*batch_opt) synth.batch = synth_batch;
      if (*seed_opt) synth.seed = synth_seed;
      return cmd_synth(synth, std::cerr);
    }
    if (v->parsed()) return cmd_validate(val, std::cerr);
    if (e->parsed()) return cmd_eval(ev, std::cout, std::cerr);
    if (x->parsed()) return cmd_export(ex, std::cerr);
    if (o->parsed()) {
      if (*obb_seed_opt) ob.seed = obb_seed;
      return cmd_obb(ob, std::cout, std::cerr);
    }
    if (f->parsed()) return cmd_flow_demo(fd, std::cout);
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return 3;
  }
  return 2;
}
