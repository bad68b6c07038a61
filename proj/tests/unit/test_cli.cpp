#include <filesystem>
#include <sstream>

#include "cmha/commands.hpp"
#include "cmha/serialization.hpp"
#include "cmha/synth.hpp"
#include "doctest.h"

using namespace cmha;
using namespace cmha::cli;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;

  explicit Workspace(const std::string& name)
      : root(fs::temp_directory_path() / ("cmha_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
    SceneConfig cfg;
    cfg.n_points = 600;
    cfg.n_superpoints = 24;
    cfg.overlap_fraction = 0.7;
    write_text_file((root / "scene.json").string(), scene_config_to_json(cfg));
  }
  ~Workspace() { fs::remove_all(root); }

  std::string path(const std::string& rel) const { return (root / rel).string(); }
};

}  // namespace

TEST_CASE("synth, register, eval end to end") {
  const Workspace ws("e2e");
  std::ostringstream out, err;

  SynthOptions so;
  so.config = ws.path("scene.json");
  so.seed = 5;
  so.out = ws.path("scenes");
  so.count = 2;
  REQUIRE(cmd_synth(so, out, err) == kExitOk);
  for (const char* f : {"src.ply", "tgt.ply", "gt.json", "meta.json"})
    CHECK(fs::exists(ws.root / "scenes" / "scene_0001" / f));
  CHECK(scene_config_from_json(read_text_file(ws.path("scenes/scene_0001/meta.json"))).seed == 6);

  RegisterOptions ro;
  ro.input = ws.path("scenes");
  ro.out = ws.path("pred");
  REQUIRE(cmd_register(ro, out, err) == kExitOk);
  CHECK(fs::exists(ws.root / "pred" / "scene_0000" / "transform.json"));
  CHECK(fs::exists(ws.root / "pred" / "scene_0000" / "correspondences.csv"));
  CHECK(fs::exists(ws.root / "pred" / "report.json"));

  EvalOptions eo;
  eo.predictions = ws.path("pred");
  eo.scenes = ws.path("scenes");
  eo.out = ws.path("eval");
  REQUIRE(cmd_eval(eo, out, err) == kExitOk);
  const RunReport report = run_report_from_json(read_text_file(ws.path("eval/report.json")));
  REQUIRE(report.pairs.size() == 2);
  CHECK(report.rr == 1.0);
  CHECK(report.inlier_ratio > 0.0);

  // Eval without --out prints the report.
  std::ostringstream printed;
  eo.out.clear();
  CHECK(cmd_eval(eo, printed, err) == kExitOk);
  CHECK(printed.str().find("\"rr\"") != std::string::npos);
}

TEST_CASE("register is deterministic and reads raw PLY pairs") {
  const Workspace ws("det");
  std::ostringstream out, err;
  SynthOptions so;
  so.config = ws.path("scene.json");
  so.out = ws.path("scene");
  REQUIRE(cmd_synth(so, out, err) == kExitOk);

  RegisterOptions ro;
  ro.input = ws.path("scene/scene_0000");
  ro.out = ws.path("a");
  REQUIRE(cmd_register(ro, out, err) == kExitOk);
  ro.out = ws.path("b");
  REQUIRE(cmd_register(ro, out, err) == kExitOk);
  CHECK(read_text_file(ws.path("a/transform.json")) == read_text_file(ws.path("b/transform.json")));
  CHECK(read_text_file(ws.path("a/correspondences.csv")) ==
        read_text_file(ws.path("b/correspondences.csv")));

  RegisterOptions raw;
  raw.src_ply = ws.path("scene/scene_0000/src.ply");
  raw.tgt_ply = ws.path("scene/scene_0000/tgt.ply");
  raw.out = ws.path("raw");
  CHECK(cmd_register(raw, out, err) == kExitOk);
  CHECK(fs::exists(ws.root / "raw" / "transform.json"));
}

TEST_CASE("input errors exit with the usage code") {
  const Workspace ws("errors");
  std::ostringstream out, err;

  RegisterOptions ro;
  ro.input = ws.path("nowhere");
  ro.out = ws.path("pred");
  CHECK(cmd_register(ro, out, err) == kExitUsage);
  CHECK(err.str().find("cannot read") != std::string::npos);

  RegisterOptions half;
  half.src_ply = ws.path("x.ply");
  half.out = ws.path("pred");
  CHECK(cmd_register(half, out, err) == kExitUsage);

  SynthOptions so;
  so.config = ws.path("missing.json");
  so.out = ws.path("s");
  CHECK(cmd_synth(so, out, err) == kExitUsage);

  write_text_file(ws.path("bad.json"), "{\"matching\": {\"topk\": 1}}");
  RegisterOptions badcfg;
  badcfg.input = ws.path("nowhere");
  badcfg.config = ws.path("bad.json");
  badcfg.out = ws.path("pred");
  CHECK(cmd_register(badcfg, out, err) == kExitUsage);

  EvalOptions eo;
  eo.predictions = ws.path("nowhere");
  eo.scenes = ws.path("nowhere");
  CHECK(cmd_eval(eo, out, err) == kExitUsage);
}

TEST_CASE("gradcheck command") {
  std::ostringstream out, err;
  GradcheckCliOptions opts;
  opts.n_p = 6;
  opts.n_q = 5;
  CHECK(cmd_gradcheck(opts, out, err) == kExitOk);
  CHECK(out.str().find("PASS") != std::string::npos);

  opts.gradient_fault = 0.01;
  std::ostringstream out2, err2;
  CHECK(cmd_gradcheck(opts, out2, err2) == kExitPipeline);
  CHECK(out2.str().find("FAIL") != std::string::npos);
  CHECK(err2.str().find("relative error") != std::string::npos);
}
