#include "cmha/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cmha/correspondence.hpp"
#include "cmha/error.hpp"
#include "cmha/gradcheck.hpp"
#include "cmha/parallel.hpp"
#include "cmha/pipeline.hpp"
#include "cmha/ply.hpp"
#include "cmha/serialization.hpp"
#include "cmha/synth.hpp"
#include "json.hpp"

namespace cmha::cli {

namespace fs = std::filesystem;

namespace {

// Bad arguments or file trouble; maps to kExitUsage.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs fn, turning any failure into an InputError.
template <typename Fn>
auto input(Fn&& fn) {
  try {
    return fn();
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
}

// Shared exception-to-exit-code mapping for every command.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
}

struct SceneRef {
  std::string name;
  fs::path dir;
};

bool is_scene_dir(const fs::path& p) {
  std::error_code ec;
  return fs::is_regular_file(p / "meta.json", ec);
}

// One scene directory, or every scene directory directly under `root`
// in name order.
std::vector<SceneRef> list_scenes(const std::string& root) {
  const fs::path p(root);
  std::error_code ec;
  if (!fs::is_directory(p, ec)) throw InputError("cannot read " + root);
  if (is_scene_dir(p)) return {{p.filename().string(), p}};
  std::vector<SceneRef> out;
  for (const auto& entry : fs::directory_iterator(p, ec)) {
    if (entry.is_directory() && is_scene_dir(entry.path()))
      out.push_back({entry.path().filename().string(), entry.path()});
  }
  if (ec) throw InputError("cannot read " + root);
  if (out.empty()) throw InputError("cannot read scenes from " + root + ": no meta.json found");
  std::sort(out.begin(), out.end(), [](const SceneRef& a, const SceneRef& b) { return a.name < b.name; });
  return out;
}

bool single_scene(const std::string& root) { return is_scene_dir(fs::path(root)); }

PipelineConfig load_pipeline_config(const std::string& path, std::optional<std::uint64_t> seed) {
  return input([&] {
    PipelineConfig cfg = path.empty() ? PipelineConfig{} : pipeline_config_from_json(read_text_file(path));
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  });
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot write " + dir.string() + ": " + ec.message());
}

void write_outputs(const fs::path& dir, const RegistrationResult& r) {
  input([&] {
    make_dir(dir);
    write_text_file((dir / "transform.json").string(), transform_to_json(r.transform));
    write_correspondences_csv((dir / "correspondences.csv").string(), r.dense);
    return 0;
  });
}

std::string scene_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04zu", i);
  return buf;
}

}  // namespace

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.out.empty()) throw InputError("--out is required");
    if (opts.count < 1) throw InputError("--count must be >= 1");
    SceneConfig base = input([&] {
      SceneConfig c = opts.config.empty() ? SceneConfig{} : scene_config_from_json(read_text_file(opts.config));
      if (opts.seed) c.seed = *opts.seed;
      c.validate();
      return c;
    });
    make_dir(opts.out);
    parallel_for(opts.count, max_workers(), [&](std::size_t i) {
      SceneConfig cfg = base;
      cfg.seed = base.seed + i;
      const SyntheticScene scene = generate_scene(cfg);
      input([&] {
        export_scene(scene, (fs::path(opts.out) / scene_dir_name(i)).string());
        return 0;
      });
    });
    out << "wrote " << opts.count << " scene" << (opts.count == 1 ? "" : "s") << " to " << opts.out
        << "\n";
    return kExitOk;
  });
}

int cmd_register(const RegisterOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.out.empty()) throw InputError("--out is required");
    const bool ply_mode = !opts.src_ply.empty() || !opts.tgt_ply.empty();
    if (ply_mode && (opts.src_ply.empty() || opts.tgt_ply.empty()))
      throw InputError("--src and --tgt go together");
    if (ply_mode == !opts.input.empty())
      throw InputError("give either a scene directory or --src/--tgt");
    const PipelineConfig cfg = load_pipeline_config(opts.config, opts.seed);
    const HybridWeights weights = input([&] {
      HybridWeights w = opts.weights.empty() ? pipeline_weights(cfg) : load_weights(opts.weights);
      if (w.d != cfg.stack.d || w.n_iters() != cfg.stack.n_iters)
        throw Error("weights do not match the stack config");
      return w;
    });
    const fs::path out_dir(opts.out);
    RunReport report;
    report.config = cfg;

    if (ply_mode) {
      const auto [src, tgt] = input([&] { return std::pair{read_ply(opts.src_ply), read_ply(opts.tgt_ply)}; });
      const RegistrationResult r = register_pair(src, tgt, cfg, weights, max_workers());
      write_outputs(out_dir, r);
      report.pairs.push_back({fs::path(opts.src_ply).stem().string(), {}, r.timings});
      report.aggregate();
      input([&] {
        write_text_file((out_dir / "report.json").string(), run_report_to_json(report));
        return 0;
      });
      out << "registered " << opts.src_ply << " -> " << opts.tgt_ply << "\n";
      return kExitOk;
    }

    const std::vector<SceneRef> refs = input([&] { return list_scenes(opts.input); });
    const bool single = single_scene(opts.input);
    std::vector<SyntheticScene> scenes(refs.size());
    input([&] {
      parallel_for(refs.size(), max_workers(), [&](std::size_t i) { scenes[i] = import_scene(refs[i].dir.string()); });
      return 0;
    });

    // Pairs run in parallel; a single pair spreads its patches instead.
    const std::size_t outer = single ? 1 : max_workers();
    const std::size_t inner = single ? max_workers() : 1;
    report.pairs.resize(refs.size());
    std::vector<std::string> failures(refs.size());
    parallel_for(refs.size(), outer, [&](std::size_t i) {
      PairEntry& e = report.pairs[i];
      e.name = refs[i].name;
      try {
        const RegistrationResult r = register_scene(scenes[i], cfg, weights, inner);
        e.metrics = evaluate_pair(scenes[i], r.transform, r.dense, r.coarse, cfg.metrics);
        e.timings = r.timings;
        write_outputs(single ? out_dir : out_dir / refs[i].name, r);
      } catch (const StageError& ex) {
        failures[i] = ex.what();
        e.metrics = evaluate_pair(scenes[i], RigidTransform::identity(), {}, {}, cfg.metrics);
      }
    });
    report.aggregate();
    input([&] {
      make_dir(out_dir);
      write_text_file((out_dir / "report.json").string(), run_report_to_json(report));
      return 0;
    });

    std::size_t failed = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (failures[i].empty()) continue;
      ++failed;
      err << "error: " << refs[i].name << ": " << failures[i] << "\n";
    }
    out << "registered " << refs.size() - failed << "/" << refs.size() << " pairs, RR " << report.rr
        << "\n";
    return failed == 0 ? kExitOk : kExitPipeline;
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.predictions.empty() || opts.scenes.empty())
      throw InputError("need a predictions directory and a scenes directory");
    PipelineConfig cfg = load_pipeline_config(opts.config, std::nullopt);
    if (opts.rr_threshold) {
      cfg.metrics.rr_threshold = *opts.rr_threshold;
      input([&] {
        cfg.validate();
        return 0;
      });
    }
    const std::vector<SceneRef> refs = input([&] { return list_scenes(opts.scenes); });
    const bool single = single_scene(opts.scenes);
    const fs::path pred_root(opts.predictions);

    std::vector<fs::path> pred_dirs;
    input([&] {
      std::error_code ec;
      if (!fs::is_directory(pred_root, ec)) throw InputError("cannot read " + opts.predictions);
      if (single) {
        pred_dirs.push_back(pred_root);
        return 0;
      }
      std::size_t found = 0;
      for (const auto& entry : fs::directory_iterator(pred_root))
        if (entry.is_directory() && fs::is_regular_file(entry.path() / "transform.json")) ++found;
      if (found != refs.size())
        throw InputError("count mismatch: " + std::to_string(found) + " predictions for " +
                         std::to_string(refs.size()) + " scenes");
      for (const SceneRef& r : refs) pred_dirs.push_back(pred_root / r.name);
      return 0;
    });

    // Timings come from the registration report when it is present.
    std::map<std::string, StageTimings> timings;
    input([&] {
      const fs::path rp = pred_root / "report.json";
      if (fs::is_regular_file(rp))
        for (const PairEntry& p : run_report_from_json(read_text_file(rp.string())).pairs)
          timings[p.name] = p.timings;
      return 0;
    });

    RunReport report;
    report.config = cfg;
    report.pairs.resize(refs.size());
    input([&] {
      parallel_for(refs.size(), max_workers(), [&](std::size_t i) {
        const SyntheticScene scene = import_scene(refs[i].dir.string());
        const RigidTransform t =
            transform_from_json(read_text_file((pred_dirs[i] / "transform.json").string()));
        const fs::path csv = pred_dirs[i] / "correspondences.csv";
        const CorrespondenceSet dense =
            fs::is_regular_file(csv) ? read_correspondences_csv(csv.string()) : CorrespondenceSet{};
        PairEntry& e = report.pairs[i];
        e.name = refs[i].name;
        e.metrics = evaluate_pair(scene, t, dense, {}, cfg.metrics);
        if (auto it = timings.find(e.name); it != timings.end()) e.timings = it->second;
      });
      return 0;
    });
    report.aggregate();

    const std::string text = run_report_to_json(report);
    if (opts.out.empty()) {
      out << text;
    } else {
      input([&] {
        make_dir(opts.out);
        write_text_file((fs::path(opts.out) / "report.json").string(), text);
        return 0;
      });
      out << "RR " << report.rr << " over " << report.pairs.size() << " pairs\n";
    }
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckCliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    GradCheckOptions g;
    g.seed = opts.seed;
    g.n_p = opts.n_p;
    g.n_q = opts.n_q;
    g.d = opts.d;
    g.gradient_fault = opts.gradient_fault;
    const std::vector<LossGradCheck> checks = input([&] { return run_loss_gradchecks(g); });

    char line[256];
    std::snprintf(line, sizeof line, "%-24s %-14s %-14s %-8s %s\n", "check", "max_rel_error", "raw_rel_error",
                  "status", "worst");
    out << line;
    bool all = true;
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const LossGradCheck& c : checks) {
      std::snprintf(line, sizeof line, "%-24s %-14.6e %-14.6e %-8s %s\n", c.name.c_str(),
                    c.report.max_rel_error, c.report.max_raw_rel_error, c.passed ? "PASS" : "FAIL", c.location.c_str());
      out << line;
      doc.push_back({{"name", c.name},
                     {"max_rel_error", c.report.max_rel_error},
                     {"raw_rel_error", c.report.max_raw_rel_error},
                     {"rounding_bound", c.report.rounding_bound},
                     {"worst", c.location},
                     {"analytic", c.report.analytic_at_worst},
                     {"numeric", c.report.numeric_at_worst},
                     {"checked", c.report.checked},
                     {"passed", c.passed}});
      if (!c.passed) {
        all = false;
        std::snprintf(line, sizeof line, "%s: relative error %.6e at %s (analytic %.9e, numeric %.9e)\n",
                      c.name.c_str(), c.report.max_rel_error, c.location.c_str(),
                      c.report.analytic_at_worst, c.report.numeric_at_worst);
        err << "error: " << line;
      }
    }
    if (!opts.out.empty()) {
      input([&] {
        make_dir(opts.out);
        write_text_file((fs::path(opts.out) / "gradcheck.json").string(), doc.dump(2) + "\n");
        return 0;
      });
    }
    return all ? kExitOk : kExitPipeline;
  });
}

}  // namespace cmha::cli
