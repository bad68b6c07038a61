#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cmha/commands.hpp"
#include "cmha/pipeline.hpp"

namespace {

// CLI11 leaves an optional untouched when the flag is absent.
template <typename T>
CLI::Option* add_optional(CLI::App* app, const std::string& name, std::optional<T>& slot,
                          const std::string& help) {
  return app->add_option_function<T>(name, [&slot](const T& v) { slot = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cmha::cli;
  CLI::App app{"Cross-modal hybrid-attention point cloud registration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cmha::kVersion));

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write seeded synthetic scene directories");
  synth_cmd->add_option("--config", synth.config, "Scene config JSON");
  add_optional(synth_cmd, "--seed", synth.seed, "Seed of the first scene");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of scenes")->check(CLI::PositiveNumber);

  RegisterOptions reg;
  CLI::App* reg_cmd = app.add_subcommand("register", "Register a scene, a directory of scenes or a PLY pair");
  reg_cmd->add_option("input", reg.input, "Scene directory or directory of scenes");
  reg_cmd->add_option("--src", reg.src_ply, "Source PLY");
  reg_cmd->add_option("--tgt", reg.tgt_ply, "Target PLY");
  reg_cmd->add_option("--config", reg.config, "Pipeline config JSON");
  reg_cmd->add_option("--weights", reg.weights, "Stack weights JSON");
  add_optional(reg_cmd, "--seed", reg.seed, "Weight seed (overrides the config)");
  reg_cmd->add_option("--out", reg.out, "Output directory")->required();

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score predicted transforms against scenes");
  eval_cmd->add_option("predictions", eval.predictions, "Output directory of register")->required();
  eval_cmd->add_option("scenes", eval.scenes, "Scene directory or directory of scenes")->required();
  eval_cmd->add_option("--config", eval.config, "Pipeline config JSON (metric thresholds)");
  add_optional(eval_cmd, "--rr-threshold", eval.rr_threshold, "RMSE bound for a registered pair, meters");
  eval_cmd->add_option("--out", eval.out, "Directory for report.json (stdout when absent)");

  GradcheckCliOptions grad;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference checks of the loss gradients");
  grad_cmd->add_option("--seed", grad.seed, "Instance seed");
  grad_cmd->add_option("--n-p", grad.n_p, "Source superpoints")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--n-q", grad.n_q, "Target superpoints")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--d", grad.d, "Feature width")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--gradient-fault", grad.gradient_fault,
                       "Scale analytic gradients by 1 + x (negative control)");
  grad_cmd->add_option("--out", grad.out, "Directory for gradcheck.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*synth_cmd) return cmd_synth(synth, std::cout, std::cerr);
  if (*reg_cmd) return cmd_register(reg, std::cout, std::cerr);
  if (*eval_cmd) return cmd_eval(eval, std::cout, std::cerr);
  return cmd_gradcheck(grad, std::cout, std::cerr);
}
