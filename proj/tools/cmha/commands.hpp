#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace cmha::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipeline = 1;  // registration or check failure
inline constexpr int kExitUsage = 2;     // bad arguments, unreadable or unwritable files

struct SynthOptions {
  std::string config;  // scene config JSON; empty keeps the defaults
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t count = 1;
};

// `input` is a scene directory, or a directory of scene directories. With
// src_ply / tgt_ply set instead, registers a raw pair.
struct RegisterOptions {
  std::string input;
  std::string src_ply;
  std::string tgt_ply;
  std::string config;   // pipeline config JSON
  std::string weights;  // stack weights JSON; empty draws them from the seed
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct EvalOptions {
  std::string predictions;
  std::string scenes;
  std::string config;
  std::optional<double> rr_threshold;
  std::string out;  // report.json goes here; empty prints to `out` stream
};

struct GradcheckCliOptions {
  std::uint64_t seed = 0;
  std::size_t n_p = 16;
  std::size_t n_q = 16;
  std::size_t d = 8;
  double gradient_fault = 0.0;  // negative control only
  std::string out;
};

// Each command reports progress on `out`, problems on `err`, and returns
// the process exit code.
int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err);
int cmd_register(const RegisterOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckCliOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace cmha::cli
