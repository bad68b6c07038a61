#pragma once

#include <stdexcept>
#include <string>

namespace cmha {

// Raised on any precondition or numerical failure inside the library. The
// message is the stable, human-readable reason ("no superpoints",
// "degenerate patch", ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An Error annotated with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace cmha
