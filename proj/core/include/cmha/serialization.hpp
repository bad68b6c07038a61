#pragma once

#include <string>

#include "cmha/geometry.hpp"
#include "cmha/losses.hpp"
#include "cmha/metrics.hpp"
#include "cmha/pipeline.hpp"
#include "cmha/synth.hpp"

namespace cmha {

// JSON documents. Doubles are written in shortest round-trip form, so
// parsing a written document restores every bit. Readers accept partial
// documents (missing keys keep their defaults) and reject unknown keys.

// {"rotation": [9 values, row-major], "translation": [3 values]}
std::string transform_to_json(const RigidTransform& t);
RigidTransform transform_from_json(const std::string& text);

std::string scene_config_to_json(const SceneConfig& cfg);
SceneConfig scene_config_from_json(const std::string& text);

std::string pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const std::string& text);

std::string metrics_to_json(const MetricsReport& m);
std::string loss_report_to_json(const LossReport& r);

std::string run_report_to_json(const RunReport& r);
RunReport run_report_from_json(const std::string& text);

// Whole-file helpers. Both throw Error("cannot read <path>") /
// Error("cannot write <path>").
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cmha
