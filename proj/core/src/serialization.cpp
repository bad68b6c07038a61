#include "cmha/serialization.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cmha/attention.hpp"
#include "cmha/error.hpp"

namespace cmha {

namespace {

using Json = nlohmann::ordered_json;

Json parse(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(std::string("invalid ") + what + " JSON: " + e.what());
  }
}

void require_object(const Json& j, const char* what) {
  if (!j.is_object()) throw Error(std::string(what) + " must be a JSON object");
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* what) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw Error(std::string("unknown key '") + key + "' in " + what);
  }
}

// Reads j[key] into out when present.
template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception&) {
    throw Error(std::string("bad value for '") + key + "'");
  }
}

Json matrix_json(const Matrix& m) {
  Json data = Json::array();
  for (double v : m.data()) data.push_back(v);
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const Json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw Error("matrix data size does not match its shape");
  return Matrix(rows, cols, std::move(data));
}

Json transform_json(const RigidTransform& t) {
  Json rot = Json::array();
  for (const auto& row : t.rotation)
    for (double v : row) rot.push_back(v);
  return Json{{"rotation", rot},
              {"translation", Json::array({t.translation.x, t.translation.y, t.translation.z})}};
}

RigidTransform transform_from(const Json& j) {
  require_object(j, "transform");
  RigidTransform t;
  try {
    const auto rot = j.at("rotation").get<std::vector<double>>();
    const auto tr = j.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || tr.size() != 3) throw Error("transform needs 9 rotation and 3 translation values");
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) t.rotation[r][c] = rot[3 * r + c];
    t.translation = {tr[0], tr[1], tr[2]};
  } catch (const Json::exception& e) {
    throw Error(std::string("bad transform: ") + e.what());
  }
  return t;
}

Json scene_json(const SceneConfig& c) {
  return Json{{"n_points", c.n_points},
              {"n_superpoints", c.n_superpoints},
              {"overlap_fraction", c.overlap_fraction},
              {"noise_sigma", c.noise_sigma},
              {"outlier_fraction", c.outlier_fraction},
              {"feature_dim", c.feature_dim},
              {"feature_noise_sigma", c.feature_noise_sigma},
              {"seed", c.seed},
              {"image_rows", c.image_rows},
              {"image_cols", c.image_cols},
              {"focal", c.focal}};
}

SceneConfig scene_from(const Json& j) {
  require_object(j, "scene config");
  reject_unknown(j, {"n_points", "n_superpoints", "overlap_fraction", "noise_sigma",
                     "outlier_fraction", "feature_dim", "feature_noise_sigma", "seed",
                     "image_rows", "image_cols", "focal"},
                 "scene config");
  SceneConfig c;
  read_opt(j, "n_points", c.n_points);
  read_opt(j, "n_superpoints", c.n_superpoints);
  read_opt(j, "overlap_fraction", c.overlap_fraction);
  read_opt(j, "noise_sigma", c.noise_sigma);
  read_opt(j, "outlier_fraction", c.outlier_fraction);
  read_opt(j, "feature_dim", c.feature_dim);
  read_opt(j, "feature_noise_sigma", c.feature_noise_sigma);
  read_opt(j, "seed", c.seed);
  read_opt(j, "image_rows", c.image_rows);
  read_opt(j, "image_cols", c.image_cols);
  read_opt(j, "focal", c.focal);
  return c;
}

Json pipeline_json(const PipelineConfig& c) {
  const auto& e = c.stack.embedding;
  return Json{
      {"seed", c.seed},
      {"use_hybrid_stack", c.use_hybrid_stack},
      {"use_image_features", c.use_image_features},
      {"embedding",
       {{"sigma_d", e.sigma_d}, {"sigma_alpha", e.sigma_alpha}, {"k_anchors", e.k_anchors}}},
      {"stack",
       {{"n_iters", c.stack.n_iters},
        {"d", c.stack.d},
        {"position_scale", c.stack.position_scale},
        {"pixel_scale", c.stack.pixel_scale}}},
      {"matching",
       {{"k_coarse", c.matching.k_coarse},
        {"k_dense", c.matching.k_dense},
        {"l_iters", c.matching.l_iters},
        {"dustbin_logit", c.matching.dustbin_logit},
        {"feature_norm", c.matching.feature_norm}}},
      {"estimation",
       {{"tau_a", c.estimation.tau_a},
        {"min_pairs", c.estimation.min_pairs},
        {"refit_iterations", c.estimation.refit_iterations}}},
      {"loss",
       {{"delta_p", c.circle.delta_p},
        {"delta_n", c.circle.delta_n},
        {"gamma", c.circle.gamma},
        {"positive_overlap_min", c.circle.positive_overlap_min},
        {"lambda", c.lambda_weight}}},
      {"frontend",
       {{"n_superpoints", c.frontend.n_superpoints},
        {"image_rows", c.frontend.image_rows},
        {"image_cols", c.frontend.image_cols},
        {"focal", c.frontend.focal}}},
      {"metrics",
       {{"rr_threshold", c.metrics.rr_threshold},
        {"inlier_radius", c.metrics.inlier_radius},
        {"fmr_threshold", c.metrics.fmr_threshold}}}};
}

const Json& section(const Json& j, const char* key) {
  static const Json empty = Json::object();
  const auto it = j.find(key);
  if (it == j.end()) return empty;
  require_object(*it, key);
  return *it;
}

PipelineConfig pipeline_from(const Json& j) {
  require_object(j, "pipeline config");
  reject_unknown(j, {"seed", "use_hybrid_stack", "use_image_features", "embedding", "stack",
                     "matching", "estimation", "loss", "frontend", "metrics"},
                 "pipeline config");
  PipelineConfig c;
  read_opt(j, "seed", c.seed);
  read_opt(j, "use_hybrid_stack", c.use_hybrid_stack);
  read_opt(j, "use_image_features", c.use_image_features);

  const Json& emb = section(j, "embedding");
  reject_unknown(emb, {"sigma_d", "sigma_alpha", "k_anchors"}, "embedding");
  read_opt(emb, "sigma_d", c.stack.embedding.sigma_d);
  read_opt(emb, "sigma_alpha", c.stack.embedding.sigma_alpha);
  read_opt(emb, "k_anchors", c.stack.embedding.k_anchors);

  const Json& st = section(j, "stack");
  reject_unknown(st, {"n_iters", "d", "position_scale", "pixel_scale"}, "stack");
  read_opt(st, "n_iters", c.stack.n_iters);
  read_opt(st, "d", c.stack.d);
  read_opt(st, "position_scale", c.stack.position_scale);
  read_opt(st, "pixel_scale", c.stack.pixel_scale);
  c.stack.embedding.d = c.stack.d;

  const Json& m = section(j, "matching");
  reject_unknown(m, {"k_coarse", "k_dense", "l_iters", "dustbin_logit", "feature_norm"}, "matching");
  read_opt(m, "k_coarse", c.matching.k_coarse);
  read_opt(m, "k_dense", c.matching.k_dense);
  read_opt(m, "l_iters", c.matching.l_iters);
  read_opt(m, "dustbin_logit", c.matching.dustbin_logit);
  read_opt(m, "feature_norm", c.matching.feature_norm);

  const Json& est = section(j, "estimation");
  reject_unknown(est, {"tau_a", "min_pairs", "refit_iterations"}, "estimation");
  read_opt(est, "tau_a", c.estimation.tau_a);
  read_opt(est, "min_pairs", c.estimation.min_pairs);
  read_opt(est, "refit_iterations", c.estimation.refit_iterations);

  const Json& loss = section(j, "loss");
  reject_unknown(loss, {"delta_p", "delta_n", "gamma", "positive_overlap_min", "lambda"}, "loss");
  read_opt(loss, "delta_p", c.circle.delta_p);
  read_opt(loss, "delta_n", c.circle.delta_n);
  read_opt(loss, "gamma", c.circle.gamma);
  read_opt(loss, "positive_overlap_min", c.circle.positive_overlap_min);
  read_opt(loss, "lambda", c.lambda_weight);

  const Json& fe = section(j, "frontend");
  reject_unknown(fe, {"n_superpoints", "image_rows", "image_cols", "focal"}, "frontend");
  read_opt(fe, "n_superpoints", c.frontend.n_superpoints);
  read_opt(fe, "image_rows", c.frontend.image_rows);
  read_opt(fe, "image_cols", c.frontend.image_cols);
  read_opt(fe, "focal", c.frontend.focal);

  const Json& me = section(j, "metrics");
  reject_unknown(me, {"rr_threshold", "inlier_radius", "fmr_threshold"}, "metrics");
  read_opt(me, "rr_threshold", c.metrics.rr_threshold);
  read_opt(me, "inlier_radius", c.metrics.inlier_radius);
  read_opt(me, "fmr_threshold", c.metrics.fmr_threshold);
  return c;
}

Json metrics_json(const MetricsReport& m) {
  return Json{{"rre", m.rre},   {"rte", m.rte}, {"rmse", m.rmse}, {"inlier_ratio", m.inlier_ratio},
              {"fmr", m.fmr},   {"rr", m.rr},   {"pir", m.pir}};
}

MetricsReport metrics_from(const Json& j) {
  MetricsReport m;
  read_opt(j, "rre", m.rre);
  read_opt(j, "rte", m.rte);
  read_opt(j, "rmse", m.rmse);
  read_opt(j, "inlier_ratio", m.inlier_ratio);
  read_opt(j, "fmr", m.fmr);
  read_opt(j, "rr", m.rr);
  read_opt(j, "pir", m.pir);
  return m;
}

Json timings_json(const StageTimings& t) {
  return Json{{"model", t.model}, {"pose", t.pose}, {"total", t.total}};
}

StageTimings timings_from(const Json& j) {
  StageTimings t;
  read_opt(j, "model", t.model);
  read_opt(j, "pose", t.pose);
  read_opt(j, "total", t.total);
  return t;
}

Json layer_json(const AttentionLayer& l) {
  return Json{{"w_q", matrix_json(l.proj.w_q)}, {"w_k", matrix_json(l.proj.w_k)},
              {"w_v", matrix_json(l.proj.w_v)}, {"w_g", matrix_json(l.proj.w_g)},
              {"w_f", matrix_json(l.proj.w_f)}, {"seed", l.proj.seed}};
}

AttentionLayer layer_from(const Json& j, AttentionKind kind) {
  AttentionLayer l;
  l.kind = kind;
  l.proj.w_q = matrix_from(j.at("w_q"));
  l.proj.w_k = matrix_from(j.at("w_k"));
  l.proj.w_v = matrix_from(j.at("w_v"));
  l.proj.w_g = matrix_from(j.at("w_g"));
  l.proj.w_f = matrix_from(j.at("w_f"));
  l.proj.seed = j.at("seed").get<std::uint64_t>();
  return l;
}

}  // namespace

std::string transform_to_json(const RigidTransform& t) { return transform_json(t).dump(2) + "\n"; }

RigidTransform transform_from_json(const std::string& text) {
  return transform_from(parse(text, "transform"));
}

std::string scene_config_to_json(const SceneConfig& cfg) { return scene_json(cfg).dump(2) + "\n"; }

SceneConfig scene_config_from_json(const std::string& text) {
  return scene_from(parse(text, "scene config"));
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
  return pipeline_json(cfg).dump(2) + "\n";
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
  return pipeline_from(parse(text, "pipeline config"));
}

std::string metrics_to_json(const MetricsReport& m) { return metrics_json(m).dump(2) + "\n"; }

std::string loss_report_to_json(const LossReport& r) {
  const Json j{{"l_c", r.l_c}, {"l_f", r.l_f}, {"l_cmc", r.l_cmc}, {"total", r.total},
               {"lambda", r.lambda_weight}};
  return j.dump(2) + "\n";
}

std::string run_report_to_json(const RunReport& r) {
  Json pairs = Json::array();
  for (const PairEntry& p : r.pairs) {
    pairs.push_back(Json{{"name", p.name},
                         {"metrics", metrics_json(p.metrics)},
                         {"timings", timings_json(p.timings)}});
  }
  const Json j{{"version", r.version},
               {"aggregate",
                {{"rr", r.rr},
                 {"fmr", r.fmr},
                 {"inlier_ratio", r.inlier_ratio},
                 {"mean_rre", r.mean_rre},
                 {"mean_rte", r.mean_rte},
                 {"pairs", r.pairs.size()}}},
               {"timings", timings_json(r.timings)},
               {"pairs", pairs},
               {"config", pipeline_json(r.config)}};
  return j.dump(2) + "\n";
}

RunReport run_report_from_json(const std::string& text) {
  const Json j = parse(text, "run report");
  require_object(j, "run report");
  RunReport r;
  try {
    read_opt(j, "version", r.version);
    if (j.contains("config")) r.config = pipeline_from(j.at("config"));
    for (const Json& p : j.value("pairs", Json::array())) {
      PairEntry e;
      read_opt(p, "name", e.name);
      e.metrics = metrics_from(p.at("metrics"));
      if (p.contains("timings")) e.timings = timings_from(p.at("timings"));
      r.pairs.push_back(std::move(e));
    }
    const Json& agg = section(j, "aggregate");
    read_opt(agg, "rr", r.rr);
    read_opt(agg, "fmr", r.fmr);
    read_opt(agg, "inlier_ratio", r.inlier_ratio);
    read_opt(agg, "mean_rre", r.mean_rre);
    read_opt(agg, "mean_rte", r.mean_rte);
    if (j.contains("timings")) r.timings = timings_from(j.at("timings"));
  } catch (const Json::exception& e) {
    throw Error(std::string("bad run report: ") + e.what());
  }
  return r;
}

std::string weights_to_json(const HybridWeights& w) {
  Json iters = Json::array();
  for (const IterationWeights& it : w.iterations) {
    iters.push_back(Json{{"self", layer_json(it.self)},
                         {"aggregation", layer_json(it.aggregation)},
                         {"cross", layer_json(it.cross)}});
  }
  const Json j{{"d", w.d},
               {"n_iters", w.n_iters()},
               {"seed", w.seed},
               {"geo",
                {{"w_hidden", matrix_json(w.geo.w_hidden)},
                 {"w_d", matrix_json(w.geo.w_d)},
                 {"w_a", matrix_json(w.geo.w_a)}}},
               {"iterations", iters}};
  return j.dump() + "\n";
}

HybridWeights weights_from_json(const std::string& text) {
  const Json j = parse(text, "weights");
  HybridWeights w;
  try {
    w.d = j.at("d").get<std::size_t>();
    w.seed = j.at("seed").get<std::uint64_t>();
    const auto n_iters = j.at("n_iters").get<std::size_t>();
    const Json& geo = j.at("geo");
    w.geo.w_hidden = matrix_from(geo.at("w_hidden"));
    w.geo.w_d = matrix_from(geo.at("w_d"));
    w.geo.w_a = matrix_from(geo.at("w_a"));
    for (const Json& it : j.at("iterations")) {
      w.iterations.push_back({layer_from(it.at("self"), AttentionKind::kSelf),
                              layer_from(it.at("aggregation"), AttentionKind::kAggregation),
                              layer_from(it.at("cross"), AttentionKind::kCross)});
    }
    if (w.iterations.size() != n_iters) throw Error("weights: n_iters does not match iterations");
  } catch (const Json::exception& e) {
    throw Error(std::string("bad weights: ") + e.what());
  }
  return w;
}

void save_weights(const std::string& path, const HybridWeights& w) {
  write_text_file(path, weights_to_json(w));
}

HybridWeights load_weights(const std::string& path) { return weights_from_json(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error("cannot read " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw Error("cannot write " + path);
}

}  // namespace cmha
