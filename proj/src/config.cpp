#include "gltt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gltt/error.hpp"
#include "json.hpp"

using nlohmann::json;

namespace gltt {

void ModelConfig::validate() const {
  backbone.validate();
  if (backbone.feature_dim != attention.feature_dim)
    throw ConfigError("model: backbone feature_dim and attention feature_dim differ");
  attention.validate(backbone.seeds);
  if (proposals == 0 || proposals >= backbone.seeds)
    throw ConfigError("model: proposals K must satisfy 0 < K < seeds");
  if (switches.importance && !switches.global_block)
    throw ConfigError("model: the importance branch needs the global block");
  if ((vote_norm == NormKind::batch || head.norm == NormKind::batch) && proposals < 2)
    throw ConfigError("model: batch normalization needs at least 2 proposals");
}

void Config::validate() const {
  model.validate();
  weights.validate();
  if (!(loss.positive_radius > 0) || loss.negative_radius < loss.positive_radius)
    throw ConfigError("loss: need 0 < positive_radius <= negative_radius");
  if (train.batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (!(train.sgd.lr >= 0) || train.sgd.momentum < 0 || train.sgd.momentum >= 1 ||
      train.sgd.grad_clip < 0)
    throw ConfigError("train: need lr >= 0, 0 <= momentum < 1, grad_clip >= 0");
  if (!(train.lr_final >= 0 && train.lr_final <= 1))
    throw ConfigError("train: lr_final must lie in [0, 1]");
  if (train.crop_jitter < 0 || train.yaw_jitter < 0)
    throw ConfigError("train: jitter must be non-negative");
  if (!(tracker.search_margin > 0)) throw ConfigError("tracker: search_margin must be positive");
  if (data.synthetic) data.synthetic->validate();
}

namespace {

// Reads fields from a JSON object, rejecting keys that were never consumed.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }
  void get_vec3(const char* key, Vec3& out) {
    std::vector<double> v{out[0], out[1], out[2]};
    get(key, v);
    if (v.size() != 3) throw ConfigError(where_ + "." + key + ": expected 3 numbers");
    out = {v[0], v[1], v[2]};
  }
  void get_norm(const char* key, NormKind& out) {
    std::string s = to_string(out);
    get(key, s);
    out = parse_norm_kind(s);
  }
  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

SyntheticSpec synthetic_from_json(const json& j, const std::string& where) {
  SyntheticSpec s;
  Reader r(j, where);
  std::string shape = to_string(s.shape);
  r.get("shape", shape);
  s.shape = parse_shape_kind(shape);
  r.get_vec3("size", s.size);
  r.get("frames", s.frames);
  r.get_vec3("translation", s.translation);
  r.get("yaw_rate", s.yaw_rate);
  r.get("noise", s.noise);
  r.get("clutter", s.clutter);
  r.get("clutter_extent", s.clutter_extent);
  r.get("target_points", s.target_points);
  r.get("surface_pad", s.surface_pad);
  r.get_vec3("initial_center", s.initial_center);
  r.get("initial_yaw", s.initial_yaw);
  r.get("motion_jitter", s.motion_jitter);
  r.get("category", s.category);
  r.get("seed", s.seed);
  r.get("sequences", s.sequences);
  return s;
}

json synthetic_to_json(const SyntheticSpec& s) {
  return {{"shape", to_string(s.shape)},
          {"size", s.size},
          {"frames", s.frames},
          {"translation", s.translation},
          {"yaw_rate", s.yaw_rate},
          {"noise", s.noise},
          {"clutter", s.clutter},
          {"clutter_extent", s.clutter_extent},
          {"target_points", s.target_points},
          {"surface_pad", s.surface_pad},
          {"initial_center", s.initial_center},
          {"initial_yaw", s.initial_yaw},
          {"motion_jitter", s.motion_jitter},
          {"category", s.category},
          {"seed", s.seed},
          {"sequences", s.sequences}};
}

void model_from_json(const json& j, ModelConfig& m) {
  Reader r(j, "model");
  r.get("template_points", m.backbone.template_points);
  r.get("search_points", m.backbone.search_points);
  r.get("seeds", m.backbone.seeds);
  r.get("feature_dim", m.backbone.feature_dim);
  r.get("group_size", m.backbone.group_size);
  r.get("point_hidden", m.backbone.point_hidden);
  m.attention.feature_dim = m.backbone.feature_dim;
  r.get("latent_dim", m.attention.latent_dim);
  r.get("sparse_count", m.attention.sparse_count);
  r.get("knn_count", m.attention.knn_count);
  r.get("proposals", m.proposals);
  r.get_norm("vote_norm", m.vote_norm);
  r.get_norm("head_norm", m.head.norm);
  r.get("decoupled_head", m.head.decoupled);
  r.get("global_block", m.switches.global_block);
  r.get("local_block", m.switches.local_block);
  r.get("importance", m.switches.importance);
}

json model_to_json(const ModelConfig& m) {
  return {{"template_points", m.backbone.template_points},
          {"search_points", m.backbone.search_points},
          {"seeds", m.backbone.seeds},
          {"feature_dim", m.backbone.feature_dim},
          {"group_size", m.backbone.group_size},
          {"point_hidden", m.backbone.point_hidden},
          {"latent_dim", m.attention.latent_dim},
          {"sparse_count", m.attention.sparse_count},
          {"knn_count", m.attention.knn_count},
          {"proposals", m.proposals},
          {"vote_norm", to_string(m.vote_norm)},
          {"head_norm", to_string(m.head.norm)},
          {"decoupled_head", m.head.decoupled},
          {"global_block", m.switches.global_block},
          {"local_block", m.switches.local_block},
          {"importance", m.switches.importance}};
}

}  // namespace

Config parse_config(const std::string& json_text) {
  const json j = parse_json(json_text, "config");
  Config c;
  {
    Reader r(j, "config");
    r.get("seed", c.seed);
    if (const json* m = r.child("model")) model_from_json(*m, c.model);
    if (const json* l = r.child("loss")) {
      Reader lr(*l, "loss");
      lr.get("lambda_importance", c.weights.importance);
      lr.get("lambda_score", c.weights.score);
      lr.get("lambda_center_rot", c.weights.center_rot);
      lr.get("positive_radius", c.loss.positive_radius);
      lr.get("negative_radius", c.loss.negative_radius);
      lr.get("offset_grad_into_importance", c.loss.offset_grad_into_importance);
    }
    if (const json* t = r.child("train")) {
      Reader tr(*t, "train");
      tr.get("steps", c.train.steps);
      tr.get("batch_size", c.train.batch_size);
      tr.get("lr", c.train.sgd.lr);
      tr.get("momentum", c.train.sgd.momentum);
      tr.get("grad_clip", c.train.sgd.grad_clip);
      tr.get("checkpoint_every", c.train.checkpoint_every);
      tr.get("lr_final", c.train.lr_final);
      tr.get("crop_jitter", c.train.crop_jitter);
      tr.get("yaw_jitter", c.train.yaw_jitter);
    }
    if (const json* t = r.child("tracker")) {
      Reader tr(*t, "tracker");
      tr.get("search_margin", c.tracker.search_margin);
    }
    if (const json* d = r.child("data")) {
      Reader dr(*d, "data");
      dr.get("dir", c.data.dir);
      dr.get("train_sequences", c.data.train_sequences);
      dr.get("eval_sequences", c.data.eval_sequences);
      dr.get("eval_seed_offset", c.data.eval_seed_offset);
      if (const json* s = dr.child("synthetic")) c.data.synthetic = synthetic_from_json(*s, "data.synthetic");
    }
  }
  c.validate();
  return c;
}

std::string dump_config(const Config& c, int indent) {
  json data = {{"dir", c.data.dir},
               {"train_sequences", c.data.train_sequences},
               {"eval_sequences", c.data.eval_sequences},
               {"eval_seed_offset", c.data.eval_seed_offset}};
  if (c.data.synthetic) data["synthetic"] = synthetic_to_json(*c.data.synthetic);
  const json j = {
      {"seed", c.seed},
      {"model", model_to_json(c.model)},
      {"loss",
       {{"lambda_importance", c.weights.importance},
        {"lambda_score", c.weights.score},
        {"lambda_center_rot", c.weights.center_rot},
        {"positive_radius", c.loss.positive_radius},
        {"negative_radius", c.loss.negative_radius},
        {"offset_grad_into_importance", c.loss.offset_grad_into_importance}}},
      {"train",
       {{"steps", c.train.steps},
        {"batch_size", c.train.batch_size},
        {"lr", c.train.sgd.lr},
        {"momentum", c.train.sgd.momentum},
        {"grad_clip", c.train.sgd.grad_clip},
        {"lr_final", c.train.lr_final},
        {"checkpoint_every", c.train.checkpoint_every},
        {"crop_jitter", c.train.crop_jitter},
        {"yaw_jitter", c.train.yaw_jitter}}},
      {"tracker", {{"search_margin", c.tracker.search_margin}}},
      {"data", data}};
  return j.dump(indent);
}

std::string dump_model_config(const ModelConfig& cfg) { return model_to_json(cfg).dump(); }

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
  SyntheticSpec s = synthetic_from_json(parse_json(json_text, "synthetic spec"), "spec");
  s.validate();
  return s;
}

std::string dump_synthetic_spec(const SyntheticSpec& spec, int indent) {
  return synthetic_to_json(spec).dump(indent);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gltt
