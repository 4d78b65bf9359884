#pragma once

// JSON run configuration and scene specifications. Unknown keys are rejected;
// absent fields take the documented defaults.

#include <cstdint>
#include <limits>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "arraydps/acoustic.hpp"
#include "arraydps/sampler.hpp"
#include "arraydps/types.hpp"

namespace arraydps {

using Json = nlohmann::json;

// Reads fields from one JSON object and remembers which keys were consumed so
// that leftovers can be reported.
class JsonSection {
 public:
  JsonSection(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw InvalidArgument("config: section '" + name_ + "' must be an object");
  }

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const Json::exception&) {
      throw InvalidArgument("config: '" + path(key) + "' has the wrong type");
    }
  }

  // Number, or "inf" / null for +infinity.
  void get_extended(const std::string& key, double& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null() || (it->is_string() && it->get<std::string>() == "inf")) {
      out = std::numeric_limits<double>::infinity();
    } else if (it->is_number()) {
      out = it->get<double>();
    } else {
      throw InvalidArgument("config: '" + path(key) + "' must be a number or \"inf\"");
    }
  }

  JsonSection child(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) throw InvalidArgument("config: missing section '" + path(key) + "'");
    return JsonSection(*it, path(key));
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw InvalidArgument("config: unknown key '" + path(item.key()) + "'");
  }

 private:
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const Json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

enum class Method { ArrayDps, Iva };

inline std::string to_string(Method m) { return m == Method::ArrayDps ? "arraydps" : "iva"; }

inline Method parse_method(const std::string& s) {
  if (s == "arraydps") return Method::ArrayDps;
  if (s == "iva") return Method::Iva;
  throw InvalidArgument("config: method must be \"arraydps\" or \"iva\", got \"" + s + "\"");
}

struct DenoiserSpec {
  enum class Kind { Gaussian, Oracle, External };
  enum class Target { Dry, Image };  // oracle target: dry source or channel-1 image

  Kind kind = Kind::Gaussian;
  double prior_variance = 0.01;
  double sigma_floor = OracleDenoiser::kDefaultSigmaFloor;
  Target oracle_target = Target::Dry;
  std::string model;  // external model path
};

struct RunConfig {
  Method method = Method::ArrayDps;
  std::uint64_t seed = 0;
  int n_samples = 1;
  int num_sources = 2;
  bool trace = false;
  SeparationConfig separation;
  DenoiserSpec denoiser;

  void validate() const {
    require(n_samples >= 1, "config: n_samples must be >= 1");
    require(num_sources >= 1, "config: num_sources must be >= 1");
    if (method == Method::Iva) {
      require(num_sources >= 2, "config: iva needs num_sources >= 2");
      separation.iva.validate();
      return;
    }
    separation.validate();
    if (denoiser.kind == DenoiserSpec::Kind::Gaussian)
      require(denoiser.prior_variance > 0.0, "config: denoiser.prior_variance must be > 0");
    if (denoiser.kind == DenoiserSpec::Kind::Oracle)
      require(denoiser.sigma_floor >= 0.0, "config: denoiser.sigma_floor must be >= 0");
    if (denoiser.kind == DenoiserSpec::Kind::External)
      require(!denoiser.model.empty(), "config: denoiser.model is required for kind \"external\"");
  }
};

namespace detail {

inline void read_stft(JsonSection sec, StftConfig& cfg) {
  sec.get("fft_size", cfg.fft_size);
  sec.get("hop_size", cfg.hop_size);
  sec.finish();
}

inline void read_iva(JsonSection sec, IvaConfig& cfg) {
  std::string prior = to_string(cfg.prior);
  sec.get("prior", prior);
  if (prior == "gaussian") cfg.prior = IvaPrior::Gaussian;
  else if (prior == "laplace") cfg.prior = IvaPrior::Laplace;
  else throw InvalidArgument("config: iva.prior must be \"gaussian\" or \"laplace\"");
  sec.get("iterations", cfg.iterations);
  sec.get("fft_size", cfg.stft.fft_size);
  sec.get("hop_size", cfg.stft.hop_size);
  sec.finish();
}

inline void read_denoiser(JsonSection sec, DenoiserSpec& d) {
  std::string kind = "gaussian";
  sec.get("kind", kind);
  if (kind == "gaussian") d.kind = DenoiserSpec::Kind::Gaussian;
  else if (kind == "oracle") d.kind = DenoiserSpec::Kind::Oracle;
  else if (kind == "external") d.kind = DenoiserSpec::Kind::External;
  else throw InvalidArgument("config: denoiser.kind must be gaussian, oracle or external");
  sec.get("prior_variance", d.prior_variance);
  sec.get("sigma_floor", d.sigma_floor);
  std::string target = "dry";
  sec.get("target", target);
  if (target == "dry") d.oracle_target = DenoiserSpec::Target::Dry;
  else if (target == "image") d.oracle_target = DenoiserSpec::Target::Image;
  else throw InvalidArgument("config: denoiser.target must be \"dry\" or \"image\"");
  sec.get("model", d.model);
  sec.finish();
}

}  // namespace detail

// Sections required by each method must be present (possibly empty); all
// checks happen before any computation.
inline RunConfig parse_run_config(const Json& j) {
  JsonSection root(j, "");
  RunConfig rc;
  std::string method = "arraydps";
  root.get("method", method);
  rc.method = parse_method(method);
  root.get("seed", rc.seed);
  root.get("n_samples", rc.n_samples);
  root.get("num_sources", rc.num_sources);
  root.get("trace", rc.trace);

  auto& sep = rc.separation;
  if (rc.method == Method::ArrayDps) {
    JsonSection sampler = root.child("sampler");
    bool iva_init = true;
    sampler.get("iva_init", iva_init);
    if (!iva_init) sep = SeparationConfig::without_iva_init();
    auto& s = sep.sampler;
    sampler.get("steps", s.steps);
    sampler.get("sigma_max", s.sigma_max);
    sampler.get("sigma_min", s.sigma_min);
    sampler.get("rho", s.rho);
    sampler.get("s_churn", s.s_churn);
    sampler.get("s_min", s.s_min);
    sampler.get("s_max", s.s_max);
    sampler.get("s_noise", s.s_noise);
    sampler.finish();

    JsonSection guidance = root.child("guidance");
    auto& g = sep.guidance;
    guidance.get("xi", g.xi);
    guidance.get("n_ref", g.n_ref);
    guidance.get("n_fg", g.n_fg);
    guidance.get("lambda", g.lambda);
    guidance.finish();

    JsonSection fcp = root.child("fcp");
    fcp.get("future_taps", g.fcp.future_taps);
    fcp.get("past_taps", g.fcp.past_taps);
    fcp.get("eps", g.fcp.eps);
    fcp.get("diag_load", g.fcp.diag_load);
    fcp.finish();

    detail::read_stft(root.child("stft"), g.stft);
    if (iva_init || root.has("iva")) detail::read_iva(root.child("iva"), sep.iva);
    detail::read_denoiser(root.child("denoiser"), rc.denoiser);
  } else {
    detail::read_iva(root.child("iva"), sep.iva);
  }
  root.finish();
  sep.guidance.seed = rc.seed;
  sep.record_trace = rc.trace;
  rc.validate();
  return rc;
}

inline Json to_json(const RunConfig& rc) {
  const auto& sep = rc.separation;
  Json j;
  j["method"] = to_string(rc.method);
  j["seed"] = rc.seed;
  j["n_samples"] = rc.n_samples;
  j["num_sources"] = rc.num_sources;
  j["trace"] = rc.trace;
  j["iva"] = {{"prior", to_string(sep.iva.prior)},
              {"iterations", sep.iva.iterations},
              {"fft_size", sep.iva.stft.fft_size},
              {"hop_size", sep.iva.stft.hop_size}};
  if (rc.method == Method::Iva) return j;
  const auto& s = sep.sampler;
  const auto& g = sep.guidance;
  j["sampler"] = {{"steps", s.steps},     {"sigma_max", s.sigma_max}, {"sigma_min", s.sigma_min},
                  {"rho", s.rho},         {"s_churn", s.s_churn},     {"s_min", s.s_min},
                  {"s_max", s.s_max},     {"s_noise", s.s_noise},     {"iva_init", s.iva_init}};
  j["guidance"] = {{"xi", g.xi}, {"n_ref", g.n_ref}, {"n_fg", g.n_fg}, {"lambda", g.lambda}};
  j["fcp"] = {{"future_taps", g.fcp.future_taps},
              {"past_taps", g.fcp.past_taps},
              {"eps", g.fcp.eps},
              {"diag_load", g.fcp.diag_load}};
  j["stft"] = {{"fft_size", g.stft.fft_size}, {"hop_size", g.stft.hop_size}};
  const auto& d = rc.denoiser;
  static const char* kinds[] = {"gaussian", "oracle", "external"};
  j["denoiser"] = {{"kind", kinds[static_cast<int>(d.kind)]},
                   {"prior_variance", d.prior_variance},
                   {"sigma_floor", d.sigma_floor},
                   {"target", d.oracle_target == DenoiserSpec::Target::Dry ? "dry" : "image"},
                   {"model", d.model}};
  return j;
}

// ---------------------------------------------------------------------------

struct SceneRequest {
  SceneSpec spec;
  int count = 0;  // 0: a single fixture; n > 0: a batch with seeds rng_seed + i
};

inline SceneRequest parse_scene_request(const Json& j) {
  JsonSection sec(j, "");
  SceneRequest req;
  auto& s = req.spec;
  sec.get("num_sources", s.num_sources);
  sec.get("num_mics", s.num_mics);
  sec.get("sample_rate", s.sample_rate);
  sec.get("num_samples", s.num_samples);
  sec.get("rir_length", s.rir_length);
  sec.get("decay_time_constant", s.decay_time_constant);
  sec.get("direct_delay_min", s.direct_delay_min);
  sec.get("direct_delay_max", s.direct_delay_max);
  sec.get("tap_density", s.tap_density);
  sec.get("reflection_gain", s.reflection_gain);
  sec.get("early_ms", s.early_ms);
  sec.get_extended("snr_db", s.snr_db);
  sec.get("rng_seed", s.rng_seed);
  sec.get("count", req.count);
  sec.finish();
  require(req.count >= 0, "scene: count must be >= 0");
  s.validate();
  return req;
}

inline Json to_json(const SceneSpec& s) {
  Json j = {{"num_sources", s.num_sources},
            {"num_mics", s.num_mics},
            {"sample_rate", s.sample_rate},
            {"num_samples", s.num_samples},
            {"rir_length", s.rir_length},
            {"decay_time_constant", s.decay_time_constant},
            {"direct_delay_min", s.direct_delay_min},
            {"direct_delay_max", s.direct_delay_max},
            {"tap_density", s.tap_density},
            {"reflection_gain", s.reflection_gain},
            {"early_ms", s.early_ms},
            {"rng_seed", s.rng_seed}};
  if (s.noiseless()) j["snr_db"] = "inf";
  else j["snr_db"] = s.snr_db;
  return j;
}

}  // namespace arraydps
