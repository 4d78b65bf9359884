#pragma once

// Run-level plumbing shared by the command-line tool and the tests: building
// priors from a run configuration, running IVA or the diffusion sampler with
// best-of selection, writing results, and evaluating result directories
// against fixtures.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arraydps/acoustic.hpp"
#include "arraydps/config.hpp"
#include "arraydps/fixture_io.hpp"
#include "arraydps/iva.hpp"
#include "arraydps/metrics.hpp"
#include "arraydps/prior.hpp"
#include "arraydps/sampler.hpp"
#include "arraydps/wav.hpp"

namespace arraydps {

inline std::vector<std::unique_ptr<Denoiser>> make_priors(const RunConfig& rc,
                                                          const MixtureFixture* fixture) {
  std::vector<std::unique_ptr<Denoiser>> priors;
  const auto& d = rc.denoiser;
  switch (d.kind) {
    case DenoiserSpec::Kind::Gaussian:
      for (int k = 0; k < rc.num_sources; ++k)
        priors.push_back(std::make_unique<GaussianShrinkageDenoiser>(d.prior_variance));
      break;
    case DenoiserSpec::Kind::Oracle:
      if (!fixture)
        throw InvalidArgument("oracle denoiser needs a fixture directory as input");
      require(fixture->dry_sources.size() == static_cast<std::size_t>(rc.num_sources),
              "oracle denoiser: fixture source count differs from num_sources");
      for (int k = 0; k < rc.num_sources; ++k) {
        const RealVector& target = d.oracle_target == DenoiserSpec::Target::Dry
                                       ? fixture->dry_sources[k].samples
                                       : fixture->images[k][0].samples;
        priors.push_back(std::make_unique<OracleDenoiser>(target, d.sigma_floor));
      }
      break;
    case DenoiserSpec::Kind::External:
      throw InvalidArgument("external denoiser '" + d.model +
                            "': this build has no model runtime; wrap the model in "
                            "ExternalDenoiser through the library API");
  }
  return priors;
}

struct PipelineOutput {
  SeparationResult result;
  std::vector<double> sample_recon_snr_db;
  std::vector<std::uint64_t> sample_seeds;
  int best_index = 0;
};

inline void check_input(const MultichannelWaveform& x, const RunConfig& rc) {
  x.validate();
  if (x.sample_rate() != kDefaultSampleRate)
    throw InvalidArgument("input sample rate " + std::to_string(x.sample_rate()) +
                          " Hz differs from the required " +
                          std::to_string(kDefaultSampleRate) + " Hz");
  const bool needs_iva = rc.method == Method::Iva || rc.separation.sampler.iva_init;
  if (needs_iva && x.channel_count() < static_cast<std::size_t>(rc.num_sources))
    throw InvalidArgument("input has " + std::to_string(x.channel_count()) +
                          " channels but IVA needs at least num_sources = " +
                          std::to_string(rc.num_sources));
}

inline PipelineOutput run_separation(const MultichannelWaveform& x, const RunConfig& rc,
                                     const MixtureFixture* fixture = nullptr) {
  check_input(x, rc);
  PipelineOutput out;
  if (rc.method == Method::Iva) {
    const auto sources = iva_separate(x, rc.num_sources, rc.separation.iva);
    for (const auto& s : sources) {
      out.result.virtual_sources.emplace_back(s, x.sample_rate());
      out.result.ref_images.emplace_back(s, x.sample_rate());
    }
    out.result.recon_snr_db = detail::recon_snr_db(x[0].samples, sources);
    out.result.seed = rc.seed;
    out.sample_recon_snr_db = {out.result.recon_snr_db};
    out.sample_seeds = {rc.seed};
    return out;
  }
  const auto owned = make_priors(rc, fixture);
  std::vector<const Denoiser*> priors;
  for (const auto& p : owned) priors.push_back(p.get());
  BestOfResult best = separate_best_of(x, rc.num_sources, priors, rc.separation, rc.n_samples);
  out.result = std::move(best.best);
  out.sample_recon_snr_db = std::move(best.recon_snr_db);
  out.sample_seeds = std::move(best.seeds);
  out.best_index = best.best_index;
  return out;
}

inline Json trace_to_json(const std::vector<StepTrace>& trace) {
  Json steps = Json::array();
  const auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  for (const auto& t : trace)
    steps.push_back({{"step", t.step},
                     {"sigma", t.sigma},
                     {"sigma_hat", t.sigma_hat},
                     {"mixture_residual", num(t.mixture_residual)},
                     {"reference_residual", num(t.reference_residual)},
                     {"prior_score_norm", t.prior_score_norm},
                     {"likelihood_grad_norm", t.likelihood_grad_norm},
                     {"reference_grad_norm", t.reference_grad_norm},
                     {"used_iva_filters", t.used_iva_filters},
                     {"fcp_fallbacks", t.fcp_fallbacks}});
  return steps;
}

// ref_image_<k>.wav, virtual_source_<k>.wav, result.json and, with tracing,
// trace.json.
inline void write_separation(const std::filesystem::path& dir, const PipelineOutput& out,
                             const RunConfig& rc) {
  std::filesystem::create_directories(dir);
  const auto& r = out.result;
  Json files = {{"ref_images", Json::array()}, {"virtual_sources", Json::array()}};
  for (std::size_t k = 0; k < r.ref_images.size(); ++k) {
    write_wav(dir / indexed_name("ref_image", k), r.ref_images[k]);
    write_wav(dir / indexed_name("virtual_source", k), r.virtual_sources[k]);
    files["ref_images"].push_back(indexed_name("ref_image", k));
    files["virtual_sources"].push_back(indexed_name("virtual_source", k));
  }
  Json result = {{"method", to_string(rc.method)},
                 {"num_sources", r.ref_images.size()},
                 {"seed", r.seed},
                 {"recon_snr_db", r.recon_snr_db},
                 {"best_index", out.best_index},
                 {"sample_recon_snr_db", out.sample_recon_snr_db},
                 {"sample_seeds", out.sample_seeds},
                 {"files", files},
                 {"config", to_json(rc)}};
  write_json_file(dir / "result.json", result);
  if (rc.trace && rc.method == Method::ArrayDps)
    write_json_file(dir / "trace.json", {{"steps", trace_to_json(r.trace)}});
}

// ---------------------------------------------------------------------------

inline Json report_to_json(const EvalReport& rep) {
  Json per = Json::array();
  for (const auto& m : rep.per_source) per.push_back({{"si_sdr_db", m.si_sdr_db}, {"sdr_db", m.sdr_db}});
  Json j = {{"per_source", per},
            {"permutation", rep.permutation},
            {"mean_si_sdr_db", rep.mean_si_sdr()},
            {"mean_sdr_db", rep.mean_sdr()}};
  j["recon_snr_db"] = rep.recon_snr_db ? Json(*rep.recon_snr_db) : Json(nullptr);
  return j;
}

// Channel-1 images of a fixture, used as evaluation references.
inline std::vector<RealVector> reference_images(const MixtureFixture& fx) {
  std::vector<RealVector> refs;
  for (const auto& img : fx.images) refs.push_back(img[0].samples);
  return refs;
}

// Evaluates one result directory against one fixture directory.
inline Json evaluate_result_dir(const std::filesystem::path& est_dir,
                                const std::filesystem::path& fixture_dir) {
  const MixtureFixture fx = load_fixture(fixture_dir);
  const auto refs = reference_images(fx);
  const std::size_t K = refs.size();
  std::vector<RealVector> est;
  for (std::size_t k = 0; k < K; ++k) {
    const auto path = est_dir / indexed_name("ref_image", k);
    if (!std::filesystem::exists(path))
      throw InvalidArgument("manifest mismatch: " + path.string() + " is missing (fixture has " +
                            std::to_string(K) + " sources)");
    const auto w = read_wav(path);
    require(w.channel_count() == 1, "estimate " + path.string() + " must be mono");
    if (w.length() != fx.mixtures.length())
      throw InvalidArgument("manifest mismatch: " + path.string() + " length differs from fixture");
    est.push_back(w[0].samples);
  }
  if (std::filesystem::exists(est_dir / indexed_name("ref_image", K)))
    throw InvalidArgument("manifest mismatch: " + est_dir.string() + " has more than " +
                          std::to_string(K) + " estimates");
  EvalReport rep = align_and_eval(est, refs);
  const auto result_path = est_dir / "result.json";
  if (std::filesystem::exists(result_path)) {
    const Json result = read_json_file(result_path);
    if (result.contains("recon_snr_db")) rep.recon_snr_db = result.at("recon_snr_db").get<double>();
  }
  Json j = report_to_json(rep);
  double mix = 0.0;
  for (const auto& r : refs) mix += si_sdr(fx.mixtures[0].samples, r);
  mix /= static_cast<double>(K);
  j["mixture_si_sdr_db"] = mix;
  j["si_sdr_improvement_db"] = rep.mean_si_sdr() - mix;
  return j;
}

// Single fixture or batch; batches get per-item reports plus medians.
inline Json evaluate(const std::filesystem::path& est_dir, const std::filesystem::path& fixture_dir) {
  const auto items = batch_items(fixture_dir);
  if (items.empty()) return evaluate_result_dir(est_dir, fixture_dir);
  Json list = Json::array();
  std::vector<double> si, sdr, imp;
  for (const auto& name : items) {
    if (!std::filesystem::is_directory(est_dir / name))
      throw InvalidArgument("manifest mismatch: no results for batch item " + name);
    Json rep = evaluate_result_dir(est_dir / name, fixture_dir / name);
    si.push_back(rep.at("mean_si_sdr_db").get<double>());
    sdr.push_back(rep.at("mean_sdr_db").get<double>());
    imp.push_back(rep.at("si_sdr_improvement_db").get<double>());
    rep["name"] = name;
    list.push_back(std::move(rep));
  }
  return {{"items", list},
          {"count", items.size()},
          {"median_si_sdr_db", median(si)},
          {"median_sdr_db", median(sdr)},
          {"median_si_sdr_improvement_db", median(imp)}};
}

}  // namespace arraydps
