#pragma once

// Diffusion posterior sampling over virtual sources.
//
// Each score evaluation denoises every source, estimates relative RIRs from the
// denoised sources with FCP (or reuses the IVA-initialised ones early on),
// filters the sources to all channels and adds the normalised gradient of the
// mixture reconstruction error to the prior (Tweedie) score. The outer loop is
// the stochastic second-order Heun sampler with churn.
//
// Gradients treat the FCP filters as constants. At the weighted least-squares
// optimum the derivative of the objective with respect to the filters is zero,
// so this equals the gradient of the weighted FCP objective.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arraydps/fcp.hpp"
#include "arraydps/iva.hpp"
#include "arraydps/prior.hpp"
#include "arraydps/rng.hpp"
#include "arraydps/schedule.hpp"
#include "arraydps/stft.hpp"
#include "arraydps/types.hpp"

namespace arraydps {

using FilterBank = std::vector<std::vector<FilterTaps>>;  // [source][channel]

struct SamplerConfig {
  int steps = 400;
  double sigma_max = 0.8;
  double sigma_min = 1e-6;
  double rho = 10.0;
  double s_churn = 30.0;
  double s_min = 0.0;
  double s_max = 50.0;
  double s_noise = 1.0;
  bool iva_init = true;

  void validate() const {
    require(steps >= 2, "sampler steps must be >= 2");
    require(sigma_min > 0.0 && sigma_max > sigma_min, "sampler needs sigma_max > sigma_min > 0");
    require(rho > 0.0, "sampler rho must be > 0");
    require(s_churn >= 0.0 && s_noise >= 0.0 && s_max >= s_min, "invalid churn parameters");
  }
};

struct GuidanceConfig {
  double xi = 2.0;
  int n_ref = 200;
  int n_fg = 100;
  double lambda = 1.3;
  FcpConfig fcp;
  StftConfig stft{512, 64};
  std::uint64_t seed = 0;

  void validate(int steps) const {
    require(xi >= 0.0, "guidance xi must be >= 0");
    require(lambda >= 0.0, "guidance lambda must be >= 0");
    require(n_ref >= 0 && n_ref <= steps, "guidance n_ref must lie in [0, steps]");
    require(n_fg >= 0 && n_fg <= steps, "guidance n_fg must lie in [0, steps]");
    fcp.validate();
    stft.validate();
  }
};

struct SeparationConfig {
  SamplerConfig sampler;
  GuidanceConfig guidance;
  IvaConfig iva;
  bool record_trace = false;

  void validate() const {
    sampler.validate();
    guidance.validate(sampler.steps);
    if (sampler.iva_init) iva.validate();
  }

  // Settings used when sampling starts from noise instead of IVA output.
  static SeparationConfig without_iva_init() {
    SeparationConfig c;
    c.sampler.iva_init = false;
    c.sampler.sigma_max = 2.0;
    c.guidance.xi = 6.0;
    c.guidance.n_fg = 0;
    return c;
  }
};

struct StepTrace {
  int step = 0;
  double sigma = 0.0;
  double sigma_hat = 0.0;
  double mixture_residual = std::numeric_limits<double>::quiet_NaN();  // sum_c ||x_c - xhat_c||^2
  double reference_residual = std::numeric_limits<double>::quiet_NaN();  // ||x_1 - sum_k s0_k||^2
  double prior_score_norm = 0.0;
  double likelihood_grad_norm = 0.0;  // raw gradient norm before normalisation
  double reference_grad_norm = 0.0;
  bool used_iva_filters = false;
  int fcp_fallbacks = 0;
};

struct SeparationResult {
  std::vector<Waveform> virtual_sources;
  std::vector<Waveform> ref_images;
  double recon_snr_db = 0.0;
  std::uint64_t seed = 0;
  std::vector<StepTrace> trace;
};

// ---------------------------------------------------------------------------
// Frozen-filter mixture likelihood.

// r_c = x_c - ISTFT(sum_k G_kc *_l S_k)
inline std::vector<RealVector> mixture_residuals(const std::vector<RealVector>& mixtures,
                                                 const std::vector<Spectrogram>& clean_specs,
                                                 const FilterBank& filters) {
  require(filters.size() == clean_specs.size(), "filter bank size does not match sources");
  std::vector<RealVector> residuals;
  for (std::size_t c = 0; c < mixtures.size(); ++c) {
    Spectrogram sum = Spectrogram::zeros_like(clean_specs.front());
    for (std::size_t k = 0; k < clean_specs.size(); ++k)
      sum.bins += apply_filter(filters[k][c], clean_specs[k]).bins;
    residuals.push_back(mixtures[c] - istft(sum));
  }
  return residuals;
}

// d/d clean_k of sum_c ||r_c||^2 given the residuals, filters held fixed.
inline std::vector<RealVector> frozen_filter_gradient(const std::vector<RealVector>& residuals,
                                                      const FilterBank& filters,
                                                      const StftConfig& cfg) {
  std::vector<Spectrogram> back;
  for (const auto& r : residuals) back.push_back(istft_adjoint(r, cfg));
  std::vector<RealVector> grads;
  for (const auto& per_channel : filters) {
    Spectrogram acc = Spectrogram::zeros_like(back.front());
    for (std::size_t c = 0; c < residuals.size(); ++c)
      acc.bins += apply_filter_adjoint(per_channel[c], back[c]).bins;
    grads.push_back(-2.0 * stft_adjoint(acc));
  }
  return grads;
}

inline double frozen_filter_loss(const std::vector<RealVector>& mixtures,
                                 const std::vector<RealVector>& clean, const FilterBank& filters,
                                 const StftConfig& cfg) {
  std::vector<Spectrogram> specs;
  for (const auto& s : clean) specs.push_back(stft(s, cfg));
  double loss = 0.0;
  for (const auto& r : mixture_residuals(mixtures, specs, filters)) loss += r.squaredNorm();
  return loss;
}

// ---------------------------------------------------------------------------

struct ScoreResult {
  std::vector<RealVector> score;
  StepTrace diagnostics;
};

namespace detail {

inline double stacked_norm(const std::vector<RealVector>& v) {
  double s = 0.0;
  for (const auto& x : v) s += x.squaredNorm();
  return std::sqrt(s);
}

}  // namespace detail

// Posterior score approximation for one sampler step. Holds everything that is
// fixed across steps: mixtures and their spectrograms, FCP weights, optional
// IVA-initialised filters, the noise schedule and one prior per source.
class PosteriorScore {
 public:
  PosteriorScore(std::vector<RealVector> mixtures, std::vector<const Denoiser*> priors,
                 NoiseSchedule schedule, GuidanceConfig guidance,
                 std::optional<FilterBank> iva_filters = std::nullopt)
      : x_(std::move(mixtures)),
        priors_(std::move(priors)),
        schedule_(std::move(schedule)),
        cfg_(std::move(guidance)),
        iva_filters_(std::move(iva_filters)) {
    require(!x_.empty(), "posterior score needs at least one mixture channel");
    require(!priors_.empty(), "posterior score needs at least one source prior");
    for (const auto* p : priors_) require(p != nullptr, "null source prior");
    cfg_.validate(schedule_.steps);
    for (const auto& xc : x_) X_.push_back(stft(xc, cfg_.stft));
    weights_ = fcp_weights(X_, cfg_.fcp.eps);
    if (iva_filters_) {
      require(iva_filters_->size() == priors_.size(), "iva filter bank has wrong source count");
      for (const auto& row : *iva_filters_)
        require(row.size() == x_.size(), "iva filter bank has wrong channel count");
    }
  }

  std::size_t num_sources() const { return priors_.size(); }
  std::size_t num_channels() const { return x_.size(); }
  const std::vector<Spectrogram>& mixture_specs() const { return X_; }
  const RealMatrix& fcp_lambda() const { return weights_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const GuidanceConfig& config() const { return cfg_; }

  bool uses_iva_filters(int step) const { return iva_filters_.has_value() && step <= cfg_.n_fg; }

  // FCP(X_c, S_k) for every channel; silent sources fall back to the IVA filters
  // (or to zero filters without IVA).
  FilterBank estimate_filters(const std::vector<Spectrogram>& clean_specs, int* fallbacks) const {
    std::vector<const Spectrogram*> targets;
    for (const auto& X : X_) targets.push_back(&X);
    FilterBank bank;
    for (std::size_t k = 0; k < clean_specs.size(); ++k) {
      if (!(clean_specs[k].bins.cwiseAbs2().sum() > 0.0)) {
        if (fallbacks) ++*fallbacks;
        if (iva_filters_) {
          bank.push_back((*iva_filters_)[k]);
        } else {
          bank.emplace_back(X_.size(), FilterTaps{ComplexMatrix::Zero(X_.front().num_bins(),
                                                                      cfg_.fcp.num_taps()),
                                                  cfg_.fcp.future_taps, cfg_.fcp.past_taps});
        }
        continue;
      }
      bank.push_back(fcp_estimate_multi(targets, clean_specs[k], weights_, cfg_.fcp));
    }
    return bank;
  }

  ScoreResult operator()(const std::vector<RealVector>& s_tau, int step,
                         bool want_diagnostics = false) const {
    require(s_tau.size() == priors_.size(), "state has the wrong number of sources");
    require(step >= 0 && step < static_cast<int>(schedule_.sigmas.size()), "step out of range");
    const double sigma = schedule_.sigmas[step];
    if (!(sigma > 0.0)) throw InvalidArgument("posterior score requires sigma > 0");
    const std::size_t K = s_tau.size();
    const Index T = x_.front().size();
    for (const auto& s : s_tau) require(s.size() == T, "source length does not match mixture");

    ScoreResult out;
    out.diagnostics.step = step;
    out.diagnostics.sigma = sigma;

    std::vector<RealVector> clean(K);
    for (std::size_t k = 0; k < K; ++k) clean[k] = priors_[k]->apply(s_tau[k], sigma);

    out.score.resize(K);
    for (std::size_t k = 0; k < K; ++k) out.score[k] = (clean[k] - s_tau[k]) / (sigma * sigma);
    out.diagnostics.prior_score_norm = detail::stacked_norm(out.score);

    const double target_norm = cfg_.xi * std::sqrt(static_cast<double>(T)) / sigma;

    if (cfg_.xi > 0.0 || want_diagnostics) {
      std::vector<Spectrogram> specs;
      for (const auto& c : clean) specs.push_back(stft(c, cfg_.stft));
      const bool use_iva = uses_iva_filters(step);
      out.diagnostics.used_iva_filters = use_iva;
      const FilterBank bank =
          use_iva ? *iva_filters_ : estimate_filters(specs, &out.diagnostics.fcp_fallbacks);
      const auto residuals = mixture_residuals(x_, specs, bank);
      double res = 0.0;
      for (const auto& r : residuals) res += r.squaredNorm();
      out.diagnostics.mixture_residual = res;

      if (cfg_.xi > 0.0) {
        auto grad = frozen_filter_gradient(residuals, bank, cfg_.stft);
        for (std::size_t k = 0; k < K; ++k) grad[k] = priors_[k]->vjp(s_tau[k], sigma, grad[k]);
        const double norm = detail::stacked_norm(grad);
        out.diagnostics.likelihood_grad_norm = norm;
        if (norm > 0.0) {
          const double scale = target_norm / norm;
          for (std::size_t k = 0; k < K; ++k) out.score[k] -= scale * grad[k];
        }
      }
    }

    if (step <= cfg_.n_ref && (cfg_.lambda > 0.0 || want_diagnostics)) {
      RealVector r1 = x_.front();
      for (const auto& c : clean) r1 -= c;
      out.diagnostics.reference_residual = r1.squaredNorm();
      if (cfg_.lambda > 0.0 && cfg_.xi > 0.0) {
        std::vector<RealVector> grad(K);
        for (std::size_t k = 0; k < K; ++k) grad[k] = priors_[k]->vjp(s_tau[k], sigma, -2.0 * r1);
        const double norm = detail::stacked_norm(grad);
        out.diagnostics.reference_grad_norm = norm;
        if (norm > 0.0) {
          const double scale = cfg_.lambda * target_norm / norm;
          for (std::size_t k = 0; k < K; ++k) out.score[k] -= scale * grad[k];
        }
      }
    }
    return out;
  }

 private:
  std::vector<RealVector> x_;
  std::vector<Spectrogram> X_;
  RealMatrix weights_;
  std::vector<const Denoiser*> priors_;
  NoiseSchedule schedule_;
  GuidanceConfig cfg_;
  std::optional<FilterBank> iva_filters_;
};

// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<RealVector> channel_samples(const MultichannelWaveform& x) {
  std::vector<RealVector> out;
  for (const auto& ch : x.channels) out.push_back(ch.samples);
  return out;
}

inline double recon_snr_db(const RealVector& reference, const std::vector<RealVector>& images) {
  RealVector r = reference;
  for (const auto& s : images) r -= s;
  const double num = reference.squaredNorm();
  const double den = std::max(r.squaredNorm(), num * 1e-10);
  return 10.0 * std::log10(num / den);
}

}  // namespace detail

// s_hat = s + S_noise sqrt(sigma_hat^2 - sigma^2) eps, eps drawn per (step, source).
inline std::vector<RealVector> inject_churn(const std::vector<RealVector>& s, double sigma,
                                            double sigma_hat, double s_noise, std::uint64_t seed,
                                            int step) {
  const double extra = std::sqrt(std::max(sigma_hat * sigma_hat - sigma * sigma, 0.0));
  std::vector<RealVector> out = s;
  if (extra > 0.0 && s_noise > 0.0) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      Rng rng(derive_seed(seed, {stream::kChurn, std::uint64_t(step), k}));
      out[k] += gaussian_vector(s[k].size(), rng, s_noise * extra);
    }
  }
  return out;
}

// Stochastic Heun sampler from s (at sigma_0) down to sigma_N = 0. The churn
// schedule must match the score's noise schedule.
inline std::vector<RealVector> heun_sample(const PosteriorScore& score, std::vector<RealVector> s,
                                           const ChurnSchedule& churn, std::uint64_t seed,
                                           std::vector<StepTrace>* trace = nullptr) {
  const NoiseSchedule& sched = score.schedule();
  require(churn.gammas.size() == static_cast<std::size_t>(sched.steps),
          "churn schedule length does not match the noise schedule");
  const std::size_t K = s.size();
  std::vector<RealVector> s_hat, s_next(K), d(K);
  for (int i = 0; i < sched.steps; ++i) {
    const double sigma = sched.sigmas[i];
    const double sigma_next = sched.sigmas[i + 1];
    const double sigma_hat = sigma + churn.gammas[i] * sigma;
    s_hat = inject_churn(s, sigma, sigma_hat, churn.s_noise, seed, i);

    ScoreResult first = score(s_hat, i, trace != nullptr);
    for (std::size_t k = 0; k < K; ++k) {
      d[k] = -sigma_hat * first.score[k];
      s_next[k] = s_hat[k] + (sigma_next - sigma_hat) * d[k];
    }
    if (sigma_next != 0.0) {
      const ScoreResult second = score(s_next, i + 1);
      for (std::size_t k = 0; k < K; ++k) {
        const RealVector d2 = -sigma_next * second.score[k];
        s_next[k] = s_hat[k] + 0.5 * (sigma_next - sigma_hat) * (d[k] + d2);
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (!s_next[k].allFinite())
        throw NumericalError("sampler state became non-finite at step " + std::to_string(i));
      s[k].swap(s_next[k]);
    }
    if (trace) {
      first.diagnostics.sigma_hat = sigma_hat;
      trace->push_back(first.diagnostics);
    }
  }
  return s;
}

struct IvaInitialization {
  std::vector<RealVector> sources;  // reference-channel images, time domain
  FilterBank filters;               // [k][c] relative RIRs from the IVA sources
};

inline IvaInitialization iva_initialize(const MultichannelWaveform& x, int num_sources,
                                        const IvaConfig& iva_cfg, const FcpConfig& fcp_cfg,
                                        const StftConfig& fcp_stft) {
  require(x.channel_count() >= 2, "iva initialisation needs at least two channels");
  require(num_sources >= 2 && static_cast<std::size_t>(num_sources) <= x.channel_count(),
          "iva initialisation needs 2 <= K <= C");
  IvaInitialization init;
  init.sources = iva_separate(x, num_sources, iva_cfg);
  std::vector<Spectrogram> X, S;
  for (const auto& ch : x.channels) X.push_back(stft(ch.samples, fcp_stft));
  for (const auto& s : init.sources) S.push_back(stft(s, fcp_stft));
  init.filters = iva_init_filters(X, S, fcp_cfg);
  return init;
}

namespace detail {

inline void check_separation_inputs(const MultichannelWaveform& x, int num_sources,
                                    const std::vector<const Denoiser*>& priors,
                                    const SeparationConfig& cfg) {
  x.validate();
  cfg.validate();
  require(num_sources >= 1, "need at least one source");
  require(priors.size() == static_cast<std::size_t>(num_sources),
          "need one prior per source");
  if (cfg.sampler.iva_init) {
    require(x.channel_count() >= 2, "iva initialisation needs at least two channels");
    require(num_sources >= 2 && static_cast<std::size_t>(num_sources) <= x.channel_count(),
            "iva initialisation needs 2 <= K <= C");
  }
}

inline std::optional<IvaInitialization> maybe_iva_initialize(const MultichannelWaveform& x,
                                                             int num_sources,
                                                             const SeparationConfig& cfg) {
  if (!cfg.sampler.iva_init) return std::nullopt;
  return iva_initialize(x, num_sources, cfg.iva, cfg.guidance.fcp, cfg.guidance.stft);
}

// One sampler run from a precomputed (or absent) IVA initialisation.
inline SeparationResult separate_from(const MultichannelWaveform& x, int num_sources,
                                      const std::vector<const Denoiser*>& priors,
                                      const SeparationConfig& cfg,
                                      const std::optional<IvaInitialization>& init) {
  const std::size_t K = static_cast<std::size_t>(num_sources);
  const Index T = x.length();
  const auto& sc = cfg.sampler;
  const std::uint64_t seed = cfg.guidance.seed;

  const NoiseSchedule sched = build_sigma_schedule(sc.steps, sc.sigma_max, sc.sigma_min, sc.rho);
  const ChurnSchedule churn = build_churn_schedule(sched, sc.s_churn, sc.s_min, sc.s_max, sc.s_noise);

  const PosteriorScore score(detail::channel_samples(x), priors, sched, cfg.guidance,
                             init ? std::optional<FilterBank>(init->filters) : std::nullopt);

  std::vector<RealVector> s(K);
  for (std::size_t k = 0; k < K; ++k) {
    Rng rng(derive_seed(seed, {stream::kInit, k}));
    s[k] = gaussian_vector(T, rng, sched.sigmas[0]);
    if (init) s[k] += init->sources[k];
  }

  SeparationResult result;
  result.seed = seed;
  s = heun_sample(score, std::move(s), churn, seed, cfg.record_trace ? &result.trace : nullptr);

  // Map virtual sources to reference-channel images with a final FCP.
  const auto& X = score.mixture_specs();
  std::vector<RealVector> images;
  for (std::size_t k = 0; k < K; ++k) {
    const Spectrogram S = stft(s[k], cfg.guidance.stft);
    const FilterTaps G = fcp_estimate(X.front(), S, score.fcp_lambda(), cfg.guidance.fcp);
    images.push_back(istft(apply_filter(G, S)));
  }
  result.recon_snr_db = detail::recon_snr_db(x[0].samples, images);
  for (std::size_t k = 0; k < K; ++k) {
    result.virtual_sources.emplace_back(std::move(s[k]), x.sample_rate());
    result.ref_images.emplace_back(std::move(images[k]), x.sample_rate());
  }
  return result;
}

}  // namespace detail

inline SeparationResult separate(const MultichannelWaveform& x, int num_sources,
                                 const std::vector<const Denoiser*>& priors,
                                 const SeparationConfig& cfg) {
  detail::check_separation_inputs(x, num_sources, priors, cfg);
  return detail::separate_from(x, num_sources, priors, cfg,
                               detail::maybe_iva_initialize(x, num_sources, cfg));
}

inline SeparationResult separate(const MultichannelWaveform& x, int num_sources,
                                 const Denoiser& prior, const SeparationConfig& cfg) {
  return separate(x, num_sources,
                  std::vector<const Denoiser*>(static_cast<std::size_t>(num_sources), &prior), cfg);
}

struct BestOfResult {
  SeparationResult best;
  int best_index = 0;
  std::vector<double> recon_snr_db;  // per sample
  std::vector<std::uint64_t> seeds;
};

// Seed of sample j; sample 0 uses the configured seed itself.
inline std::uint64_t sample_seed(std::uint64_t base, int j) {
  return j == 0 ? base : derive_seed(base, {stream::kSample, std::uint64_t(j)});
}

// Runs `n_samples` separations and keeps the one with the highest mixture
// reconstruction SNR.
inline BestOfResult separate_best_of(const MultichannelWaveform& x, int num_sources,
                                     const std::vector<const Denoiser*>& priors,
                                     const SeparationConfig& cfg, int n_samples) {
  require(n_samples >= 1, "n_samples must be >= 1");
  detail::check_separation_inputs(x, num_sources, priors, cfg);
  // IVA is deterministic, so every sample shares one initialisation.
  const auto init = detail::maybe_iva_initialize(x, num_sources, cfg);
  BestOfResult out;
  for (int j = 0; j < n_samples; ++j) {
    SeparationConfig c = cfg;
    c.guidance.seed = sample_seed(cfg.guidance.seed, j);
    SeparationResult r = detail::separate_from(x, num_sources, priors, c, init);
    out.seeds.push_back(c.guidance.seed);
    out.recon_snr_db.push_back(r.recon_snr_db);
    if (j == 0 || r.recon_snr_db > out.best.recon_snr_db) {
      out.best = std::move(r);
      out.best_index = j;
    }
  }
  return out;
}

inline BestOfResult separate_best_of(const MultichannelWaveform& x, int num_sources,
                                     const Denoiser& prior, const SeparationConfig& cfg,
                                     int n_samples) {
  return separate_best_of(
      x, num_sources, std::vector<const Denoiser*>(static_cast<std::size_t>(num_sources), &prior),
      cfg, n_samples);
}

}  // namespace arraydps
