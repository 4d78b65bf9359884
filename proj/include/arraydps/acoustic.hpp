#pragma once

// Synthetic acoustic scenes: seeded sparse exponential-decay impulse responses,
// speech-like modulated noise sources, reverberant source images and noisy
// multichannel mixtures.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "arraydps/rng.hpp"
#include "arraydps/types.hpp"

namespace arraydps {

struct Rir {
  RealVector taps;
  int sample_rate = kDefaultSampleRate;
  Index direct_path_index = 0;

  void validate() const {
    require(taps.size() >= 1, "rir must have at least one tap");
    require(taps.allFinite(), "rir has non-finite taps");
    require(taps.squaredNorm() > 0.0, "rir has zero energy");
  }
};

struct SceneSpec {
  int num_sources = 2;                 // K
  int num_mics = 3;                    // C
  int sample_rate = kDefaultSampleRate;
  Index num_samples = 8000;            // source length
  Index rir_length = 2000;             // taps
  double decay_time_constant = 0.05;   // seconds, envelope exp(-t / tau)
  Index direct_delay_min = 0;          // samples
  Index direct_delay_max = 40;         // samples
  double tap_density = 0.3;            // probability that a reflection tap is nonzero
  double reflection_gain = 0.2;        // reflection amplitude relative to the direct path
  double early_ms = 50.0;              // early-image truncation length
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t rng_seed = 0;

  bool noiseless() const { return std::isinf(snr_db) && snr_db > 0; }

  Index early_length() const {
    return std::max<Index>(1, static_cast<Index>(std::lround(early_ms * 1e-3 * sample_rate)));
  }

  void validate() const {
    require(num_sources >= 1, "scene needs at least one source");
    require(num_mics >= 1, "scene needs at least one microphone");
    require(sample_rate > 0, "scene sample rate must be positive");
    require(num_samples >= 1, "scene length must be positive");
    require(rir_length >= 1, "rir length must be positive");
    require(decay_time_constant >= 0.0 && std::isfinite(decay_time_constant),
            "decay time constant must be finite and non-negative");
    require(direct_delay_min >= 0 && direct_delay_max >= direct_delay_min,
            "direct delay range must satisfy 0 <= min <= max");
    require(tap_density >= 0.0 && tap_density <= 1.0, "tap density must lie in [0, 1]");
    require(reflection_gain >= 0.0 && std::isfinite(reflection_gain),
            "reflection gain must be finite and non-negative");
    require(early_ms > 0.0, "early-image length must be positive");
    require(std::isfinite(snr_db) || noiseless(), "snr_db must be finite or +inf");
  }
};

struct MixtureFixture {
  MultichannelWaveform mixtures;                  // x_c
  std::vector<MultichannelWaveform> images;       // [K] s_{k,c}
  std::vector<MultichannelWaveform> early_images; // [K] early-truncated images
  std::vector<Waveform> dry_sources;              // [K]
  std::vector<std::vector<Rir>> rirs;             // [K][C]
  MultichannelWaveform noise;                     // n_c
  SceneSpec spec;
};

inline Rir synth_rir(const SceneSpec& spec, int source, int mic) {
  spec.validate();
  Rng rng(derive_seed(spec.rng_seed, {stream::kRir, std::uint64_t(source), std::uint64_t(mic)}));
  const Index len = spec.rir_length;
  const Index lo = std::min(spec.direct_delay_min, len - 1);
  const Index hi = std::min(spec.direct_delay_max, len - 1);
  std::uniform_int_distribution<Index> delay_dist(lo, hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Rir rir;
  rir.sample_rate = spec.sample_rate;
  rir.taps = RealVector::Zero(len);
  rir.direct_path_index = delay_dist(rng);
  rir.taps[rir.direct_path_index] = 1.0;
  const double tau_samples = spec.decay_time_constant * spec.sample_rate;
  for (Index t = rir.direct_path_index + 1; t < len; ++t) {
    // Draw both numbers for every tap so the sequence does not depend on density.
    const double u = unit(rng);
    const double g = std::clamp(normal(rng), -3.0, 3.0);
    if (u >= spec.tap_density || tau_samples <= 0.0) continue;
    const double lag = static_cast<double>(t - rir.direct_path_index);
    rir.taps[t] = spec.reflection_gain * g * std::exp(-lag / tau_samples);
  }
  return rir;
}

inline RealVector convolve(const RealVector& x, const RealVector& h) {
  require(x.size() >= 1 && h.size() >= 1, "convolution inputs must be non-empty");
  const Index full = x.size() + h.size() - 1;
  int n = 1;
  while (n < full) n <<= 1;
  std::vector<double> a(n, 0.0), b(n, 0.0);
  std::copy(x.data(), x.data() + x.size(), a.begin());
  std::copy(h.data(), h.data() + h.size(), b.begin());
  Eigen::FFT<double> fft;
  std::vector<cdouble> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  std::vector<double> y;
  fft.inv(y, fa);
  RealVector out(x.size());
  for (Index t = 0; t < x.size(); ++t) out[t] = y[static_cast<std::size_t>(t)];
  return out;
}

// Linear convolution truncated to the input length.
inline Waveform convolve(const Waveform& x, const Rir& h) {
  require(x.sample_rate == h.sample_rate, "convolution sample rates differ");
  return Waveform(convolve(x.samples, h.taps), x.sample_rate);
}

// Seeded non-stationary source: spectrally tilted Gaussian noise under a
// syllable-rate on/off envelope, scaled to an RMS of 0.1.
inline Waveform synth_source(Index num_samples, int sample_rate, std::uint64_t seed) {
  require(num_samples >= 1 && sample_rate > 0, "invalid source length or rate");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  RealVector x(num_samples);
  double lp = 0.0, prev = 0.0;
  for (Index t = 0; t < num_samples; ++t) {
    const double w = normal(rng);
    lp = 0.85 * lp + w;
    x[t] = lp - 0.5 * prev;  // mild high-frequency lift on top of the tilt
    prev = lp;
  }

  RealVector env(num_samples);
  const double smooth = std::exp(-1.0 / (0.01 * sample_rate));
  double level = 0.0, target = 0.0;
  Index next_change = 0;
  for (Index t = 0; t < num_samples; ++t) {
    if (t == next_change) {
      const double seg = 0.06 + 0.24 * unit(rng);
      next_change = t + std::max<Index>(1, static_cast<Index>(seg * sample_rate));
      const bool silent = unit(rng) < 0.25;
      const double db = silent ? -60.0 : -30.0 * unit(rng);
      target = std::pow(10.0, db / 20.0);
    }
    level = smooth * level + (1.0 - smooth) * target;
    env[t] = level;
  }
  x.array() *= env.array();
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(num_samples));
  if (rms > 0.0) x *= 0.1 / rms;
  return Waveform(std::move(x), sample_rate);
}

inline MixtureFixture mix_scene(const std::vector<Waveform>& sources, const SceneSpec& spec) {
  spec.validate();
  require(static_cast<int>(sources.size()) == spec.num_sources,
          "number of sources does not match the scene spec");
  for (const auto& s : sources) {
    s.validate();
    require(s.size() == sources.front().size(), "sources have different lengths");
    require(s.sample_rate == spec.sample_rate, "source sample rate does not match the scene");
  }
  const Index T = sources.front().size();
  const int K = spec.num_sources;
  const int C = spec.num_mics;
  const Index early_len = std::min(spec.early_length(), spec.rir_length);

  MixtureFixture fx;
  fx.spec = spec;
  fx.dry_sources = sources;
  fx.rirs.resize(K);
  fx.images.resize(K);
  fx.early_images.resize(K);
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) {
      Rir h = synth_rir(spec, k, c);
      RealVector early = h.taps.head(early_len);
      fx.images[k].channels.push_back(convolve(sources[k], h));
      fx.early_images[k].channels.emplace_back(convolve(sources[k].samples, early),
                                               spec.sample_rate);
      fx.rirs[k].push_back(std::move(h));
    }
  }
  for (int c = 0; c < C; ++c) {
    RealVector clean = RealVector::Zero(T);
    for (int k = 0; k < K; ++k) clean += fx.images[k][c].samples;
    RealVector n = RealVector::Zero(T);
    if (!spec.noiseless()) {
      Rng rng(derive_seed(spec.rng_seed, {stream::kNoise, std::uint64_t(c)}));
      n = gaussian_vector(T, rng);
      const double target = clean.squaredNorm() / std::pow(10.0, spec.snr_db / 10.0);
      n *= std::sqrt(target / n.squaredNorm());
    }
    fx.noise.channels.emplace_back(n, spec.sample_rate);
    fx.mixtures.channels.emplace_back(clean + n, spec.sample_rate);
  }
  return fx;
}

// Generates K seeded sources and mixes them.
inline MixtureFixture make_fixture(const SceneSpec& spec) {
  spec.validate();
  std::vector<Waveform> sources;
  for (int k = 0; k < spec.num_sources; ++k)
    sources.push_back(synth_source(spec.num_samples, spec.sample_rate,
                                   derive_seed(spec.rng_seed, {stream::kSource, std::uint64_t(k)})));
  return mix_scene(sources, spec);
}

}  // namespace arraydps
