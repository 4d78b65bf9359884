#pragma once

// Short-time Fourier analysis/synthesis with a square-root Hann window pair.
//
// Signals are zero-padded by (fft_size - hop_size) samples in front and up to a
// whole frame at the back, so every input sample is covered by exactly
// fft_size / hop_size frames. With the periodic square-root Hann window the
// squared windows overlap-add to fft_size / (2 * hop_size), which gives exact
// reconstruction over the whole signal and an exact Parseval identity.
//
// Spectra are one-sided (fft_size / 2 + 1 bins). Inner products between
// spectrograms are Re(sum conj(a) * b) over the stored bins; the adjoint
// operators below are exact with respect to that inner product.

#include <cmath>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "arraydps/types.hpp"

namespace arraydps {

enum class WindowKind { SqrtHann };

struct StftConfig {
  int fft_size = 512;
  int hop_size = 64;
  WindowKind window = WindowKind::SqrtHann;

  int num_bins() const { return fft_size / 2 + 1; }
  int overlap_factor() const { return fft_size / hop_size; }
  int front_padding() const { return fft_size - hop_size; }

  void validate() const;
};

inline bool operator==(const StftConfig& a, const StftConfig& b) {
  return a.fft_size == b.fft_size && a.hop_size == b.hop_size && a.window == b.window;
}

// Complex STFT of one signal, frames along rows and frequency bins along columns.
struct Spectrogram {
  ComplexMatrix bins;  // [frames x num_bins]
  StftConfig config;
  Index signal_length = 0;

  Index frames() const { return bins.rows(); }
  Index num_bins() const { return bins.cols(); }

  static Spectrogram zeros_like(const Spectrogram& s) {
    return Spectrogram{ComplexMatrix::Zero(s.frames(), s.num_bins()), s.config,
                       s.signal_length};
  }
};

inline RealVector make_window(const StftConfig& cfg) {
  RealVector w(cfg.fft_size);
  for (int n = 0; n < cfg.fft_size; ++n) {
    const double hann =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / static_cast<double>(cfg.fft_size));
    w[n] = std::sqrt(hann);
  }
  return w;
}

inline void StftConfig::validate() const {
  require(fft_size >= 2 && (fft_size & (fft_size - 1)) == 0,
          "stft fft_size must be a power of two");
  require(hop_size >= 1 && fft_size % hop_size == 0, "stft hop_size must divide fft_size");
  require(fft_size / hop_size >= 2, "stft hop_size must be at most fft_size / 2");
  // Constant overlap-add of the analysis * synthesis window product.
  const RealVector w = make_window(*this);
  double first = 0.0;
  for (int n = 0; n < hop_size; ++n) {
    double sum = 0.0;
    for (int m = n; m < fft_size; m += hop_size) sum += w[m] * w[m];
    if (n == 0) first = sum;
    require(std::abs(sum - first) <= 1e-12 * first,
            "stft window pair does not satisfy constant overlap-add at this hop");
  }
}

inline Index num_frames(Index signal_length, const StftConfig& cfg) {
  return (cfg.front_padding() + signal_length - 1) / cfg.hop_size + 1;
}

namespace detail {

inline Index padded_length(Index frames, const StftConfig& cfg) {
  return (frames - 1) * cfg.hop_size + cfg.fft_size;
}

// Overlap-add gain of the squared window.
inline double ola_gain(const StftConfig& cfg) { return cfg.overlap_factor() / 2.0; }

class FrameFft {
 public:
  explicit FrameFft(int n) : n_(n), frame_(n), spec_(n / 2 + 1) {
    fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  }

  // Forward real DFT of `frame` into one-sided `spec`.
  void forward() { fft_.fwd(spec_, frame_); }

  // Inverse real DFT (scaled by 1/n) of the one-sided `spec` into `frame`,
  // treating the spectrum as Hermitian: imaginary parts of DC and Nyquist are
  // discarded.
  void inverse() {
    spec_.front().imag(0.0);
    spec_.back().imag(0.0);
    fft_.inv(frame_, spec_, n_);
  }

  std::vector<double>& frame() { return frame_; }
  std::vector<cdouble>& spec() { return spec_; }

 private:
  int n_;
  Eigen::FFT<double> fft_;
  std::vector<double> frame_;
  std::vector<cdouble> spec_;
};

}  // namespace detail

inline Spectrogram stft(const RealVector& x, const StftConfig& cfg) {
  cfg.validate();
  require(x.size() >= cfg.fft_size, "signal is shorter than one stft frame");
  require(x.allFinite(), "stft input contains non-finite samples");

  const Index frames = num_frames(x.size(), cfg);
  const int n = cfg.fft_size;
  const int bins = cfg.num_bins();
  const Index pad = cfg.front_padding();
  const RealVector w = make_window(cfg);

  Spectrogram out{ComplexMatrix(frames, bins), cfg, x.size()};
  detail::FrameFft fft(n);
  for (Index l = 0; l < frames; ++l) {
    const Index start = l * cfg.hop_size - pad;
    auto& frame = fft.frame();
    for (int k = 0; k < n; ++k) {
      const Index t = start + k;
      frame[k] = (t >= 0 && t < x.size()) ? x[t] * w[k] : 0.0;
    }
    fft.forward();
    for (int f = 0; f < bins; ++f) out.bins(l, f) = fft.spec()[f];
  }
  return out;
}

inline Spectrogram stft(const Waveform& x, const StftConfig& cfg) { return stft(x.samples, cfg); }

inline RealVector istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  require(spec.num_bins() == cfg.num_bins(), "spectrogram bin count does not match config");
  require(spec.frames() == num_frames(spec.signal_length, cfg),
          "spectrogram frame count does not match signal length");
  require(spec.bins.allFinite(), "istft input contains non-finite bins");

  const int n = cfg.fft_size;
  const Index pad = cfg.front_padding();
  const RealVector w = make_window(cfg);
  const double gain = 1.0 / detail::ola_gain(cfg);

  RealVector out = RealVector::Zero(spec.signal_length);
  detail::FrameFft fft(n);
  for (Index l = 0; l < spec.frames(); ++l) {
    for (int f = 0; f < cfg.num_bins(); ++f) fft.spec()[f] = spec.bins(l, f);
    fft.inverse();
    const Index start = l * cfg.hop_size - pad;
    for (int k = 0; k < n; ++k) {
      const Index t = start + k;
      if (t >= 0 && t < out.size()) out[t] += gain * w[k] * fft.frame()[k];
    }
  }
  return out;
}

// Adjoint of `stft` for a signal of length Y.signal_length.
inline RealVector stft_adjoint(const Spectrogram& Y) {
  const StftConfig& cfg = Y.config;
  cfg.validate();
  require(Y.frames() == num_frames(Y.signal_length, cfg) && Y.num_bins() == cfg.num_bins(),
          "spectrogram shape does not match its signal length");
  const int n = cfg.fft_size;
  const int bins = cfg.num_bins();
  const Index pad = cfg.front_padding();
  const RealVector w = make_window(cfg);

  // Re(sum_{f<=n/2} Y_f e^{+i 2 pi f k / n}) == n * irfft(Y') with interior bins halved.
  RealVector out = RealVector::Zero(Y.signal_length);
  detail::FrameFft fft(n);
  for (Index l = 0; l < Y.frames(); ++l) {
    auto& spec = fft.spec();
    for (int f = 0; f < bins; ++f) {
      const bool edge = (f == 0 || f == bins - 1);
      spec[f] = edge ? Y.bins(l, f) : 0.5 * Y.bins(l, f);
    }
    fft.inverse();
    const Index start = l * cfg.hop_size - pad;
    for (int k = 0; k < n; ++k) {
      const Index t = start + k;
      if (t >= 0 && t < out.size()) out[t] += n * w[k] * fft.frame()[k];
    }
  }
  return out;
}

// Adjoint of `istft` (which maps a spectrogram to a signal of y.size() samples).
inline Spectrogram istft_adjoint(const RealVector& y, const StftConfig& cfg) {
  cfg.validate();
  require(y.size() >= cfg.fft_size, "signal is shorter than one stft frame");
  const Index frames = num_frames(y.size(), cfg);
  const int n = cfg.fft_size;
  const int bins = cfg.num_bins();
  const Index pad = cfg.front_padding();
  const RealVector w = make_window(cfg);
  const double gain = 1.0 / detail::ola_gain(cfg);

  Spectrogram out{ComplexMatrix(frames, bins), cfg, y.size()};
  detail::FrameFft fft(n);
  for (Index l = 0; l < frames; ++l) {
    const Index start = l * cfg.hop_size - pad;
    auto& frame = fft.frame();
    for (int k = 0; k < n; ++k) {
      const Index t = start + k;
      frame[k] = (t >= 0 && t < y.size()) ? gain * w[k] * y[t] : 0.0;
    }
    fft.forward();
    for (int f = 0; f < bins; ++f) {
      const double c = (f == 0 || f == bins - 1) ? 1.0 : 2.0;
      out.bins(l, f) = (c / n) * fft.spec()[f];
    }
  }
  return out;
}

// Re <a, b> over all stored bins.
inline double inner(const Spectrogram& a, const Spectrogram& b) {
  require(a.bins.rows() == b.bins.rows() && a.bins.cols() == b.bins.cols(),
          "spectrogram shapes differ");
  return (a.bins.conjugate().array() * b.bins.array()).real().sum();
}

// Signal-domain energy recovered from the spectrogram: interior bins count
// twice (their negative-frequency mirror) and the total is divided by the
// window-power gain fft_size^2 / (2 * hop_size). Equals ||x||^2 for
// S = stft(x).
inline double spectral_energy(const Spectrogram& s) {
  const Index bins = s.num_bins();
  double e = 0.0;
  for (Index f = 0; f < bins; ++f) {
    const double c = (f == 0 || f == bins - 1) ? 1.0 : 2.0;
    e += c * s.bins.col(f).squaredNorm();
  }
  return e / (s.config.fft_size * detail::ola_gain(s.config));
}

}  // namespace arraydps
