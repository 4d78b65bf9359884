#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace arraydps {

using Index = Eigen::Index;
using cdouble = std::complex<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr int kDefaultSampleRate = 8000;

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A numerical solve failed (singular system, non-finite state).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

// Single-channel time-domain signal.
struct Waveform {
  RealVector samples;
  int sample_rate = kDefaultSampleRate;

  Waveform() = default;
  Waveform(RealVector s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  Index size() const { return samples.size(); }

  void validate() const {
    require(samples.size() >= 1, "waveform must contain at least one sample");
    require(sample_rate > 0, "waveform sample rate must be positive");
    require(samples.allFinite(), "waveform contains non-finite samples");
  }
};

// Ordered channels sharing sample rate and length. Channel 0 is the reference
// channel (channel 1 in one-based microphone numbering).
struct MultichannelWaveform {
  std::vector<Waveform> channels;

  MultichannelWaveform() = default;
  explicit MultichannelWaveform(std::vector<Waveform> ch) : channels(std::move(ch)) {}

  std::size_t channel_count() const { return channels.size(); }
  Index length() const { return channels.empty() ? 0 : channels.front().size(); }
  int sample_rate() const {
    return channels.empty() ? kDefaultSampleRate : channels.front().sample_rate;
  }
  const Waveform& operator[](std::size_t c) const { return channels[c]; }
  Waveform& operator[](std::size_t c) { return channels[c]; }

  void validate() const {
    require(!channels.empty(), "multichannel waveform has no channels");
    for (const auto& ch : channels) {
      ch.validate();
      require(ch.sample_rate == channels.front().sample_rate,
              "channels have different sample rates");
      require(ch.size() == channels.front().size(), "channels have different lengths");
    }
  }
};

inline double energy(const RealVector& x) { return x.squaredNorm(); }

}  // namespace arraydps
