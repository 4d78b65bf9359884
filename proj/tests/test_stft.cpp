#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "arraydps/rng.hpp"
#include "arraydps/stft.hpp"

using namespace arraydps;
using Catch::Approx;

namespace {

RealVector random_signal(Index n, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_vector(n, rng);
}

Spectrogram random_spectrogram(Index signal_length, const StftConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Spectrogram s{ComplexMatrix(num_frames(signal_length, cfg), cfg.num_bins()), cfg, signal_length};
  std::normal_distribution<double> n(0.0, 1.0);
  for (Index i = 0; i < s.bins.size(); ++i) s.bins.data()[i] = cdouble(n(rng), n(rng));
  return s;
}

// Frame l of the padded signal, windowed, transformed with a direct O(n^2) DFT.
ComplexVector direct_frame_dft(const RealVector& x, const StftConfig& cfg, Index l) {
  const int n = cfg.fft_size;
  const RealVector w = make_window(cfg);
  ComplexVector out(cfg.num_bins());
  for (int f = 0; f < cfg.num_bins(); ++f) {
    cdouble acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const Index t = l * cfg.hop_size - cfg.front_padding() + k;
      if (t < 0 || t >= x.size()) continue;
      const double ang = -2.0 * std::numbers::pi * f * k / n;
      acc += x[t] * w[k] * cdouble(std::cos(ang), std::sin(ang));
    }
    out[f] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("window pair satisfies constant overlap-add", "[stft]") {
  for (auto [n, h] : {std::pair{512, 64}, {2048, 256}, {64, 16}, {32, 16}}) {
    const StftConfig cfg{n, h};
    REQUIRE_NOTHROW(cfg.validate());
    const RealVector w = make_window(cfg);
    for (int k = 0; k < h; ++k) {
      double s = 0.0;
      for (int m = k; m < n; m += h) s += w[m] * w[m];
      REQUIRE(s == Approx(static_cast<double>(n) / (2 * h)).epsilon(1e-14));
    }
  }
}

TEST_CASE("invalid stft configurations are rejected", "[stft]") {
  CHECK_THROWS_AS((StftConfig{500, 50}.validate()), InvalidArgument);
  CHECK_THROWS_AS((StftConfig{512, 96}.validate()), InvalidArgument);
  CHECK_THROWS_AS((StftConfig{512, 512}.validate()), InvalidArgument);
  CHECK_THROWS_AS(stft(RealVector::Ones(100), StftConfig{}), InvalidArgument);
}

TEST_CASE("zero signal gives zero spectrogram and back", "[stft]") {
  const StftConfig cfg;
  const Spectrogram S = stft(RealVector::Zero(3000), cfg);
  CHECK(S.bins.cwiseAbs().maxCoeff() == 0.0);
  CHECK(istft(S).cwiseAbs().maxCoeff() == 0.0);
  CHECK(stft_adjoint(S).cwiseAbs().maxCoeff() == 0.0);
  CHECK(istft_adjoint(RealVector::Zero(3000), cfg).bins.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("round trip is exact over the whole signal", "[stft]") {
  for (auto cfg : {StftConfig{512, 64}, StftConfig{2048, 256}, StftConfig{64, 16}}) {
    for (Index T : {Index(cfg.fft_size), Index(3001), Index(8000)}) {
      const RealVector x = random_signal(T, 100 + T);
      const RealVector y = istft(stft(x, cfg));
      REQUIRE(y.size() == T);
      CHECK((y - x).cwiseAbs().maxCoeff() <= 1e-10 * x.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("parseval identity", "[stft]") {
  const StftConfig cfg;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RealVector x = random_signal(4000 + 37 * Index(seed), seed);
    CHECK(spectral_energy(stft(x, cfg)) == Approx(x.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("stft matches a direct dft of windowed frames", "[stft]") {
  const StftConfig cfg{64, 16};
  const RealVector x = random_signal(300, 7);
  const Spectrogram S = stft(x, cfg);
  for (Index l = 0; l < S.frames(); ++l) {
    const ComplexVector ref = direct_frame_dft(x, cfg, l);
    CHECK((S.bins.row(l).transpose() - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("bin-centred sinusoid peaks at its bin in interior frames", "[stft]") {
  const StftConfig cfg;
  const int f0 = 37;
  RealVector x(4096);
  for (Index t = 0; t < x.size(); ++t) x[t] = std::sin(2.0 * std::numbers::pi * f0 * t / cfg.fft_size);
  const Spectrogram S = stft(x, cfg);
  const Index first = cfg.overlap_factor();  // first frame fully inside the signal
  const Index last = (x.size() + cfg.front_padding()) / cfg.hop_size - cfg.overlap_factor();
  for (Index l = first; l <= last; ++l) {
    Index arg = 0;
    S.bins.row(l).cwiseAbs().maxCoeff(&arg);
    CHECK(arg == f0);
  }
}

TEST_CASE("stft is linear", "[stft]") {
  const StftConfig cfg;
  const RealVector x = random_signal(2000, 1), y = random_signal(2000, 2);
  const double a = 0.7, b = -1.3;
  const ComplexMatrix lhs = stft(a * x + b * y, cfg).bins;
  const ComplexMatrix rhs = a * stft(x, cfg).bins + b * stft(y, cfg).bins;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("stft and istft adjoints", "[stft][adjoint]") {
  for (auto cfg : {StftConfig{512, 64}, StftConfig{64, 16}}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Index T = 1500 + 113 * Index(seed);
      const RealVector x = random_signal(T, seed);
      const Spectrogram Y = random_spectrogram(T, cfg, 50 + seed);
      const double lhs = inner(stft(x, cfg), Y);
      const double rhs = x.dot(stft_adjoint(Y));
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(lhs), x.norm() * Y.bins.norm() * 1e-3));

      const RealVector y = random_signal(T, 90 + seed);
      const double lhs2 = istft(Y).dot(y);
      const double rhs2 = inner(Y, istft_adjoint(y, cfg));
      CHECK(std::abs(lhs2 - rhs2) <= 1e-10 * std::max(std::abs(lhs2), y.norm() * Y.bins.norm() * 1e-3));
    }
  }
}

TEST_CASE("gradient of spectral energy through the adjoint", "[stft][adjoint]") {
  // f(x) = ||stft(x)||^2 over stored bins, grad = 2 stft^T stft x.
  const StftConfig cfg{64, 16};
  const RealVector x = random_signal(400, 3);
  const RealVector grad = 2.0 * stft_adjoint(stft(x, cfg));
  const auto f = [&](const RealVector& v) { return stft(v, cfg).bins.squaredNorm(); };
  Rng rng(9);
  for (int p = 0; p < 5; ++p) {
    RealVector d = gaussian_vector(x.size(), rng);
    d /= d.norm();
    const double h = 1e-4;
    const double fd = (f(x + h * d) - f(x - h * d)) / (2 * h);
    CHECK(fd == Approx(grad.dot(d)).epsilon(1e-6));
  }
}
