#pragma once

// Auxiliary-function independent vector analysis (AuxIVA) with
// iterative-projection updates, projection back to the reference channel, and
// the FCP-based relative-RIR initialisation built on its output.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "arraydps/fcp.hpp"
#include "arraydps/stft.hpp"
#include "arraydps/types.hpp"

namespace arraydps {

enum class IvaPrior { Gaussian, Laplace };

inline std::string to_string(IvaPrior p) { return p == IvaPrior::Gaussian ? "gaussian" : "laplace"; }

struct IvaConfig {
  IvaPrior prior = IvaPrior::Gaussian;
  int iterations = 100;
  StftConfig stft{2048, 256};

  void validate() const {
    require(iterations >= 1, "iva iterations must be >= 1");
    stft.validate();
  }
};

struct DemixingMatrices {
  std::vector<ComplexMatrix> W;  // per bin, [K x K]; y = W x
};

struct IvaResult {
  std::vector<Spectrogram> sources;  // projected back to the reference channel
  DemixingMatrices demixing;
  std::vector<double> objective;     // after each iteration; [0] is the initial value
};

namespace detail {

// Variance floor relative to the mean frame power of the input; keeps the
// contrast bounded below and the surrogate weights finite.
inline constexpr double kIvaVarianceFloor = 1e-6;

// Contrast G on the squared source-vector norm u = r^2, smoothed as u + delta.
// Both forms are concave in u, so the weight dG/du gives a tight majorizer.
inline double iva_contrast(IvaPrior prior, double u, double delta, Index bins) {
  return prior == IvaPrior::Laplace ? std::sqrt(u + delta)
                                    : static_cast<double>(bins) * std::log(u + delta);
}

// G'(r) / (2 r) = dG/du
inline double iva_weight(IvaPrior prior, double u, double delta, Index bins) {
  return prior == IvaPrior::Laplace ? 0.5 / std::sqrt(u + delta)
                                    : static_cast<double>(bins) / (u + delta);
}

// (1/L) sum_{k,l} G(r_kl^2) - 2 sum_f log|det W(f)|
inline double iva_objective(IvaPrior prior, const std::vector<ComplexMatrix>& Y,
                            const std::vector<ComplexMatrix>& W, double delta) {
  const Index B = static_cast<Index>(Y.size());
  const Index K = Y.front().rows();
  const Index L = Y.front().cols();
  RealMatrix power = RealMatrix::Zero(K, L);
  for (const auto& y : Y) power += y.cwiseAbs2();
  double value = 0.0;
  for (Index k = 0; k < K; ++k)
    for (Index l = 0; l < L; ++l) value += iva_contrast(prior, power(k, l), delta, B);
  value /= static_cast<double>(L);
  for (const auto& w : W) value -= 2.0 * std::log(std::abs(w.determinant()));
  return value;
}

}  // namespace detail

// Separates K = number of given channels. Outputs estimate each source's
// image at channel 0.
inline IvaResult auxiva(const std::vector<Spectrogram>& mixtures, const IvaConfig& cfg) {
  cfg.validate();
  const Index K = static_cast<Index>(mixtures.size());
  require(K >= 2, "iva needs at least two channels");
  const Index L = mixtures.front().frames();
  const Index B = mixtures.front().num_bins();
  for (const auto& X : mixtures) {
    require(X.frames() == L && X.num_bins() == B, "iva input spectrograms differ in shape");
    require(X.bins.allFinite(), "iva input contains non-finite values");
  }

  // Per-bin data X_f [K x L], demixing W_f, outputs Y_f = W_f X_f.
  std::vector<ComplexMatrix> X(B, ComplexMatrix(K, L));
  for (Index f = 0; f < B; ++f)
    for (Index c = 0; c < K; ++c) X[f].row(c) = mixtures[c].bins.col(f).transpose();
  std::vector<ComplexMatrix> W(B, ComplexMatrix::Identity(K, K));
  std::vector<ComplexMatrix> Y = X;

  double frame_power = 0.0;
  for (const auto& x : X) frame_power += x.squaredNorm();
  frame_power /= static_cast<double>(K * L);
  const double delta = detail::kIvaVarianceFloor * frame_power + 1e-300;

  IvaResult result;
  result.objective.push_back(detail::iva_objective(cfg.prior, Y, W, delta));

  RealVector phi(L);
  ComplexMatrix V(K, K);
  const ComplexVector unit_basis = ComplexVector::Zero(K);
  for (int it = 0; it < cfg.iterations; ++it) {
    for (Index k = 0; k < K; ++k) {
      phi.setZero();
      for (Index f = 0; f < B; ++f) phi += Y[f].row(k).cwiseAbs2().transpose();
      for (Index l = 0; l < L; ++l) phi[l] = detail::iva_weight(cfg.prior, phi[l], delta, B);

      for (Index f = 0; f < B; ++f) {
        const ComplexMatrix weighted = X[f] * phi.cast<cdouble>().asDiagonal();
        V.noalias() = weighted * X[f].adjoint() / static_cast<double>(L);
        // Ridge keeps V invertible in silent bins.
        V.diagonal().array() += 1e-12 * (V.diagonal().real().sum() / K + 1e-30);
        ComplexVector e = unit_basis;
        e[k] = 1.0;
        ComplexVector w = (W[f] * V).partialPivLu().solve(e);
        const double scale = std::sqrt(std::max((w.adjoint() * V * w)(0, 0).real(), 1e-300));
        w /= scale;
        W[f].row(k) = w.adjoint();
        Y[f].row(k) = w.adjoint() * X[f];
      }
    }
    result.objective.push_back(detail::iva_objective(cfg.prior, Y, W, delta));
  }

  // Projection back: scale output k by (W_f^{-1})(0, k).
  result.sources.assign(K, Spectrogram::zeros_like(mixtures.front()));
  for (Index f = 0; f < B; ++f) {
    const ComplexMatrix A = W[f].inverse();
    for (Index k = 0; k < K; ++k) result.sources[k].bins.col(f) = A(0, k) * Y[f].row(k).transpose();
  }
  result.demixing.W = std::move(W);
  return result;
}

// Determined-case IVA on the first `num_sources` channels.
inline IvaResult iva_separate(const std::vector<Spectrogram>& mixtures, int num_sources,
                              const IvaConfig& cfg) {
  require(num_sources >= 2, "iva needs at least two sources");
  require(static_cast<std::size_t>(num_sources) <= mixtures.size(),
          "iva needs at least as many channels as sources");
  return auxiva(std::vector<Spectrogram>(mixtures.begin(), mixtures.begin() + num_sources), cfg);
}

// Time-domain convenience: STFT at the IVA resolution, separate, ISTFT.
inline std::vector<RealVector> iva_separate(const MultichannelWaveform& x, int num_sources,
                                            const IvaConfig& cfg) {
  x.validate();
  require(static_cast<std::size_t>(num_sources) <= x.channel_count(),
          "iva needs at least as many channels as sources");
  std::vector<Spectrogram> X;
  for (int c = 0; c < num_sources; ++c) X.push_back(stft(x[c].samples, cfg.stft));
  const IvaResult r = auxiva(X, cfg);
  std::vector<RealVector> out;
  for (const auto& s : r.sources) out.push_back(istft(s));
  return out;
}

// G^{k,IVA}_{1->c} = FCP(X_c, S^IVA_k) for all k, c; result indexed [k][c].
// Both inputs must be analysed with the FCP STFT configuration.
inline std::vector<std::vector<FilterTaps>> iva_init_filters(
    const std::vector<Spectrogram>& mixtures, const std::vector<Spectrogram>& iva_sources,
    const FcpConfig& fcp_cfg) {
  require(!mixtures.empty() && !iva_sources.empty(), "iva_init_filters needs inputs");
  const RealMatrix weights = fcp_weights(mixtures, fcp_cfg.eps);
  std::vector<const Spectrogram*> targets;
  for (const auto& X : mixtures) targets.push_back(&X);
  std::vector<std::vector<FilterTaps>> filters;
  for (std::size_t k = 0; k < iva_sources.size(); ++k) {
    if (!(iva_sources[k].bins.cwiseAbs2().sum() > 0.0))
      throw InvalidArgument("iva_init_filters: source " + std::to_string(k) +
                            " is silent (degenerate regressor)");
    filters.push_back(fcp_estimate_multi(targets, iva_sources[k], weights, fcp_cfg));
  }
  return filters;
}

}  // namespace arraydps
