#pragma once

// Forward convolutive prediction: per-frequency weighted least-squares
// estimation of multi-frame STFT-domain relative impulse responses, and the
// frame-axis convolution that applies them.

#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "arraydps/stft.hpp"
#include "arraydps/types.hpp"

namespace arraydps {

struct FcpConfig {
  int future_taps = 1;    // F: taps j = -F..-1 use future frames
  int past_taps = 12;     // P: taps j = 1..P use past frames
  double eps = 1e-3;      // weight floor relative to the peak mean power
  // Ridge added to each normal matrix as diag_load * trace / (F + P + 1).
  double diag_load = 1e-5;

  int num_taps() const { return future_taps + past_taps + 1; }

  void validate() const {
    require(future_taps >= 0, "fcp future_taps must be >= 0");
    require(past_taps >= 0, "fcp past_taps must be >= 0");
    require(eps > 0.0, "fcp eps must be > 0");
    require(diag_load >= 0.0, "fcp diag_load must be >= 0");
  }
};

// G(f, j) for j = -F..P, stored in column j + F.
struct FilterTaps {
  ComplexMatrix taps;  // [num_bins x (F + P + 1)]
  int future_taps = 0;
  int past_taps = 0;

  int num_taps() const { return future_taps + past_taps + 1; }
  Index num_bins() const { return taps.rows(); }
  cdouble& at(Index f, int j) { return taps(f, j + future_taps); }
  cdouble at(Index f, int j) const { return taps(f, j + future_taps); }

  // Unit tap at frame offset `j` in every bin.
  static FilterTaps unit(Index bins, int future, int past, int j = 0) {
    FilterTaps g{ComplexMatrix::Zero(bins, future + past + 1), future, past};
    g.taps.col(j + future).setOnes();
    return g;
  }
};

// lambda(l, f) = mean_c |X_c|^2 + eps * max_{l,f} mean_c |X_c|^2
inline RealMatrix fcp_weights(const std::vector<Spectrogram>& mixtures, double eps) {
  require(!mixtures.empty(), "fcp_weights needs at least one channel");
  require(eps > 0.0, "fcp eps must be > 0");
  const Index L = mixtures.front().frames();
  const Index B = mixtures.front().num_bins();
  RealMatrix power = RealMatrix::Zero(L, B);
  for (const auto& X : mixtures) {
    require(X.frames() == L && X.num_bins() == B, "mixture spectrograms differ in shape");
    power += X.bins.cwiseAbs2();
  }
  power /= static_cast<double>(mixtures.size());
  const double peak = power.maxCoeff();
  if (!(peak > 0.0)) throw InvalidArgument("fcp_weights: mixture is all zero");
  power.array() += eps * peak;
  return power;
}

namespace detail {

// Regressor matrix A(l, j + F) = S(l - j, f), zero outside the frame range.
inline void fill_regressors(const Spectrogram& S, Index f, int F, int P, ComplexMatrix& A) {
  const Index L = S.frames();
  A.setZero(L, F + P + 1);
  for (int j = -F; j <= P; ++j) {
    const Index col = j + F;
    for (Index l = 0; l < L; ++l) {
      const Index src = l - j;
      if (src >= 0 && src < L) A(l, col) = S.bins(src, f);
    }
  }
}

}  // namespace detail

// Estimates one filter per target spectrogram, all sharing the regressor
// `source` and the weights. The normal matrix is factored once per bin.
inline std::vector<FilterTaps> fcp_estimate_multi(const std::vector<const Spectrogram*>& targets,
                                                  const Spectrogram& source,
                                                  const RealMatrix& weights,
                                                  const FcpConfig& cfg) {
  cfg.validate();
  require(!targets.empty(), "fcp_estimate needs at least one target");
  const Index L = source.frames();
  const Index B = source.num_bins();
  for (const Spectrogram* X : targets)
    require(X->frames() == L && X->num_bins() == B, "fcp target and source shapes differ");
  require(weights.rows() == L && weights.cols() == B, "fcp weights shape differs");
  require((weights.array() > 0.0).all(), "fcp weights must be positive");

  const int F = cfg.future_taps;
  const int P = cfg.past_taps;
  const int J = cfg.num_taps();
  const Index C = static_cast<Index>(targets.size());

  std::vector<FilterTaps> out(targets.size(),
                              FilterTaps{ComplexMatrix::Zero(B, J), F, P});
  // Whitened regressors diag(lambda)^{-1/2} A; R keeps only its lower half.
  ComplexMatrix A, R(J, J), rhs(J, C), Xf(L, C);
  for (Index f = 0; f < B; ++f) {
    detail::fill_regressors(source, f, F, P, A);
    const ComplexVector scale = weights.col(f).cwiseInverse().cwiseSqrt().cast<cdouble>();
    A.array().colwise() *= scale.array();
    R.setZero();
    R.selfadjointView<Eigen::Lower>().rankUpdate(A.adjoint());
    const double trace = R.diagonal().real().sum();
    if (!(trace > 0.0)) continue;  // silent regressor: zero filter
    for (Index c = 0; c < C; ++c) Xf.col(c) = targets[c]->bins.col(f).cwiseProduct(scale);
    rhs.noalias() = A.adjoint() * Xf;
    if (cfg.diag_load > 0.0) R.diagonal().array() += cfg.diag_load * trace / J;
    Eigen::LLT<ComplexMatrix, Eigen::Lower> llt(R);
    if (llt.info() != Eigen::Success)
      throw NumericalError("fcp: singular normal matrix at bin " + std::to_string(f) +
                           "; use diag_load > 0");
    const ComplexMatrix g = llt.solve(rhs);
    if (!g.allFinite())
      throw NumericalError("fcp: non-finite filter at bin " + std::to_string(f) +
                           "; use diag_load > 0");
    for (Index c = 0; c < C; ++c) out[c].taps.row(f) = g.col(c).transpose();
  }
  return out;
}

// argmin_G sum_{l,f} |X(l,f) - (G *_l S)(l,f)|^2 / lambda(l,f) + ridge.
inline FilterTaps fcp_estimate(const Spectrogram& target, const Spectrogram& source,
                               const RealMatrix& weights, const FcpConfig& cfg) {
  return fcp_estimate_multi({&target}, source, weights, cfg).front();
}

// (G *_l S)(l, f) = sum_{j=-F}^{P} G(f, j) S(l - j, f)
inline Spectrogram apply_filter(const FilterTaps& G, const Spectrogram& S) {
  require(G.num_bins() == S.num_bins(), "filter and spectrogram bin counts differ");
  const Index L = S.frames();
  Spectrogram out = Spectrogram::zeros_like(S);
  for (int j = -G.future_taps; j <= G.past_taps; ++j) {
    const auto g = G.taps.col(j + G.future_taps).transpose();
    const Index lo = std::max<Index>(0, j);
    const Index hi = std::min<Index>(L, L + j);
    if (hi <= lo) continue;
    out.bins.middleRows(lo, hi - lo).array() +=
        S.bins.middleRows(lo - j, hi - lo).array().rowwise() * g.array();
  }
  return out;
}

// Adjoint of apply_filter in S: (G^H R)(m, f) = sum_j conj(G(f, j)) R(m + j, f).
inline Spectrogram apply_filter_adjoint(const FilterTaps& G, const Spectrogram& R) {
  require(G.num_bins() == R.num_bins(), "filter and spectrogram bin counts differ");
  const Index L = R.frames();
  Spectrogram out = Spectrogram::zeros_like(R);
  for (int j = -G.future_taps; j <= G.past_taps; ++j) {
    const auto g = G.taps.col(j + G.future_taps).conjugate().transpose();
    const Index lo = std::max<Index>(0, -j);
    const Index hi = std::min<Index>(L, L - j);
    if (hi <= lo) continue;
    out.bins.middleRows(lo, hi - lo).array() +=
        R.bins.middleRows(lo + j, hi - lo).array().rowwise() * g.array();
  }
  return out;
}

// sum_{l,f} |X - G *_l S|^2 / lambda
inline double fcp_weighted_residual(const Spectrogram& target, const Spectrogram& source,
                                    const FilterTaps& G, const RealMatrix& weights) {
  const Spectrogram est = apply_filter(G, source);
  return ((target.bins - est.bins).cwiseAbs2().array() / weights.array()).sum();
}

}  // namespace arraydps
