#pragma once

// SI-SDR, filtered-projection SDR and permutation-invariant evaluation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "arraydps/types.hpp"

namespace arraydps {

inline constexpr double kMetricClampDb = 100.0;

namespace detail {

// 10 log10(num / den), clamped to +100 dB when den is negligible.
inline double clamped_ratio_db(double num, double den) {
  if (!(den > num * 1e-10)) return kMetricClampDb;
  return std::min(kMetricClampDb, 10.0 * std::log10(num / den));
}

}  // namespace detail

inline double si_sdr(const RealVector& est, const RealVector& ref) {
  require(est.size() == ref.size(), "si_sdr: length mismatch");
  const double rr = ref.squaredNorm();
  if (!(rr > 0.0)) throw InvalidArgument("si_sdr: reference is silent");
  const double alpha = est.dot(ref) / rr;
  const RealVector target = alpha * ref;
  const double num = target.squaredNorm();
  const double den = (est - target).squaredNorm();
  if (!(num > 0.0)) return -kMetricClampDb;  // no projection onto the reference
  return detail::clamped_ratio_db(num, den);
}

inline double si_sdr(const Waveform& est, const Waveform& ref) {
  return si_sdr(est.samples, ref.samples);
}

// Projects est onto the span of ref delayed by 0..taps-1 samples (causal,
// truncated to the signal length) and reports target-to-residual energy.
inline double sdr_filtered(const RealVector& est, const RealVector& ref, int taps = 512) {
  require(est.size() == ref.size(), "sdr_filtered: length mismatch");
  require(taps >= 1, "sdr_filtered: taps must be >= 1");
  const Index T = ref.size();
  if (!(ref.squaredNorm() > 0.0)) throw InvalidArgument("sdr_filtered: reference is silent");
  const Index J = std::min<Index>(taps, T);

  // Gram G(a, b) = sum_t ref(t - a) ref(t - b), built from the autocorrelation
  // and G(a+1, b+1) = G(a, b) - ref(T-1-a) ref(T-1-b).
  RealMatrix G(J, J);
  for (Index lag = 0; lag < J; ++lag) {
    G(0, lag) = ref.head(T - lag).dot(ref.tail(T - lag));
    G(lag, 0) = G(0, lag);
  }
  for (Index a = 0; a + 1 < J; ++a)
    for (Index b = a; b + 1 < J; ++b) {
      G(a + 1, b + 1) = G(a, b) - ref[T - 1 - a] * ref[T - 1 - b];
      G(b + 1, a + 1) = G(a + 1, b + 1);
    }
  RealVector c(J);
  for (Index a = 0; a < J; ++a) c[a] = est.tail(T - a).dot(ref.head(T - a));

  const Eigen::LDLT<RealMatrix> ldlt(G);
  if (ldlt.info() != Eigen::Success) throw NumericalError("sdr_filtered: singular projection");
  const RealVector h = ldlt.solve(c);
  if (!h.allFinite()) throw NumericalError("sdr_filtered: singular projection");

  RealVector target = RealVector::Zero(T);
  for (Index a = 0; a < J; ++a)
    if (h[a] != 0.0) target.tail(T - a) += h[a] * ref.head(T - a);
  const double num = target.squaredNorm();
  const double den = (est - target).squaredNorm();
  if (!(num > 0.0)) return -kMetricClampDb;  // no projection onto the reference
  return detail::clamped_ratio_db(num, den);
}

inline double sdr_filtered(const Waveform& est, const Waveform& ref, int taps = 512) {
  return sdr_filtered(est.samples, ref.samples, taps);
}

struct SourceMetrics {
  double si_sdr_db = 0.0;
  double sdr_db = 0.0;
};

struct EvalReport {
  std::vector<SourceMetrics> per_source;  // indexed by reference source
  std::vector<int> permutation;           // reference r is matched by estimate permutation[r]
  std::optional<double> recon_snr_db;

  double mean_si_sdr() const {
    double s = 0.0;
    for (const auto& m : per_source) s += m.si_sdr_db;
    return per_source.empty() ? 0.0 : s / static_cast<double>(per_source.size());
  }
  double mean_sdr() const {
    double s = 0.0;
    for (const auto& m : per_source) s += m.sdr_db;
    return per_source.empty() ? 0.0 : s / static_cast<double>(per_source.size());
  }
};

inline constexpr std::size_t kMaxPermutationSources = 6;

// Picks the assignment maximising mean SI-SDR over all K! permutations.
inline EvalReport align_and_eval(const std::vector<RealVector>& est,
                                 const std::vector<RealVector>& ref, int sdr_taps = 512) {
  require(!est.empty() && est.size() == ref.size(), "align_and_eval: source counts differ");
  const std::size_t K = est.size();
  if (K > kMaxPermutationSources)
    throw InvalidArgument("align_and_eval: K > 6 sources is not supported");
  for (std::size_t k = 0; k < K; ++k)
    require(est[k].size() == ref[0].size() && ref[k].size() == ref[0].size(),
            "align_and_eval: signal lengths differ");

  RealMatrix score(K, K);  // score(e, r) = si_sdr(est_e, ref_r)
  for (std::size_t e = 0; e < K; ++e)
    for (std::size_t r = 0; r < K; ++r) score(e, r) = si_sdr(est[e], ref[r]);

  std::vector<int> perm(K), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_total = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t r = 0; r < K; ++r) total += score(perm[r], r);
    if (total > best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  EvalReport report;
  report.permutation = best;
  for (std::size_t r = 0; r < K; ++r)
    report.per_source.push_back({score(best[r], r), sdr_filtered(est[best[r]], ref[r], sdr_taps)});
  return report;
}

inline EvalReport align_and_eval(const std::vector<Waveform>& est, const std::vector<Waveform>& ref,
                                 int sdr_taps = 512) {
  std::vector<RealVector> e, r;
  for (const auto& w : est) e.push_back(w.samples);
  for (const auto& w : ref) r.push_back(w.samples);
  return align_and_eval(e, r, sdr_taps);
}

inline double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace arraydps
