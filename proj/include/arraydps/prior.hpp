#pragma once

// Denoiser priors D(s, sigma) with exact vector-Jacobian products, the Tweedie
// score, and a finite-difference VJP checker.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arraydps/rng.hpp"
#include "arraydps/types.hpp"

namespace arraydps {

// The sampler touches a prior only through apply() and vjp().
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  // Posterior-mean estimate of the clean signal given s_noisy at noise level sigma.
  virtual RealVector apply(const RealVector& s_noisy, double sigma) const = 0;

  // J^T * cotangent, J = d apply / d s_noisy at (s_noisy, sigma).
  virtual RealVector vjp(const RealVector& s_noisy, double sigma,
                         const RealVector& cotangent) const = 0;
};

// (D(s, sigma) - s) / sigma^2
inline RealVector tweedie_score(const Denoiser& d, const RealVector& s_tau, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("tweedie_score requires sigma > 0");
  return (d.apply(s_tau, sigma) - s_tau) / (sigma * sigma);
}

// Posterior mean under an i.i.d. N(0, prior_variance) prior.
class GaussianShrinkageDenoiser final : public Denoiser {
 public:
  explicit GaussianShrinkageDenoiser(double prior_variance) : var_(prior_variance) {
    require(prior_variance > 0.0, "gaussian prior variance must be > 0");
  }

  double prior_variance() const { return var_; }
  double gain(double sigma) const { return var_ / (var_ + sigma * sigma); }

  RealVector apply(const RealVector& s, double sigma) const override { return gain(sigma) * s; }
  RealVector vjp(const RealVector&, double sigma, const RealVector& cot) const override {
    return gain(sigma) * cot;
  }

 private:
  double var_;
};

// Posterior mean under an i.i.d. two-or-more component scalar Gaussian mixture.
class GaussianMixtureDenoiser final : public Denoiser {
 public:
  struct Component {
    double weight;
    double mean;
    double variance;
  };

  explicit GaussianMixtureDenoiser(std::vector<Component> components)
      : comps_(std::move(components)) {
    require(!comps_.empty(), "gaussian mixture needs components");
    double total = 0.0;
    for (const auto& c : comps_) {
      require(c.weight > 0.0 && c.variance > 0.0, "invalid gaussian mixture component");
      total += c.weight;
    }
    for (auto& c : comps_) c.weight /= total;
  }

  const std::vector<Component>& components() const { return comps_; }

  RealVector apply(const RealVector& s, double sigma) const override {
    RealVector out(s.size());
    for (Index i = 0; i < s.size(); ++i) out[i] = eval(s[i], sigma).mean;
    return out;
  }

  RealVector vjp(const RealVector& s, double sigma, const RealVector& cot) const override {
    RealVector out(s.size());
    for (Index i = 0; i < s.size(); ++i) out[i] = eval(s[i], sigma).slope * cot[i];
    return out;
  }

 private:
  struct Eval {
    double mean;
    double slope;
  };

  // Responsibilities r_m, per-component means a_m + b_m s; D = sum r_m (a_m + b_m s).
  Eval eval(double s, double sigma) const {
    const double s2 = sigma * sigma;
    std::vector<double> logp(comps_.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < comps_.size(); ++m) {
      const double v = comps_[m].variance + s2;
      const double d = s - comps_[m].mean;
      logp[m] = std::log(comps_[m].weight) - 0.5 * std::log(v) - 0.5 * d * d / v;
      peak = std::max(peak, logp[m]);
    }
    double z = 0.0;
    for (auto& lp : logp) z += (lp = std::exp(lp - peak));
    double mean = 0.0, slope = 0.0, dr_sum = 0.0;
    std::vector<double> mu(comps_.size()), dlog(comps_.size());
    for (std::size_t m = 0; m < comps_.size(); ++m) {
      const double v = comps_[m].variance + s2;
      const double b = comps_[m].variance / v;
      mu[m] = comps_[m].mean + b * (s - comps_[m].mean);
      dlog[m] = -(s - comps_[m].mean) / v;
      const double r = logp[m] / z;
      mean += r * mu[m];
      slope += r * b;
      dr_sum += r * dlog[m];
    }
    // d r_m / ds = r_m (dlog_m - sum_n r_n dlog_n)
    for (std::size_t m = 0; m < comps_.size(); ++m) {
      const double r = logp[m] / z;
      slope += r * (dlog[m] - dr_sum) * mu[m];
    }
    return {mean, slope};
  }

  std::vector<Component> comps_;
};

// Pulls its input towards a fixed target:
//   D(s, sigma) = target + w(sigma) (s - target),  w(sigma) = floor / (sigma + floor).
// sigma_floor = 0 is full pull (always returns the target).
class OracleDenoiser final : public Denoiser {
 public:
  static constexpr double kDefaultSigmaFloor = 1e-3;

  explicit OracleDenoiser(RealVector target, double sigma_floor = kDefaultSigmaFloor)
      : target_(std::move(target)), floor_(sigma_floor) {
    require(target_.size() >= 1 && target_.allFinite(), "oracle target must be finite");
    require(sigma_floor >= 0.0, "oracle sigma_floor must be >= 0");
  }

  double blend(double sigma) const { return floor_ == 0.0 ? 0.0 : floor_ / (sigma + floor_); }

  RealVector apply(const RealVector& s, double sigma) const override {
    require(s.size() == target_.size(), "oracle target length does not match input");
    return target_ + blend(sigma) * (s - target_);
  }
  RealVector vjp(const RealVector& s, double sigma, const RealVector& cot) const override {
    require(s.size() == target_.size(), "oracle target length does not match input");
    return blend(sigma) * cot;
  }

  const RealVector& target() const { return target_; }

 private:
  RealVector target_;
  double floor_;
};

inline std::vector<std::shared_ptr<const Denoiser>> make_oracle_priors(
    const std::vector<RealVector>& targets, double sigma_floor) {
  std::vector<std::shared_ptr<const Denoiser>> out;
  for (const auto& t : targets) out.push_back(std::make_shared<OracleDenoiser>(t, sigma_floor));
  return out;
}

// A trained model run through an opaque forward function (for example an
// ONNX Runtime session). Gradients come from `backward` when the runtime
// provides one; otherwise the Jacobian is approximated by the identity.
class ExternalDenoiser final : public Denoiser {
 public:
  using Forward = std::function<RealVector(const RealVector&, double)>;
  using Backward = std::function<RealVector(const RealVector&, double, const RealVector&)>;

  ExternalDenoiser(Forward forward, std::optional<Backward> backward = std::nullopt,
                   Index length_multiple = 1)
      : forward_(std::move(forward)), backward_(std::move(backward)), multiple_(length_multiple) {
    require(static_cast<bool>(forward_), "external denoiser needs a forward function");
    require(length_multiple >= 1, "external denoiser length granularity must be >= 1");
  }

  bool has_exact_vjp() const { return backward_.has_value(); }

  RealVector apply(const RealVector& s, double sigma) const override {
    check_length(s);
    RealVector out = forward_(s, sigma);
    if (out.size() != s.size())
      throw NumericalError("external denoiser returned a different length");
    return out;
  }

  RealVector vjp(const RealVector& s, double sigma, const RealVector& cot) const override {
    check_length(s);
    if (!backward_) return cot;
    return (*backward_)(s, sigma, cot);
  }

 private:
  void check_length(const RealVector& s) const {
    if (s.size() % multiple_ != 0)
      throw InvalidArgument("external denoiser needs input length divisible by " +
                            std::to_string(multiple_));
  }

  Forward forward_;
  std::optional<Backward> backward_;
  Index multiple_;
};

// Worst relative mismatch between <u, J v> from central differences and
// <vjp(u), v> over random probe pairs (u, v).
inline double vjp_check(const Denoiser& d, const RealVector& s, double sigma, int n_probes,
                        std::uint64_t seed = 0, double step = 1e-4) {
  require(n_probes >= 1, "vjp_check needs at least one probe");
  double worst = 0.0;
  for (int p = 0; p < n_probes; ++p) {
    Rng rng(derive_seed(seed, {stream::kProbe, std::uint64_t(p)}));
    RealVector u = gaussian_vector(s.size(), rng);
    RealVector v = gaussian_vector(s.size(), rng);
    v /= v.norm();
    const double h = step * std::max(1.0, s.norm() / std::sqrt(double(s.size())));
    const RealVector jv = (d.apply(s + h * v, sigma) - d.apply(s - h * v, sigma)) / (2.0 * h);
    const double fd = u.dot(jv);
    const double an = d.vjp(s, sigma, u).dot(v);
    const double scale = std::max({std::abs(fd), std::abs(an), 1e-300});
    worst = std::max(worst, std::abs(fd - an) / scale);
  }
  return worst;
}

}  // namespace arraydps
