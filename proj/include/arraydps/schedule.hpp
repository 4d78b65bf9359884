#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "arraydps/types.hpp"

namespace arraydps {

// sigma_0 = sigma_max > ... > sigma_{N-1} = sigma_min > sigma_N = 0.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> sigmas;  // N + 1 entries
  double rho = 0.0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

struct ChurnSchedule {
  std::vector<double> gammas;  // N entries
  double s_churn = 0.0;
  double s_min = 0.0;
  double s_max = 0.0;
  double s_noise = 1.0;
};

// sigma_i = (sigma_max^(1/rho) + i/(N-1) (sigma_min^(1/rho) - sigma_max^(1/rho)))^rho
inline NoiseSchedule build_sigma_schedule(int steps, double sigma_max, double sigma_min,
                                          double rho) {
  require(steps >= 2, "noise schedule needs at least two steps");
  require(sigma_min > 0.0 && sigma_max > sigma_min, "noise schedule needs sigma_max > sigma_min > 0");
  require(rho > 0.0, "noise schedule rho must be > 0");
  NoiseSchedule s{steps, std::vector<double>(steps + 1, 0.0), rho, sigma_max, sigma_min};
  const double a = std::pow(sigma_max, 1.0 / rho);
  const double b = std::pow(sigma_min, 1.0 / rho);
  for (int i = 0; i < steps; ++i)
    s.sigmas[i] = std::pow(a + static_cast<double>(i) / (steps - 1) * (b - a), rho);
  s.sigmas[0] = sigma_max;
  s.sigmas[steps - 1] = sigma_min;
  s.sigmas[steps] = 0.0;
  return s;
}

// gamma_i = min(S_churn / N, sqrt(2) - 1) when sigma_i in [S_min, S_max], else 0.
inline ChurnSchedule build_churn_schedule(const NoiseSchedule& sched, double s_churn,
                                          double s_min, double s_max, double s_noise) {
  require(sched.steps >= 1 && sched.sigmas.size() == std::size_t(sched.steps) + 1,
          "invalid noise schedule");
  require(s_churn >= 0.0, "S_churn must be >= 0");
  require(s_max >= s_min, "S_max must be >= S_min");
  require(s_noise >= 0.0, "S_noise must be >= 0");
  ChurnSchedule c{std::vector<double>(sched.steps, 0.0), s_churn, s_min, s_max, s_noise};
  const double gamma = std::min(s_churn / sched.steps, std::numbers::sqrt2 - 1.0);
  for (int i = 0; i < sched.steps; ++i) {
    const double sigma = sched.sigmas[i];
    if (sigma >= s_min && sigma <= s_max) c.gammas[i] = gamma;
  }
  return c;
}

}  // namespace arraydps
