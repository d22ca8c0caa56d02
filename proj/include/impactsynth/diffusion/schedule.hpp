#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace impactsynth::diffusion {

enum class ScheduleKind { Cosine, Linear };

std::string to_string(ScheduleKind kind);
/// "cosine" or "linear"; throws InvalidArgument otherwise.
ScheduleKind parse_schedule_kind(std::string_view name);

/// beta, alpha and alpha_bar for steps t = 1..T, stored at index t - 1.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::Cosine;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  std::size_t steps() const { return beta.size(); }
  double beta_at(std::size_t t) const { return beta[t - 1]; }
  double alpha_at(std::size_t t) const { return alpha[t - 1]; }
  /// alpha_bar(0) is 1 by convention.
  double alpha_bar_at(std::size_t t) const { return t == 0 ? 1.0 : alpha_bar[t - 1]; }
};

inline constexpr double kMaxBeta = 0.999;

/// Cosine: alpha_bar(t) = f(t) / f(0), f(t) = cos^2(((t/T + s) / (1 + s)) pi/2),
/// s = 0.008. Linear: beta from 1e-4 to 0.02, both scaled by 1000 / T.
/// Betas are clipped to kMaxBeta and alpha_bar is the running product of
/// 1 - beta. Throws InvalidArgument for steps < 1.
NoiseSchedule make_schedule(ScheduleKind kind, std::size_t steps);

}  // namespace impactsynth::diffusion
