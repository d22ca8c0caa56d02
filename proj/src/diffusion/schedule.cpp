#include "impactsynth/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "impactsynth/common/error.hpp"

namespace impactsynth::diffusion {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::Cosine ? "cosine" : "linear";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "cosine") return ScheduleKind::Cosine;
  if (name == "linear") return ScheduleKind::Linear;
  throw InvalidArgument("unknown schedule kind '" + std::string(name) + "' (expected cosine or linear)");
}

NoiseSchedule make_schedule(ScheduleKind kind, std::size_t steps) {
  if (steps < 1) throw InvalidArgument("noise schedule needs at least one step");
  NoiseSchedule s;
  s.kind = kind;
  s.beta.resize(steps);
  const double T = static_cast<double>(steps);

  if (kind == ScheduleKind::Cosine) {
    constexpr double offset = 0.008;
    auto f = [&](double t) {
      const double c = std::cos((t / T + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0.0);
    double prev = 1.0;
    for (std::size_t t = 1; t <= steps; ++t) {
      const double cur = f(static_cast<double>(t)) / f0;
      s.beta[t - 1] = std::min(1.0 - cur / prev, kMaxBeta);
      prev = cur;
    }
  } else {
    const double scale = 1000.0 / T;
    const double start = 1e-4 * scale;
    const double end = 0.02 * scale;
    for (std::size_t i = 0; i < steps; ++i) {
      const double frac = steps == 1 ? 1.0 : static_cast<double>(i) / (T - 1.0);
      s.beta[i] = std::min(start + (end - start) * frac, kMaxBeta);
    }
  }

  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  double product = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    s.alpha[i] = 1.0 - s.beta[i];
    product *= s.alpha[i];
    s.alpha_bar[i] = product;
  }
  return s;
}

}  // namespace impactsynth::diffusion
