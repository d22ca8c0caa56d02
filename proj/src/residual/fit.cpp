#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include "dsp/stft_detail.hpp"
#include "impactsynth/common/error.hpp"
#include "impactsynth/dsp/mrstft_loss.hpp"
#include "impactsynth/residual/residual.hpp"

namespace impactsynth::residual {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFloorPower = dsp::kLossMagnitudeFloor * dsp::kLossMagnitudeFloor;
// Bins beyond a band's edges that trial moves take into account. Leakage of
// a band-limited change further out is below -80 dB under the Hann window.
constexpr std::size_t kMarginBins = 6;

// The multi-resolution STFT loss of (modes + residual) against the target,
// kept in a form that makes single-band moves cheap. The complex spectra of
// the current candidate are stored; since the STFT is linear, moving band m
// changes them by the spectrum of the band's change, and a trial only
// re-scores the cells near band m. resync() recomputes everything from the
// time signal and yields the exact loss, bit-identical to
// MultiResolutionStftLoss.
class IncrementalLoss {
 public:
  IncrementalLoss(std::span<const double> target, const std::vector<dsp::StftConfig>& configs,
                  const dsp::FilterBank& bank)
      : length_(target.size()) {
    for (const auto& cfg : configs) {
      cfg.validate();
      Resolution r(cfg, length_);
      r.transform(target, r.current);
      r.ref_mag.resize(r.current.size());
      r.ref_log.resize(r.current.size());
      double norm = 0.0;
      for (std::size_t i = 0; i < r.current.size(); ++i) {
        const double power = std::max(std::norm(r.current[i]), kFloorPower);
        r.ref_mag[i] = std::sqrt(power);
        r.ref_log[i] = 0.5 * std::log(power);
        norm += power;
      }
      r.ref_norm = std::sqrt(norm);
      r.sq_term.resize(r.current.size());
      r.log_term.resize(r.current.size());
      r.band_bins.resize(bank.num_bands());
      const double res = cfg.bin_resolution();
      for (std::size_t m = 0; m < bank.num_bands(); ++m) {
        const double lo = bank.edges[m] / res;
        const double hi = bank.edges[m + 1] / res;
        const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(lo) - kMarginBins));
        const auto last = std::min<std::size_t>(r.bins, static_cast<std::size_t>(std::ceil(hi)) + kMarginBins + 1);
        r.band_bins[m] = {first, last};
      }
      resolutions_.push_back(std::move(r));
    }
  }

  std::size_t num_resolutions() const { return resolutions_.size(); }

  /// Exact loss of `signal`; also makes it the current candidate.
  double resync(std::span<const double> signal) {
    for (auto& r : resolutions_) {
      r.transform(signal, r.current);
      double sq = 0.0, lg = 0.0;
      for (std::size_t i = 0; i < r.current.size(); ++i) {
        const auto [a, b] = cell_terms(r, i, r.current[i]);
        r.sq_term[i] = a;
        r.log_term[i] = b;
        sq += a;
        lg += b;
      }
      r.sq_total = sq;
      r.log_total = lg;
    }
    return value();
  }

  /// Loss of the current candidate from the running totals.
  double value() const {
    double total = 0.0;
    for (const auto& r : resolutions_) {
      total += std::sqrt(std::max(r.sq_total, 0.0)) / r.ref_norm + r.log_total / static_cast<double>(r.current.size());
    }
    return total;
  }

  /// STFT of `signal` at every resolution.
  void spectra(std::span<const double> signal, std::vector<std::vector<std::complex<double>>>& out) {
    out.resize(resolutions_.size());
    for (std::size_t k = 0; k < resolutions_.size(); ++k) resolutions_[k].transform(signal, out[k]);
  }

  /// Loss after adding a*A + b*B (spectra of band m signals) to the
  /// candidate, scored on the cells near band m only.
  double trial(std::size_t m, const std::vector<std::vector<std::complex<double>>>& A, double a,
               const std::vector<std::vector<std::complex<double>>>* B, double b) const {
    double total = 0.0;
    for (std::size_t k = 0; k < resolutions_.size(); ++k) {
      const auto& r = resolutions_[k];
      const auto [first, last] = r.band_bins[m];
      double sq = r.sq_total, lg = r.log_total;
      for (std::size_t f = 0; f < r.frames; ++f) {
        for (std::size_t i = f * r.bins + first; i < f * r.bins + last; ++i) {
          std::complex<double> c = r.current[i] + a * A[k][i];
          if (B) c += b * (*B)[k][i];
          const auto [ns, nl] = cell_terms(r, i, c);
          sq += ns - r.sq_term[i];
          lg += nl - r.log_term[i];
        }
      }
      total += std::sqrt(std::max(sq, 0.0)) / r.ref_norm + lg / static_cast<double>(r.current.size());
    }
    return std::isfinite(total) ? total : kInf;
  }

  /// Applies the move scored by trial(): every cell's spectrum is updated,
  /// the cached terms only near band m.
  void commit(std::size_t m, const std::vector<std::vector<std::complex<double>>>& A, double a,
              const std::vector<std::vector<std::complex<double>>>* B, double b) {
    for (std::size_t k = 0; k < resolutions_.size(); ++k) {
      auto& r = resolutions_[k];
      for (std::size_t i = 0; i < r.current.size(); ++i) {
        r.current[i] += a * A[k][i];
        if (B) r.current[i] += b * (*B)[k][i];
      }
      const auto [first, last] = r.band_bins[m];
      for (std::size_t f = 0; f < r.frames; ++f) {
        for (std::size_t i = f * r.bins + first; i < f * r.bins + last; ++i) {
          const auto [ns, nl] = cell_terms(r, i, r.current[i]);
          r.sq_total += ns - r.sq_term[i];
          r.log_total += nl - r.log_term[i];
          r.sq_term[i] = ns;
          r.log_term[i] = nl;
        }
      }
    }
  }

 private:
  struct Resolution {
    dsp::StftConfig config;
    std::vector<double> window;
    dsp::detail::RealFft fft;
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<double> ref_mag, ref_log;
    double ref_norm = 0.0;
    std::vector<std::complex<double>> current;
    std::vector<double> sq_term, log_term;
    double sq_total = 0.0, log_total = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> band_bins;

    Resolution(const dsp::StftConfig& cfg, std::size_t length)
        : config(cfg), window(dsp::hann_window(cfg.window_size)), fft(cfg.window_size),
          frames(cfg.num_frames(length)), bins(cfg.num_bins()) {
      if (frames == 0) throw InvalidArgument("fit_residual: clip shorter than a loss window");
    }

    void transform(std::span<const double> signal, std::vector<std::complex<double>>& out) const {
      const auto padded = dsp::detail::pad_for_frames(signal, config);
      out.resize(frames * bins);
      dsp::detail::analyze_frames(padded, frames, config, window, fft, out);
    }
  };

  static std::pair<double, double> cell_terms(const Resolution& r, std::size_t i, std::complex<double> c) {
    const double power = std::max(std::norm(c), kFloorPower);
    const double d = r.ref_mag[i] - std::sqrt(power);
    return {d * d, std::abs(r.ref_log[i] - 0.5 * std::log(power))};
  }

  std::size_t length_;
  std::vector<Resolution> resolutions_;
};

std::vector<double> decaying(std::span<const double> band, double gamma, double sample_rate) {
  const double rate = gamma * std::numbers::ln10 / 20.0 / sample_rate;
  std::vector<double> out(band.size());
  for (std::size_t i = 0; i < band.size(); ++i) out[i] = std::exp(-rate * static_cast<double>(i)) * band[i];
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {slope, my - slope * mx};
}

// Per band: least-squares line through the log envelope of the unexplained
// power (target minus modal, per STFT cell, clamped at zero). The slope gives
// the decay and the intercept the weight, using the expected per-bin power
// of band-limited unit white noise under the analysis window.
ResidualParams closed_form_init(std::span<const double> target, std::span<const double> modal,
                                const modal::ModeSet& modes, const dsp::FilterBank& bank,
                                std::uint64_t seed) {
  const dsp::StftConfig& config = modes.stft;
  const auto t_spec = dsp::stft(target, config);
  const auto m_spec = dsp::stft(modal, config);
  const std::size_t bands = bank.num_bands();
  const std::size_t frames = t_spec.num_frames;

  const auto window = dsp::hann_window(config.window_size);
  const double wsum = std::accumulate(window.begin(), window.end(), 0.0);
  double wsq = 0.0;
  for (double w : window) wsq += w * w;
  const double noise_bin_amplitude = std::sqrt(4.0 * wsq / (wsum * wsum));

  std::size_t first = 0;
  std::size_t last = frames - 1;
  if (config.centered) {
    const std::size_t half = config.window_size / 2;
    first = (half + config.hop_size - 1) / config.hop_size;
    last = target.size() >= half ? std::min(frames - 1, (target.size() - half) / config.hop_size) : 0;
  }

  std::vector<std::size_t> band_of_bin(t_spec.num_bins);
  std::vector<std::size_t> bins_in_band(bands, 0);
  for (std::size_t b = 0; b < t_spec.num_bins; ++b) {
    band_of_bin[b] = bank.band_of(config.bin_frequency(b));
    ++bins_in_band[band_of_bin[b]];
  }

  ResidualParams params;
  params.bank = bank;
  params.noise_seed = seed;
  params.gamma.assign(bands, 0.0);
  params.weights.assign(bands, 0.0);

  // The noise power of a band is the median excess power over its bins,
  // scaled to a mean (the power of complex Gaussian noise is exponential, so
  // median = ln 2 * mean). The median ignores the few bins where a mode was
  // estimated imperfectly.
  std::vector<std::vector<double>> xs(bands), ys(bands);
  std::vector<std::vector<double>> excess(bands);
  for (std::size_t f = first; f <= last && first <= last; ++f) {
    for (auto& e : excess) e.clear();
    for (std::size_t b = 0; b < t_spec.num_bins; ++b) {
      const double diff = std::norm(t_spec.at(b, f)) - std::norm(m_spec.at(b, f));
      excess[band_of_bin[b]].push_back(std::max(diff, 0.0));
    }
    for (std::size_t m = 0; m < bands; ++m) {
      auto& e = excess[m];
      if (e.empty()) continue;
      auto mid = e.begin() + static_cast<std::ptrdiff_t>(e.size() / 2);
      std::nth_element(e.begin(), mid, e.end());
      const double mean = *mid / std::numbers::ln2;
      if (mean > 1e-14) {
        xs[m].push_back(config.frame_time(f));
        ys[m].push_back(10.0 * std::log10(mean));
      }
    }
  }
  // A line through a handful of late frames extrapolates to absurd onset
  // levels, so bands with little excess power start at zero.
  const std::size_t clean = first <= last ? last - first + 1 : 0;
  const std::size_t min_points = std::max<std::size_t>(3, clean / 4);
  for (std::size_t m = 0; m < bands; ++m) {
    if (xs[m].size() < min_points) continue;
    const LineFit line = fit_line(xs[m], ys[m]);
    params.gamma[m] = std::max(0.0, -line.slope);
    params.weights[m] = std::pow(10.0, line.intercept / 20.0) / noise_bin_amplitude;
  }
  return params;
}

// One finite-difference Newton step on a single non-negative coordinate.
// Every probed point is a real objective value, so the accepted point is the
// best one seen and the objective never increases.
struct CoordinateStep {
  double value;
  double loss;
};

template <typename Eval>
CoordinateStep newton_coordinate(double x0, double l0, double& step, double min_step, Eval&& eval) {
  const double h = std::max(step, min_step);
  double xa, xb;
  if (x0 - h >= 0.0) {
    xa = x0 - h;
    xb = x0 + h;
  } else {
    xa = x0 + h;
    xb = x0 + 2.0 * h;
  }
  const double la = eval(xa);
  const double lb = eval(xb);

  CoordinateStep best{x0, l0};
  if (la < best.loss) best = {xa, la};
  if (lb < best.loss) best = {xb, lb};

  // Parabola through the three samples.
  const double d1 = (la - l0) / (xa - x0);
  const double d2 = (lb - l0) / (xb - x0);
  const double curvature = (d2 - d1) / (xb - xa);
  if (std::isfinite(curvature) && curvature > 0.0) {
    const double slope_at_x0 = d1 - curvature * (xa - x0);
    double x_star = x0 - slope_at_x0 / (2.0 * curvature);
    x_star = std::clamp(x_star, std::max(0.0, x0 - 4.0 * h), x0 + 4.0 * h);
    const double tol = 1e-3 * h;
    if (std::abs(x_star - x0) > tol && std::abs(x_star - xa) > tol && std::abs(x_star - xb) > tol) {
      const double ls = eval(x_star);
      if (ls < best.loss) best = {x_star, ls};
    }
  }

  if (best.value != x0) {
    step = std::clamp(std::abs(best.value - x0), h / 2.0, 2.0 * h);
  } else {
    step = h / 2.0;
  }
  return best;
}

}  // namespace

ResidualFit fit_residual(std::span<const double> target, const modal::ModeSet& modes,
                         const std::optional<ResidualParams>& init, const FitOptions& options) {
  modes.stft.validate();
  const double sr = modes.stft.sample_rate;
  if (target.empty()) throw InvalidArgument("fit_residual: empty target");
  for (double v : target) {
    if (!std::isfinite(v)) throw InvalidArgument("fit_residual: target contains non-finite samples");
  }
  const std::size_t length = target.size();
  const double duration = static_cast<double>(length) / sr;
  auto modal = modal::synthesize_modes(modes, duration, sr);
  modal.resize(length, 0.0);

  const dsp::FilterBank bank = init ? init->bank : dsp::FilterBank::linear(options.num_bands, sr);
  const std::uint64_t seed = init ? init->noise_seed : options.noise_seed;
  ResidualParams start = init ? *init : closed_form_init(target, modal, modes, bank, seed);
  start.validate();
  if (bank.sample_rate != sr) throw InvalidArgument("fit_residual: residual bank sample rate differs from the modes");

  IncrementalLoss objective(target, options.resolutions, bank);
  auto exact = [&](const ResidualParams& params) {
    auto signal = synthesize_residual(params, duration, sr);
    signal.resize(length, 0.0);
    for (std::size_t i = 0; i < length; ++i) signal[i] += modal[i];
    return objective.resync(signal);
  };

  ResidualFit fit;
  fit.modes_only_loss = objective.resync(modal);
  if (!std::isfinite(fit.modes_only_loss)) {
    throw InvalidArgument("fit_residual: loss is not finite for this target");
  }
  fit.init_loss = exact(start);

  ResidualParams current = start;
  double loss = fit.init_loss;
  if (!(loss <= fit.modes_only_loss)) {
    // Start from silence when the initial guess is worse than no residual.
    std::fill(current.weights.begin(), current.weights.end(), 0.0);
    loss = objective.resync(modal);
  }
  fit.history.push_back(loss);

  const std::size_t bands = bank.num_bands();
  const auto noise = band_noise(bank, seed, length);
  double weight_ref = 0.0;
  std::size_t active = 0;
  for (double w : current.weights) {
    if (w > 0.0) {
      weight_ref += w;
      ++active;
    }
  }
  weight_ref = active ? weight_ref / static_cast<double>(active) : 1e-3;
  std::vector<double> weight_step(bands), gamma_step(bands);
  for (std::size_t m = 0; m < bands; ++m) {
    weight_step[m] = std::max(0.25 * current.weights[m], 0.05 * weight_ref);
    gamma_step[m] = std::max(0.25 * current.gamma[m], 5.0);
  }
  const double min_weight_step = 1e-6 * weight_ref;
  const double min_gamma_step = 1e-3;

  using Spectra = std::vector<std::vector<std::complex<double>>>;
  Spectra shape;
  std::vector<std::pair<double, Spectra>> probes;

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const ResidualParams before = current;
    const double sweep_start = loss;
    for (std::size_t m = 0; m < bands; ++m) {
      // Weight: the spectrum is linear in w, so one transform serves every probe.
      objective.spectra(decaying(noise[m], current.gamma[m], sr), shape);
      const double w0 = current.weights[m];
      auto by_weight = [&](double w) { return objective.trial(m, shape, w - w0, nullptr, 0.0); };
      const double here = objective.value();
      const auto ws = newton_coordinate(w0, here, weight_step[m], min_weight_step, by_weight);
      if (ws.loss < here) {
        objective.commit(m, shape, ws.value - w0, nullptr, 0.0);
        current.weights[m] = ws.value;
      }

      const double w = current.weights[m];
      if (w == 0.0) continue;
      probes.clear();
      auto by_gamma = [&](double g) {
        Spectra moved;
        objective.spectra(decaying(noise[m], g, sr), moved);
        const double v = objective.trial(m, moved, w, &shape, -w);
        probes.emplace_back(g, std::move(moved));
        return v;
      };
      const double here_g = objective.value();
      const auto gs = newton_coordinate(current.gamma[m], here_g, gamma_step[m], min_gamma_step, by_gamma);
      if (gs.loss < here_g) {
        for (const auto& [g, spec] : probes) {
          if (g == gs.value) {
            objective.commit(m, spec, w, &shape, -w);
            break;
          }
        }
        current.gamma[m] = gs.value;
      }
    }

    loss = exact(current);
    if (!(loss <= sweep_start)) {
      // The local scoring missed a far-field effect; keep the previous sweep.
      current = before;
      loss = exact(current);
      break;
    }
    fit.history.push_back(loss);
    fit.iterations = it + 1;
    if (sweep_start - loss < options.tolerance * sweep_start) break;
  }

  fit.params = current;
  fit.loss = loss;
  fit.source = ResidualFit::Source::Optimized;
  if (!std::isfinite(loss) || loss > fit.init_loss) {
    fit.params = start;
    fit.loss = fit.init_loss;
    fit.source = ResidualFit::Source::ClosedForm;
  }
  if (!(fit.loss <= fit.modes_only_loss)) {
    fit.params.weights.assign(bands, 0.0);
    fit.loss = fit.modes_only_loss;
    fit.source = ResidualFit::Source::Zero;
  }
  return fit;
}

}  // namespace impactsynth::residual
