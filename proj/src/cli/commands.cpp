#include "impactsynth/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "impactsynth/cli/config.hpp"
#include "impactsynth/cli/corpus.hpp"
#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"
#include "impactsynth/common/rng.hpp"
#include "impactsynth/common/tensor.hpp"
#include "impactsynth/common/wav.hpp"
#include "impactsynth/conditioning/encoder.hpp"
#include "impactsynth/conditioning/latent_store.hpp"
#include "impactsynth/diffusion/checkpoint.hpp"
#include "impactsynth/diffusion/grid.hpp"
#include "impactsynth/diffusion/process.hpp"
#include "impactsynth/diffusion/train.hpp"
#include "impactsynth/dsp/griffin_lim.hpp"
#include "impactsynth/dsp/mrstft_loss.hpp"
#include "impactsynth/metrics/metrics.hpp"
#include "impactsynth/modal/edit.hpp"
#include "impactsynth/residual/priors.hpp"

namespace impactsynth::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kOutputPeak = 0.9;

// Flag combinations that parse but make no sense.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Context {
  Config config;
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------- analyze

struct AnalysisSummary {
  std::size_t bins = 0;
  std::size_t frames = 0;
  double loss = 0.0;
  double modes_only_loss = 0.0;
  double silence_loss = 0.0;
  bool silent = false;
};

AnalysisSummary analyze_clip(const fs::path& wav, const fs::path& out_path, const Config& config) {
  WavAudio audio = read_wav(wav, config.stft.sample_rate);
  if (audio.samples.empty()) throw DataError(wav.string() + ": no samples");
  peak_normalize(audio.samples, kOutputPeak);

  AnalysisSummary summary;
  summary.bins = config.stft.num_bins();
  summary.frames = config.stft.num_frames(audio.samples.size());

  residual::PhysicsPriors priors;
  priors.modes = modal::estimate_modes(audio.samples, config.stft);
  priors.duration = static_cast<double>(audio.samples.size()) / config.stft.sample_rate;
  summary.silent = std::all_of(priors.modes.modes.begin(), priors.modes.modes.end(),
                               [](const modal::Mode& m) { return m.power <= dsp::kSilenceDb; });

  const residual::ResidualFit fit = residual::fit_residual(audio.samples, priors.modes, std::nullopt, config.fit_options());
  priors.residual = fit.params;
  residual::write_priors(out_path, priors);

  summary.loss = fit.loss;
  summary.modes_only_loss = fit.modes_only_loss;
  const std::vector<double> silence(audio.samples.size(), 0.0);
  const auto resolutions = config.loss_resolutions();
  summary.silence_loss = dsp::multires_stft_loss(silence, audio.samples, resolutions);
  return summary;
}

std::string describe(const std::string& name, const AnalysisSummary& s) {
  return name + ": spectrogram " + std::to_string(s.bins) + "x" + std::to_string(s.frames) + ", loss " + fmt(s.loss) +
         " (modes only " + fmt(s.modes_only_loss) + ", silence " + fmt(s.silence_loss) + ")";
}

struct AnalyzeArgs {
  std::string wav;
  std::string out;
  std::string manifest;
  std::string out_dir;
  std::size_t jobs = 0;
};

int cmd_analyze(Context& ctx, const AnalyzeArgs& a) {
  if (a.wav.empty() == a.manifest.empty()) throw UsageError("analyze: give either a WAV file or --manifest");
  if (!a.wav.empty()) {
    if (a.out.empty()) throw UsageError("analyze: -o/--out is required for a single clip");
    const AnalysisSummary s = analyze_clip(a.wav, a.out, ctx.config);
    if (s.silent) ctx.err << "warning: " << a.wav << " is silent; every mode is at the floor\n";
    ctx.out << describe(a.wav, s) << "\n";
    return kExitOk;
  }

  if (a.out_dir.empty()) throw UsageError("analyze: --out-dir is required with --manifest");
  ClipManifest manifest = read_manifest(a.manifest);
  fs::create_directories(a.out_dir);

  const std::size_t n = manifest.clips.size();
  std::vector<std::string> lines(n);
  std::vector<std::string> warnings(n);
  std::vector<char> failed(n, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      ClipEntry& clip = manifest.clips[i];
      const fs::path out = fs::path(a.out_dir) / (clip.id + ".priors.json");
      try {
        const AnalysisSummary s = analyze_clip(clip.wav, out, ctx.config);
        if (s.silent) warnings[i] = "warning: " + clip.id + " is silent; every mode is at the floor";
        lines[i] = describe(clip.id, s);
        clip.priors = out;
      } catch (const std::exception& e) {
        failed[i] = 1;
        lines[i] = std::string("error: ") + clip.id + ": " + e.what();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(a.jobs ? a.jobs : ctx.config.jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t failures = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!warnings[i].empty()) ctx.err << warnings[i] << "\n";
    if (failed[i]) {
      ++failures;
      ctx.err << lines[i] << "\n";
      manifest.clips[i].priors.reset();
    } else {
      ctx.out << lines[i] << "\n";
    }
  }
  write_manifest(fs::path(a.out_dir) / "manifest.json", manifest);
  ctx.out << "analyzed " << (n - failures) << " of " << n << " clips\n";
  return failures ? kExitData : kExitOk;
}

// ---------------------------------------------------------------- resynth / edit

struct ResynthArgs {
  std::string priors;
  std::string out;
  bool no_residual = false;
  std::optional<double> duration;
  std::string format = "float";
};

SampleFormat parse_format(const std::string& s) {
  if (s == "float") return SampleFormat::Float32;
  if (s == "pcm16") return SampleFormat::Pcm16;
  throw UsageError("unknown sample format '" + s + "' (float or pcm16)");
}

int cmd_resynth(Context& ctx, const ResynthArgs& a) {
  const SampleFormat format = parse_format(a.format);
  const residual::PhysicsPriors priors = residual::read_priors(a.priors);
  if (a.duration && !(*a.duration > 0.0)) throw UsageError("resynth: --duration must be positive");
  std::vector<double> signal = residual::synthesize_priors(priors, !a.no_residual, a.duration);
  peak_normalize(signal, kOutputPeak);
  write_wav(a.out, signal, priors.modes.stft.sample_rate, format);
  ctx.out << "wrote " << a.out << " (" << signal.size() << " samples)\n";
  return kExitOk;
}

struct EditArgs {
  std::string priors;
  std::string out;
  std::string bins;
  double power_delta = 0.0;
  double decay_scale = 1.0;
  bool zero_residual = false;
};

std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--bins expects BEGIN:END, got '" + text + "'");
  try {
    std::size_t used = 0;
    const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
    const unsigned long begin = std::stoul(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    const unsigned long end = std::stoul(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
    return {begin, end};
  } catch (const std::logic_error&) {
    throw UsageError("--bins expects BEGIN:END, got '" + text + "'");
  }
}

int cmd_edit(Context& ctx, const EditArgs& a) {
  const auto [begin, end] = parse_range(a.bins);
  const residual::PhysicsPriors priors = residual::read_priors(a.priors);
  modal::ModeEdit edit;
  edit.begin = begin;
  edit.end = end;
  edit.power_delta = a.power_delta;
  edit.decay_scale = a.decay_scale;
  edit.zero_residual = a.zero_residual;
  residual::write_priors(a.out, modal::edit_modes(priors, edit));
  ctx.out << "edited bins " << begin << ":" << end << " -> " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- store

std::vector<double> read_vector(const fs::path& path) { return read_pdt1(path).data; }

conditioning::EncoderConfig encoder_base(const Config& config) {
  conditioning::EncoderConfig base;
  base.seed = config.encoder_seed;
  base.num_modes = config.stft.num_bins();
  base.num_bands = config.residual_bands;
  return base;
}

int cmd_store_build(Context& ctx, const std::string& pairs_path, const std::string& out) {
  const ClipManifest manifest = read_manifest(pairs_path);
  std::vector<conditioning::StorePair> pairs;
  for (const ClipEntry& clip : manifest.clips) {
    if (!clip.visual) throw DataError("store build: clip '" + clip.id + "' has no visual latent");
    if (!clip.priors) throw DataError("store build: clip '" + clip.id + "' has no priors");
    pairs.push_back({clip.id, *clip.visual, *clip.priors});
  }
  const conditioning::LatentStore store = conditioning::build_store(pairs, encoder_base(ctx.config));
  store.save(out);
  ctx.out << "stored " << store.size() << " entries (key dim " << store.key_dim() << ", value dim "
          << store.value_dim() << ") in " << out << "\n";
  return kExitOk;
}

int cmd_store_query(Context& ctx, const std::string& store_path, const std::string& visual, const std::string& out) {
  const auto store = conditioning::LatentStore::load(store_path);
  const auto result = conditioning::query_nearest(store, read_vector(visual));
  ctx.out << "nearest " << result.id << " distance " << fmt(result.distance) << "\n";
  if (!out.empty()) write_pdt1(out, Tensor({result.value.size()}, result.value));
  return kExitOk;
}

// ---------------------------------------------------------------- diffusion

diffusion::Grid spectrogram_grid(const dsp::Spectrogram& spec) {
  diffusion::Grid grid{spec.num_bins, spec.num_frames, std::vector<double>(spec.data.size())};
  std::transform(spec.data.begin(), spec.data.end(), grid.data.begin(), diffusion::db_to_unit);
  return grid;
}

struct TrainArgs {
  std::string manifest;
  std::string store;
  std::string out;
  std::optional<std::size_t> epochs;
};

int cmd_train_toy(Context& ctx, const TrainArgs& a) {
  const Config& config = ctx.config;
  const ClipManifest manifest = read_manifest(a.manifest);
  const auto store = conditioning::LatentStore::load(a.store);

  std::vector<diffusion::TrainingExample> dataset;
  std::size_t bins = 0, frames = 0, samples = 0;
  for (const ClipEntry& clip : manifest.clips) {
    const auto it = std::find_if(store.entries().begin(), store.entries().end(),
                                 [&](const conditioning::LatentEntry& e) { return e.id == clip.id; });
    if (it == store.entries().end()) {
      ctx.err << "warning: clip '" << clip.id << "' is not in the store; skipped\n";
      continue;
    }
    WavAudio audio = read_wav(clip.wav, config.stft.sample_rate);
    if (audio.samples.empty()) throw DataError(clip.wav.string() + ": no samples");
    peak_normalize(audio.samples, kOutputPeak);
    const dsp::Spectrogram spec = dsp::log_spectrogram(audio.samples, config.stft);
    if (dataset.empty()) {
      bins = spec.num_bins;
      frames = spec.num_frames;
      samples = audio.samples.size();
    } else if (spec.num_frames != frames) {
      throw DataError("clip '" + clip.id + "' has " + std::to_string(spec.num_frames) + " frames, expected " +
                      std::to_string(frames) + "; clips must share one length");
    }
    const diffusion::Grid coarse =
        diffusion::downsample_area(spectrogram_grid(spec), config.toy_grid_rows, config.toy_grid_cols);
    dataset.push_back({coarse.data, {it->value, it->key}});
  }
  if (dataset.empty()) throw DataError("train-toy: no manifest clip has a store entry");

  diffusion::ToyConfig toy;
  toy.data_size = config.toy_grid_rows * config.toy_grid_cols;
  toy.hidden = config.toy_hidden;
  toy.physics_dim = store.value_dim();
  toy.visual_dim = store.key_dim();
  toy.seed = config.seed;

  diffusion::TrainOptions options;
  options.epochs = a.epochs.value_or(config.toy_epochs);
  options.learning_rate = config.toy_learning_rate;
  options.batch_size = config.toy_batch_size;
  options.seed = config.seed;

  const auto schedule = diffusion::make_schedule(config.schedule, config.diffusion_steps);
  const diffusion::TrainResult trained = diffusion::train_toy(dataset, schedule, toy, options);

  constexpr std::size_t kEvalDraws = 64;
  const double loss = diffusion::evaluate_loss(trained.model, dataset, schedule, kEvalDraws, config.seed + 1);
  const double baseline =
      diffusion::evaluate_loss(diffusion::ZeroDenoiser{}, dataset, schedule, kEvalDraws, config.seed + 1);

  diffusion::ToyCheckpoint ckpt;
  ckpt.config = toy;
  ckpt.schedule = config.schedule;
  ckpt.steps = config.diffusion_steps;
  ckpt.grid_rows = config.toy_grid_rows;
  ckpt.grid_cols = config.toy_grid_cols;
  const auto params = trained.model.parameters();
  ckpt.parameters.assign(params.begin(), params.end());
  ckpt.metadata["spectrogram"] = {{"bins", bins}, {"frames", frames}, {"samples", samples}};
  ckpt.metadata["stft"] = residual::stft_to_json(config.stft);
  ckpt.metadata["encoder"] = conditioning::to_json(store.encoder());
  ckpt.metadata["training"] = {{"clips", dataset.size()}, {"epochs", options.epochs}, {"loss", loss},
                               {"zero_baseline", baseline}};
  diffusion::save_checkpoint(a.out, ckpt);

  ctx.out << "trained on " << dataset.size() << " clips for " << options.epochs << " epochs: loss " << fmt(loss)
          << " (zero predictor " << fmt(baseline) << ")\n";
  return kExitOk;
}

// Everything needed to turn a sampled grid back into a spectrogram.
struct LoadedModel {
  diffusion::ToyCheckpoint ckpt;
  diffusion::ToyDenoiser model;
  diffusion::NoiseSchedule schedule;
  dsp::StftConfig stft;
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::size_t samples = 0;
  conditioning::EncoderConfig encoder;
};

LoadedModel load_model(const fs::path& path) {
  diffusion::ToyCheckpoint ckpt = diffusion::load_checkpoint(path);
  const nlohmann::json& meta = ckpt.metadata;
  LoadedModel m{ckpt, diffusion::ToyDenoiser(ckpt.config, ckpt.parameters),
                diffusion::make_schedule(ckpt.schedule, ckpt.steps), {}, 0, 0, 0, {}};
  try {
    m.stft = residual::stft_from_json(meta.at("stft"));
    m.bins = meta.at("spectrogram").at("bins").get<std::size_t>();
    m.frames = meta.at("spectrogram").at("frames").get<std::size_t>();
    m.samples = meta.at("spectrogram").at("samples").get<std::size_t>();
    m.encoder = conditioning::encoder_config_from_json(meta.at("encoder"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": checkpoint metadata incomplete: " + e.what());
  }
  if (m.bins != m.stft.num_bins() || m.frames == 0) throw DataError(path.string() + ": inconsistent spectrogram shape");
  return m;
}

struct SampleArgs {
  std::string checkpoint;
  std::string cond;
  std::string store;
  std::string visual;
  std::string out;
  std::string spec_out;
  std::optional<std::size_t> steps;
  double eta = 1.0;
  std::optional<std::size_t> gl_iters;
};

void check_steps(const SampleArgs& a, const LoadedModel& m) {
  if (a.steps && *a.steps != m.ckpt.steps) {
    throw UsageError("--steps " + std::to_string(*a.steps) + " differs from the checkpoint's T = " +
                     std::to_string(m.ckpt.steps) + " (respaced sampling is not supported)");
  }
  if (!(a.eta >= 0.0) || !std::isfinite(a.eta)) throw UsageError("--eta must be a finite non-negative number");
}

dsp::Spectrogram sample_spectrogram(const LoadedModel& m, const diffusion::ConditionPair& cond, double eta,
                                    std::uint64_t seed) {
  if (cond.physics.size() != m.ckpt.config.physics_dim || cond.visual.size() != m.ckpt.config.visual_dim) {
    throw DataError("condition dimensions " + std::to_string(cond.physics.size()) + "/" +
                    std::to_string(cond.visual.size()) + " do not match the checkpoint's " +
                    std::to_string(m.ckpt.config.physics_dim) + "/" + std::to_string(m.ckpt.config.visual_dim));
  }
  Rng rng(seed);
  const std::vector<double> x = diffusion::sample(m.model, cond, m.schedule, eta, rng, m.ckpt.config.data_size);
  const diffusion::Grid coarse{m.ckpt.grid_rows, m.ckpt.grid_cols, x};
  const diffusion::Grid fine = diffusion::upsample_bilinear(coarse, m.bins, m.frames);
  dsp::Spectrogram spec;
  spec.config = m.stft;
  spec.num_bins = m.bins;
  spec.num_frames = m.frames;
  spec.data.resize(fine.data.size());
  std::transform(fine.data.begin(), fine.data.end(), spec.data.begin(), diffusion::unit_to_db);
  return spec;
}

void write_spectrogram(const fs::path& path, const dsp::Spectrogram& spec) {
  write_pdt1(path, Tensor({spec.num_bins, spec.num_frames}, spec.data));
}

int cmd_diffusion_sample(Context& ctx, const SampleArgs& a) {
  const LoadedModel m = load_model(a.checkpoint);
  check_steps(a, m);
  const residual::PhysicsPriors priors = residual::read_priors(a.cond);
  const conditioning::PhysicsEncoder encoder(m.encoder);
  diffusion::ConditionPair cond{encoder.encode(priors), read_vector(a.visual)};
  const dsp::Spectrogram spec = sample_spectrogram(m, cond, a.eta, ctx.config.seed);
  write_spectrogram(a.out, spec);
  ctx.out << "sampled " << spec.num_bins << "x" << spec.num_frames << " spectrogram -> " << a.out << "\n";
  return kExitOk;
}

int cmd_pipeline_sample(Context& ctx, const SampleArgs& a) {
  const LoadedModel m = load_model(a.checkpoint);
  check_steps(a, m);
  const auto store = conditioning::LatentStore::load(a.store);
  std::vector<double> visual = read_vector(a.visual);
  const conditioning::QueryResult hit = conditioning::query_nearest(store, visual);
  ctx.err << "query: clip " << hit.id << " distance " << fmt(hit.distance) << "\n";

  diffusion::ConditionPair cond{hit.value, std::move(visual)};
  const dsp::Spectrogram spec = sample_spectrogram(m, cond, a.eta, ctx.config.seed);
  if (!a.spec_out.empty()) write_spectrogram(a.spec_out, spec);

  dsp::GriffinLimOptions gl;
  gl.iterations = a.gl_iters.value_or(ctx.config.griffin_lim_iterations);
  gl.seed = ctx.config.seed;
  gl.length = m.samples;
  dsp::GriffinLimResult wave = dsp::griffin_lim(spec, gl);
  peak_normalize(wave.signal, kOutputPeak);
  write_wav(a.out, wave.signal, m.stft.sample_rate);
  ctx.out << "clip " << hit.id << " distance " << fmt(hit.distance) << "; wrote " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- metrics

metrics::Embeddings read_matrix(const fs::path& path) {
  const Tensor t = read_pdt1(path);
  std::size_t rows = 0, cols = 0;
  if (t.rank() == 1) {
    rows = t.shape[0];
    cols = 1;
  } else if (t.rank() == 2) {
    rows = t.shape[0];
    cols = t.shape[1];
  } else {
    throw DataError(path.string() + ": expected a rank 1 or 2 tensor, got rank " + std::to_string(t.rank()));
  }
  metrics::Embeddings m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.data[r * cols + c];
  }
  return m;
}

std::vector<int> read_labels(const fs::path& path) {
  std::string text = read_file_text(path);
  std::replace(text.begin(), text.end(), ',', '\n');
  std::istringstream in(text);
  std::vector<int> labels;
  std::string field;
  std::size_t line = 0;
  while (std::getline(in, field)) {
    ++line;
    const auto first = field.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = field.find_last_not_of(" \t\r");
    field = field.substr(first, last - first + 1);
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(field, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != field.size() || used == 0) {
      if (labels.empty() && line == 1) continue;  // header
      throw DataError(path.string() + ": label '" + field + "' is not an integer");
    }
    labels.push_back(value);
  }
  return labels;
}

struct MetricArgs {
  std::string real;
  std::string fake;
  std::string labels;
  std::size_t subsets = 100;
  std::size_t subset_size = 0;
};

int cmd_metric(Context& ctx, const std::string& which, const MetricArgs& a) {
  if (which == "acc") {
    if (a.labels.empty()) throw UsageError("metrics acc: --labels is required");
    const auto probs = read_matrix(a.fake);
    const auto labels = read_labels(a.labels);
    ctx.out << "acc " << fmt(metrics::recognition_accuracy(probs, labels)) << "\n";
    return kExitOk;
  }
  if (a.real.empty()) throw UsageError("metrics " + which + ": --real is required");
  const auto real = read_matrix(a.real);
  const auto fake = read_matrix(a.fake);
  if (which == "fid") {
    ctx.out << "fid " << fmt(metrics::fid(real, fake)) << "\n";
  } else if (which == "kid") {
    constexpr std::size_t kDefaultSubsetSize = 1000;
    const std::size_t size = a.subset_size
                                 ? a.subset_size
                                 : std::min<std::size_t>({kDefaultSubsetSize, static_cast<std::size_t>(real.rows()),
                                                          static_cast<std::size_t>(fake.rows())});
    Rng rng(ctx.config.seed);
    const metrics::KidResult r = metrics::kid(real, fake, a.subsets, size, rng);
    ctx.out << "kid " << fmt(r.mean) << " std " << fmt(r.stddev) << "\n";
  } else {
    ctx.out << "kl " << fmt(metrics::kl_divergence(real, fake)) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- griffinlim / corpus

int cmd_griffinlim(Context& ctx, const std::string& spec_path, const std::string& out, std::optional<std::size_t> iters,
                   std::optional<std::size_t> length) {
  const Tensor t = read_pdt1(spec_path);
  const dsp::StftConfig& stft = ctx.config.stft;
  if (t.rank() != 2 || t.shape[0] != stft.num_bins()) {
    throw DataError(spec_path + ": expected a [" + std::to_string(stft.num_bins()) + ", frames] dB spectrogram");
  }
  dsp::Spectrogram spec;
  spec.config = stft;
  spec.num_bins = t.shape[0];
  spec.num_frames = t.shape[1];
  spec.data = t.data;
  dsp::GriffinLimOptions gl;
  gl.iterations = iters.value_or(ctx.config.griffin_lim_iterations);
  gl.seed = ctx.config.seed;
  gl.length = length;
  dsp::GriffinLimResult r = dsp::griffin_lim(spec, gl);
  peak_normalize(r.signal, kOutputPeak);
  write_wav(out, r.signal, stft.sample_rate);
  ctx.out << "spectral convergence " << fmt(r.convergence.empty() ? 0.0 : r.convergence.back()) << "; wrote " << out
          << "\n";
  return kExitOk;
}

int cmd_corpus(Context& ctx, const std::string& dir, CorpusOptions options) {
  options.seed = ctx.config.seed;
  options.sample_rate = ctx.config.stft.sample_rate;
  options.duration = ctx.config.clip_duration;
  const ClipManifest m = synthesize_corpus(dir, options);
  ctx.out << "wrote " << m.clips.size() << " clips to " << dir << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Physics-prior impact sound analysis, editing and synthesis"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--set", overrides, "Config override KEY=VALUE (repeatable)")->allow_extra_args(false);
  app.add_option("--seed", seed, "Seed for every randomized step (default 0)");

  std::function<int(Context&)> action;

  AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "Estimate physics priors from a WAV clip or a manifest of clips");
  c_analyze->add_option("wav", analyze.wav, "Input WAV");
  c_analyze->add_option("-o,--out", analyze.out, "Output priors JSON");
  c_analyze->add_option("--manifest", analyze.manifest, "Clip manifest for batch analysis");
  c_analyze->add_option("--out-dir", analyze.out_dir, "Batch output directory");
  c_analyze->add_option("-j,--jobs", analyze.jobs, "Parallel clips in batch mode");
  c_analyze->callback([&] { action = [&](Context& c) { return cmd_analyze(c, analyze); }; });

  ResynthArgs resynth;
  auto* c_resynth = app.add_subcommand("resynth", "Synthesize a WAV from priors");
  c_resynth->add_option("priors", resynth.priors, "Priors JSON")->required();
  c_resynth->add_option("-o,--out", resynth.out, "Output WAV")->required();
  c_resynth->add_flag("--no-residual", resynth.no_residual, "Modes only");
  c_resynth->add_option("--duration", resynth.duration, "Length in seconds (default: the analysed clip's)");
  c_resynth->add_option("--format", resynth.format, "float or pcm16");
  c_resynth->callback([&] { action = [&](Context& c) { return cmd_resynth(c, resynth); }; });

  EditArgs edit;
  auto* c_edit = app.add_subcommand("edit", "Change the power or decay of a range of modes");
  c_edit->add_option("priors", edit.priors, "Priors JSON")->required();
  c_edit->add_option("-o,--out", edit.out, "Output priors JSON")->required();
  c_edit->add_option("--bins", edit.bins, "Half-open bin range BEGIN:END")->required();
  c_edit->add_option("--power-delta", edit.power_delta, "dB added to each mode power");
  c_edit->add_option("--decay-scale", edit.decay_scale, "Factor applied to each decay rate");
  c_edit->add_flag("--zero-residual", edit.zero_residual, "Drop the residual");
  c_edit->callback([&] { action = [&](Context& c) { return cmd_edit(c, edit); }; });

  auto* c_store = app.add_subcommand("store", "Visual-to-physics latent store");
  c_store->require_subcommand(1);
  std::string store_pairs, store_out, store_path, store_visual, store_query_out;
  auto* c_build = c_store->add_subcommand("build", "Encode clip priors and index them by visual latent");
  c_build->add_option("--pairs", store_pairs, "Manifest with visual and priors paths")->required();
  c_build->add_option("-o,--out", store_out, "Output store")->required();
  c_build->callback([&] { action = [&](Context& c) { return cmd_store_build(c, store_pairs, store_out); }; });
  auto* c_query = c_store->add_subcommand("query", "Nearest stored physics latent for a visual latent");
  c_query->add_option("--store", store_path, "Store file")->required();
  c_query->add_option("--visual", store_visual, "Visual latent (PDT1)")->required();
  c_query->add_option("--out", store_query_out, "Write the physics latent here (PDT1)");
  c_query->callback(
      [&] { action = [&](Context& c) { return cmd_store_query(c, store_path, store_visual, store_query_out); }; });

  auto* c_diffusion = app.add_subcommand("diffusion", "Toy conditional denoiser");
  c_diffusion->require_subcommand(1);
  TrainArgs train;
  auto* c_train = c_diffusion->add_subcommand("train-toy", "Train on coarse spectrograms of manifest clips");
  c_train->add_option("--manifest", train.manifest, "Clip manifest")->required();
  c_train->add_option("--store", train.store, "Latent store built from the same clips")->required();
  c_train->add_option("-o,--out", train.out, "Output checkpoint")->required();
  c_train->add_option("--epochs", train.epochs, "Training epochs");
  c_train->callback([&] { action = [&](Context& c) { return cmd_train_toy(c, train); }; });

  SampleArgs dsample;
  auto* c_dsample = c_diffusion->add_subcommand("sample", "Sample a spectrogram conditioned on priors and a visual latent");
  c_dsample->add_option("--checkpoint", dsample.checkpoint, "Trained checkpoint")->required();
  c_dsample->add_option("--cond", dsample.cond, "Priors JSON")->required();
  c_dsample->add_option("--visual", dsample.visual, "Visual latent (PDT1)")->required();
  c_dsample->add_option("--out", dsample.out, "Output dB spectrogram (PDT1)")->required();
  c_dsample->add_option("--steps", dsample.steps, "Must equal the checkpoint's T");
  c_dsample->add_option("--eta", dsample.eta, "Sampler noise scale");
  c_dsample->callback([&] { action = [&](Context& c) { return cmd_diffusion_sample(c, dsample); }; });

  SampleArgs psample;
  auto* c_pipeline = app.add_subcommand("pipeline", "Visual latent to waveform");
  c_pipeline->require_subcommand(1);
  auto* c_psample = c_pipeline->add_subcommand("sample", "Query the store, sample, and invert with Griffin-Lim");
  c_psample->add_option("--store", psample.store, "Latent store")->required();
  c_psample->add_option("--visual", psample.visual, "Visual latent (PDT1)")->required();
  c_psample->add_option("--checkpoint", psample.checkpoint, "Trained checkpoint")->required();
  c_psample->add_option("--out", psample.out, "Output WAV")->required();
  c_psample->add_option("--spec-out", psample.spec_out, "Also write the dB spectrogram (PDT1)");
  c_psample->add_option("--steps", psample.steps, "Must equal the checkpoint's T");
  c_psample->add_option("--eta", psample.eta, "Sampler noise scale");
  c_psample->add_option("--gl-iters", psample.gl_iters, "Griffin-Lim iterations");
  c_psample->callback([&] { action = [&](Context& c) { return cmd_pipeline_sample(c, psample); }; });

  auto* c_metrics = app.add_subcommand("metrics", "Evaluation metrics on PDT1 embeddings or probabilities");
  c_metrics->require_subcommand(1);
  MetricArgs margs;
  for (const std::string which : {"fid", "kid", "kl", "acc"}) {
    auto* sub = c_metrics->add_subcommand(which);
    if (which != "acc") sub->add_option("--real", margs.real, "Reference set (PDT1)")->required();
    sub->add_option("--fake,--probs", margs.fake, "Generated set or class probabilities (PDT1)")->required();
    if (which == "acc") sub->add_option("--labels", margs.labels, "Integer labels (CSV)")->required();
    if (which == "kid") {
      sub->add_option("--subsets", margs.subsets, "Number of random subsets");
      sub->add_option("--subset-size", margs.subset_size, "Rows per subset");
    }
    sub->callback([&, which] { action = [&, which](Context& c) { return cmd_metric(c, which, margs); }; });
  }

  std::string gl_spec, gl_out;
  std::optional<std::size_t> gl_iters, gl_length;
  auto* c_gl = app.add_subcommand("griffinlim", "Invert a dB spectrogram to a WAV");
  c_gl->add_option("--spec", gl_spec, "dB spectrogram [bins, frames] (PDT1)")->required();
  c_gl->add_option("-o,--out", gl_out, "Output WAV")->required();
  c_gl->add_option("--iters", gl_iters, "Iterations");
  c_gl->add_option("--length", gl_length, "Output length in samples");
  c_gl->callback([&] { action = [&](Context& c) { return cmd_griffinlim(c, gl_spec, gl_out, gl_iters, gl_length); }; });

  auto* c_corpus = app.add_subcommand("corpus", "Synthetic clip corpus");
  c_corpus->require_subcommand(1);
  std::string corpus_dir;
  CorpusOptions corpus;
  auto* c_csynth = c_corpus->add_subcommand("synth", "Write synthetic impact clips, visual latents and a manifest");
  c_csynth->add_option("-o,--out", corpus_dir, "Output directory")->required();
  c_csynth->add_option("--materials", corpus.materials, "Number of materials");
  c_csynth->add_option("--clips", corpus.clips_per_material, "Clips per material");
  c_csynth->add_option("--visual-dim", corpus.visual_dim, "Visual latent size");
  c_csynth->callback([&] { action = [&](Context& c) { return cmd_corpus(c, corpus_dir, corpus); }; });

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Config config;
    try {
      config = load_config(config_path, overrides);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (seed) config.seed = *seed;
    Context ctx{config, out, err};
    return action(ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace impactsynth::cli
