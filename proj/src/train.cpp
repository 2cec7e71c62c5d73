#include "saekit/train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "saekit/dataio.hpp"
#include "saekit/digest.hpp"
#include "saekit/errors.hpp"
#include "saekit/evalkit.hpp"

namespace saekit::train {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kTopK: return "topk";
    case Activation::kBatchTopK: return "batchtopk";
    case Activation::kHierarchical: return "hierarchical";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "topk") return Activation::kTopK;
  if (name == "batchtopk") return Activation::kBatchTopK;
  if (name == "hierarchical") return Activation::kHierarchical;
  throw DomainError("unknown activation '" + name + "' (expected topk, batchtopk or hierarchical)");
}

codes::IndexSchedule TrainConfig::schedule() const {
  if (activation == Activation::kHierarchical) return codes::make_schedule(stride, k);
  return codes::IndexSchedule::singleton(k);
}

std::uint64_t TrainConfig::resolved_steps() const {
  if (steps > 0) return steps;
  return std::max<std::uint64_t>(1, tokens / std::max<std::size_t>(1, batch_size));
}

std::string TrainConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "activation=" << to_string(activation) << "\nk=" << k << "\nstride=" << stride << "\ndict_size=" << dict_size
     << "\nhidden_dim=" << hidden_dim << "\nlr=" << adam.lr << "\nbeta1=" << adam.beta1 << "\nbeta2=" << adam.beta2
     << "\neps=" << adam.eps << "\nbatch=" << batch_size << "\nsteps=" << resolved_steps() << "\nseed=" << seed
     << "\nshuffle_seed=" << shuffle_seed << "\ndecoder_norm=" << decoder_norm << "\nholdout_rows=" << holdout_rows
     << "\nfreq_window=" << freq_window << '\n';
  return os.str();
}

std::string TrainConfig::digest() const {
  Fnv1a h;
  h.update(canonical());
  return h.hex();
}

void TrainConfig::validate() const {
  if (k < 1) throw DomainError("k must be >= 1");
  if (dict_size < 1) throw DomainError("dictionary size must be >= 1");
  if (k > dict_size) throw DomainError("k = " + std::to_string(k) + " exceeds dictionary size " + std::to_string(dict_size));
  if (stride < 1) throw DomainError("stride must be >= 1");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) throw DomainError("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw DomainError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw DomainError("Adam epsilon must be positive");
  if (freq_window < 1) throw DomainError("frequency window must be >= 1");
}

FreqTracker::FreqTracker(std::size_t dict_size, std::uint64_t window)
    : window_(std::max<std::uint64_t>(1, window)), counts_(dict_size, 0) {}

void FreqTracker::update(std::span<const codes::SparseCode> codes) {
  for (const auto& code : codes) {
    for (auto idx : code.indices) ++counts_.at(idx);
    ++window_tokens_;
    ++tokens_seen_;
    if (window_tokens_ == window_) {
      frozen_.resize(counts_.size());
      for (std::size_t i = 0; i < counts_.size(); ++i) {
        frozen_[i] = static_cast<double>(counts_[i]) / static_cast<double>(window_tokens_);
      }
      std::fill(counts_.begin(), counts_.end(), 0);
      window_tokens_ = 0;
    }
  }
}

std::vector<double> FreqTracker::frequencies() const {
  if (!frozen_.empty()) return frozen_;
  std::vector<double> f(counts_.size(), 0.0);
  if (window_tokens_ == 0) return f;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    f[i] = static_cast<double>(counts_[i]) / static_cast<double>(window_tokens_);
  }
  return f;
}

std::size_t FreqTracker::live_count() const {
  const auto f = frequencies();
  return static_cast<std::size_t>(std::count_if(f.begin(), f.end(), [](double v) { return v > 0.0; }));
}

double LogRecord::get(const std::string& key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) return v;
  }
  throw DomainError("log record has no metric '" + key + "'");
}

std::string LogRecord::to_line() const {
  std::ostringstream os;
  os.precision(9);
  os << "step=" << step;
  if (!status.empty()) os << " status=" << status;
  for (const auto& [k, v] : metrics) os << ' ' << k << '=' << v;
  return os.str();
}

std::size_t holdout_size(std::size_t total_rows, std::size_t requested) {
  return std::min(requested, total_rows / 4);
}

namespace {

std::vector<codes::SparseCode> select_codes(Activation activation, const linalg::Matrix& preacts, std::size_t k) {
  if (activation == Activation::kBatchTopK) return codes::batchtopk_select(preacts, k);
  return codes::topk_select_rows(preacts, k);
}

double holdout_fvu(const TrainConfig& cfg, const model::SaeParams& params, const linalg::Matrix& holdout) {
  if (holdout.rows() < 2) return std::nan("");
  const auto pre = model::encode_batch(params, holdout);
  const auto c = select_codes(cfg.activation, pre, cfg.k);
  const auto rec = model::decode_batch(params, c);
  try {
    return evalkit::fvu(holdout, rec);
  } catch (const DomainError&) {
    return std::nan("");
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const linalg::Matrix& data, std::ostream* log) {
  config.validate();
  if (data.rows() == 0 || data.cols() == 0) throw DomainError("training data is empty");
  if (config.hidden_dim != 0 && config.hidden_dim != data.cols()) {
    throw ShapeError("data rows have width " + std::to_string(data.cols()) + ", config expects " +
                     std::to_string(config.hidden_dim));
  }
  const std::size_t n_holdout = holdout_size(data.rows(), config.holdout_rows);
  const linalg::Matrix holdout = linalg::slice_rows(data, 0, n_holdout);
  dataio::BatchIterator batches(data, config.batch_size, config.shuffle_seed, 0, n_holdout);

  const codes::IndexSchedule schedule = config.schedule();
  const std::uint64_t total_steps = config.resolved_steps();
  const bool hierarchical = config.activation == Activation::kHierarchical;

  linalg::Rng rng(config.seed);
  TrainResult result;
  result.params = model::init(config.dict_size, data.cols(), rng);
  model::SaeParams& params = result.params;
  optim::AdamState adam = optim::AdamState::for_params(params, config.adam);
  hloss::Grads grads = hloss::Grads::zeros_like(params);
  FreqTracker tracker(config.dict_size, config.freq_window);

  result.meta.k = config.k;
  result.meta.activation = to_string(config.activation);
  result.meta.schedule = schedule.to_string();
  result.meta.config_digest = config.digest();
  result.meta.seed = config.seed;

  auto emit = [&](LogRecord rec) {
    if (log) *log << rec.to_line() << '\n' << std::flush;
    result.log.push_back(std::move(rec));
  };

  {
    LogRecord rec;
    rec.status = "start";
    rec.metrics = {{"steps", static_cast<double>(total_steps)},
                   {"batch", static_cast<double>(config.batch_size)},
                   {"train_rows", static_cast<double>(data.rows() - n_holdout)},
                   {"holdout_rows", static_cast<double>(n_holdout)},
                   {"dropped_per_epoch", static_cast<double>(batches.dropped_per_epoch())},
                   {"levels", static_cast<double>(schedule.size())}};
    emit(std::move(rec));
  }

  for (std::uint64_t step = 1; step <= total_steps; ++step) {
    const linalg::Matrix x = *batches.next();
    const linalg::Matrix pre = model::encode_batch(params, x);
    const auto batch_codes = select_codes(config.activation, pre, config.k);

    grads.zero();
    hloss::LossValue loss = hloss::loss_fused_with_grads(params, batch_codes, x, schedule, grads);
    if (step == 1) result.initial_loss = loss;

    if (!std::isfinite(loss.total)) {
      LogRecord rec;
      rec.step = step;
      rec.status = "aborted";
      rec.metrics = {{"loss", loss.total}};
      emit(rec);
      throw TrainingAborted("non-finite loss at step " + std::to_string(step), rec);
    }

    std::size_t zero_rows = 0;
    if (config.decoder_norm) zero_rows += optim::project_decoder_grads(params, grads);
    optim::adam_step(params, grads, adam);
    if (config.decoder_norm) zero_rows += optim::renormalize_decoder(params);
    tracker.update(batch_codes);
    result.final_loss = loss;

    const bool last = step == total_steps;
    if ((config.log_every > 0 && step % config.log_every == 0) || last || zero_rows > 0) {
      LogRecord rec;
      rec.step = step;
      rec.metrics.emplace_back("loss", loss.total);
      if (hierarchical) {
        for (std::size_t t = 0; t < loss.levels.size(); ++t) {
          rec.metrics.emplace_back("level_" + std::to_string(loss.levels[t]), loss.per_level[t]);
        }
      }
      rec.metrics.emplace_back("l0", evalkit::l0(batch_codes));
      rec.metrics.emplace_back("holdout_fvu", holdout_fvu(config, params, holdout));
      rec.metrics.emplace_back("live", static_cast<double>(tracker.live_count()));
      if (zero_rows > 0) rec.metrics.emplace_back("zero_decoder_rows", static_cast<double>(zero_rows));
      emit(std::move(rec));
    }

    if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0 && !config.out_path.empty() && !last) {
      result.meta.step = step;
      model::save(config.out_path, params, result.meta);
    }
  }
  result.meta.step = total_steps;
  return result;
}

TrainResult train(const TrainConfig& config, std::ostream* log) {
  config.validate();
  if (config.data_path.empty()) throw DomainError("no training data path given");
  const linalg::Matrix data = dataio::read_activations(config.data_path);
  TrainResult result = train(config, data, log);
  if (!config.out_path.empty()) model::save(config.out_path, result.params, result.meta);
  return result;
}

}  // namespace saekit::train
