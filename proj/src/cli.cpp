#include "saekit/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "saekit/checkpoint.hpp"
#include "saekit/dataio.hpp"
#include "saekit/digest.hpp"
#include "saekit/errors.hpp"
#include "saekit/evalkit.hpp"
#include "saekit/parallel.hpp"
#include "saekit/train.hpp"

namespace saekit::cli {

namespace {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kSubcommands = {"gen-data", "train", "eval", "sweep", "diagnose", "calibrate"};

/// key=value lines, '#' comments, blank lines ignored.
std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path);
  std::vector<std::string> args;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    if (key == "config") throw ValidationError(path + ": config files cannot include other config files");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

/// Splices config-file flags in front of the command-line flags so that the
/// latter take precedence (every option keeps its last value).
std::vector<std::string> expand_args(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  std::size_t sub = args.size();
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), args[i]) != kSubcommands.end()) {
      sub = i;
      break;
    }
  }
  if (sub == args.size()) return args;
  const auto extra = config_file_args(config_path);
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub + 1), extra.begin(), extra.end());
  return args;
}

void echo_config(const CLI::App& sub, std::ostream& out) {
  out << "# command=" << sub.get_name() << '\n';
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      value = opt->get_type_size() == 0 ? "true" : res.back();
    } else {
      value = opt->get_default_str();
    }
    out << "# " << name << '=' << value << '\n';
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::kIo, "cannot write " + path);
  f << text;
}

std::string csv_path_for(const std::string& report_path) {
  const auto dot = report_path.rfind('.');
  const auto slash = report_path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return report_path + ".csv";
  return report_path.substr(0, dot) + ".csv";
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  std::string out;
  std::size_t rows = 0;
  std::size_t dim = 128;
  std::size_t atoms = 1024;
  std::size_t active = 8;
  double noise = 0.05;
  double coef_mean = 1.0;
  double coef_std = 0.25;
  std::uint64_t seed = 0;
  std::int64_t sample_seed = -1;
};

void add_gen_data(CLI::App& app, GenDataArgs& a) {
  app.add_option("--out", a.out, "Output activation file")->required();
  app.add_option("--rows", a.rows, "Number of rows")->required();
  app.add_option("--dim", a.dim, "Row width h");
  app.add_option("--atoms", a.atoms, "True dictionary size");
  app.add_option("--active", a.active, "Atoms per row");
  app.add_option("--noise", a.noise, "Gaussian noise std per coordinate");
  app.add_option("--coef-mean", a.coef_mean, "Mean of the |N(mean, std)| coefficients");
  app.add_option("--coef-std", a.coef_std, "Std of the |N(mean, std)| coefficients");
  app.add_option("--seed", a.seed, "Atom (and default row) seed");
  app.add_option("--sample-seed", a.sample_seed, "Separate row seed over the same atoms (-1: off)");
}

int run_gen_data(const GenDataArgs& a, std::ostream& out) {
  dataio::SyntheticSpec spec;
  spec.atoms = a.atoms;
  spec.dim = a.dim;
  spec.active = a.active;
  spec.noise_std = a.noise;
  spec.coef_mean = a.coef_mean;
  spec.coef_std = a.coef_std;
  spec.seed = a.seed;
  if (a.sample_seed >= 0) spec.sample_seed = static_cast<std::uint64_t>(a.sample_seed);
  spec.validate();
  if (a.rows < 1) throw DomainError("--rows must be >= 1");
  const auto data = dataio::generate_synthetic(spec, a.rows);
  dataio::write_activations(data, a.out);
  out << "rows=" << data.rows() << " dim=" << data.cols() << " digest=" << digest_file(a.out) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  train::TrainConfig cfg;
  std::string activation = "hierarchical";
  std::string log_path;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto& c = a.cfg;
  app.add_option("--data", c.data_path, "Activation file")->required();
  app.add_option("--activation", a.activation, "topk | batchtopk | hierarchical");
  app.add_option("--dict-size", c.dict_size, "Dictionary size D");
  app.add_option("--k", c.k, "Sparsity budget K");
  app.add_option("--stride", c.stride, "Hierarchical schedule stride x (levels {1} ∪ multiples of x)");
  app.add_option("--lr", c.adam.lr, "Adam learning rate");
  app.add_option("--beta1", c.adam.beta1, "Adam beta1");
  app.add_option("--beta2", c.adam.beta2, "Adam beta2");
  app.add_option("--eps", c.adam.eps, "Adam epsilon");
  app.add_option("--batch", c.batch_size, "Batch size");
  app.add_option("--steps", c.steps, "Training steps (0: tokens / batch)");
  app.add_option("--tokens", c.tokens, "Token budget when --steps is 0");
  app.add_option("--seed", c.seed, "Initialization seed");
  app.add_option("--shuffle-seed", c.shuffle_seed, "Batch-order seed");
  app.add_option("--decoder-norm", c.decoder_norm, "Keep decoder rows at unit norm");
  app.add_option("--holdout", c.holdout_rows, "Leading rows reserved for held-out FVU");
  app.add_option("--freq-window", c.freq_window, "Frequency-tracking window in tokens");
  app.add_option("--log-every", c.log_every, "Steps between log records");
  app.add_option("--checkpoint-every", c.checkpoint_every, "Steps between intermediate checkpoints (0: final only)");
  app.add_option("--out", c.out_path, "Checkpoint path")->required();
  app.add_option("--log", a.log_path, "Training log path (default: stdout)");
}

int run_train(TrainArgs& a, std::ostream& out) {
  a.cfg.activation = train::parse_activation(a.activation);
  a.cfg.validate();
  out << "# schedule=" << a.cfg.schedule().to_string() << '\n';
  out << "# resolved_steps=" << a.cfg.resolved_steps() << '\n';
  std::unique_ptr<std::ofstream> log_file;
  std::ostream* log = &out;
  if (!a.log_path.empty()) {
    log_file = std::make_unique<std::ofstream>(a.log_path, std::ios::trunc);
    if (!*log_file) throw FormatError(FormatError::Kind::kIo, "cannot write " + a.log_path);
    log = log_file.get();
  }
  const auto result = train::train(a.cfg, log);
  out << "checkpoint=" << a.cfg.out_path << " digest=" << model::digest(result.params)
      << " final_loss=" << result.final_loss.total << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval / sweep

struct SweepArgs {
  std::string model;
  std::string data;
  std::string k_grid;
  std::size_t k = 0;
  std::string mode = "topk";
  std::string out;
  std::string csv;
  double dead_threshold = 1e-5;
  std::uint64_t freq_window = 0;
  std::size_t batch_rows = 0;
};

void add_eval_common(CLI::App& app, SweepArgs& a) {
  app.add_option("--model", a.model, "Checkpoint")->required();
  app.add_option("--data", a.data, "Activation file")->required();
  app.add_option("--mode", a.mode, "topk | batchtopk | jumprelu");
  app.add_option("--out", a.out, "Report path (JSON)")->required();
  app.add_option("--dead-threshold", a.dead_threshold, "Almost-dead frequency threshold");
  app.add_option("--freq-window", a.freq_window, "Frequency window in tokens (0: all rows)");
  app.add_option("--batch-rows", a.batch_rows, "Rows per batchtopk selection (0: all)");
}

int run_sweep(const SweepArgs& a, const std::vector<std::size_t>& grid, std::ostream& out) {
  const auto ck = model::load(a.model);
  const auto data = dataio::read_activations(a.data);
  if (data.cols() != ck.params.hidden_dim()) throw ShapeError("data width does not match the checkpoint");
  evalkit::SweepOptions opt;
  opt.dead_threshold = a.dead_threshold;
  opt.freq_window = a.freq_window;
  opt.batch_rows = a.batch_rows;
  evalkit::EvalReport report;
  report.model_digest = model::digest(ck.params);
  report.data_digest = dataio::digest(data);
  report.entries = evalkit::sweep(ck.params, data, grid, evalkit::parse_mode(a.mode), opt);
  write_text(a.out, report.to_json());
  const std::string csv = a.csv.empty() ? csv_path_for(a.out) : a.csv;
  write_text(csv, report.to_csv());
  for (const auto& e : report.entries) {
    out << "k=" << e.k << " l0=" << e.l0 << " fvu=" << e.fvu << " almost_dead=" << e.almost_dead;
    if (e.theta) out << " theta=" << *e.theta;
    out << '\n';
  }
  out << "report=" << a.out << " csv=" << csv << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  std::string model;
  std::string data;
  std::string out;
  std::size_t k = 0;
  std::size_t compare_k = 0;
  std::string reference = "top1";
};

int run_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  const auto ck = model::load(a.model);
  const auto data = dataio::read_activations(a.data);
  if (data.cols() != ck.params.hidden_dim()) throw ShapeError("data width does not match the checkpoint");
  const std::size_t k = a.k ? a.k : ck.meta.k;
  if (k < 1 || k > ck.params.dict_size()) throw DomainError("k out of range for this checkpoint");
  evalkit::CosineReference ref;
  if (a.reference == "top1") {
    ref = evalkit::CosineReference::kTop1;
  } else if (a.reference == "adjacent") {
    ref = evalkit::CosineReference::kAdjacent;
  } else {
    throw DomainError("--reference must be top1 or adjacent");
  }
  evalkit::EvalReport report;
  report.model_digest = model::digest(ck.params);
  report.data_digest = dataio::digest(data);
  report.cosine_profile = evalkit::cosine_profile(ck.params, data, k, ref);
  report.distributions = evalkit::activation_distributions(ck.params, data, k);
  report.comparison = evalkit::compare_inference_modes(ck.params, data, a.compare_k ? a.compare_k : k);
  write_text(a.out, report.to_json());
  out << "profile_length=" << report.cosine_profile.size() << " fvu_topk=" << report.comparison->fvu_a
      << " fvu_jumprelu=" << report.comparison->fvu_b << " report=" << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::string model;
  std::string data;
  std::size_t target_k = 0;
  double holdout_fraction = 0.5;
};

int run_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const auto ck = model::load(a.model);
  const auto data = dataio::read_activations(a.data);
  if (data.cols() != ck.params.hidden_dim()) throw ShapeError("data width does not match the checkpoint");
  if (a.target_k < 1) throw DomainError("--target-k must be >= 1");
  if (!(a.holdout_fraction >= 0.0 && a.holdout_fraction < 1.0)) throw DomainError("--holdout-fraction must lie in [0, 1)");
  const std::size_t n_hold = static_cast<std::size_t>(static_cast<double>(data.rows()) * a.holdout_fraction);
  const std::size_t n_cal = data.rows() - n_hold;
  if (n_cal < 1) throw DomainError("no rows left for calibration");
  const auto cal = linalg::slice_rows(data, 0, n_cal);
  const auto threshold = codes::calibrate_jumprelu(model::encode_batch(ck.params, cal), a.target_k);
  out.precision(9);
  out << "theta=" << threshold.theta << '\n';
  if (n_hold > 0) {
    const auto held = linalg::slice_rows(data, n_cal, data.rows());
    const auto c = codes::apply_jumprelu_rows(model::encode_batch(ck.params, held), threshold);
    out << "heldout_rows=" << n_hold << " heldout_l0=" << evalkit::l0(c) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse autoencoder training and evaluation with the hierarchical TopK objective", "saekit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)");

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Flat key=value file of flag defaults");
  };

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic activation file");
  add_gen_data(*gen_cmd, gen);
  add_config(gen_cmd);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train an SAE");
  add_train(*train_cmd, tr);
  add_config(train_cmd);

  SweepArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint at a single k");
  add_eval_common(*eval_cmd, ev);
  eval_cmd->add_option("--k", ev.k, "Inference k (0: the checkpoint's K)");
  add_config(eval_cmd);

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "FVU/ℓ0 over a k grid");
  add_eval_common(*sweep_cmd, sw);
  sweep_cmd->add_option("--k-grid", sw.k_grid, "start:stop:step and/or comma list")->required();
  sweep_cmd->add_option("--csv", sw.csv, "CSV path (default: report path with .csv)");
  add_config(sweep_cmd);

  DiagnoseArgs dg;
  auto* diag_cmd = app.add_subcommand("diagnose", "Cosine profile, activation distributions, TopK vs JumpReLU");
  diag_cmd->add_option("--model", dg.model, "Checkpoint")->required();
  diag_cmd->add_option("--data", dg.data, "Activation file")->required();
  diag_cmd->add_option("--out", dg.out, "Report path (JSON)")->required();
  diag_cmd->add_option("--k", dg.k, "Profile length / selection k (0: checkpoint K)");
  diag_cmd->add_option("--compare-k", dg.compare_k, "k for the TopK/JumpReLU comparison (0: same as --k)");
  diag_cmd->add_option("--reference", dg.reference, "Cosine reference: top1 | adjacent");
  add_config(diag_cmd);

  CalibrateArgs cb;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit a constant JumpReLU threshold for a target ℓ0");
  cal_cmd->add_option("--model", cb.model, "Checkpoint")->required();
  cal_cmd->add_option("--data", cb.data, "Activation file")->required();
  cal_cmd->add_option("--target-k", cb.target_k, "Expected active features per row")->required();
  cal_cmd->add_option("--holdout-fraction", cb.holdout_fraction, "Trailing fraction of rows used to check the fit");
  add_config(cal_cmd);

  try {
    auto args = expand_args(argc, argv);
    std::vector<const char*> cargs;
    for (const auto& s : args) cargs.push_back(s.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  set_num_threads(threads);
  try {
    if (*gen_cmd) {
      echo_config(*gen_cmd, out);
      return run_gen_data(gen, out);
    }
    if (*train_cmd) {
      echo_config(*train_cmd, out);
      return run_train(tr, out);
    }
    if (*eval_cmd) {
      echo_config(*eval_cmd, out);
      std::size_t k = ev.k;
      if (k == 0) k = model::load(ev.model).meta.k;
      return run_sweep(ev, {k}, out);
    }
    if (*sweep_cmd) {
      echo_config(*sweep_cmd, out);
      return run_sweep(sw, evalkit::parse_k_grid(sw.k_grid), out);
    }
    if (*diag_cmd) {
      echo_config(*diag_cmd, out);
      return run_diagnose(dg, out);
    }
    if (*cal_cmd) {
      echo_config(*cal_cmd, out);
      return run_calibrate(cb, out);
    }
  } catch (const train::TrainingAborted& e) {
    err << "aborted: " << e.what() << " (" << e.record().to_line() << ")\n";
    return kExitAbort;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const FormatError& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "aborted: " << e.what() << '\n';
    return kExitAbort;
  }
  return kExitValidation;
}

}  // namespace saekit::cli
