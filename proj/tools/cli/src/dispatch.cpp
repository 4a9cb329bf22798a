#include "fct_cli/dispatch.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <ostream>

#include "commands.hpp"
#include "fct/core/error.hpp"

namespace fct::cli {

namespace fs = std::filesystem;

namespace {

void record_flags(const CLI::App& sub, RunManifest& m) {
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || name == "--help,-h" || opt->get_lnames().empty()) continue;
    const std::string key = opt->get_lnames().front();
    if (key == "help") continue;
    if (opt->count() > 0) {
      std::string joined;
      for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
      m.flags[key] = opt->get_expected_min() == 0 && joined.empty() ? "true" : joined;
    } else {
      m.flags[key] = opt->get_default_str();
    }
  }
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fourier complex transformer toolkit: gradient checks, benchmarks, training and probes", "fct"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough(false);

  std::string out_path = ".";

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable primitive");
  gradcheck->add_option("--seed", gc.seed, "Seed for random inputs");
  gradcheck->add_option("--tol", gc.tol, "Maximum relative error")->check(CLI::PositiveNumber);
  gradcheck->add_option("--out", out_path, "Output directory");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "Time naive self-attention against complex self-attention");
  bench->add_option("--mechanisms", bn.mechanisms, "Comma-separated list of sa, csa");
  bench->add_option("--sizes", bn.sizes, "Comma-separated sequence lengths");
  bench->add_option("--trials", bn.trials, "Timed trials per size")->check(CLI::PositiveNumber);
  bench->add_option("--warmups", bn.warmups, "Untimed warmup runs per size");
  bench->add_option("-c,--channels", bn.channels, "Channels per token")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bn.seed, "Seed for inputs and weights");
  bench->add_option("--budget-mb", bn.budget_mb, "Skip sizes whose working set exceeds this many MiB");
  bench->add_option("--normalizer", bn.normalizer, "CSA normaliser: logmax, softmax or identity");
  bench->add_flag("--no-pin", bn.no_pin, "Do not pin the benchmark thread to a CPU");
  bench->add_option("--table2", bn.table2, "Presets for the parameter/FLOP report, or none");
  bench->add_option("--resolutions", bn.resolutions, "Input sizes for the parameter/FLOP report");
  bench->add_option("--out", out_path, "Output directory, or a .csv path (report and manifest go beside it)");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a classifier on the synthetic spectral dataset");
  train->add_option("--config", tr.config, "Preset (tiny, small, base, large, desk, micro) or a .json file");
  train->add_option("--normalizer", tr.normalizer, "Attention normaliser: logmax, softmax or identity");
  train->add_option("--steps", tr.steps, "Optimisation steps (>= 1)");
  train->add_option("--seed", tr.seed, "Seed for initialisation (and data unless --data-seed)");
  train->add_option("--data-seed", tr.data_seed, "Seed for the dataset (default: --seed)");
  train->add_option("--batch", tr.batch, "Images per step");
  train->add_option("--lr", tr.lr, "Peak learning rate")->check(CLI::NonNegativeNumber);
  train->add_option("--weight-decay", tr.weight_decay, "AdamW decoupled weight decay")->check(CLI::NonNegativeNumber);
  train->add_option("--noise", tr.noise, "Dataset noise level")->check(CLI::NonNegativeNumber);
  train->add_option("--input-scale", tr.input_scale, "Multiplier applied to every pixel");
  train->add_option("--train-size", tr.train_size, "Distinct training images")->check(CLI::PositiveNumber);
  train->add_option("--eval-every", tr.eval_every, "Held-out evaluation period in steps (0: never)");
  train->add_option("--eval-samples", tr.eval_samples, "Held-out images per evaluation");
  train->add_option("--target-oa", tr.target_oa, "Stop once held-out OA reaches this value (0: never)");
  train->add_option("--clip-norm", tr.clip_norm, "Global gradient-norm clip (0: off)")->check(CLI::NonNegativeNumber);
  train->add_option("--threads", tr.threads, "Worker threads (0: FCT_THREADS or all cores)");
  train->add_option("--arrangement", tr.arrangement, "Block kinds per stage, e.g. s,s,c,c");
  train->add_flag("--abs-pos", tr.abs_pos, "Add a learnable absolute position embedding");
  train->add_flag("--no-scale-pos", tr.no_scale_pos, "Fix alpha at 0.5 instead of learning it");
  train->add_option("--resume", tr.resume, "Continue from a checkpoint directory");
  train->add_option("--out", out_path, "Output directory");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Overall accuracy of a checkpoint on held-out data");
  eval->add_option("--ckpt", ev.ckpt, "Checkpoint directory")->required();
  eval->add_option("--seed", ev.seed, "Dataset seed (default: the training seed)");
  eval->add_option("--samples", ev.samples, "Held-out images")->check(CLI::PositiveNumber);
  eval->add_option("--threads", ev.threads, "Worker threads (0: FCT_THREADS or all cores)");
  eval->add_option("--out", out_path, "Output directory");

  InspectArgs in;
  auto* inspect = app.add_subcommand("inspect", "Dump attention maps and alpha of every block for one image");
  inspect->add_option("--ckpt", in.ckpt, "Checkpoint directory")->required();
  inspect->add_option("--index", in.index, "Sample index");
  inspect->add_option("--split", in.split, "train or test");
  inspect->add_option("--out", out_path, "Output directory");

  ProbeArgs pr;
  auto* probe = app.add_subcommand("probe", "Compare DFT(X X^T X) with DFT(X) DFT(X^T) DFT(X)");
  probe->alias("associativity");
  probe->alias("associativity-probe");
  probe->add_option("--sizes", pr.sizes, "Comma-separated matrix sizes (<= 16)");
  probe->add_option("--seed", pr.seed, "Seed for the random matrices");
  probe->add_option("--out", out_path, "Output directory");

  RunManifest manifest;
  manifest.version = version_string();
  manifest.started_at = utc_now();
  for (int i = 0; i < argc; ++i) manifest.argv.emplace_back(argv[i]);

  CLI::App* chosen = nullptr;
  int code = 0;
  fs::path out_dir = ".";
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      // --help and --version
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, out, err);
    if (subs.empty()) return kExitUsage;
    chosen = subs.front();
    manifest.subcommand = chosen->get_name();
    manifest.error = e.what();
    manifest.exit_code = kExitUsage;
    manifest.finished_at = utc_now();
    try {
      fs::create_directories(out_path);
      manifest.write(fs::path(out_path) / "run_manifest.json");
    } catch (const std::exception&) {
    }
    return kExitUsage;
  }

  chosen = app.get_subcommands().front();
  manifest.subcommand = chosen->get_name();
  record_flags(*chosen, manifest);
  if (chosen == bench && fs::path(out_path).extension() == ".csv") {
    out_dir = fs::path(out_path).parent_path();
    if (out_dir.empty()) out_dir = ".";
    bn.csv_name = fs::path(out_path).filename().string();
  } else {
    out_dir = out_path;
  }

  Context ctx{manifest, out, err, out_dir};
  try {
    fs::create_directories(out_dir);
    if (chosen == gradcheck) code = run_gradcheck(gc, ctx);
    if (chosen == bench) code = run_bench(bn, ctx);
    if (chosen == train) code = run_train(tr, ctx);
    if (chosen == eval) code = run_eval(ev, ctx);
    if (chosen == inspect) code = run_inspect(in, ctx);
    if (chosen == probe) code = run_probe(pr, ctx);
  } catch (const UsageError& e) {
    err << "fct " << manifest.subcommand << ": " << e.what() << "\n" << chosen->help();
    manifest.error = e.what();
    code = kExitUsage;
  } catch (const std::exception& e) {
    err << "fct " << manifest.subcommand << ": " << e.what() << "\n";
    manifest.error = e.what();
    code = kExitVerificationFailed;
  }
  manifest.exit_code = code;
  manifest.finished_at = utc_now();
  try {
    manifest.write(out_dir / "run_manifest.json");
  } catch (const std::exception& e) {
    err << "fct: could not write run manifest: " << e.what() << "\n";
  }
  return code;
}

}  // namespace fct::cli
