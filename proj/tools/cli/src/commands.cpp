#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fct/attention/self_attention.hpp"
#include "fct/autodiff/suite.hpp"
#include "fct/bench/cost_model.hpp"
#include "fct/bench/harness.hpp"
#include "fct/core/files.hpp"
#include "fct/core/rng.hpp"
#include "fct/core/tensor_io.hpp"
#include "fct/model/checkpoint.hpp"
#include "fct/model/fct.hpp"
#include "fct/train/trainer.hpp"

namespace fct::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

fs::path Context::output(const std::string& name) const {
  fs::path p = out_dir / name;
  manifest.outputs.push_back(p.string());
  return p;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw UsageError("empty item in list '" + text + "'");
    items.push_back(item);
  }
  if (items.empty()) throw UsageError("empty list");
  return items;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v == 0 || item[0] == '-') throw UsageError("'" + item + "' is not a positive size");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

namespace {

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

}  // namespace

int run_gradcheck(const GradcheckArgs& args, Context& ctx) {
  ctx.manifest.seed = args.seed;
  const auto entries = ad::gradient_suite(args.seed, args.tol);
  std::ostringstream csv;
  csv << "op,max_rel_err,worst_coord,pass\n";
  std::size_t failed = 0;
  for (const auto& e : entries) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", e.report.max_rel_err);
    csv << e.op << ',' << buf << ',' << e.report.worst_coord << ',' << (e.report.passed ? "pass" : "fail") << '\n';
    if (!e.report.passed) {
      ++failed;
      ctx.err << "gradcheck: " << e.op << " max relative error " << buf << " at coordinate " << e.report.worst_coord
              << (e.report.non_finite ? " (non-finite probe)" : "") << '\n';
    }
  }
  write_text(ctx.output("gradcheck.csv"), csv.str());
  ctx.out << entries.size() - failed << "/" << entries.size() << " gradient checks passed (tolerance "
          << fmt(args.tol) << ", seed " << args.seed << ")\n";
  return failed == 0 ? 0 : 1;
}

int run_bench(const BenchArgs& args, Context& ctx) {
  ctx.manifest.seed = args.seed;
  bench::BenchOptions o;
  o.mechanisms.clear();
  try {
    for (const auto& m : split_list(args.mechanisms)) o.mechanisms.push_back(bench::parse_mechanism(m));
    o.csa_normalizer = attention::parse_normalizer(args.normalizer);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  o.sizes = parse_sizes(args.sizes);
  o.trials = args.trials;
  o.warmups = args.warmups;
  o.c = args.channels;
  o.seed = args.seed;
  o.memory_budget = args.budget_mb << 20;
  o.pin = !args.no_pin;
  if (o.trials == 0 || o.c == 0) throw UsageError("--trials and --channels must be positive");
  std::vector<model::FctConfig> table_configs;
  std::vector<std::size_t> resolutions;
  try {
    if (!args.table2.empty() && args.table2 != "none") {
      for (const auto& a : split_list(args.table2)) table_configs.push_back(model::preset(a));
      resolutions = parse_sizes(args.resolutions);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto records = bench::run_bench(o, [&](const bench::BenchRecord& r) {
    ctx.out << r.mechanism << " n=" << r.n << " c=" << r.c << " median " << fmt(r.measured_ns / 1e6, 4) << " ms ("
            << r.status << ")\n";
  });
  std::ostringstream csv;
  bench::write_bench_csv(csv, records);
  const fs::path csv_path = ctx.output(args.csv_name);
  write_text(csv_path, csv.str());

  std::ostringstream rep;
  rep << bench::cost_header();
  rep << "# timing: median of " << o.trials << " trials after " << o.warmups
      << " warmups, single thread; bytes_peak is the estimated live tensor footprint\n\n";
  rep << "attention-map cost (n, sa, csa, csa/sa)\n";
  for (std::size_t n : o.sizes) {
    const double sa = bench::map_cost(bench::Mechanism::sa, n), csa = bench::map_cost(bench::Mechanism::csa, n);
    rep << n << ", " << fmt(sa, 12) << ", " << fmt(csa, 12) << ", " << fmt(csa / sa, 6) << "\n";
  }
  rep << "\nmeasured forward time ratio csa/sa\n";
  for (std::size_t n : o.sizes) {
    auto r = bench::measured_ratio(records, n);
    rep << n << ", " << (r ? fmt(*r, 4) : std::string("n/a")) << "\n";
  }
  const auto n0 = bench::crossover(records);
  rep << "\ncrossover n0: " << (n0 ? std::to_string(*n0) : std::string("none in tested range")) << "\n";

  if (!table_configs.empty()) {
    rep << "\nmodel parameters and forward cost (full = all operations in FLOPs, layers = multiply-accumulates of "
           "learnable layers)\n";
    rep << "arch, resolution, params, gflops_full, gmacs_layers, published_params_m, published_gflops\n";
    for (const auto& cfg : table_configs) {
      const auto cells = bench::table2_report(cfg, resolutions);
      for (const auto& c : cells) {
        rep << c.arch << ", " << c.resolution << ", " << c.params << ", " << fmt(c.gflops_full, 5) << ", "
            << fmt(c.gmacs_layers, 5) << ", " << (c.paper_params_m ? fmt(*c.paper_params_m) : std::string("n/a"))
            << ", " << (c.paper_gflops ? fmt(*c.paper_gflops) : std::string("n/a")) << "\n";
      }
      if (cells.size() >= 2 && cells.front().paper_gflops && cells.back().paper_gflops) {
        const double paper = *cells.back().paper_gflops / *cells.front().paper_gflops;
        const double full = cells.back().gflops_full / cells.front().gflops_full;
        const double layers = cells.back().gmacs_layers / cells.front().gmacs_layers;
        rep << cfg.name << " cost ratio " << cells.back().resolution << "/" << cells.front().resolution
            << ": full " << fmt(full, 4) << ", layers " << fmt(layers, 4) << ", published " << fmt(paper, 4)
            << " (full deviates " << fmt(100.0 * (full / paper - 1.0), 3) << "%)\n";
      }
    }
  }
  fs::path report_path = csv_path;
  report_path.replace_extension(".report.txt");
  ctx.manifest.outputs.push_back(report_path.string());
  write_text(report_path, rep.str());
  ctx.out << rep.str();
  return 0;
}

namespace {

model::FctConfig resolve_config(const std::string& name) {
  try {
    if (name.size() > 5 && name.substr(name.size() - 5) == ".json") {
      return model::FctConfig::from_json(read_text_file(name));
    }
    return model::preset(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

int run_train(const TrainArgs& args, Context& ctx) {
  ctx.manifest.seed = args.seed;
  if (args.steps < 1) throw UsageError("--steps must be at least 1");
  if (args.batch == 0) throw UsageError("--batch must be positive");

  train::TrainOptions o;
  o.steps = static_cast<std::size_t>(args.steps);
  o.batch = args.batch;
  o.adamw.lr = args.lr;
  o.adamw.weight_decay = args.weight_decay;
  o.clip_norm = args.clip_norm;
  o.seed = args.seed;
  o.threads = args.threads;
  o.eval_every = args.eval_every;
  o.eval_samples = args.eval_samples;
  o.target_oa = args.target_oa;

  std::optional<train::Trainer> trainer;
  if (!args.resume.empty()) {
    trainer.emplace(train::Trainer::resume(args.resume, o));
  } else {
    model::FctConfig cfg = resolve_config(args.config);
    try {
      cfg.normalizer = attention::parse_normalizer(args.normalizer);
      if (!args.arrangement.empty()) {
        cfg.block_kinds.clear();
        for (const auto& k : split_list(args.arrangement)) cfg.block_kinds.push_back(model::parse_block_kind(k));
      }
      cfg.abs_pos = cfg.abs_pos || args.abs_pos;
      cfg.scale_pos = cfg.scale_pos && !args.no_scale_pos;
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    train::DatasetSpec data;
    data.num_classes = cfg.num_classes;
    data.size = cfg.input_size;
    data.channels = cfg.in_channels;
    data.noise = args.noise;
    data.seed = args.data_seed >= 0 ? static_cast<std::uint64_t>(args.data_seed) : args.seed;
    data.train_size = args.train_size;
    data.input_scale = args.input_scale;
    try {
      data.validate();
      trainer.emplace(cfg, data, o);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string(e.what()) +
                       " (the synthetic dataset needs power-of-two image sizes >= 16; use the desk or micro config "
                       "or a custom JSON config)");
    }
  }

  const fs::path records_path = ctx.output("records.csv");
  std::ofstream records(records_path, std::ios::trunc);
  if (!records) throw Error("cannot write " + records_path.string());
  records << train::kTrainRecordHeader << '\n';
  const auto result = trainer->run([&](const train::TrainRecord& r) {
    records << train::to_csv_row(r) << '\n' << std::flush;
  });
  records.close();
  trainer->save(ctx.output("checkpoint"));

  ordered_json summary;
  summary["config"] = trainer->config().name;
  summary["normalizer"] = attention::to_string(trainer->config().normalizer);
  summary["params"] = model::count_params(trainer->config());
  summary["steps_completed"] = trainer->completed_steps();
  summary["final_loss"] = result.records.empty() ? ordered_json(nullptr) : ordered_json(result.records.back().loss);
  summary["nan_events"] = result.nan_halted ? 1 : 0;
  summary["halt_reason"] = result.halt_reason;
  ordered_json evals = ordered_json::array();
  for (const auto& e : result.evals) evals.push_back({{"step", e.step}, {"oa", e.oa}});
  summary["evals"] = evals;
  summary["reached_target"] = result.reached_target;
  write_text(ctx.output("summary.json"), summary.dump(2) + "\n");

  ctx.out << "trained " << trainer->config().name << " (" << summary["normalizer"].get<std::string>() << ") for "
          << trainer->completed_steps() << " steps";
  if (!result.records.empty()) ctx.out << ", last loss " << fmt(result.records.back().loss);
  if (result.nan_halted) ctx.out << ", halted: " << result.halt_reason;
  if (!result.evals.empty()) ctx.out << ", held-out OA " << fmt(result.evals.back().oa, 4);
  ctx.out << "\n";
  return 0;
}

int run_eval(const EvalArgs& args, Context& ctx) {
  model::Checkpoint ck = model::load_checkpoint(args.ckpt);
  train::DatasetSpec data = train::DatasetSpec::from_json(ck.meta.dataset_json);
  if (args.seed >= 0) data.seed = static_cast<std::uint64_t>(args.seed);
  ctx.manifest.seed = data.seed;
  const auto dataset = train::make_dataset(data);
  const double oa = train::evaluate(ck.config, ck.params, dataset, args.samples, args.threads);
  ordered_json j;
  j["checkpoint"] = args.ckpt;
  j["step"] = ck.meta.step;
  j["samples"] = args.samples;
  j["dataset"] = ordered_json::parse(data.to_json());
  j["oa"] = oa;
  write_text(ctx.output("eval.json"), j.dump(2) + "\n");
  ctx.out << "OA " << fmt(oa, 6) << " on " << args.samples << " held-out samples\n";
  return 0;
}

int run_inspect(const InspectArgs& args, Context& ctx) {
  model::Checkpoint ck = model::load_checkpoint(args.ckpt);
  const train::DatasetSpec data = train::DatasetSpec::from_json(ck.meta.dataset_json);
  ctx.manifest.seed = data.seed;
  train::Split split;
  if (args.split == "test") {
    split = train::Split::test;
  } else if (args.split == "train") {
    split = train::Split::train;
  } else {
    throw UsageError("--split must be train or test");
  }
  const train::Sample sample = train::make_dataset(data).sample(split, args.index);
  ad::Tape tape(false);
  std::vector<model::BlockTrace> traces;
  const RealTensor logits =
      model::forward_logits(tape, ck.params, ck.config, tape.constant(sample.image), &traces).value();

  ordered_json files = ordered_json::array();
  auto dump = [&](const std::string& name, const RealTensor& t) {
    write_fctt(ctx.output(name), t);
    files.push_back({{"file", name}, {"shape", t.shape()}});
  };
  dump("image.fctt", sample.image);
  dump("logits.fctt", logits);
  for (const auto& tr : traces) {
    dump(tr.prefix + "attn_r.fctt", tr.maps.attn_r);
    dump(tr.prefix + "attn_i.fctt", tr.maps.attn_i);
    dump(tr.prefix + "alpha.fctt", tr.alpha);
  }
  ordered_json j;
  j["checkpoint"] = args.ckpt;
  j["split"] = args.split;
  j["index"] = args.index;
  j["label"] = sample.label;
  j["files"] = files;
  write_text(ctx.output("inspect.json"), j.dump(2) + "\n");
  ctx.out << "wrote " << files.size() << " tensors for " << traces.size() << " blocks\n";
  return 0;
}

int run_probe(const ProbeArgs& args, Context& ctx) {
  ctx.manifest.seed = args.seed;
  const auto sizes = parse_sizes(args.sizes);
  std::ostringstream csv;
  csv << "n,lhs_norm,rhs_norm,abs_discrepancy,rel_discrepancy\n";
  for (std::size_t n : sizes) {
    if (n > 16) throw UsageError("probe sizes are limited to 16");
    Rng rng = Rng(args.seed).fork(n);
    const auto r = attention::associativity_probe(rng.normal_tensor({n, n}));
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g", r.n, r.lhs_norm, r.rhs_norm, r.abs_discrepancy,
                  r.rel_discrepancy);
    csv << buf << '\n';
    ctx.out << "n=" << n << " relative discrepancy " << fmt(r.rel_discrepancy) << '\n';
  }
  write_text(ctx.output("associativity.csv"), csv.str());
  return 0;
}

}  // namespace fct::cli
