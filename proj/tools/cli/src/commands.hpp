#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fct_cli/manifest.hpp"

namespace fct::cli {

// Error raised for option values that parse but make no sense together.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  RunManifest& manifest;
  std::ostream& out;
  std::ostream& err;
  std::filesystem::path out_dir;

  // Path inside out_dir, recorded as a run output.
  std::filesystem::path output(const std::string& name) const;
};

struct GradcheckArgs {
  std::uint64_t seed = 7;
  double tol = 1e-5;
};

struct BenchArgs {
  std::string mechanisms = "sa,csa";
  std::string sizes = "256,1024,4096";
  std::size_t trials = 30;
  std::size_t warmups = 5;
  std::size_t channels = 16;
  std::uint64_t seed = 0;
  std::size_t budget_mb = 2048;
  std::string normalizer = "logmax";
  bool no_pin = false;
  std::string table2 = "tiny";
  std::string resolutions = "224,512";
  std::string csv_name = "bench.csv";
};

struct TrainArgs {
  std::string config = "desk";
  std::string normalizer = "logmax";
  long long steps = 1000;
  std::uint64_t seed = 0;
  long long data_seed = -1;
  std::size_t batch = 32;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double noise = 0.1;
  double input_scale = 1.0;
  std::size_t train_size = 1u << 20;
  std::size_t eval_every = 0;
  std::size_t eval_samples = 256;
  double target_oa = 0.0;
  double clip_norm = 0.0;
  std::size_t threads = 0;
  std::string arrangement;
  bool abs_pos = false;
  bool no_scale_pos = false;
  std::string resume;
};

struct EvalArgs {
  std::string ckpt;
  long long seed = -1;
  std::size_t samples = 1000;
  std::size_t threads = 0;
};

struct InspectArgs {
  std::string ckpt;
  std::size_t index = 0;
  std::string split = "test";
};

struct ProbeArgs {
  std::string sizes = "4,8";
  std::uint64_t seed = 0;
};

int run_gradcheck(const GradcheckArgs& args, Context& ctx);
int run_bench(const BenchArgs& args, Context& ctx);
int run_train(const TrainArgs& args, Context& ctx);
int run_eval(const EvalArgs& args, Context& ctx);
int run_inspect(const InspectArgs& args, Context& ctx);
int run_probe(const ProbeArgs& args, Context& ctx);

// "a,b,c" -> {"a","b","c"}; empty items are rejected.
std::vector<std::string> split_list(const std::string& text);
std::vector<std::size_t> parse_sizes(const std::string& text);

}  // namespace fct::cli
