#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fct/attention/normalizers.hpp"
#include "fct/bench/cost_model.hpp"

namespace fct::bench {

struct BenchRecord {
  std::string mechanism;
  std::size_t n = 0;
  std::size_t c = 0;
  double analytic_flops = 0.0;
  double measured_ns = 0.0;  // median over trials
  std::size_t bytes_peak = 0;
  std::size_t trials = 0;
  std::string status = "ok";  // "ok" or "skipped: <reason>"
};

inline constexpr const char* kBenchHeader = "mechanism,n,c,analytic_flops,measured_ns,bytes_peak,trials,status";

struct BenchOptions {
  std::vector<Mechanism> mechanisms{Mechanism::sa, Mechanism::csa};
  std::vector<std::size_t> sizes{256, 1024, 4096};
  std::size_t c = 16;
  std::size_t trials = 30;
  std::size_t warmups = 5;
  std::uint64_t seed = 0;
  // Sizes whose estimated working set exceeds this are skipped.
  std::size_t memory_budget = std::size_t{2} << 30;
  attention::Normalizer csa_normalizer = attention::Normalizer::logmax;
  bool pin = true;
};

// Live tensor bytes of one forward pass (every intermediate is kept).
std::size_t estimate_peak_bytes(Mechanism m, std::size_t n, std::size_t c);

// Times the forward pass of each mechanism at each size on the calling
// thread, pinned to its current CPU. Throws std::runtime_error when
// FCT_THREADS asks for more than one worker.
std::vector<BenchRecord> run_bench(const BenchOptions& options,
                                   const std::function<void(const BenchRecord&)>& on_record = {});

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records);

// Smallest tested n from which CSA is measured faster than SA at every
// larger tested size; nullopt when CSA never stays ahead.
std::optional<std::size_t> crossover(const std::vector<BenchRecord>& records);

// Measured CSA/SA time ratio at n, when both were measured.
std::optional<double> measured_ratio(const std::vector<BenchRecord>& records, std::size_t n);

}  // namespace fct::bench
