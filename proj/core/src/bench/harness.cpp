#include "fct/bench/harness.hpp"

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

#include "fct/attention/self_attention.hpp"
#include "fct/core/parallel.hpp"
#include "fct/core/rng.hpp"
#include "fct/spectral/dft.hpp"

namespace fct::bench {
namespace {

// Pins the calling thread to the CPU it is running on and restores the
// previous mask on destruction.
class ScopedPin {
 public:
  explicit ScopedPin(bool enabled) {
    if (!enabled) return;
    if (pthread_getaffinity_np(pthread_self(), sizeof(saved_), &saved_) != 0) return;
    const int cpu = sched_getcpu();
    if (cpu < 0) return;
    cpu_set_t one;
    CPU_ZERO(&one);
    CPU_SET(cpu, &one);
    active_ = pthread_setaffinity_np(pthread_self(), sizeof(one), &one) == 0;
  }
  ~ScopedPin() {
    if (active_) pthread_setaffinity_np(pthread_self(), sizeof(saved_), &saved_);
  }
  ScopedPin(const ScopedPin&) = delete;
  ScopedPin& operator=(const ScopedPin&) = delete;

 private:
  cpu_set_t saved_{};
  bool active_ = false;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::size_t estimate_peak_bytes(Mechanism m, std::size_t n, std::size_t c) {
  constexpr std::size_t w = sizeof(double);
  if (m == Mechanism::sa) {
    // x, q, k, v, output (n x c each); logits and attention map (n x n); weights.
    return w * (5 * n * c + 2 * n * n + 3 * c * c);
  }
  const std::size_t l = spectral::half_length(n);
  // x and output (c x n); spectra, q/k/v planes and products (c x L each, 10);
  // logits, normalised and fused maps for both planes (L x L, 6); weights, alpha.
  return w * (2 * c * n + 10 * c * l + 6 * l * l + 3 * c * c + l);
}

std::vector<BenchRecord> run_bench(const BenchOptions& options,
                                   const std::function<void(const BenchRecord&)>& on_record) {
  if (configured_threads(1) > 1) {
    throw std::runtime_error("bench runs single-threaded; unset FCT_THREADS or set it to 1");
  }
  if (options.trials == 0) throw std::invalid_argument("bench: trials must be positive");
  ScopedPin pin(options.pin);
  std::vector<BenchRecord> out;
  for (std::size_t n : options.sizes) {
    for (Mechanism mech : options.mechanisms) {
      BenchRecord r;
      r.mechanism = to_string(mech);
      r.n = n;
      r.c = options.c;
      r.trials = options.trials;
      r.bytes_peak = estimate_peak_bytes(mech, n, options.c);
      if (mech == Mechanism::csa && (!spectral::is_power_of_two(n) || n < 2)) {
        r.trials = 0;
        r.status = "skipped: csa needs a power-of-two length";
      } else if (r.bytes_peak > options.memory_budget) {
        r.trials = 0;
        r.status = "skipped: estimated " + std::to_string(r.bytes_peak) + " bytes exceeds budget " +
                   std::to_string(options.memory_budget);
      }
      if (r.trials == 0) {
        out.push_back(r);
        if (on_record) on_record(r);
        continue;
      }
      r.analytic_flops = analytic_cost(mech, n, options.c);

      Rng rng = Rng(options.seed).fork(n);
      const double sd = 1.0 / std::sqrt(static_cast<double>(options.c));
      const RealTensor wq = rng.normal_tensor({options.c, options.c}, sd);
      const RealTensor wk = rng.normal_tensor({options.c, options.c}, sd);
      const RealTensor wv = rng.normal_tensor({options.c, options.c}, sd);
      std::function<void()> body;
      RealTensor x;
      attention::CsaWeights weights;
      attention::CsaOptions csa_options;
      if (mech == Mechanism::sa) {
        x = rng.normal_tensor({n, options.c});
        body = [&] { (void)attention::naive_sa(x, wq, wk, wv); };
      } else {
        x = rng.normal_tensor({options.c, n});
        weights = {wq, wk, wv, RealTensor::filled({spectral::half_length(n)}, 0.5)};
        csa_options.normalizer = options.csa_normalizer;
        body = [&] { (void)attention::csa(x, weights, csa_options); };
      }
      for (std::size_t i = 0; i < options.warmups; ++i) body();
      std::vector<double> times;
      times.reserve(options.trials);
      for (std::size_t i = 0; i < options.trials; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        times.push_back(std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count());
      }
      r.measured_ns = median(std::move(times));
      out.push_back(r);
      if (on_record) on_record(r);
    }
  }
  return out;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kBenchHeader << '\n';
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.0f,%.0f,%zu,%zu,", r.analytic_flops, r.measured_ns, r.bytes_peak, r.trials);
    out << r.mechanism << ',' << r.n << ',' << r.c << ',' << buf << r.status << '\n';
  }
}

std::optional<std::size_t> crossover(const std::vector<BenchRecord>& records) {
  std::map<std::size_t, std::pair<double, double>> by_n;  // n -> (sa, csa)
  for (const auto& r : records) {
    if (r.status != "ok") continue;
    auto& slot = by_n.try_emplace(r.n, -1.0, -1.0).first->second;
    (r.mechanism == "sa" ? slot.first : slot.second) = r.measured_ns;
  }
  std::optional<std::size_t> n0;
  for (auto it = by_n.rbegin(); it != by_n.rend(); ++it) {
    const auto [sa, csa] = it->second;
    if (sa < 0.0 || csa < 0.0) continue;
    if (csa < sa) {
      n0 = it->first;
    } else {
      break;
    }
  }
  return n0;
}

std::optional<double> measured_ratio(const std::vector<BenchRecord>& records, std::size_t n) {
  double sa = -1.0, csa = -1.0;
  for (const auto& r : records) {
    if (r.n != n || r.status != "ok") continue;
    (r.mechanism == "sa" ? sa : csa) = r.measured_ns;
  }
  if (sa <= 0.0 || csa < 0.0) return std::nullopt;
  return csa / sa;
}

}  // namespace fct::bench
