#include "fct/autodiff/suite.hpp"

#include <cmath>
#include <functional>

#include "fct/attention/self_attention.hpp"
#include "fct/autodiff/ops.hpp"
#include "fct/core/rng.hpp"
#include "fct/model/fct.hpp"

namespace fct::ad {
namespace {

using Graph = std::function<Var(Tape&, const std::vector<Var>&)>;

// Scalar probe sum(out .* w) of a graph over its inputs.
double probe_value(const Graph& g, const std::vector<RealTensor>& inputs, const RealTensor& w) {
  Tape tape(false);
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return weighted_sum(g(tape, vars), w).value().item();
}

class SuiteBuilder {
 public:
  SuiteBuilder(std::uint64_t seed, double tol) : rng_(seed), tol_(tol) {}

  // Checks d probe / d inputs[i] for every input listed in `names`.
  void graph(const std::string& op, const Graph& g, const std::vector<RealTensor>& inputs,
             const std::vector<std::string>& names) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.input(t));
    Var out = g(tape, vars);
    const RealTensor w = rng_.normal_tensor(out.shape());
    tape.backward(weighted_sum(out, w));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (names[i].empty()) continue;
      ScalarFn f = [&, i](const RealTensor& p) {
        std::vector<RealTensor> in = inputs;
        in[i] = p;
        return probe_value(g, in, w);
      };
      push(op + "[" + names[i] + "]", finite_diff_check(f, inputs[i], tape.grad(vars[i]), tol_));
    }
  }

  // Checks a block-style graph with respect to its input and every parameter.
  void with_params(const std::string& op, const ParamStore& store, const RealTensor& x,
                   const std::function<Var(Tape&, const ParamStore&, Var)>& g) {
    Tape tape;
    Var xv = tape.input(x);
    Var out = g(tape, store, xv);
    const RealTensor w = rng_.normal_tensor(out.shape());
    tape.backward(weighted_sum(out, w));
    auto value_at = [&](const ParamStore& s, const RealTensor& input) {
      Tape t(false);
      return weighted_sum(g(t, s, t.constant(input)), w).value().item();
    };
    push(op + "[x]", finite_diff_check([&](const RealTensor& p) { return value_at(store, p); }, x, tape.grad(xv), tol_));
    for (const auto& name : store.names()) {
      const RealTensor analytic = tape.grad(tape.parameter(store, name));
      ParamStore probe = store;
      ScalarFn f = [&](const RealTensor& p) {
        probe.at(name).value = p;
        return value_at(probe, x);
      };
      push(op + "[" + name + "]", finite_diff_check(f, store.at(name).value, analytic, tol_));
    }
  }

  Rng& rng() { return rng_; }
  std::vector<SuiteEntry> take() { return std::move(entries_); }

 private:
  void push(std::string op, FdReport r) { entries_.push_back({std::move(op), std::move(r)}); }

  Rng rng_;
  double tol_;
  std::vector<SuiteEntry> entries_;
};

// Entries with magnitudes in [e, e^3] and random signs, where the logmax
// denominator is well away from zero.
RealTensor logmax_input(Rng& rng, const Shape& shape) {
  RealTensor t(shape);
  for (double& v : t.data()) {
    const double mag = std::exp(rng.uniform(1.0, 3.0));
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

}  // namespace

std::vector<SuiteEntry> gradient_suite(std::uint64_t seed, double rel_tol) {
  SuiteBuilder s(seed, rel_tol);
  Rng& rng = s.rng();
  auto normal = [&](Shape shape, double sd = 1.0) { return rng.normal_tensor(shape, sd); };
  const std::vector<std::string> ab{"a", "b"};

  s.graph("matmul", [](Tape&, const auto& v) { return matmul(v[0], v[1]); }, {normal({3, 4}), normal({4, 5})}, ab);
  s.graph("matmul_nt", [](Tape&, const auto& v) { return matmul_nt(v[0], v[1]); }, {normal({3, 4}), normal({5, 4})},
          ab);
  s.graph("matmul_tn", [](Tape&, const auto& v) { return matmul_tn(v[0], v[1]); }, {normal({4, 3}), normal({4, 5})},
          ab);
  s.graph("transpose", [](Tape&, const auto& v) { return transpose(v[0]); }, {normal({3, 5})}, {"x"});
  s.graph("add", [](Tape&, const auto& v) { return add(v[0], v[1]); }, {normal({3, 4}), normal({3, 4})}, ab);
  s.graph("sub", [](Tape&, const auto& v) { return sub(v[0], v[1]); }, {normal({3, 4}), normal({3, 4})}, ab);
  s.graph("mul", [](Tape&, const auto& v) { return mul(v[0], v[1]); }, {normal({3, 4}), normal({3, 4})}, ab);
  s.graph("scale", [](Tape&, const auto& v) { return scale(v[0], -1.7); }, {normal({3, 4})}, {"x"});
  s.graph("affine", [](Tape&, const auto& v) { return affine(v[0], v[1], v[2]); },
          {normal({3, 4}), normal({4, 5}), normal({5})}, {"x", "w", "b"});
  s.graph("mean_rows", [](Tape&, const auto& v) { return mean_rows(v[0]); }, {normal({5, 3})}, {"x"});
  s.graph("layer_norm", [](Tape&, const auto& v) { return layer_norm(v[0], v[1], v[2]); },
          {normal({4, 6}), normal({6}), normal({6})}, {"x", "gain", "bias"});
  s.graph("gelu", [](Tape&, const auto& v) { return gelu(v[0]); }, {normal({3, 5}, 2.0)}, {"x"});
  s.graph("softmax", [](Tape&, const auto& v) { return softmax_rows(v[0]); }, {normal({4, 5}, 2.0)}, {"x"});
  s.graph("logmax", [](Tape&, const auto& v) { return logmax_rows(v[0]); }, {logmax_input(rng, {4, 5})}, {"x"});
  s.graph("dft.re", [](Tape&, const auto& v) { return dft_rows(v[0]).first; }, {normal({3, 8})}, {"x"});
  s.graph("dft.im", [](Tape&, const auto& v) { return dft_rows(v[0]).second; }, {normal({3, 8})}, {"x"});
  s.graph("dft.im_length6", [](Tape&, const auto& v) { return dft_rows(v[0]).second; }, {normal({2, 6})}, {"x"});
  s.graph("idft", [](Tape&, const auto& v) { return synthesize_rows(v[0], v[1], 8); },
          {normal({3, 5}), normal({3, 5})}, {"re", "im"});
  s.graph("blend_columns", [](Tape&, const auto& v) { return blend_columns(v[0], v[1], v[2]); },
          {normal({4, 5}), normal({4, 5}), normal({5})}, {"a", "b", "alpha"});
  s.graph("pad_cols", [](Tape&, const auto& v) { return pad_cols(v[0], 8); }, {normal({3, 5})}, {"x"});
  s.graph("crop_cols", [](Tape&, const auto& v) { return crop_cols(v[0], 3); }, {normal({3, 5})}, {"x"});
  s.graph("patchify", [](Tape&, const auto& v) { return patchify(v[0], 4, 4, 2); }, {normal({16, 3})}, {"x"});
  s.graph("cross_entropy", [](Tape&, const auto& v) { return cross_entropy(v[0], 2); }, {normal({1, 5}, 2.0)},
          {"logits"});

  // Complex self-attention, C = 2 channels over a length-8 sequence.
  const std::size_t c = 2, n = 8, l = n / 2 + 1;
  s.graph(
      "csa",
      [](Tape&, const auto& v) { return attention::csa(v[0], v[1], v[2], v[3], v[4]); },
      {normal({c, n}, 2.0), normal({c, c}), normal({c, c}), normal({c, c}), rng.uniform_tensor({l}, 0.0, 1.0)},
      {"x", "wq", "wk", "wv", "alpha"});

  // One block of each kind on a 4 x 4 grid with 4 channels.
  for (model::BlockKind kind : {model::BlockKind::spatial, model::BlockKind::channel}) {
    ParamStore store;
    model::add_block_params(store, "", 4, 16, kind, 4, rng.next_u64());
    for (auto& [name, e] : store) {
      if (name == "csa.alpha") e.value = rng.uniform_tensor(e.value.shape(), 0.0, 1.0);
      if (name.size() > 2 && name.substr(name.size() - 2) == ".b") e.value = rng.normal_tensor(e.value.shape(), 0.1);
    }
    const model::BlockOptions options;
    s.with_params("block." + model::to_string(kind), store, normal({16, 4}),
                  [kind, options](Tape& t, const ParamStore& p, Var x) {
                    return model::fct_block_forward(t, p, "", x, kind, options);
                  });
  }
  return s.take();
}

}  // namespace fct::ad
