#include "dnas/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dnas {

using nlohmann::json;

LossMode loss_mode_from_name(const std::string& s) {
  if (s == "latency") return LossMode::kLatency;
  if (s == "quant_size") return LossMode::kQuantSize;
  if (s == "quant_flop") return LossMode::kQuantFlop;
  fail("unknown loss mode '" + s + "' (expected latency, quant_size or quant_flop)");
}

std::string loss_mode_name(LossMode m) {
  switch (m) {
    case LossMode::kLatency: return "latency";
    case LossMode::kQuantSize: return "quant_size";
    case LossMode::kQuantFlop: return "quant_flop";
  }
  fail("loss_mode_name: bad enum");
}

int SearchConfig::effective_warmup() const {
  if (warmup >= 0) return warmup;
  return static_cast<int>(std::ceil(0.1 * epochs));
}

std::vector<std::string> SearchConfig::validate() const {
  std::vector<std::string> errs;
  if (epochs < 1) errs.push_back("epochs must be >= 1");
  if (epochs >= 1 && (effective_warmup() < 0 || effective_warmup() >= epochs))
    errs.push_back("warmup must satisfy 0 <= warmup < epochs");
  if (t0 <= 0.0) errs.push_back("t0 must be > 0");
  if (eta < 0.0) errs.push_back("eta must be >= 0");
  if (w_lr <= 0.0) errs.push_back("w_lr must be > 0");
  if (w_momentum < 0.0 || w_momentum >= 1.0) errs.push_back("w_momentum must be in [0,1)");
  if (theta_lr <= 0.0) errs.push_back("theta_lr must be > 0");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0) errs.push_back("adam_beta1 must be in [0,1)");
  if (adam_beta2 < 0.0 || adam_beta2 >= 1.0) errs.push_back("adam_beta2 must be in [0,1)");
  if (adam_eps <= 0.0) errs.push_back("adam_eps must be > 0");
  if (batch_size < 1) errs.push_back("batch_size must be >= 1");
  if (samples_to_draw < 0) errs.push_back("samples_to_draw must be >= 0");
  if (finalize_epochs < 0) errs.push_back("finalize_epochs must be >= 0");
  if (checkpoint_every < 0) errs.push_back("checkpoint_every must be >= 0");
  if (loss.alpha <= 0.0) errs.push_back("loss.alpha must be > 0");
  if (loss.beta < 0.0) errs.push_back("loss.beta must be >= 0");
  if (loss.gamma < 0.0) errs.push_back("loss.gamma must be >= 0");
  return errs;
}

double temperature(int epoch, double t0, double eta) {
  if (epoch < 0) fail("temperature: epoch must be >= 0");
  return t0 * std::exp(-eta * static_cast<double>(epoch));
}

Tensor latency_loss(const Tensor& ce, const Tensor& lat_us, double alpha, double beta) {
  if (lat_us.value() <= 1.0)
    fail("latency_loss: latency must exceed 1 microsecond, got " + std::to_string(lat_us.value()));
  return mul(ce, scale(pow_const(log_op(lat_us), beta), alpha));
}

double latency_loss_value(double ce, double lat_us, double alpha, double beta) {
  if (lat_us <= 1.0)
    fail("latency_loss: latency must exceed 1 microsecond, got " + std::to_string(lat_us));
  return ce * alpha * std::pow(std::log(lat_us), beta);
}

Tensor quant_loss(const Tensor& ce, const Tensor& cost, double beta, double gamma) {
  if (cost.value() <= 1.0)
    fail("quant_loss: cost must be > 1, got " + std::to_string(cost.value()));
  return mul(ce, scale(pow_const(log_op(cost), gamma), beta));
}

double quant_loss_value(double ce, double cost, double beta, double gamma) {
  if (cost <= 1.0) fail("quant_loss: cost must be > 1, got " + std::to_string(cost));
  return ce * beta * std::pow(std::log(cost), gamma);
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::string out = "epoch,tau,ce,expected_cost,loss\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.tau, r.ce,
                  r.expected_cost, r.loss);
    out += buf;
  }
  return out;
}

std::vector<TraceRow> trace_from_csv(const std::string& text) {
  std::vector<TraceRow> rows;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    TraceRow r;
    if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg,%lg", &r.epoch, &r.tau, &r.ce, &r.expected_cost,
                    &r.loss) != 5)
      fail("trace_from_csv: malformed line '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

int worker_threads() {
  const char* env = std::getenv("DNASFORGE_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

// ---- cost context ----

namespace {

struct CostContext {
  LossSpec spec;
  std::vector<std::vector<double>> coeffs;  // per searchable layer
  double fixed_const = 0.0;                 // latency of fixed layers (latency mode)
  double resolved_beta = 0.0;               // quant modes: auto-calibrated

  Tensor cost_tensor(const MaskVector& masks) const {
    Tensor c = cost::expected_cost(masks.per_layer, coeffs);
    return fixed_const != 0.0 ? add_const(c, fixed_const) : c;
  }

  double cost_value(const std::vector<std::vector<double>>& probs) const {
    double s = fixed_const;
    for (std::size_t l = 0; l < coeffs.size(); ++l)
      for (std::size_t i = 0; i < coeffs[l].size(); ++i) s += probs[l][i] * coeffs[l][i];
    return s;
  }

  Tensor loss_tensor(const Tensor& ce, const Tensor& c) const {
    if (spec.mode == LossMode::kLatency) return latency_loss(ce, c, spec.alpha, spec.beta);
    return quant_loss(ce, c, resolved_beta, spec.gamma);
  }

  double loss_value(double ce, double c) const {
    if (spec.mode == LossMode::kLatency) return latency_loss_value(ce, c, spec.alpha, spec.beta);
    return quant_loss_value(ce, c, resolved_beta, spec.gamma);
  }
};

CostContext build_cost_context(const SuperNet& net, const LossSpec& spec,
                               const cost::LatencyTable* lut) {
  CostContext cc;
  cc.spec = spec;
  if (spec.mode == LossMode::kLatency) {
    if (!lut) fail("run_dnas: latency loss needs a latency table");
    for (const auto& keys : net.searchable_keys()) {
      std::vector<double> c;
      c.reserve(keys.size());
      for (const auto& k : keys) c.push_back(lut->lookup(k));
      cc.coeffs.push_back(std::move(c));
    }
    for (const auto& k : net.fixed_keys()) cc.fixed_const += lut->lookup(k);
  } else {
    const auto edges = net.searchable_edge_costs();
    cc.coeffs = spec.mode == LossMode::kQuantSize ? cost::size_cost_coeffs(edges)
                                                  : cost::flop_cost_coeffs(edges);
    // beta := (ln Cost(theta_init))^-gamma, so the cost factor starts near 1.
    double c0 = 0.0;
    for (const auto& c : cc.coeffs) {
      double m = 0.0;
      for (double v : c) m += v;
      c0 += m / static_cast<double>(c.size());
    }
    if (c0 <= 1.0)
      fail("run_dnas: initial expected cost " + std::to_string(c0) +
           " must be > 1 for the log-cost loss");
    cc.resolved_beta = 1.0 / std::pow(std::log(c0), spec.gamma);
  }
  return cc;
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
  return idx;
}

void train_epoch(SuperNet& net, const Dataset& data, const SearchConfig& cfg,
                 const CostContext& cc, double tau, Rng& rng, bool weight_phase,
                 SgdMomentum& wopt, Adam& thopt, int epoch) {
  const auto idx = shuffled_indices(data.n(), rng);
  for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t count =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), idx.size() - at);
    Batch b = make_batch(data, idx, at, count);
    TapeScope scope;
    auto fwd = net.forward_soft(b.x, tau, rng, Mode::kTrain);
    Tensor ce = softmax_cross_entropy(fwd.logits, b.labels);
    Tensor c = cc.cost_tensor(fwd.masks);
    Tensor loss = cc.loss_tensor(ce, c);
    if (!loss.all_finite() || !ce.all_finite())
      fail("run_dnas: non-finite loss in epoch " + std::to_string(epoch));
    wopt.zero_grad();
    thopt.zero_grad();
    scope.backward(loss);
    if (weight_phase)
      wopt.step();
    else
      thopt.step();
  }
}

TraceRow eval_trace_row(SuperNet& net, const Dataset& data, const SearchConfig& cfg,
                        const CostContext& cc, int epoch, double tau) {
  NoGradScope ng;
  MaskVector pm = net.expectation_masks();
  double ce_sum = 0.0;
  int seen = 0;
  std::vector<int> idx(static_cast<std::size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i) idx[static_cast<std::size_t>(i)] = i;
  for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t count =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), idx.size() - at);
    Batch b = make_batch(data, idx, at, count);
    Tensor logits = net.forward_with_masks(b.x, pm, Mode::kEval);
    Tensor ce = softmax_cross_entropy(logits, b.labels);
    ce_sum += ce.value() * static_cast<double>(count);
    seen += static_cast<int>(count);
  }
  const double ce = ce_sum / static_cast<double>(seen);
  std::vector<std::vector<double>> probs;
  for (const auto& t : net.thetas()) probs.push_back(theta_probs(t));
  const double c = cc.cost_value(probs);
  return {epoch, tau, ce, c, cc.loss_value(ce, c)};
}

}  // namespace

ArchitectureSample identity_arch(const SuperNet& net) {
  ArchitectureSample a;
  for (const auto& l : net.layers) {
    a.indices.push_back(0);
    a.keys.push_back(l.candidates[0].key);
  }
  return a;
}

ArchitectureSample arch_from_choices(const SuperNet& net, const std::vector<int>& choices) {
  ArchitectureSample a;
  std::size_t ci = 0;
  for (const auto& l : net.layers) {
    int idx = 0;
    if (l.searchable()) {
      if (ci >= choices.size()) fail("arch_from_choices: not enough choices");
      idx = choices[ci++];
      if (idx < 0 || idx >= static_cast<int>(l.candidates.size()))
        fail("arch_from_choices: choice out of range at layer '" + l.name + "'");
    }
    a.indices.push_back(idx);
    a.keys.push_back(l.candidates[static_cast<std::size_t>(idx)].key);
  }
  if (ci != choices.size()) fail("arch_from_choices: too many choices");
  return a;
}

EvalMetrics evaluate_arch(SuperNet& net, const ArchitectureSample& arch, const Dataset& data,
                          int batch_size) {
  NoGradScope ng;
  double ce_sum = 0.0;
  int correct = 0, seen = 0;
  std::vector<int> idx(static_cast<std::size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i) idx[static_cast<std::size_t>(i)] = i;
  for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t count =
        std::min<std::size_t>(static_cast<std::size_t>(batch_size), idx.size() - at);
    Batch b = make_batch(data, idx, at, count);
    Tensor logits = net.forward_hard(arch, b.x, Mode::kEval);
    Tensor ce = softmax_cross_entropy(logits, b.labels);
    ce_sum += ce.value() * static_cast<double>(count);
    const int C = logits.dim(1);
    for (std::size_t r = 0; r < count; ++r) {
      int best = 0;
      for (int c = 1; c < C; ++c)
        if (logits.data()[r * static_cast<std::size_t>(C) + c] >
            logits.data()[r * static_cast<std::size_t>(C) + best])
          best = c;
      if (best == b.labels[r]) ++correct;
      ++seen;
    }
  }
  return {static_cast<double>(correct) / static_cast<double>(seen),
          ce_sum / static_cast<double>(seen)};
}

void train_subnet(SuperNet& subnet, const Dataset& train, int epochs, double lr, double momentum,
                  int batch_size, Rng& rng) {
  SgdMomentum opt(subnet.weight_params(), lr, momentum);
  const ArchitectureSample ident = identity_arch(subnet);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto idx = shuffled_indices(train.n(), rng);
    for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(batch_size)) {
      const std::size_t count =
          std::min<std::size_t>(static_cast<std::size_t>(batch_size), idx.size() - at);
      Batch b = make_batch(train, idx, at, count);
      TapeScope scope;
      Tensor logits = subnet.forward_hard(ident, b.x, Mode::kTrain);
      Tensor ce = softmax_cross_entropy(logits, b.labels);
      if (!ce.all_finite()) fail("train_subnet: non-finite loss in epoch " + std::to_string(epoch));
      opt.zero_grad();
      scope.backward(ce);
      opt.step();
    }
  }
}

std::vector<ScoredSample> finalize(const SuperNet& net,
                                   const std::vector<ArchitectureSample>& samples,
                                   const Dataset& train, const Dataset& eval_data,
                                   const SearchConfig& cfg, const cost::LatencyTable* lut) {
  // dedup by key sequence, first occurrence wins
  std::vector<ArchitectureSample> unique;
  {
    std::vector<std::string> seen;
    for (const auto& s : samples) {
      const std::string sig = s.signature();
      if (std::find(seen.begin(), seen.end(), sig) == seen.end()) {
        seen.push_back(sig);
        unique.push_back(s);
      }
    }
  }

  const auto edges = net.searchable_edge_costs();
  const auto searchable_ids = net.searchable_layer_ids();

  std::vector<SuperNet> subnets;
  subnets.reserve(unique.size());
  for (const auto& s : unique) subnets.push_back(net.subnet_of(s));

  std::vector<ScoredSample> scored(unique.size());
  auto run_one = [&](std::size_t i) {
    Rng rng(mix_seed(cfg.seed, i));
    subnets[i].init_weights(rng);
    if (cfg.finalize_epochs > 0)
      train_subnet(subnets[i], train, cfg.finalize_epochs, cfg.w_lr, cfg.w_momentum,
                   cfg.batch_size, rng);
    ScoredSample out;
    out.arch = unique[i];
    out.accuracy =
        evaluate_arch(subnets[i], identity_arch(subnets[i]), eval_data, cfg.batch_size).accuracy;
    if (lut) out.latency_us = cost::net_latency(net.arch_keys(unique[i]), *lut);
    std::vector<int> sel;
    for (int lid : searchable_ids) sel.push_back(unique[i].indices[static_cast<std::size_t>(lid)]);
    out.size_cost_bits = cost::quant_size_cost_hard(sel, edges);
    out.flop_cost = cost::quant_flop_cost_hard(sel, edges);
    scored[i] = std::move(out);
  };

  const int threads = std::min<int>(worker_threads(), static_cast<int>(unique.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < unique.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= unique.size()) break;
          run_one(i);
        }
      });
    for (auto& th : pool) th.join();
  }
  return scored;
}

// ---- checkpointing ----

namespace {

json params_to_json(const std::vector<ParamRef>& params) {
  json j = json::object();
  for (const auto& p : params) j[p.name] = p.tensor.data();
  return j;
}

json buffers_to_json(const std::vector<BufferRef>& buffers) {
  json j = json::object();
  for (const auto& b : buffers) j[b.name] = *b.data;
  return j;
}

void params_from_json(const json& j, const std::vector<ParamRef>& params, const char* what) {
  if (j.size() != params.size())
    fail("checkpoint: expected " + std::to_string(params.size()) + " " + what + ", found " +
         std::to_string(j.size()));
  for (const auto& p : params) {
    if (!j.contains(p.name)) fail("checkpoint: missing " + std::string(what) + " '" + p.name + "'");
    auto v = j.at(p.name).get<std::vector<double>>();
    if (v.size() != p.tensor.data().size())
      fail("checkpoint: size mismatch for '" + p.name + "'");
    p.tensor.impl()->data = std::move(v);
  }
}

json state_arrays_to_json(const std::vector<std::vector<double>>& arrays) {
  json j = json::array();
  for (const auto& a : arrays) j.push_back(a);
  return j;
}

void state_arrays_from_json(const json& j, std::vector<std::vector<double>>& arrays,
                            const char* what) {
  if (j.size() != arrays.size()) fail("checkpoint: optimizer state count mismatch for " +
                                      std::string(what));
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    auto v = j.at(i).get<std::vector<double>>();
    if (v.size() != arrays[i].size())
      fail("checkpoint: optimizer state size mismatch for " + std::string(what));
    arrays[i] = std::move(v);
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail("cannot write '" + tmp + "'");
    f << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    fail("cannot rename '" + tmp + "' to '" + path + "'");
}

json trace_to_json(const std::vector<TraceRow>& trace) {
  json j = json::array();
  for (const auto& r : trace) j.push_back({r.epoch, r.tau, r.ce, r.expected_cost, r.loss});
  return j;
}

std::vector<TraceRow> trace_from_json(const json& j) {
  std::vector<TraceRow> t;
  for (const auto& r : j)
    t.push_back({r.at(0).get<int>(), r.at(1).get<double>(), r.at(2).get<double>(),
                 r.at(3).get<double>(), r.at(4).get<double>()});
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const SuperNet& net, int epoch, SgdMomentum& wopt,
                     Adam& thopt, const Rng& rng, const std::string& config_hash,
                     const std::vector<TraceRow>& trace) {
  json j;
  j["version"] = 1;
  j["epoch"] = epoch;
  j["config_hash"] = config_hash;
  j["rng_algorithm"] = Rng::kAlgorithm;
  j["rng_state"] = rng.save_state();
  j["space_hash"] = fnv1a_hex(net.space_signature);
  json thetas = json::array();
  for (const auto& t : net.thetas()) thetas.push_back(t.data());
  j["theta"] = std::move(thetas);
  j["params"] = params_to_json(net.weight_params());
  j["buffers"] = buffers_to_json(net.buffers());
  j["w_velocity"] = state_arrays_to_json(wopt.velocity());
  j["adam_m"] = state_arrays_to_json(thopt.m());
  j["adam_v"] = state_arrays_to_json(thopt.v());
  j["adam_t"] = thopt.t();
  j["trace"] = trace_to_json(trace);
  write_file_atomic(path, j.dump());
}

CheckpointMeta load_checkpoint(const std::string& path, SuperNet& net, SgdMomentum* wopt,
                               Adam* thopt, Rng* rng, const std::string& expected_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open checkpoint '" + path + "'");
  json j = json::parse(f);
  if (j.value("version", 0) != 1) fail("checkpoint: unsupported version");
  CheckpointMeta meta;
  meta.epoch = j.at("epoch").get<int>();
  meta.config_hash = j.at("config_hash").get<std::string>();
  if (!expected_hash.empty() && meta.config_hash != expected_hash)
    fail("checkpoint: config hash mismatch (checkpoint " + meta.config_hash + ", current " +
         expected_hash + ")");
  if (j.at("rng_algorithm").get<std::string>() != Rng::kAlgorithm)
    fail("checkpoint: rng algorithm mismatch");
  if (j.value("space_hash", "") != fnv1a_hex(net.space_signature))
    fail("checkpoint: search space mismatch");

  const json& th = j.at("theta");
  auto thetas = net.thetas();
  if (th.size() != thetas.size()) fail("checkpoint: theta layer count mismatch");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    auto v = th.at(i).get<std::vector<double>>();
    if (v.size() != thetas[i].data().size()) fail("checkpoint: theta size mismatch");
    thetas[i].impl()->data = std::move(v);
  }
  params_from_json(j.at("params"), net.weight_params(), "params");
  {
    const json& jb = j.at("buffers");
    auto buffers = net.buffers();
    if (jb.size() != buffers.size()) fail("checkpoint: buffer count mismatch");
    for (const auto& b : buffers) {
      if (!jb.contains(b.name)) fail("checkpoint: missing buffer '" + b.name + "'");
      auto v = jb.at(b.name).get<std::vector<double>>();
      if (v.size() != b.data->size()) fail("checkpoint: buffer size mismatch for '" + b.name + "'");
      *b.data = std::move(v);
    }
  }
  if (wopt) state_arrays_from_json(j.at("w_velocity"), wopt->velocity(), "w_velocity");
  if (thopt) {
    state_arrays_from_json(j.at("adam_m"), thopt->m(), "adam_m");
    state_arrays_from_json(j.at("adam_v"), thopt->v(), "adam_v");
    thopt->t() = j.at("adam_t").get<long>();
  }
  if (rng) rng->load_state(j.at("rng_state").get<std::string>());
  meta.trace = trace_from_json(j.at("trace"));
  return meta;
}

void save_weights(const std::string& path, const SuperNet& net) {
  json j;
  j["version"] = 1;
  j["space_hash"] = fnv1a_hex(net.space_signature);
  j["params"] = params_to_json(net.weight_params());
  j["buffers"] = buffers_to_json(net.buffers());
  write_file_atomic(path, j.dump());
}

void load_weights(const std::string& path, SuperNet& net) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open weights '" + path + "'");
  json j = json::parse(f);
  if (j.value("version", 0) != 1) fail("weights: unsupported version");
  params_from_json(j.at("params"), net.weight_params(), "params");
  const json& jb = j.at("buffers");
  auto buffers = net.buffers();
  if (jb.size() != buffers.size()) fail("weights: buffer count mismatch");
  for (const auto& b : buffers) {
    if (!jb.contains(b.name)) fail("weights: missing buffer '" + b.name + "'");
    auto v = jb.at(b.name).get<std::vector<double>>();
    if (v.size() != b.data->size()) fail("weights: buffer size mismatch for '" + b.name + "'");
    *b.data = std::move(v);
  }
}

// ---- run_dnas ----

SearchResult run_dnas(SuperNet& net, const SearchData& data, const SearchConfig& cfg,
                      const cost::LatencyTable* lut, const RunIo& io) {
  {
    const auto errs = cfg.validate();
    if (!errs.empty()) {
      std::string msg = "invalid search config:";
      for (const auto& e : errs) msg += "\n  - " + e;
      fail(msg);
    }
  }
  data.x_w.validate();
  data.x_theta.validate();
  data.x_eval.validate();

  CostContext cc = build_cost_context(net, cfg.loss, lut);
  Rng rng(cfg.seed);
  std::vector<TraceRow> trace;
  int start_epoch = 0;

  if (io.resume_from.empty()) {
    net.init_weights(rng);
    net.init_theta_uniform();
  }
  SgdMomentum wopt(net.weight_params(), cfg.w_lr, cfg.w_momentum);
  Adam thopt(net.thetas(), cfg.theta_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  if (!io.resume_from.empty()) {
    CheckpointMeta meta =
        load_checkpoint(io.resume_from, net, &wopt, &thopt, &rng, io.config_hash);
    start_epoch = meta.epoch + 1;
    trace = std::move(meta.trace);
    if (start_epoch >= cfg.epochs)
      fail("run_dnas: checkpoint epoch " + std::to_string(meta.epoch) +
           " is already past the last epoch");
  }

  const int warmup = cfg.effective_warmup();
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const double tau = temperature(epoch, cfg.t0, cfg.eta);
    train_epoch(net, data.x_w, cfg, cc, tau, rng, /*weight_phase=*/true, wopt, thopt, epoch);
    if (epoch > warmup)
      train_epoch(net, data.x_theta, cfg, cc, tau, rng, /*weight_phase=*/false, wopt, thopt,
                  epoch);
    trace.push_back(eval_trace_row(net, data.x_theta, cfg, cc, epoch, tau));
    if (!io.out_dir.empty() && cfg.checkpoint_every > 0 &&
        (epoch + 1) % cfg.checkpoint_every == 0)
      save_checkpoint(io.out_dir + "/ckpt_epoch_" + std::to_string(epoch) + ".json", net, epoch,
                      wopt, thopt, rng, io.config_hash, trace);
  }
  if (!io.out_dir.empty())
    save_checkpoint(io.out_dir + "/ckpt_final.json", net, cfg.epochs - 1, wopt, thopt, rng,
                    io.config_hash, trace);

  std::vector<ArchitectureSample> samples;
  for (int i = 0; i < cfg.samples_to_draw; ++i) samples.push_back(net.sample_arch(rng));
  ArchitectureSample am = net.argmax_arch();
  const std::string argmax_sig = am.signature();
  samples.push_back(std::move(am));
  for (auto& s : samples) s.seed = cfg.seed;

  SearchResult res;
  res.quant_beta = cc.resolved_beta;
  for (const auto& t : net.thetas()) res.theta.push_back(t.data());
  res.trace = std::move(trace);
  res.samples = finalize(net, samples, concat(data.x_w, data.x_theta), data.x_eval, cfg, lut);
  for (auto& s : res.samples) s.is_argmax = (s.arch.signature() == argmax_sig);
  return res;
}

std::string SearchResult::to_json() const {
  json j;
  j["theta"] = theta;
  j["quant_beta"] = quant_beta;
  j["trace"] = trace_to_json(trace);
  j["samples"] = json::array();
  for (const auto& s : samples) {
    json keys = json::array();
    for (const auto& k : s.arch.keys) keys.push_back(k.str());
    json e{{"indices", s.arch.indices},
           {"keys", keys},
           {"theta_snapshot", s.arch.theta_snapshot},
           {"seed", s.arch.seed},
           {"is_argmax", s.is_argmax},
           {"accuracy", s.accuracy},
           {"size_cost_bits", s.size_cost_bits},
           {"flop_cost", s.flop_cost}};
    if (s.latency_us) e["latency_us"] = *s.latency_us;
    j["samples"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace dnas
