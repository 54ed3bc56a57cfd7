#include "dnas/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include <json.hpp>

namespace dnas {

using nlohmann::json;

// ---- CandidateBlock ----

Tensor CandidateBlock::forward(const Tensor& x, Mode mode) const {
  if (zero) return scale(x, 0.0);
  if (!body) return x;  // skip
  Tensor y = body->forward(x, mode);
  return residual ? add(y, x) : y;
}

Shape CandidateBlock::out_shape(const Shape& in) const {
  if (zero || !body) return in;
  Shape out = body->out_shape(in);
  if (residual && out != in)
    fail("CandidateBlock '" + key.str() + "': residual add needs matching shapes, got " +
         shape_str(in) + " -> " + shape_str(out));
  return out;
}

CandidateBlock CandidateBlock::clone() const {
  CandidateBlock c;
  c.key = key;
  c.body = body ? body->clone() : nullptr;
  c.residual = residual;
  c.zero = zero;
  c.sublayers = sublayers;
  c.edge_cost = edge_cost;
  return c;
}

std::int64_t CandidateBlock::param_elements() const {
  if (!body) return 0;
  std::vector<ParamRef> ps;
  body->collect_params("", ps);
  std::int64_t n = 0;
  for (const auto& p : ps) n += p.tensor.numel();
  return n;
}

// ---- ArchitectureSample ----

std::string ArchitectureSample::signature() const {
  std::string s;
  for (const auto& k : keys) {
    s += k.str();
    s += ';';
  }
  return s;
}

std::string ArchitectureSample::to_json() const {
  json j;
  j["layers"] = json::array();
  for (std::size_t i = 0; i < indices.size(); ++i)
    j["layers"].push_back({{"index", indices[i]}, {"key", keys[i].str()}});
  j["theta_snapshot"] = theta_snapshot;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

ArchitectureSample ArchitectureSample::from_json(const std::string& text) {
  json j = json::parse(text);
  ArchitectureSample a;
  for (const auto& l : j.at("layers")) {
    a.indices.push_back(l.at("index").get<int>());
    cost::BlockKey k;
    k.block_type = l.at("key").get<std::string>();  // opaque round-trip; str() not re-derived
    a.keys.push_back(k);
  }
  a.theta_snapshot = j.value("theta_snapshot", "");
  a.seed = j.value("seed", std::uint64_t{0});
  return a;
}

// ---- mask math ----

std::vector<double> softmax_probs(const std::vector<double>& logits) {
  if (logits.empty()) fail("softmax_probs: empty logits");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

std::vector<double> theta_probs(const Tensor& theta) {
  for (double v : theta.data())
    if (!std::isfinite(v)) fail("theta_probs: non-finite logit");
  return softmax_probs(theta.data());
}

Tensor gumbel_soft_mask(const Tensor& theta, double tau, Rng& rng) {
  std::vector<double> g(static_cast<std::size_t>(theta.numel()));
  for (auto& v : g) v = rng.gumbel();
  return gumbel_soft_mask(theta, tau, g);
}

Tensor gumbel_soft_mask(const Tensor& theta, double tau, const std::vector<double>& noise) {
  if (tau <= 0.0) fail("gumbel_soft_mask: temperature must be > 0, got " + std::to_string(tau));
  if (noise.size() != static_cast<std::size_t>(theta.numel()))
    fail("gumbel_soft_mask: noise size mismatch");
  return softmax1d(scale(add_const_vec(theta, noise), 1.0 / tau));
}

// ---- SuperNet ----

int SuperNet::searchable_count() const {
  int n = 0;
  for (const auto& l : layers) n += l.searchable() ? 1 : 0;
  return n;
}

std::vector<int> SuperNet::searchable_layer_ids() const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].searchable()) ids.push_back(static_cast<int>(i));
  return ids;
}

double SuperNet::log10_space_size() const {
  double s = 0.0;
  for (const auto& l : layers)
    if (l.searchable()) s += std::log10(static_cast<double>(l.candidates.size()));
  return s;
}

void SuperNet::validate_shapes() const {
  Shape s{1, in_channels, input_res, input_res};
  for (const auto& l : layers) {
    if (l.candidates.empty()) fail("SuperNet: layer '" + l.name + "' has no candidates");
    if (l.searchable() && l.theta.numel() != static_cast<std::int64_t>(l.candidates.size()))
      fail("SuperNet: layer '" + l.name + "' theta length " + std::to_string(l.theta.numel()) +
           " != " + std::to_string(l.candidates.size()) + " candidates");
    Shape out = l.candidates[0].out_shape(s);
    for (std::size_t i = 1; i < l.candidates.size(); ++i) {
      Shape oi = l.candidates[i].out_shape(s);
      if (oi != out)
        fail("SuperNet: layer '" + l.name + "' candidate " + std::to_string(i) + " maps " +
             shape_str(s) + " to " + shape_str(oi) + ", expected " + shape_str(out));
    }
    s = out;
  }
  if (s != Shape{1, class_count})
    fail("SuperNet: network maps input to " + shape_str(s) + ", expected [1," +
         std::to_string(class_count) + "]");
}

void SuperNet::init_weights(Rng& rng) {
  for (auto& l : layers)
    for (auto& c : l.candidates)
      if (c.body) c.body->init_weights(rng);
}

void SuperNet::init_theta_uniform() {
  for (auto& l : layers)
    if (l.searchable())
      std::fill(l.theta.mutable_data().begin(), l.theta.mutable_data().end(), 0.0);
}

std::vector<ParamRef> SuperNet::weight_params() const {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    for (std::size_t c = 0; c < layers[i].candidates.size(); ++c)
      if (layers[i].candidates[c].body)
        layers[i].candidates[c].body->collect_params(
            "L" + std::to_string(i) + ".c" + std::to_string(c) + ".", out);
  return out;
}

std::vector<BufferRef> SuperNet::buffers() const {
  std::vector<BufferRef> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    for (std::size_t c = 0; c < layers[i].candidates.size(); ++c)
      if (layers[i].candidates[c].body)
        layers[i].candidates[c].body->collect_buffers(
            "L" + std::to_string(i) + ".c" + std::to_string(c) + ".", out);
  return out;
}

std::vector<Tensor> SuperNet::thetas() const {
  std::vector<Tensor> out;
  for (const auto& l : layers)
    if (l.searchable()) out.push_back(l.theta);
  return out;
}

std::string SuperNet::theta_hash() const {
  // FNV-1a over the raw bytes of every theta value.
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : thetas())
    for (double v : t.data()) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, sizeof(bits));
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 1099511628211ULL;
      }
    }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

ForwardSoftResult SuperNet::forward_soft(const Tensor& x, double tau, Rng& rng, Mode mode) {
  MaskVector masks;
  for (auto& l : layers)
    if (l.searchable()) masks.per_layer.push_back(gumbel_soft_mask(l.theta, tau, rng));
  Tensor logits = forward_with_masks(x, masks, mode);
  return {logits, std::move(masks)};
}

Tensor SuperNet::forward_with_masks(const Tensor& x, const MaskVector& masks, Mode mode) {
  if (x.rank() != 4 || x.dim(1) != in_channels)
    fail("SuperNet: expected input [B," + std::to_string(in_channels) + ",H,W], got " +
         shape_str(x.shape()));
  Tensor h = x;
  std::size_t mi = 0;
  for (auto& l : layers) {
    if (!l.searchable()) {
      h = l.candidates[0].forward(h, mode);
      continue;
    }
    if (mi >= masks.per_layer.size())
      fail("SuperNet: " + std::to_string(masks.per_layer.size()) +
           " masks for more searchable layers");
    const Tensor& m = masks.per_layer[mi++];
    if (m.numel() != static_cast<std::int64_t>(l.candidates.size()))
      fail("SuperNet: mask size " + std::to_string(m.numel()) + " != candidate count " +
           std::to_string(l.candidates.size()) + " at layer '" + l.name + "'");
    std::vector<Tensor> parts;
    parts.reserve(l.candidates.size());
    for (auto& c : l.candidates) parts.push_back(c.forward(h, mode));
    h = weighted_sum(m, parts);
  }
  if (mi != masks.per_layer.size())
    fail("SuperNet: got " + std::to_string(masks.per_layer.size()) + " masks, consumed " +
         std::to_string(mi));
  return h;
}

Tensor SuperNet::forward_hard(const ArchitectureSample& arch, const Tensor& x, Mode mode) {
  if (arch.indices.size() != layers.size())
    fail("forward_hard: architecture has " + std::to_string(arch.indices.size()) +
         " layers, supernet has " + std::to_string(layers.size()));
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const int idx = arch.indices[i];
    if (idx < 0 || idx >= static_cast<int>(layers[i].candidates.size()))
      fail("forward_hard: candidate index " + std::to_string(idx) + " out of range at layer '" +
           layers[i].name + "'");
    h = layers[i].candidates[static_cast<std::size_t>(idx)].forward(h, mode);
  }
  return h;
}

ArchitectureSample SuperNet::sample_arch(Rng& rng) const {
  ArchitectureSample a;
  for (const auto& l : layers) {
    int idx = 0;
    if (l.searchable()) {
      // Gumbel-argmax draw: argmax_i (theta_i + g_i) ~ Categorical(softmax(theta)).
      double best = -1e300;
      for (std::size_t i = 0; i < l.candidates.size(); ++i) {
        const double v = l.theta.data()[i] + rng.gumbel();
        if (v > best) {
          best = v;
          idx = static_cast<int>(i);
        }
      }
    }
    a.indices.push_back(idx);
    a.keys.push_back(l.candidates[static_cast<std::size_t>(idx)].key);
  }
  a.theta_snapshot = theta_hash();
  return a;
}

ArchitectureSample SuperNet::argmax_arch() const {
  ArchitectureSample a;
  for (const auto& l : layers) {
    int idx = 0;
    if (l.searchable()) {
      double best = l.theta.data()[0];
      for (std::size_t i = 1; i < l.candidates.size(); ++i)
        if (l.theta.data()[i] > best) {  // ties resolve to the lowest index
          best = l.theta.data()[i];
          idx = static_cast<int>(i);
        }
    }
    a.indices.push_back(idx);
    a.keys.push_back(l.candidates[static_cast<std::size_t>(idx)].key);
  }
  a.theta_snapshot = theta_hash();
  return a;
}

MaskVector SuperNet::one_hot_masks(const ArchitectureSample& arch) const {
  if (arch.indices.size() != layers.size()) fail("one_hot_masks: layer count mismatch");
  MaskVector m;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].searchable()) continue;
    Tensor t = Tensor::zeros({static_cast<int>(layers[i].candidates.size())});
    t.mutable_data()[static_cast<std::size_t>(arch.indices[i])] = 1.0;
    m.per_layer.push_back(t);
  }
  return m;
}

MaskVector SuperNet::expectation_masks() const {
  MaskVector m;
  for (const auto& l : layers) {
    if (!l.searchable()) continue;
    m.per_layer.push_back(Tensor::from_vector(theta_probs(l.theta)));
  }
  return m;
}

std::vector<std::vector<cost::BlockKey>> SuperNet::searchable_keys() const {
  std::vector<std::vector<cost::BlockKey>> out;
  for (const auto& l : layers) {
    if (!l.searchable()) continue;
    std::vector<cost::BlockKey> ks;
    for (const auto& c : l.candidates) ks.push_back(c.key);
    out.push_back(std::move(ks));
  }
  return out;
}

std::vector<cost::BlockKey> SuperNet::fixed_keys() const {
  std::vector<cost::BlockKey> out;
  for (const auto& l : layers)
    if (!l.searchable()) out.push_back(l.candidates[0].key);
  return out;
}

std::vector<cost::BlockKey> SuperNet::arch_keys(const ArchitectureSample& arch) const {
  if (arch.indices.size() != layers.size()) fail("arch_keys: layer count mismatch");
  std::vector<cost::BlockKey> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    out.push_back(layers[i].candidates[static_cast<std::size_t>(arch.indices[i])].key);
  return out;
}

std::vector<std::vector<cost::EdgeCost>> SuperNet::searchable_edge_costs() const {
  std::vector<std::vector<cost::EdgeCost>> out;
  for (const auto& l : layers) {
    if (!l.searchable()) continue;
    std::vector<cost::EdgeCost> es;
    for (const auto& c : l.candidates) es.push_back(c.edge_cost);
    out.push_back(std::move(es));
  }
  return out;
}

std::vector<cost::KeyCost> SuperNet::all_key_costs() const {
  std::vector<cost::KeyCost> out;
  for (const auto& l : layers)
    for (const auto& c : l.candidates) {
      cost::KeyCost kc;
      kc.key = c.key;
      for (const auto& sl : c.sublayers) {
        kc.params += static_cast<double>(cost::params_of(sl));
        kc.macs += static_cast<double>(cost::macs_of(sl));
        kc.activations += static_cast<double>(cost::activation_elems(sl));
      }
      out.push_back(std::move(kc));
    }
  return out;
}

SuperNet SuperNet::subnet_of(const ArchitectureSample& arch) const {
  if (arch.indices.size() != layers.size()) fail("subnet_of: layer count mismatch");
  SuperNet s;
  s.in_channels = in_channels;
  s.input_res = input_res;
  s.class_count = class_count;
  s.space_signature = space_signature;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    SearchLayer l;
    l.name = layers[i].name;
    l.candidates.push_back(
        layers[i].candidates[static_cast<std::size_t>(arch.indices[i])].clone());
    s.layers.push_back(std::move(l));
  }
  return s;
}

SuperNet SuperNet::clone() const {
  SuperNet s;
  s.in_channels = in_channels;
  s.input_res = input_res;
  s.class_count = class_count;
  s.space_signature = space_signature;
  for (const auto& layer : layers) {
    SearchLayer l;
    l.name = layer.name;
    for (const auto& c : layer.candidates) l.candidates.push_back(c.clone());
    if (layer.searchable()) l.theta = layer.theta.clone_detached();
    s.layers.push_back(std::move(l));
  }
  return s;
}

}  // namespace dnas
