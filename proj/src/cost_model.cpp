#include "dnas/cost_model.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace dnas::cost {

using nlohmann::json;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kSpatial: return "spatial";
    case Variant::kSpatiallySeparable: return "spatially_separable";
    case Variant::kPointwise: return "pointwise";
    case Variant::kGroup: return "group";
    case Variant::kDepthwise: return "depthwise";
    case Variant::kShift: return "shift";
    case Variant::kMaxpool: return "maxpool";
    case Variant::kAvgpool: return "avgpool";
    case Variant::kFc: return "fc";
  }
  fail("variant_name: bad enum");
}

Variant variant_from_name(const std::string& s) {
  for (Variant v : {Variant::kSpatial, Variant::kSpatiallySeparable, Variant::kPointwise,
                    Variant::kGroup, Variant::kDepthwise, Variant::kShift, Variant::kMaxpool,
                    Variant::kAvgpool, Variant::kFc})
    if (variant_name(v) == s) return v;
  fail("unknown layer variant '" + s + "'");
}

void LayerConfig::validate() const {
  if (M < 1 || N < 1 || K < 1 || F < 1 || B < 1 || G < 1)
    fail("LayerConfig: all dimensions must be >= 1");
  if (variant == Variant::kPointwise && K != 1) fail("LayerConfig: pointwise requires K=1");
  if (variant == Variant::kDepthwise && (N != M || G != M))
    fail("LayerConfig: depthwise requires N=M and G=M");
  if (variant == Variant::kGroup && (M % G != 0 || N % G != 0))
    fail("LayerConfig: group variant requires M and N divisible by G");
}

std::int64_t params_of(const LayerConfig& l) {
  l.validate();
  switch (l.variant) {
    case Variant::kSpatial: return l.M * l.N * l.K * l.K;
    case Variant::kSpatiallySeparable: return l.M * l.N * l.K;
    case Variant::kPointwise: return l.M * l.N;
    case Variant::kGroup: return l.M * l.N * l.K * l.K / l.G;
    case Variant::kDepthwise: return l.M * l.K * l.K;
    case Variant::kShift:
    case Variant::kMaxpool:
    case Variant::kAvgpool: return 0;
    case Variant::kFc: return l.M * l.N;
  }
  fail("params_of: bad enum");
}

std::int64_t macs_of(const LayerConfig& l) {
  l.validate();
  const std::int64_t bf2 = l.B * l.F * l.F;
  switch (l.variant) {
    case Variant::kSpatial: return bf2 * l.M * l.N * l.K * l.K;
    case Variant::kSpatiallySeparable: return bf2 * l.M * l.N * l.K;
    case Variant::kPointwise: return bf2 * l.M * l.N;
    case Variant::kGroup: return bf2 * l.M * l.N * l.K * l.K / l.G;
    case Variant::kDepthwise: return bf2 * l.M * l.K * l.K;
    case Variant::kShift:
    case Variant::kMaxpool:
    case Variant::kAvgpool: return 0;
    case Variant::kFc: return l.B * l.M * l.N;
  }
  fail("macs_of: bad enum");
}

std::int64_t activation_elems(const LayerConfig& l) {
  l.validate();
  return l.B * (l.M + l.N) * l.F * l.F;
}

double arithmetic_intensity(const LayerConfig& l) {
  const std::int64_t macs = macs_of(l);
  if (macs == 0) return 0.0;
  return static_cast<double>(macs) /
         static_cast<double>(params_of(l) + activation_elems(l));
}

double cost_weighting(double cost, double beta, double gamma) {
  if (cost <= 1.0) fail("cost_weighting: cost must be > 1, got " + std::to_string(cost));
  if (beta <= 0.0) fail("cost_weighting: beta must be > 0");
  if (gamma < 0.0) fail("cost_weighting: gamma must be >= 0");
  return beta * std::pow(std::log(cost), gamma);
}

std::string BlockKey::str() const {
  std::ostringstream os;
  os << block_type << "|c" << in_c << "x" << in_h << "x" << in_w << "|s" << stride << "|e"
     << expansion << "|k" << kernel << "|g" << groups << "|w" << weight_bits << "a" << act_bits;
  return os.str();
}

double LatencyTable::lookup(const BlockKey& key) const { return lookup(key.str()); }

double LatencyTable::lookup(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) fail("LatencyTable: no entry for block key '" + key + "'");
  return it->second;
}

std::string LatencyTable::to_json() const {
  json j;
  j["device"] = device;
  j["note"] = note;
  j["entries"] = json::array();
  for (const auto& [k, v] : entries) j["entries"].push_back({{"key", k}, {"latency_us", v}});
  return j.dump(2) + "\n";
}

LatencyTable LatencyTable::from_json(const std::string& text) {
  json j = json::parse(text);
  LatencyTable t;
  t.device = j.value("device", "");
  t.note = j.value("note", "");
  if (!j.contains("entries") || !j["entries"].is_array())
    fail("LatencyTable: missing 'entries' array");
  for (const auto& e : j["entries"]) {
    const std::string key = e.at("key").get<std::string>();
    const double lat = e.at("latency_us").get<double>();
    if (lat <= 0.0) fail("LatencyTable: non-positive latency for key '" + key + "'");
    if (t.entries.count(key)) fail("LatencyTable: duplicate key '" + key + "'");
    t.entries[key] = lat;
  }
  return t;
}

double net_latency(const std::vector<BlockKey>& layers, const LatencyTable& table) {
  double total = 0.0;
  for (const auto& k : layers) total += table.lookup(k);
  return total;
}

namespace {

void check_mask_simplex(const Tensor& mask, std::size_t want) {
  if (mask.rank() != 1 || static_cast<std::size_t>(mask.numel()) != want)
    fail("expected_latency: mask size " + std::to_string(mask.numel()) + " != " +
         std::to_string(want) + " candidates");
  double s = 0.0;
  for (double v : mask.data()) s += v;
  if (std::abs(s - 1.0) > 1e-6)
    fail("expected_latency: mask sums to " + std::to_string(s) + ", expected 1");
}

}  // namespace

Tensor expected_latency(const std::vector<Tensor>& soft_masks,
                        const std::vector<std::vector<BlockKey>>& layer_candidates,
                        const std::vector<BlockKey>& fixed_layers, const LatencyTable& table) {
  if (soft_masks.size() != layer_candidates.size())
    fail("expected_latency: " + std::to_string(soft_masks.size()) + " masks for " +
         std::to_string(layer_candidates.size()) + " searchable layers");
  double fixed_total = 0.0;
  for (const auto& k : fixed_layers) fixed_total += table.lookup(k);
  Tensor acc = Tensor::scalar(fixed_total);
  for (std::size_t l = 0; l < soft_masks.size(); ++l) {
    check_mask_simplex(soft_masks[l], layer_candidates[l].size());
    std::vector<double> lat(layer_candidates[l].size());
    for (std::size_t i = 0; i < lat.size(); ++i) lat[i] = table.lookup(layer_candidates[l][i]);
    acc = add(acc, dot_const(soft_masks[l], lat));
  }
  return acc;
}

Tensor expected_cost(const std::vector<Tensor>& soft_masks,
                     const std::vector<std::vector<double>>& layer_coeffs) {
  if (soft_masks.size() != layer_coeffs.size())
    fail("expected_cost: mask/coefficient layer count mismatch");
  Tensor acc = Tensor::scalar(0.0);
  for (std::size_t l = 0; l < soft_masks.size(); ++l)
    acc = add(acc, dot_const(soft_masks[l], layer_coeffs[l]));
  return acc;
}

std::vector<std::vector<double>> size_cost_coeffs(
    const std::vector<std::vector<EdgeCost>>& layer_edges) {
  std::vector<std::vector<double>> out;
  out.reserve(layer_edges.size());
  for (const auto& layer : layer_edges) {
    std::vector<double> c;
    c.reserve(layer.size());
    for (const auto& e : layer) c.push_back(e.size_bits());
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::vector<double>> flop_cost_coeffs(
    const std::vector<std::vector<EdgeCost>>& layer_edges) {
  std::vector<std::vector<double>> out;
  out.reserve(layer_edges.size());
  for (const auto& layer : layer_edges) {
    std::vector<double> c;
    c.reserve(layer.size());
    for (const auto& e : layer) c.push_back(e.flop_bits());
    out.push_back(std::move(c));
  }
  return out;
}

Tensor quant_size_cost(const std::vector<Tensor>& soft_masks,
                       const std::vector<std::vector<EdgeCost>>& layer_edges) {
  return expected_cost(soft_masks, size_cost_coeffs(layer_edges));
}

Tensor quant_flop_cost(const std::vector<Tensor>& soft_masks,
                       const std::vector<std::vector<EdgeCost>>& layer_edges) {
  return expected_cost(soft_masks, flop_cost_coeffs(layer_edges));
}

double quant_size_cost_hard(const std::vector<int>& selection,
                            const std::vector<std::vector<EdgeCost>>& layer_edges) {
  if (selection.size() != layer_edges.size()) fail("quant_size_cost: selection size mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < selection.size(); ++l)
    s += layer_edges[l].at(static_cast<std::size_t>(selection[l])).size_bits();
  return s;
}

double quant_flop_cost_hard(const std::vector<int>& selection,
                            const std::vector<std::vector<EdgeCost>>& layer_edges) {
  if (selection.size() != layer_edges.size()) fail("quant_flop_cost: selection size mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < selection.size(); ++l)
    s += layer_edges[l].at(static_cast<std::size_t>(selection[l])).flop_bits();
  return s;
}

SynthLutModel synth_lut_model_from_name(const std::string& s) {
  if (s == "analytic_macs") return SynthLutModel::kAnalyticMacs;
  if (s == "macs_plus_memory") return SynthLutModel::kMacsPlusMemory;
  fail("unknown synth LUT model '" + s + "' (expected analytic_macs or macs_plus_memory)");
}

std::string synth_lut_model_name(SynthLutModel m) {
  return m == SynthLutModel::kAnalyticMacs ? "analytic_macs" : "macs_plus_memory";
}

LatencyTable synth_lut(const std::vector<KeyCost>& keys, SynthLutModel model,
                       const std::string& device_label) {
  LatencyTable t;
  t.device = device_label;
  t.note = "synthetic latency model: " + synth_lut_model_name(model);
  for (const auto& kc : keys) {
    double lat = kc.macs / 1e6 + 1.0;
    if (model == SynthLutModel::kMacsPlusMemory) lat += (kc.params + kc.activations) / 1e5;
    t.entries[kc.key.str()] = lat;  // same key from two layers must agree, so overwrite is safe
  }
  return t;
}

void CostReport::add(CostRow row) {
  total_params += row.params;
  total_macs += row.macs;
  total_activation_elems += row.activation_elems;
  if (row.latency_us) total_latency_us = total_latency_us.value_or(0.0) + *row.latency_us;
  rows.push_back(std::move(row));
}

std::string CostReport::to_json() const {
  json j;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    json row{{"layer", r.layer},
             {"candidate", r.candidate},
             {"params", r.params},
             {"macs", r.macs},
             {"activation_elems", r.activation_elems},
             {"arithmetic_intensity", r.arithmetic_intensity}};
    if (r.latency_us) row["latency_us"] = *r.latency_us;
    j["rows"].push_back(std::move(row));
  }
  j["totals"] = {{"params", total_params},
                 {"macs", total_macs},
                 {"activation_elems", total_activation_elems}};
  if (total_latency_us) j["totals"]["latency_us"] = *total_latency_us;
  return j.dump(2) + "\n";
}

namespace {

double round_3sig(double x) {
  if (x == 0.0) return 0.0;
  const double p = std::floor(std::log10(std::abs(x)));
  const double s = std::pow(10.0, p - 2.0);
  return std::round(x / s) * s;
}

}  // namespace

std::vector<Table22Row> reference_conv_table() {
  std::vector<Table22Row> rows;
  struct Stage {
    const char* name;
    std::int64_t ch;
    std::int64_t f;
  };
  const Stage stages[] = {{"early", 32, 112}, {"late", 512, 7}};
  const Variant variants[] = {Variant::kSpatial, Variant::kSpatiallySeparable,
                              Variant::kPointwise, Variant::kGroup, Variant::kDepthwise};
  for (Variant v : variants) {
    for (const Stage& st : stages) {
      LayerConfig l;
      l.variant = v;
      l.M = l.N = st.ch;
      l.K = (v == Variant::kPointwise) ? 1 : 3;
      l.F = st.f;
      l.B = 1;
      l.G = (v == Variant::kGroup) ? 4 : (v == Variant::kDepthwise ? st.ch : 1);
      const std::int64_t p = params_of(l);
      const std::int64_t m = macs_of(l);
      const std::int64_t a = activation_elems(l);
      // Displayed arithmetic intensity follows the reference convention of
      // computing the ratio from the MAC count rounded to 3 significant digits.
      const double ai_disp = round_3sig(static_cast<double>(m)) / static_cast<double>(p + a);
      rows.push_back({variant_name(v), st.name, p, m, ai_disp, arithmetic_intensity(l)});
    }
  }
  return rows;
}

std::string reference_conv_table_json() {
  json j = json::array();
  for (const auto& r : reference_conv_table())
    j.push_back({{"variant", r.variant},
                 {"stage", r.stage},
                 {"params", r.params},
                 {"macs", r.macs},
                 {"arithmetic_intensity", r.ai_displayed},
                 {"arithmetic_intensity_exact", r.ai_exact}});
  return j.dump(2) + "\n";
}

}  // namespace dnas::cost
