#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnas/tensor.hpp"

namespace dnas::cost {

enum class Variant {
  kSpatial,
  kSpatiallySeparable,
  kPointwise,
  kGroup,
  kDepthwise,
  kShift,
  kMaxpool,
  kAvgpool,
  kFc,
};

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

// Analytic description of one layer; F is the output spatial size.
struct LayerConfig {
  Variant variant = Variant::kSpatial;
  std::int64_t M = 1;  // input channels
  std::int64_t N = 1;  // output channels (== M for depthwise)
  std::int64_t K = 1;  // kernel size
  std::int64_t F = 1;  // output spatial size
  std::int64_t B = 1;  // batch size
  std::int64_t G = 1;  // groups (group variant only)

  void validate() const;
};

std::int64_t params_of(const LayerConfig& layer);
std::int64_t macs_of(const LayerConfig& layer);
std::int64_t activation_elems(const LayerConfig& layer);
// macs / (params + activations); 0 when macs == 0.
double arithmetic_intensity(const LayerConfig& layer);

// C(cost) = beta * (ln cost)^gamma ; requires cost > 1.
double cost_weighting(double cost, double beta, double gamma);

// Canonical identifier of one candidate operator instance.
struct BlockKey {
  std::string block_type;  // e.g. "k3_e1_g2_o24", "csc_e1_o16", "conv3x3_o8", "skip"
  int in_c = 0, in_h = 0, in_w = 0;
  int stride = 1;
  int expansion = 0;
  int kernel = 0;
  int groups = 1;
  int weight_bits = 32;
  int act_bits = 32;

  std::string str() const;
  bool operator==(const BlockKey& o) const { return str() == o.str(); }
};

struct LatencyTable {
  std::string device;
  std::string note;
  std::map<std::string, double> entries;  // canonical key -> microseconds

  double lookup(const BlockKey& key) const;
  double lookup(const std::string& key) const;
  bool contains(const std::string& key) const { return entries.count(key) > 0; }

  std::string to_json() const;
  static LatencyTable from_json(const std::string& text);
};

// LAT(a) = sum_l LAT(b_l).
double net_latency(const std::vector<BlockKey>& layers, const LatencyTable& table);

// Differentiable expected latency: sum_l <mask_l, LAT(b_{l,i})> plus the fixed
// layers' constant total. Each mask must sum to 1 within 1e-6.
Tensor expected_latency(const std::vector<Tensor>& soft_masks,
                        const std::vector<std::vector<BlockKey>>& layer_candidates,
                        const std::vector<BlockKey>& fixed_layers, const LatencyTable& table);

// Per-candidate cost descriptor used by the quantization objectives.
struct EdgeCost {
  double params = 0.0;
  double macs = 0.0;
  int weight_bits = 32;
  int act_bits = 32;

  double size_bits() const { return params * weight_bits; }
  double flop_bits() const { return macs * weight_bits * act_bits; }
};

// Differentiable sum_l <mask_l, coeff_l>; the generic bilinear form behind
// the quantization cost objectives.
Tensor expected_cost(const std::vector<Tensor>& soft_masks,
                     const std::vector<std::vector<double>>& layer_coeffs);

std::vector<std::vector<double>> size_cost_coeffs(
    const std::vector<std::vector<EdgeCost>>& layer_edges);
std::vector<std::vector<double>> flop_cost_coeffs(
    const std::vector<std::vector<EdgeCost>>& layer_edges);

// Mask-weighted model-size cost in bits: sum over edges of m * params * k_w.
Tensor quant_size_cost(const std::vector<Tensor>& soft_masks,
                       const std::vector<std::vector<EdgeCost>>& layer_edges);
// Mask-weighted compute cost: sum over edges of m * macs * k_w * k_a.
Tensor quant_flop_cost(const std::vector<Tensor>& soft_masks,
                       const std::vector<std::vector<EdgeCost>>& layer_edges);

// Hard-selection variants (exact arithmetic, no tape).
double quant_size_cost_hard(const std::vector<int>& selection,
                            const std::vector<std::vector<EdgeCost>>& layer_edges);
double quant_flop_cost_hard(const std::vector<int>& selection,
                            const std::vector<std::vector<EdgeCost>>& layer_edges);

// Synthetic latency models standing in for on-device measurement.
enum class SynthLutModel { kAnalyticMacs, kMacsPlusMemory };
SynthLutModel synth_lut_model_from_name(const std::string& s);
std::string synth_lut_model_name(SynthLutModel m);

struct KeyCost {
  BlockKey key;
  double params = 0.0;
  double macs = 0.0;
  double activations = 0.0;
};

// analytic_macs:     lat = macs/1e6 + 1.0
// macs_plus_memory:  lat = macs/1e6 + (params + activations)/1e5 + 1.0
LatencyTable synth_lut(const std::vector<KeyCost>& keys, SynthLutModel model,
                       const std::string& device_label);

// Cost report (per-layer rows + totals).
struct CostRow {
  std::string layer;
  std::string candidate;
  std::int64_t params = 0;
  std::int64_t macs = 0;
  std::int64_t activation_elems = 0;
  double arithmetic_intensity = 0.0;
  std::optional<double> latency_us;
};

struct CostReport {
  std::vector<CostRow> rows;
  std::int64_t total_params = 0;
  std::int64_t total_macs = 0;
  std::int64_t total_activation_elems = 0;
  std::optional<double> total_latency_us;

  void add(CostRow row);
  std::string to_json() const;
};

// Reference table of the five convolution variants at the early / late
// configurations (early: M=N=32, F=112; late: M=N=512, F=7; K=3, B=1, G=4).
struct Table22Row {
  std::string variant;
  std::string stage;  // "early" | "late"
  std::int64_t params;
  std::int64_t macs;
  double ai_displayed;  // ratio computed from MACs rounded to 3 significant digits
  double ai_exact;
};

std::vector<Table22Row> reference_conv_table();
std::string reference_conv_table_json();

}  // namespace dnas::cost
