#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dnas/supernet.hpp"

namespace dnas::space {

struct SpaceInput {
  int channels = 1;
  int resolution = 32;
  int classes = 10;
};

struct MicroBlockSpec {
  enum class Type { kConv, kCsc, kSkip, kZero };
  Type type = Type::kConv;
  int e = 1;  // expansion ratio
  int k = 3;  // depthwise kernel (conv blocks)
  int g = 1;  // groups for the 1x1 convolutions

  std::string name() const;
};

struct MacroRow {
  std::string block;  // conv3x3 | conv1x1 | maxpool2 | avgpool | fc | tbs
  int f = 0;          // filters (conv rows and tbs rows)
  int n = 1;          // repeats
  int s = 1;          // stride of the first repeat
};

struct MacroSpec {
  std::vector<MacroRow> rows;
};

struct PrecisionSpec {
  // (weight_bits, act_bits) per candidate; weight_bits 0 denotes the skip
  // candidate, 32 full precision.
  std::vector<std::pair<int, int>> pairs;
  void validate() const;
};

struct BackboneSpec {
  int stem_channels = 8;
  std::vector<int> stage_channels{8, 16, 16};
  std::vector<int> stage_strides{1, 2, 2};
  int blocks_per_stage = 2;
};

struct SpaceSpec {
  enum class Kind { kFbnet, kMixedPrecision };
  Kind kind = Kind::kFbnet;
  SpaceInput input;
  // fbnet
  MacroSpec macro;
  std::vector<MicroBlockSpec> micro;
  double width_scale = 1.0;
  // mixed precision
  BackboneSpec backbone;
  PrecisionSpec precisions;

  std::string to_json() const;
  static SpaceSpec from_json(const std::string& text);
};

// FBNet-style block: 1x1 group conv (expand) -> BN -> ReLU -> KxK depthwise
// (stride) -> BN -> ReLU -> 1x1 group conv (project) -> BN, with a channel
// shuffle after each grouped 1x1 conv and a skip-add when shapes allow.
CandidateBlock build_block(const MicroBlockSpec& spec, int in_ch, int out_ch, int stride,
                           int in_sz);

// Conv-shift-conv block: BN -> ReLU -> 1x1 conv (expand) -> BN -> ReLU ->
// shift(3) -> strided 1x1 conv (project), skip-add when shapes allow.
CandidateBlock build_shift_block(int in_ch, int out_ch, int stride, int e, int in_sz);

// Residual basic block used by the quantization search; weight_bits/act_bits
// of 32 leave the path unquantized.
CandidateBlock build_quant_res_block(int in_ch, int out_ch, int stride, int weight_bits,
                                     int act_bits, int in_sz);

SuperNet fbnet_space(const SpaceInput& input, const MacroSpec& macro,
                     const std::vector<MicroBlockSpec>& micro, double width_scale);

SuperNet mixed_precision_space(const SpaceInput& input, const BackboneSpec& backbone,
                               const PrecisionSpec& precisions);

SuperNet build_space(const SpaceSpec& spec);

// Reference macro of the full-scale layer-wise space (224x224 input, 22
// searchable layers); constructible for shape/size checks.
SpaceSpec reference_fbnet_space();
// Small default space for desk-scale runs.
SpaceSpec desk_fbnet_space();
// Default candidate set: k3/k5 x e1/e3/e6 (+grouped e1 variants) + skip.
std::vector<MicroBlockSpec> reference_micro_blocks();

}  // namespace dnas::space
