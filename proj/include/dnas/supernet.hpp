#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dnas/cost_model.hpp"
#include "dnas/modules.hpp"

namespace dnas {

// One selectable operator on a supernet edge.
struct CandidateBlock {
  cost::BlockKey key;
  std::unique_ptr<Module> body;  // null for skip and zero candidates
  bool residual = false;         // add input to body output
  bool zero = false;             // output zeros (toy candidate that kills signal)
  std::vector<cost::LayerConfig> sublayers;  // analytic accounting rows
  cost::EdgeCost edge_cost;

  Tensor forward(const Tensor& x, Mode mode) const;
  Shape out_shape(const Shape& in) const;
  CandidateBlock clone() const;
  std::int64_t param_elements() const;
};

struct SearchLayer {
  std::string name;
  std::vector<CandidateBlock> candidates;
  Tensor theta;  // defined iff searchable
  bool searchable() const { return candidates.size() > 1; }
};

// Per-layer soft selection masks, aligned with the searchable layers in order.
struct MaskVector {
  std::vector<Tensor> per_layer;
};

struct ArchitectureSample {
  std::vector<int> indices;              // one per supernet layer (0 on fixed layers)
  std::vector<cost::BlockKey> keys;      // resolved per layer
  std::string theta_snapshot;            // hash of theta at sampling time
  std::uint64_t seed = 0;

  std::string signature() const;  // key sequence, used for dedup
  std::string to_json() const;
  static ArchitectureSample from_json(const std::string& text);
};

// softmax with max-subtraction.
std::vector<double> softmax_probs(const std::vector<double>& logits);

// P(select i) = softmax(theta)[i].
std::vector<double> theta_probs(const Tensor& theta);

// m_i = exp((theta_i + g_i)/tau) / sum_j exp((theta_j + g_j)/tau); the noise
// vector is not differentiated through. The explicit-noise overload is the
// test hook (e.g. g pinned to zero).
Tensor gumbel_soft_mask(const Tensor& theta, double tau, Rng& rng);
Tensor gumbel_soft_mask(const Tensor& theta, double tau, const std::vector<double>& noise);

struct ForwardSoftResult {
  Tensor logits;
  MaskVector masks;
};

// Chain-structured stochastic supernet. All layers (stem, searchable stages,
// classifier tail) live in `layers`; fixed layers have a single candidate.
class SuperNet {
 public:
  int in_channels = 1;
  int input_res = 32;
  int class_count = 10;
  std::vector<SearchLayer> layers;
  std::string space_signature;  // canonical description of the generating space

  // -- structure --
  int searchable_count() const;
  std::vector<int> searchable_layer_ids() const;
  double log10_space_size() const;
  void validate_shapes() const;

  // -- parameters --
  void init_weights(Rng& rng);
  void init_theta_uniform();
  std::vector<ParamRef> weight_params() const;
  std::vector<BufferRef> buffers() const;
  std::vector<Tensor> thetas() const;
  std::string theta_hash() const;

  // -- execution --
  ForwardSoftResult forward_soft(const Tensor& x, double tau, Rng& rng, Mode mode);
  Tensor forward_with_masks(const Tensor& x, const MaskVector& masks, Mode mode);
  Tensor forward_hard(const ArchitectureSample& arch, const Tensor& x, Mode mode);

  // -- sampling --
  ArchitectureSample sample_arch(Rng& rng) const;
  ArchitectureSample argmax_arch() const;
  MaskVector one_hot_masks(const ArchitectureSample& arch) const;
  MaskVector expectation_masks() const;  // softmax(theta) per searchable layer

  // -- cost metadata --
  std::vector<std::vector<cost::BlockKey>> searchable_keys() const;
  std::vector<cost::BlockKey> fixed_keys() const;
  std::vector<cost::BlockKey> arch_keys(const ArchitectureSample& arch) const;
  std::vector<std::vector<cost::EdgeCost>> searchable_edge_costs() const;
  std::vector<cost::KeyCost> all_key_costs() const;

  // Standalone copy of one architecture (deep-cloned blocks, single candidate
  // per layer); used to retrain samples from scratch.
  SuperNet subnet_of(const ArchitectureSample& arch) const;

  SuperNet clone() const;
};

}  // namespace dnas
