#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dnas/cost_model.hpp"
#include "dnas/dataset.hpp"
#include "dnas/optim.hpp"
#include "dnas/supernet.hpp"

namespace dnas {

enum class LossMode { kLatency, kQuantSize, kQuantFlop };

LossMode loss_mode_from_name(const std::string& s);
std::string loss_mode_name(LossMode m);

struct LossSpec {
  LossMode mode = LossMode::kLatency;
  double alpha = 0.2;  // latency loss scale
  double beta = 0.6;   // latency loss exponent
  double gamma = 1.0;  // quantization cost exponent
};

struct SearchConfig {
  int epochs = 30;
  int warmup = -1;  // -1: ceil(0.1 * epochs)
  double t0 = 5.0;
  double eta = 0.065;
  double w_lr = 0.05;
  double w_momentum = 0.9;
  double theta_lr = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int samples_to_draw = 4;
  int finalize_epochs = 10;
  int checkpoint_every = 0;  // epochs between checkpoints; 0 disables periodic ones
  LossSpec loss;

  int effective_warmup() const;
  std::vector<std::string> validate() const;  // every violation, not just the first
};

// tau = T0 * exp(-eta * epoch)
double temperature(int epoch, double t0, double eta);

// L = CE * alpha * ln(LAT)^beta ; requires LAT > 1 (microseconds).
Tensor latency_loss(const Tensor& ce, const Tensor& lat_us, double alpha, double beta);
double latency_loss_value(double ce, double lat_us, double alpha, double beta);

// L = CE * beta * ln(Cost)^gamma ; requires Cost > 1.
Tensor quant_loss(const Tensor& ce, const Tensor& cost, double beta, double gamma);
double quant_loss_value(double ce, double cost, double beta, double gamma);

struct TraceRow {
  int epoch = 0;
  double tau = 0.0;
  double ce = 0.0;            // CE of the P_theta-expectation network on the theta split
  double expected_cost = 0.0;  // expected cost under P_theta
  double loss = 0.0;
};

std::string trace_to_csv(const std::vector<TraceRow>& trace);
std::vector<TraceRow> trace_from_csv(const std::string& text);

struct ScoredSample {
  ArchitectureSample arch;
  bool is_argmax = false;
  double accuracy = 0.0;
  std::optional<double> latency_us;
  double size_cost_bits = 0.0;
  double flop_cost = 0.0;
};

struct SearchResult {
  std::vector<std::vector<double>> theta;
  std::vector<TraceRow> trace;
  std::vector<ScoredSample> samples;
  double quant_beta = 0.0;  // auto-calibrated beta for the quant losses

  std::string to_json() const;
};

struct SearchData {
  Dataset x_w;
  Dataset x_theta;
  Dataset x_eval;
};

struct RunIo {
  std::string out_dir;      // checkpoints land here when non-empty
  std::string config_hash;  // provenance tag; resume rejects a mismatch
  std::string resume_from;  // checkpoint path
};

SearchResult run_dnas(SuperNet& net, const SearchData& data, const SearchConfig& cfg,
                      const cost::LatencyTable* lut, const RunIo& io = {});

// Deduplicates by block-key sequence, retrains each sample from fresh weights
// and scores it on held-out data.
std::vector<ScoredSample> finalize(const SuperNet& net,
                                   const std::vector<ArchitectureSample>& samples,
                                   const Dataset& train, const Dataset& eval_data,
                                   const SearchConfig& cfg, const cost::LatencyTable* lut);

ArchitectureSample identity_arch(const SuperNet& net);
ArchitectureSample arch_from_choices(const SuperNet& net, const std::vector<int>& choices);

struct EvalMetrics {
  double accuracy = 0.0;
  double ce = 0.0;
};
EvalMetrics evaluate_arch(SuperNet& net, const ArchitectureSample& arch, const Dataset& data,
                          int batch_size);

void train_subnet(SuperNet& subnet, const Dataset& train, int epochs, double lr, double momentum,
                  int batch_size, Rng& rng);

// Checkpoint I/O. Saving is atomic (write temp file, then rename).
void save_checkpoint(const std::string& path, const SuperNet& net, int epoch,
                     SgdMomentum& wopt, Adam& thopt, const Rng& rng,
                     const std::string& config_hash, const std::vector<TraceRow>& trace);

struct CheckpointMeta {
  int epoch = 0;
  std::string config_hash;
  std::vector<TraceRow> trace;
};

// Restores parameters/buffers/theta into `net`; optimizer and rng state are
// restored when the pointers are non-null. With a non-empty expected hash a
// mismatched checkpoint is rejected.
CheckpointMeta load_checkpoint(const std::string& path, SuperNet& net, SgdMomentum* wopt,
                               Adam* thopt, Rng* rng, const std::string& expected_hash);

// Standalone weight container for trained subnets (train/eval commands).
void save_weights(const std::string& path, const SuperNet& net);
void load_weights(const std::string& path, SuperNet& net);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::string fnv1a_hex(const std::string& text);
int worker_threads();  // DNASFORGE_THREADS (>=1), default 1

}  // namespace dnas
