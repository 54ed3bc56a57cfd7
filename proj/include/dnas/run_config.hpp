#pragma once

#include <optional>
#include <string>

#include "dnas/dataset.hpp"
#include "dnas/engine.hpp"
#include "dnas/search_space.hpp"

namespace dnas {

struct DataConfig {
  std::string kind = "synth_blobs";  // synth_blobs | cifar10
  // synth_blobs
  int n = 512;
  int classes = 4;
  int size = 12;
  double noise_sigma = 0.0;
  // cifar10 (defaults keep runs at desk scale)
  std::string path;
  int limit = 2000;
};

// One JSON document drives every command; flags override file values and all
// randomness flows from the single top-level seed.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "run_out";
  std::string space_path;
  std::optional<space::SpaceSpec> space_inline;
  std::string lut_path;
  DataConfig data;
  double eval_ratio = 0.2;
  double split_ratio = 0.8;
  SearchConfig search;

  static RunConfig from_json(const std::string& text);
  static RunConfig from_file(const std::string& path);

  // Canonical resolved form; its hash tags every artifact.
  std::string resolved_json() const;
  std::string hash() const;

  space::SpaceSpec load_space() const;
  Dataset build_dataset() const;

  struct Splits {
    Dataset x_w, x_theta, x_eval;
  };
  Splits build_splits() const;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dnas
