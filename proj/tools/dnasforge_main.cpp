#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnas/cost_model.hpp"
#include "dnas/engine.hpp"
#include "dnas/run_config.hpp"
#include "dnas/search_space.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_sig6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void print_table_2_2() {
  std::cout << std::left << std::setw(22) << "variant" << std::setw(8) << "stage" << std::right
            << std::setw(12) << "params" << std::setw(16) << "macs" << std::setw(10) << "ai"
            << "\n";
  for (const auto& r : dnas::cost::reference_conv_table()) {
    std::ostringstream ai;
    ai << std::setprecision(3) << r.ai_displayed;
    std::cout << std::left << std::setw(22) << r.variant << std::setw(8) << r.stage << std::right
              << std::setw(12) << r.params << std::setw(16) << r.macs << std::setw(10) << ai.str()
              << "\n";
  }
}

dnas::cost::CostRow row_for(const std::string& layer, const dnas::CandidateBlock& cand,
                            const dnas::cost::LatencyTable* lut) {
  dnas::cost::CostRow row;
  row.layer = layer;
  row.candidate = cand.key.str();
  for (const auto& sl : cand.sublayers) {
    row.params += dnas::cost::params_of(sl);
    row.macs += dnas::cost::macs_of(sl);
    row.activation_elems += dnas::cost::activation_elems(sl);
  }
  row.arithmetic_intensity =
      row.macs == 0 ? 0.0
                    : static_cast<double>(row.macs) /
                          static_cast<double>(row.params + row.activation_elems);
  if (lut) row.latency_us = lut->lookup(cand.key);
  return row;
}

int cmd_analyze(const std::string& space_path, const std::string& arch_path,
                const std::string& lut_path, bool table22, const std::string& out_path) {
  if (table22) {
    print_table_2_2();
    if (!out_path.empty()) dnas::write_file(out_path, dnas::cost::reference_conv_table_json());
    return 0;
  }
  if (space_path.empty()) {
    std::cerr << "analyze: need a space file or --table-2-2\n";
    return 2;
  }
  auto spec = dnas::space::SpaceSpec::from_json(dnas::read_file(space_path));
  dnas::SuperNet net = dnas::space::build_space(spec);

  std::optional<dnas::cost::LatencyTable> lut;
  if (!lut_path.empty()) lut = dnas::cost::LatencyTable::from_json(dnas::read_file(lut_path));

  dnas::cost::CostReport report;
  if (!arch_path.empty()) {
    auto arch = dnas::ArchitectureSample::from_json(dnas::read_file(arch_path));
    if (arch.indices.size() != net.layers.size()) dnas::fail("analyze: arch/space layer mismatch");
    for (std::size_t i = 0; i < net.layers.size(); ++i)
      report.add(row_for(net.layers[i].name,
                         net.layers[i].candidates[static_cast<std::size_t>(arch.indices[i])],
                         lut ? &*lut : nullptr));
  } else {
    for (const auto& l : net.layers)
      for (const auto& c : l.candidates) report.add(row_for(l.name, c, lut ? &*lut : nullptr));
  }

  std::cout << std::left << std::setw(16) << "layer" << std::setw(44) << "candidate" << std::right
            << std::setw(10) << "params" << std::setw(12) << "macs" << std::setw(12) << "acts"
            << std::setw(10) << "ai";
  if (lut) std::cout << std::setw(12) << "lat_us";
  std::cout << "\n";
  for (const auto& r : report.rows) {
    std::cout << std::left << std::setw(16) << r.layer << std::setw(44) << r.candidate
              << std::right << std::setw(10) << r.params << std::setw(12) << r.macs
              << std::setw(12) << r.activation_elems << std::setw(10)
              << fmt_sig6(r.arithmetic_intensity);
    if (r.latency_us) std::cout << std::setw(12) << fmt_sig6(*r.latency_us);
    std::cout << "\n";
  }
  std::cout << "totals: params=" << report.total_params << " macs=" << report.total_macs
            << " acts=" << report.total_activation_elems;
  if (report.total_latency_us) std::cout << " latency_us=" << fmt_sig6(*report.total_latency_us);
  std::cout << "\nsearch space size: 10^" << fmt_sig6(net.log10_space_size()) << " ("
            << net.searchable_count() << " searchable layers)\n";
  if (!out_path.empty()) dnas::write_file(out_path, report.to_json());
  return 0;
}

int cmd_lut_gen(const std::string& space_path, const std::string& model_name,
                const std::string& out_path, const std::string& device) {
  auto spec = dnas::space::SpaceSpec::from_json(dnas::read_file(space_path));
  dnas::SuperNet net = dnas::space::build_space(spec);
  auto table = dnas::cost::synth_lut(net.all_key_costs(),
                                     dnas::cost::synth_lut_model_from_name(model_name), device);
  dnas::write_file(out_path, table.to_json());
  std::cout << "wrote " << table.entries.size() << " entries to " << out_path << "\n";
  return 0;
}

void write_meta(const std::string& dir, const dnas::RunConfig& cfg) {
  // wall-clock provenance lives here, outside the reproducible artifacts
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  json meta{{"unix_time", std::chrono::duration_cast<std::chrono::seconds>(now).count()},
            {"config_hash", cfg.hash()}};
  dnas::write_file(dir + "/meta.json", meta.dump(2) + "\n");
}

int cmd_search(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
               const std::string& out_flag, const std::string& lut_flag,
               const std::string& resume) {
  dnas::RunConfig cfg = dnas::RunConfig::from_file(config_path);
  if (seed_flag) cfg.seed = *seed_flag;
  if (!out_flag.empty()) cfg.out_dir = out_flag;
  if (!lut_flag.empty()) cfg.lut_path = lut_flag;

  dnas::SuperNet net = dnas::space::build_space(cfg.load_space());
  std::optional<dnas::cost::LatencyTable> lut;
  if (!cfg.lut_path.empty())
    lut = dnas::cost::LatencyTable::from_json(dnas::read_file(cfg.lut_path));

  auto splits = cfg.build_splits();
  cfg.search.seed = cfg.seed;

  fs::create_directories(cfg.out_dir);
  dnas::write_file(cfg.out_dir + "/config_resolved.json", cfg.resolved_json());
  write_meta(cfg.out_dir, cfg);

  dnas::RunIo io;
  io.out_dir = cfg.out_dir;
  io.config_hash = cfg.hash();
  io.resume_from = resume;

  dnas::SearchResult res =
      dnas::run_dnas(net, {splits.x_w, splits.x_theta, splits.x_eval}, cfg.search,
                     lut ? &*lut : nullptr, io);

  dnas::write_file(cfg.out_dir + "/trace.csv", dnas::trace_to_csv(res.trace));
  dnas::write_file(cfg.out_dir + "/result.json", res.to_json());
  for (std::size_t i = 0; i < res.samples.size(); ++i) {
    auto arch = res.samples[i].arch;
    dnas::write_file(cfg.out_dir + "/arch_" + std::to_string(i) + ".json", arch.to_json());
  }
  std::cout << "search finished: " << res.trace.size() << " epochs, " << res.samples.size()
            << " scored samples -> " << cfg.out_dir << "\n";
  for (const auto& s : res.samples) {
    std::cout << (s.is_argmax ? "  [argmax] " : "  [sample] ") << "acc=" << fmt_sig6(s.accuracy);
    if (s.latency_us) std::cout << " lat_us=" << fmt_sig6(*s.latency_us);
    std::cout << " size_bits=" << fmt_sig6(s.size_cost_bits) << "\n";
  }
  return 0;
}

int cmd_sample(const std::string& space_path, const std::string& ckpt_path, int count,
               std::uint64_t seed, const std::string& out_dir) {
  auto spec = dnas::space::SpaceSpec::from_json(dnas::read_file(space_path));
  dnas::SuperNet net = dnas::space::build_space(spec);
  dnas::load_checkpoint(ckpt_path, net, nullptr, nullptr, nullptr, "");
  fs::create_directories(out_dir);
  dnas::Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    auto arch = net.sample_arch(rng);
    arch.seed = seed;
    dnas::write_file(out_dir + "/arch_" + std::to_string(i) + ".json", arch.to_json());
  }
  std::cout << "wrote " << count << " architecture samples to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& arch_path,
              std::optional<std::uint64_t> seed_flag, const std::string& out_flag) {
  dnas::RunConfig cfg = dnas::RunConfig::from_file(config_path);
  if (seed_flag) cfg.seed = *seed_flag;
  if (!out_flag.empty()) cfg.out_dir = out_flag;

  dnas::SuperNet net = dnas::space::build_space(cfg.load_space());
  auto arch = dnas::ArchitectureSample::from_json(dnas::read_file(arch_path));
  if (arch.indices.size() != net.layers.size()) dnas::fail("train: arch/space layer mismatch");
  dnas::SuperNet sub = net.subnet_of(arch);

  auto splits = cfg.build_splits();
  dnas::Dataset train_set = dnas::concat(splits.x_w, splits.x_theta);
  dnas::Rng rng(cfg.seed);
  sub.init_weights(rng);
  dnas::train_subnet(sub, train_set, cfg.search.finalize_epochs, cfg.search.w_lr,
                     cfg.search.w_momentum, cfg.search.batch_size, rng);

  fs::create_directories(cfg.out_dir);
  dnas::save_weights(cfg.out_dir + "/weights.json", sub);
  auto m = dnas::evaluate_arch(sub, dnas::identity_arch(sub), splits.x_eval,
                               cfg.search.batch_size);
  json metrics{{"accuracy", m.accuracy}, {"ce", m.ce}, {"config_hash", cfg.hash()}};
  dnas::write_file(cfg.out_dir + "/train_metrics.json", metrics.dump(2) + "\n");
  std::cout << "trained " << cfg.search.finalize_epochs << " epochs; eval accuracy "
            << fmt_sig6(m.accuracy) << " ce " << fmt_sig6(m.ce) << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& arch_path,
             const std::string& weights_path, std::optional<std::uint64_t> seed_flag,
             const std::string& lut_flag) {
  dnas::RunConfig cfg = dnas::RunConfig::from_file(config_path);
  if (seed_flag) cfg.seed = *seed_flag;
  if (!lut_flag.empty()) cfg.lut_path = lut_flag;

  dnas::SuperNet net = dnas::space::build_space(cfg.load_space());
  auto arch = dnas::ArchitectureSample::from_json(dnas::read_file(arch_path));
  if (arch.indices.size() != net.layers.size()) dnas::fail("eval: arch/space layer mismatch");
  dnas::SuperNet sub = net.subnet_of(arch);

  if (!weights_path.empty()) {
    dnas::load_weights(weights_path, sub);
  } else {
    dnas::Rng rng(cfg.seed);
    sub.init_weights(rng);
  }

  auto splits = cfg.build_splits();
  auto m = dnas::evaluate_arch(sub, dnas::identity_arch(sub), splits.x_eval,
                               cfg.search.batch_size);
  json out{{"accuracy", m.accuracy}, {"ce", m.ce}, {"config_hash", cfg.hash()}};
  if (!cfg.lut_path.empty()) {
    auto lut = dnas::cost::LatencyTable::from_json(dnas::read_file(cfg.lut_path));
    out["latency_us"] = dnas::cost::net_latency(net.arch_keys(arch), lut);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dnasforge: differentiable architecture search workbench"};
  app.require_subcommand(1);

  // analyze
  std::string a_space, a_arch, a_lut, a_out;
  bool a_table22 = false;
  auto* analyze = app.add_subcommand("analyze", "analytic cost report for a space or architecture");
  analyze->add_option("space", a_space, "space JSON file");
  analyze->add_option("--arch", a_arch, "architecture JSON (restrict rows to its selections)");
  analyze->add_option("--lut", a_lut, "latency table JSON (adds a latency column)");
  analyze->add_flag("--table-2-2", a_table22, "emit the reference convolution-variant table");
  analyze->add_option("--out", a_out, "write the JSON report here");

  // lut-gen
  std::string g_space, g_model = "analytic_macs", g_out, g_device = "synthetic";
  auto* lutgen = app.add_subcommand("lut-gen", "generate a synthetic latency table for a space");
  lutgen->add_option("space", g_space, "space JSON file")->required();
  lutgen->add_option("--model", g_model, "analytic_macs | macs_plus_memory");
  lutgen->add_option("--out", g_out, "output path")->required();
  lutgen->add_option("--device", g_device, "device label recorded in the table");

  // search
  std::string s_config, s_out, s_lut, s_resume;
  std::optional<std::uint64_t> s_seed;
  auto* search = app.add_subcommand("search", "run the differentiable architecture search");
  search->add_option("--config", s_config, "run config JSON")->required();
  search->add_option("--seed", s_seed, "override config seed");
  search->add_option("--out", s_out, "override output directory");
  search->add_option("--lut", s_lut, "override latency table path");
  search->add_option("--resume", s_resume, "resume from a checkpoint file");

  // sample
  std::string p_space, p_ckpt, p_out = "samples";
  int p_count = 4;
  std::uint64_t p_seed = 1;
  auto* sample = app.add_subcommand("sample", "draw architectures from a trained checkpoint");
  sample->add_option("--space", p_space, "space JSON file")->required();
  sample->add_option("--checkpoint", p_ckpt, "checkpoint file")->required();
  sample->add_option("--count", p_count, "number of samples");
  sample->add_option("--seed", p_seed, "sampling seed");
  sample->add_option("--out", p_out, "output directory");

  // train
  std::string t_config, t_arch, t_out;
  std::optional<std::uint64_t> t_seed;
  auto* train = app.add_subcommand("train", "train an exported architecture from scratch");
  train->add_option("--config", t_config, "run config JSON")->required();
  train->add_option("--arch", t_arch, "architecture JSON")->required();
  train->add_option("--seed", t_seed, "override config seed");
  train->add_option("--out", t_out, "override output directory");

  // eval
  std::string e_config, e_arch, e_weights, e_lut;
  std::optional<std::uint64_t> e_seed;
  auto* evalc = app.add_subcommand("eval", "evaluate an exported architecture");
  evalc->add_option("--config", e_config, "run config JSON")->required();
  evalc->add_option("--arch", e_arch, "architecture JSON")->required();
  evalc->add_option("--weights", e_weights, "weights JSON from train (fresh init if omitted)");
  evalc->add_option("--seed", e_seed, "override config seed");
  evalc->add_option("--lut", e_lut, "latency table (adds latency to the report)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(a_space, a_arch, a_lut, a_table22, a_out);
    if (lutgen->parsed()) return cmd_lut_gen(g_space, g_model, g_out, g_device);
    if (search->parsed()) return cmd_search(s_config, s_seed, s_out, s_lut, s_resume);
    if (sample->parsed()) return cmd_sample(p_space, p_ckpt, p_count, p_seed, p_out);
    if (train->parsed()) return cmd_train(t_config, t_arch, t_seed, t_out);
    if (evalc->parsed()) return cmd_eval(e_config, e_arch, e_weights, e_seed, e_lut);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
