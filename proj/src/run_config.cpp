#include "dnas/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dnas {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot write '" + path + "'");
  f << content;
}

namespace {

void collect_unknown_keys(const json& j, const std::set<std::string>& known,
                          const std::string& where, std::vector<std::string>& errs) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) errs.push_back("unknown key '" + it.key() + "' in " + where);
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  std::vector<std::string> errs;
  collect_unknown_keys(j,
                       {"seed", "out", "space", "space_inline", "lut", "dataset", "eval_ratio",
                        "split_ratio", "search"},
                       "top level", errs);
  RunConfig cfg;
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.out_dir = j.value("out", std::string("run_out"));
  cfg.space_path = j.value("space", std::string());
  if (j.contains("space_inline"))
    cfg.space_inline = space::SpaceSpec::from_json(j.at("space_inline").dump());
  cfg.lut_path = j.value("lut", std::string());
  cfg.eval_ratio = j.value("eval_ratio", 0.2);
  cfg.split_ratio = j.value("split_ratio", 0.8);

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    collect_unknown_keys(d, {"kind", "n", "classes", "size", "noise_sigma", "path", "limit"},
                         "dataset", errs);
    cfg.data.kind = d.value("kind", std::string("synth_blobs"));
    cfg.data.n = d.value("n", 512);
    cfg.data.classes = d.value("classes", 4);
    cfg.data.size = d.value("size", 12);
    cfg.data.noise_sigma = d.value("noise_sigma", 0.0);
    cfg.data.path = d.value("path", std::string());
    cfg.data.limit = d.value("limit", 2000);
  }

  if (j.contains("search")) {
    const json& s = j.at("search");
    collect_unknown_keys(s,
                         {"epochs", "warmup", "t0", "eta", "w_lr", "w_momentum", "theta_lr",
                          "adam_beta1", "adam_beta2", "adam_eps", "batch_size",
                          "samples_to_draw", "finalize_epochs", "checkpoint_every", "loss"},
                         "search", errs);
    auto& sc = cfg.search;
    sc.epochs = s.value("epochs", sc.epochs);
    sc.warmup = s.value("warmup", sc.warmup);
    sc.t0 = s.value("t0", sc.t0);
    sc.eta = s.value("eta", sc.eta);
    sc.w_lr = s.value("w_lr", sc.w_lr);
    sc.w_momentum = s.value("w_momentum", sc.w_momentum);
    sc.theta_lr = s.value("theta_lr", sc.theta_lr);
    sc.adam_beta1 = s.value("adam_beta1", sc.adam_beta1);
    sc.adam_beta2 = s.value("adam_beta2", sc.adam_beta2);
    sc.adam_eps = s.value("adam_eps", sc.adam_eps);
    sc.batch_size = s.value("batch_size", sc.batch_size);
    sc.samples_to_draw = s.value("samples_to_draw", sc.samples_to_draw);
    sc.finalize_epochs = s.value("finalize_epochs", sc.finalize_epochs);
    sc.checkpoint_every = s.value("checkpoint_every", sc.checkpoint_every);
    if (s.contains("loss")) {
      const json& l = s.at("loss");
      collect_unknown_keys(l, {"mode", "alpha", "beta", "gamma"}, "search.loss", errs);
      sc.loss.mode = loss_mode_from_name(l.value("mode", std::string("latency")));
      sc.loss.alpha = l.value("alpha", sc.loss.alpha);
      sc.loss.beta = l.value("beta", sc.loss.beta);
      sc.loss.gamma = l.value("gamma", sc.loss.gamma);
    }
  }

  // configuration problems are reported all at once
  if (cfg.space_path.empty() && !cfg.space_inline)
    errs.push_back("config needs 'space' (path) or 'space_inline'");
  if (!cfg.space_path.empty() && cfg.space_inline)
    errs.push_back("'space' and 'space_inline' are mutually exclusive");
  if (cfg.data.kind != "synth_blobs" && cfg.data.kind != "cifar10")
    errs.push_back("dataset.kind '" + cfg.data.kind + "' must be synth_blobs or cifar10");
  if (cfg.data.kind == "cifar10" && cfg.data.path.empty())
    errs.push_back("cifar10 dataset needs 'path'");
  if (cfg.eval_ratio <= 0.0 || cfg.eval_ratio >= 1.0)
    errs.push_back("eval_ratio must be in (0,1)");
  if (cfg.split_ratio <= 0.0 || cfg.split_ratio >= 1.0)
    errs.push_back("split_ratio must be in (0,1)");
  if (cfg.search.loss.mode == LossMode::kLatency && cfg.lut_path.empty())
    errs.push_back("latency loss needs a 'lut' path");
  for (const auto& e : cfg.search.validate()) errs.push_back("search: " + e);

  if (!errs.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += "\n  - " + e;
    fail(msg);
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) { return from_json(read_file(path)); }

std::string RunConfig::resolved_json() const {
  json j;
  j["seed"] = seed;
  j["out"] = out_dir;
  if (!space_path.empty()) j["space"] = space_path;
  if (space_inline) j["space_inline"] = json::parse(space_inline->to_json());
  if (!lut_path.empty()) j["lut"] = lut_path;
  j["dataset"] = {{"kind", data.kind},         {"n", data.n},
                  {"classes", data.classes},   {"size", data.size},
                  {"noise_sigma", data.noise_sigma}, {"path", data.path},
                  {"limit", data.limit}};
  j["eval_ratio"] = eval_ratio;
  j["split_ratio"] = split_ratio;
  j["search"] = {{"epochs", search.epochs},
                 {"warmup", search.effective_warmup()},
                 {"t0", search.t0},
                 {"eta", search.eta},
                 {"w_lr", search.w_lr},
                 {"w_momentum", search.w_momentum},
                 {"theta_lr", search.theta_lr},
                 {"adam_beta1", search.adam_beta1},
                 {"adam_beta2", search.adam_beta2},
                 {"adam_eps", search.adam_eps},
                 {"batch_size", search.batch_size},
                 {"samples_to_draw", search.samples_to_draw},
                 {"finalize_epochs", search.finalize_epochs},
                 {"checkpoint_every", search.checkpoint_every},
                 {"loss",
                  {{"mode", loss_mode_name(search.loss.mode)},
                   {"alpha", search.loss.alpha},
                   {"beta", search.loss.beta},
                   {"gamma", search.loss.gamma}}}};
  return j.dump(2) + "\n";
}

std::string RunConfig::hash() const {
  // the output directory is operational, not part of the computation identity
  json j = json::parse(resolved_json());
  j.erase("out");
  return fnv1a_hex(j.dump());
}

space::SpaceSpec RunConfig::load_space() const {
  if (space_inline) return *space_inline;
  return space::SpaceSpec::from_json(read_file(space_path));
}

Dataset RunConfig::build_dataset() const {
  if (data.kind == "synth_blobs")
    return synth_blobs(data.n, data.classes, data.size, data.noise_sigma, mix_seed(seed, 1));
  Dataset full = load_cifar10_bin(data.path);
  // desk-scale default: restrict to the first `classes` labels, cap at `limit`
  std::vector<int> keep;
  for (int i = 0; i < full.n() && static_cast<int>(keep.size()) < data.limit; ++i)
    if (full.labels[static_cast<std::size_t>(i)] < data.classes) keep.push_back(i);
  if (keep.empty()) fail("cifar10 subset is empty");
  Dataset sub = full.subset(keep);
  sub.class_count = data.classes;
  return sub;
}

RunConfig::Splits RunConfig::build_splits() const {
  Dataset full = build_dataset();
  auto [trainval, evald] = split_dataset(full, 1.0 - eval_ratio, mix_seed(seed, 2));
  auto [x_w, x_theta] = split_dataset(trainval, split_ratio, mix_seed(seed, 3));
  return {std::move(x_w), std::move(x_theta), std::move(evald)};
}

}  // namespace dnas
