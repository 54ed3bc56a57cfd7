#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dnas/run_config.hpp"
#include "dnas/search_space.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(DNASFORGE_BIN) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path("/tmp/dnas_cli_" + name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string toy_space_json() {
  dnas::space::SpaceSpec s;
  s.kind = dnas::space::SpaceSpec::Kind::kFbnet;
  s.input = {1, 8, 2};
  s.macro.rows = {{"conv3x3", 6, 1, 1},
                  {"tbs", 6, 2, 1},
                  {"avgpool", 0, 1, 1},
                  {"fc", 0, 1, 1}};
  s.micro = {{dnas::space::MicroBlockSpec::Type::kConv, 1, 3, 1},
             {dnas::space::MicroBlockSpec::Type::kSkip}};
  return s.to_json();
}

std::string toy_config_json(const std::string& space_path, const std::string& lut_path,
                            const std::string& out_dir) {
  json j;
  j["seed"] = 5;
  j["out"] = out_dir;
  j["space"] = space_path;
  j["lut"] = lut_path;
  j["dataset"] = {{"kind", "synth_blobs"}, {"n", 80}, {"classes", 2}, {"size", 8},
                  {"noise_sigma", 0.0}};
  j["search"] = {{"epochs", 4},
                 {"warmup", 1},
                 {"batch_size", 16},
                 {"samples_to_draw", 2},
                 {"finalize_epochs", 2},
                 {"loss", {{"mode", "latency"}, {"alpha", 1.0}, {"beta", 0.3}}}};
  return j.dump(2);
}

}  // namespace

TEST_CASE("cli: analyze --table-2-2 prints the reference cells") {
  TempDir dir("table");
  auto r = run_cli("analyze --table-2-2 --out " + dir.path + "/t.json");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("9216") != std::string::npos);
  CHECK(r.output.find("115605504") != std::string::npos);
  json t = json::parse(slurp(dir.path + "/t.json"));
  CHECK(t.size() == 10);
}

TEST_CASE("cli: lut-gen output validates, covers the space, and is byte-stable") {
  TempDir dir("lut");
  const std::string space_path = dir.path + "/space.json";
  dnas::write_file(space_path, toy_space_json());
  auto r1 = run_cli("lut-gen " + space_path + " --model analytic_macs --out " + dir.path +
                    "/lut1.json");
  CHECK(r1.exit_code == 0);
  auto r2 = run_cli("lut-gen " + space_path + " --model analytic_macs --out " + dir.path +
                    "/lut2.json");
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir.path + "/lut1.json") == slurp(dir.path + "/lut2.json"));

  auto table = dnas::cost::LatencyTable::from_json(slurp(dir.path + "/lut1.json"));
  auto net = dnas::space::build_space(dnas::space::SpaceSpec::from_json(toy_space_json()));
  for (const auto& l : net.layers)
    for (const auto& c : l.candidates) CHECK_NOTHROW(table.lookup(c.key));

  auto bad = run_cli("lut-gen " + space_path + " --model bogus --out " + dir.path + "/x.json");
  CHECK(bad.exit_code != 0);
  CHECK(bad.output.find("bogus") != std::string::npos);
}

TEST_CASE("cli: search produces the promised artifacts and is reproducible") {
  TempDir dir("search");
  const std::string space_path = dir.path + "/space.json";
  dnas::write_file(space_path, toy_space_json());
  run_cli("lut-gen " + space_path + " --model analytic_macs --out " + dir.path + "/lut.json");
  const std::string cfg_path = dir.path + "/config.json";
  dnas::write_file(cfg_path, toy_config_json(space_path, dir.path + "/lut.json",
                                             dir.path + "/run1"));

  auto r1 = run_cli("search --config " + cfg_path);
  CHECK(r1.exit_code == 0);
  CHECK(fs::exists(dir.path + "/run1/trace.csv"));
  CHECK(fs::exists(dir.path + "/run1/result.json"));
  CHECK(fs::exists(dir.path + "/run1/ckpt_final.json"));
  CHECK(fs::exists(dir.path + "/run1/config_resolved.json"));
  CHECK(fs::exists(dir.path + "/run1/arch_0.json"));

  // trace has one row per epoch
  const std::string trace = slurp(dir.path + "/run1/trace.csv");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 5);  // header + 4 epochs

  auto r2 = run_cli("search --config " + cfg_path + " --out " + dir.path + "/run2");
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir.path + "/run2/trace.csv") == trace);
  CHECK(slurp(dir.path + "/run2/result.json") == slurp(dir.path + "/run1/result.json"));
}

TEST_CASE("cli: sample is deterministic given a seed") {
  TempDir dir("sample");
  const std::string space_path = dir.path + "/space.json";
  dnas::write_file(space_path, toy_space_json());
  run_cli("lut-gen " + space_path + " --model analytic_macs --out " + dir.path + "/lut.json");
  const std::string cfg_path = dir.path + "/config.json";
  dnas::write_file(cfg_path, toy_config_json(space_path, dir.path + "/lut.json",
                                             dir.path + "/run"));
  REQUIRE(run_cli("search --config " + cfg_path).exit_code == 0);

  const std::string ckpt = dir.path + "/run/ckpt_final.json";
  auto s1 = run_cli("sample --space " + space_path + " --checkpoint " + ckpt +
                    " --count 3 --seed 9 --out " + dir.path + "/s1");
  auto s2 = run_cli("sample --space " + space_path + " --checkpoint " + ckpt +
                    " --count 3 --seed 9 --out " + dir.path + "/s2");
  CHECK(s1.exit_code == 0);
  CHECK(s2.exit_code == 0);
  for (int i = 0; i < 3; ++i)
    CHECK(slurp(dir.path + "/s1/arch_" + std::to_string(i) + ".json") ==
          slurp(dir.path + "/s2/arch_" + std::to_string(i) + ".json"));
}

TEST_CASE("cli: analyze on a space with a lut adds a latency column and totals") {
  TempDir dir("analyze");
  const std::string space_path = dir.path + "/space.json";
  dnas::write_file(space_path, toy_space_json());
  run_cli("lut-gen " + space_path + " --model macs_plus_memory --out " + dir.path + "/lut.json");
  auto r = run_cli("analyze " + space_path + " --lut " + dir.path + "/lut.json --out " +
                   dir.path + "/report.json");
  CHECK(r.exit_code == 0);
  json report = json::parse(slurp(dir.path + "/report.json"));
  CHECK(report["totals"].contains("latency_us"));
  double sum = 0.0;
  for (const auto& row : report["rows"]) sum += row.value("latency_us", 0.0);
  CHECK(sum == doctest::Approx(report["totals"]["latency_us"].get<double>()).epsilon(1e-9));
}

TEST_CASE("cli: train then eval an exported architecture") {
  TempDir dir("train");
  const std::string space_path = dir.path + "/space.json";
  dnas::write_file(space_path, toy_space_json());
  run_cli("lut-gen " + space_path + " --model analytic_macs --out " + dir.path + "/lut.json");
  const std::string cfg_path = dir.path + "/config.json";
  dnas::write_file(cfg_path, toy_config_json(space_path, dir.path + "/lut.json",
                                             dir.path + "/run"));
  REQUIRE(run_cli("search --config " + cfg_path).exit_code == 0);

  auto t = run_cli("train --config " + cfg_path + " --arch " + dir.path + "/run/arch_0.json" +
                   " --out " + dir.path + "/trained");
  CHECK(t.exit_code == 0);
  CHECK(fs::exists(dir.path + "/trained/weights.json"));

  auto e = run_cli("eval --config " + cfg_path + " --arch " + dir.path + "/run/arch_0.json" +
                   " --weights " + dir.path + "/trained/weights.json");
  CHECK(e.exit_code == 0);
  CHECK(e.output.find("accuracy") != std::string::npos);
}

TEST_CASE("cli: all-32-bit quant arch evaluates identically across sibling spaces") {
  TempDir dir("quant32");
  dnas::space::SpaceSpec a;
  a.kind = dnas::space::SpaceSpec::Kind::kMixedPrecision;
  a.input = {1, 8, 2};
  a.backbone = {4, {4, 6}, {1, 2}, 1};
  a.precisions.pairs = {{4, 4}, {32, 32}};
  dnas::space::SpaceSpec b = a;
  b.precisions.pairs = {{8, 8}, {32, 32}};
  dnas::write_file(dir.path + "/space_a.json", a.to_json());
  dnas::write_file(dir.path + "/space_b.json", b.to_json());

  // all-32 is candidate index 1 in both spaces
  auto make_arch = [&](const dnas::SuperNet& n) {
    dnas::ArchitectureSample s;
    for (const auto& l : n.layers) {
      s.indices.push_back(l.searchable() ? 1 : 0);
      s.keys.push_back(l.candidates[static_cast<std::size_t>(s.indices.back())].key);
    }
    return s;
  };
  auto net_a = dnas::space::build_space(a);
  auto net_b = dnas::space::build_space(b);
  dnas::write_file(dir.path + "/arch_a.json", make_arch(net_a).to_json());
  dnas::write_file(dir.path + "/arch_b.json", make_arch(net_b).to_json());

  json cfg;
  cfg["seed"] = 3;
  cfg["space"] = dir.path + "/space_a.json";
  cfg["dataset"] = {{"kind", "synth_blobs"}, {"n", 40}, {"classes", 2}, {"size", 8},
                    {"noise_sigma", 0.0}};
  cfg["search"] = {{"loss", {{"mode", "quant_size"}, {"gamma", 1.0}}}};
  dnas::write_file(dir.path + "/cfg_a.json", cfg.dump(2));
  cfg["space"] = dir.path + "/space_b.json";
  dnas::write_file(dir.path + "/cfg_b.json", cfg.dump(2));

  auto ra = run_cli("eval --config " + dir.path + "/cfg_a.json --arch " + dir.path +
                    "/arch_a.json");
  auto rb = run_cli("eval --config " + dir.path + "/cfg_b.json --arch " + dir.path +
                    "/arch_b.json");
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);
  // identical fresh-init evaluation: the all-32 candidates are unquantized in both
  auto ce_of = [](const std::string& out) {
    const auto at = out.find('{');
    REQUIRE(at != std::string::npos);
    return json::parse(out.substr(at)).at("ce").get<double>();
  };
  CHECK(std::abs(ce_of(ra.output) - ce_of(rb.output)) < 1e-12);
}

TEST_CASE("cli: config validation lists every problem at once") {
  TempDir dir("badcfg");
  json bad;
  bad["seed"] = 1;
  bad["dataset"] = {{"kind", "nonsense"}};
  bad["search"] = {{"epochs", 0}, {"batch_size", -1}};
  bad["mystery_key"] = true;
  dnas::write_file(dir.path + "/bad.json", bad.dump(2));
  auto r = run_cli("search --config " + dir.path + "/bad.json");
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("mystery_key") != std::string::npos);
  CHECK(r.output.find("epochs") != std::string::npos);
  CHECK(r.output.find("batch_size") != std::string::npos);
  CHECK(r.output.find("nonsense") != std::string::npos);
  CHECK(r.output.find("space") != std::string::npos);
}

TEST_CASE("cli: resume from a checkpoint reproduces the uninterrupted trace") {
  TempDir dir("resume");
  const std::string space_path = dir.path + "/space.json";
  dnas::write_file(space_path, toy_space_json());
  run_cli("lut-gen " + space_path + " --model analytic_macs --out " + dir.path + "/lut.json");

  json cfg = json::parse(toy_config_json(space_path, dir.path + "/lut.json", dir.path + "/full"));
  cfg["search"]["epochs"] = 6;
  cfg["search"]["checkpoint_every"] = 3;
  dnas::write_file(dir.path + "/config.json", cfg.dump(2));

  REQUIRE(run_cli("search --config " + dir.path + "/config.json").exit_code == 0);
  const std::string full_trace = slurp(dir.path + "/full/trace.csv");

  auto rr = run_cli("search --config " + dir.path + "/config.json --out " + dir.path +
                    "/resumed --resume " + dir.path + "/full/ckpt_epoch_2.json");
  CHECK(rr.exit_code == 0);
  CHECK(slurp(dir.path + "/resumed/trace.csv") == full_trace);
}
