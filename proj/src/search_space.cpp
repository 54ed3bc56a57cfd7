#include "dnas/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace dnas::space {

using cost::BlockKey;
using cost::LayerConfig;
using cost::Variant;
using nlohmann::json;

std::string MicroBlockSpec::name() const {
  switch (type) {
    case Type::kSkip: return "skip";
    case Type::kZero: return "zero";
    case Type::kCsc: return "csc_e" + std::to_string(e);
    case Type::kConv: {
      std::string s = "k" + std::to_string(k) + "_e" + std::to_string(e);
      if (g > 1) s += "_g" + std::to_string(g);
      return s;
    }
  }
  fail("MicroBlockSpec: bad type");
}

void PrecisionSpec::validate() const {
  if (pairs.size() < 2) fail("PrecisionSpec: need at least 2 precision candidates");
  std::set<std::pair<int, int>> seen;
  for (auto [w, a] : pairs) {
    const bool w_ok = w == 0 || (w >= 1 && w <= 8) || w == 32;
    const bool a_ok = (a >= 1 && a <= 8) || a == 32;
    if (!w_ok || !a_ok)
      fail("PrecisionSpec: invalid pair (" + std::to_string(w) + "," + std::to_string(a) + ")");
    if (!seen.insert({w, a}).second)
      fail("PrecisionSpec: duplicate pair (" + std::to_string(w) + "," + std::to_string(a) + ")");
  }
}

namespace {

int conv_out_size(int in_sz, int k, int stride, int pad) {
  const int out = (in_sz + 2 * pad - k) / stride + 1;
  if (out <= 0) fail("space: non-positive spatial size");
  return out;
}

BlockKey make_key(const std::string& type, int in_c, int in_sz, int stride, int e, int k, int g,
                  int wb = 32, int ab = 32) {
  BlockKey key;
  key.block_type = type;
  key.in_c = in_c;
  key.in_h = in_sz;
  key.in_w = in_sz;
  key.stride = stride;
  key.expansion = e;
  key.kernel = k;
  key.groups = g;
  key.weight_bits = wb;
  key.act_bits = ab;
  return key;
}

cost::EdgeCost edge_cost_of(const std::vector<LayerConfig>& subs, int wb, int ab) {
  cost::EdgeCost e;
  for (const auto& l : subs) {
    e.params += static_cast<double>(cost::params_of(l));
    e.macs += static_cast<double>(cost::macs_of(l));
  }
  e.weight_bits = wb;
  e.act_bits = ab;
  return e;
}

CandidateBlock make_identity_candidate(bool zero, int in_ch, int in_sz, int stride, int out_ch) {
  if (stride != 1 || in_ch != out_ch)
    fail(std::string(zero ? "zero" : "skip") +
         " candidate requires stride 1 and matching channels, got stride=" +
         std::to_string(stride) + " " + std::to_string(in_ch) + "->" + std::to_string(out_ch));
  CandidateBlock c;
  c.zero = zero;
  c.key = make_key(zero ? "zero" : "skip", in_ch, in_sz, 1, 0, 0, 1, 0, 32);
  c.edge_cost = cost::EdgeCost{0.0, 0.0, 0, 32};
  return c;
}

}  // namespace

CandidateBlock build_block(const MicroBlockSpec& spec, int in_ch, int out_ch, int stride,
                           int in_sz) {
  if (spec.type == MicroBlockSpec::Type::kSkip)
    return make_identity_candidate(false, in_ch, in_sz, stride, out_ch);
  if (spec.type == MicroBlockSpec::Type::kZero)
    return make_identity_candidate(true, in_ch, in_sz, stride, out_ch);
  if (spec.type == MicroBlockSpec::Type::kCsc)
    return build_shift_block(in_ch, out_ch, stride, spec.e, in_sz);

  const int g = spec.g, k = spec.k, e = spec.e;
  const int mid = e * in_ch;
  if (in_ch % g != 0 || mid % g != 0 || out_ch % g != 0)
    fail("build_block: channels (" + std::to_string(in_ch) + "," + std::to_string(mid) + "," +
         std::to_string(out_ch) + ") not divisible by groups=" + std::to_string(g));
  const int out_sz = conv_out_size(in_sz, k, stride, k / 2);

  auto seq = std::make_unique<Sequential>();
  seq->append(std::make_unique<Conv2d>(in_ch, mid, 1, 1, 0, g));
  if (g > 1) seq->append(std::make_unique<ChannelShuffle>(g));
  seq->append(std::make_unique<BatchNorm2d>(mid));
  seq->append(std::make_unique<ReLU>());
  seq->append(std::make_unique<Conv2d>(mid, mid, k, stride, k / 2, mid));
  seq->append(std::make_unique<BatchNorm2d>(mid));
  seq->append(std::make_unique<ReLU>());
  seq->append(std::make_unique<Conv2d>(mid, out_ch, 1, 1, 0, g));
  if (g > 1) seq->append(std::make_unique<ChannelShuffle>(g));
  seq->append(std::make_unique<BatchNorm2d>(out_ch));
  // no activation after the projection conv

  CandidateBlock c;
  c.body = std::move(seq);
  c.residual = (stride == 1 && in_ch == out_ch);
  c.key = make_key(spec.name() + "_o" + std::to_string(out_ch), in_ch, in_sz, stride, e, k, g);

  LayerConfig expand{g > 1 ? Variant::kGroup : Variant::kPointwise, in_ch, mid, 1, in_sz, 1, g};
  LayerConfig dw{Variant::kDepthwise, mid, mid, k, out_sz, 1, mid};
  LayerConfig project{g > 1 ? Variant::kGroup : Variant::kPointwise, mid, out_ch, 1, out_sz, 1, g};
  c.sublayers = {expand, dw, project};
  c.edge_cost = edge_cost_of(c.sublayers, 32, 32);
  return c;
}

CandidateBlock build_shift_block(int in_ch, int out_ch, int stride, int e, int in_sz) {
  const int mid = e * in_ch;
  const int out_sz = conv_out_size(in_sz, 1, stride, 0);

  auto seq = std::make_unique<Sequential>();
  seq->append(std::make_unique<BatchNorm2d>(in_ch));
  seq->append(std::make_unique<ReLU>());
  seq->append(std::make_unique<Conv2d>(in_ch, mid, 1, 1, 0, 1));
  seq->append(std::make_unique<BatchNorm2d>(mid));
  seq->append(std::make_unique<ReLU>());
  seq->append(std::make_unique<Shift>(3));
  // stride is applied by the projection conv, after spatial mixing
  seq->append(std::make_unique<Conv2d>(mid, out_ch, 1, stride, 0, 1));

  CandidateBlock c;
  c.body = std::move(seq);
  c.residual = (stride == 1 && in_ch == out_ch);
  c.key = make_key("csc_e" + std::to_string(e) + "_o" + std::to_string(out_ch), in_ch, in_sz,
                   stride, e, 3, 1);

  LayerConfig expand{Variant::kPointwise, in_ch, mid, 1, in_sz, 1, 1};
  LayerConfig sh{Variant::kShift, mid, mid, 3, in_sz, 1, 1};
  LayerConfig project{Variant::kPointwise, mid, out_ch, 1, out_sz, 1, 1};
  c.sublayers = {expand, sh, project};
  c.edge_cost = edge_cost_of(c.sublayers, 32, 32);
  return c;
}

CandidateBlock build_quant_res_block(int in_ch, int out_ch, int stride, int weight_bits,
                                     int act_bits, int in_sz) {
  const int out_sz = conv_out_size(in_sz, 3, stride, 1);
  auto act = [&]() -> std::unique_ptr<Module> {
    if (act_bits == quant::kFullPrecision) return std::make_unique<ReLU>();
    return std::make_unique<PactActivation>(act_bits);
  };

  auto main = std::make_unique<Sequential>();
  main->append(std::make_unique<Conv2d>(in_ch, out_ch, 3, stride, 1, 1, weight_bits));
  main->append(std::make_unique<BatchNorm2d>(out_ch));
  main->append(act());
  main->append(std::make_unique<Conv2d>(out_ch, out_ch, 3, 1, 1, 1, weight_bits));
  main->append(std::make_unique<BatchNorm2d>(out_ch));

  std::unique_ptr<Module> shortcut;
  const bool project = !(stride == 1 && in_ch == out_ch);
  if (project) {
    auto sc = std::make_unique<Sequential>();
    sc->append(std::make_unique<Conv2d>(in_ch, out_ch, 1, stride, 0, 1, weight_bits));
    sc->append(std::make_unique<BatchNorm2d>(out_ch));
    shortcut = std::move(sc);
  }

  CandidateBlock c;
  c.body = std::make_unique<ResidualBlock>(std::move(main), std::move(shortcut), act());
  c.residual = false;  // the residual add lives inside the block
  c.key = make_key("resblock_o" + std::to_string(out_ch), in_ch, in_sz, stride, 0, 3, 1,
                   weight_bits, act_bits);

  LayerConfig conv1{Variant::kSpatial, in_ch, out_ch, 3, out_sz, 1, 1};
  LayerConfig conv2{Variant::kSpatial, out_ch, out_ch, 3, out_sz, 1, 1};
  c.sublayers = {conv1, conv2};
  if (project)
    c.sublayers.push_back(LayerConfig{Variant::kPointwise, in_ch, out_ch, 1, out_sz, 1, 1});
  c.edge_cost = edge_cost_of(c.sublayers, weight_bits, act_bits);
  return c;
}

namespace {

SearchLayer make_fixed(const std::string& name, CandidateBlock block) {
  SearchLayer l;
  l.name = name;
  l.candidates.push_back(std::move(block));
  return l;
}

CandidateBlock fixed_conv(const std::string& tag, Variant variant, int in_ch, int out_ch, int k,
                          int stride, int pad, int in_sz) {
  auto seq = std::make_unique<Sequential>();
  seq->append(std::make_unique<Conv2d>(in_ch, out_ch, k, stride, pad, 1));
  seq->append(std::make_unique<BatchNorm2d>(out_ch));
  seq->append(std::make_unique<ReLU>());
  CandidateBlock c;
  c.body = std::move(seq);
  c.key = make_key(tag + "_o" + std::to_string(out_ch), in_ch, in_sz, stride, 0, k, 1);
  const int out_sz = conv_out_size(in_sz, k, stride, pad);
  c.sublayers = {LayerConfig{variant, in_ch, out_ch, k, out_sz, 1, 1}};
  c.edge_cost = edge_cost_of(c.sublayers, 32, 32);
  return c;
}

CandidateBlock fixed_maxpool(int ch, int in_sz) {
  CandidateBlock c;
  c.body = std::make_unique<MaxPool2>();
  c.key = make_key("maxpool2", ch, in_sz, 2, 0, 2, 1);
  c.sublayers = {LayerConfig{Variant::kMaxpool, ch, ch, 2, in_sz / 2, 1, 1}};
  c.edge_cost = cost::EdgeCost{};
  return c;
}

CandidateBlock fixed_avgpool(int ch, int in_sz) {
  CandidateBlock c;
  c.body = std::make_unique<GlobalAvgPool>();
  c.key = make_key("avgpool", ch, in_sz, 1, 0, in_sz, 1);
  c.sublayers = {LayerConfig{Variant::kAvgpool, ch, ch, in_sz, 1, 1, 1}};
  c.edge_cost = cost::EdgeCost{};
  return c;
}

CandidateBlock fixed_fc(int in_f, int classes) {
  CandidateBlock c;
  c.body = std::make_unique<Linear>(in_f, classes);
  c.key = make_key("fc_o" + std::to_string(classes), in_f, 1, 1, 0, 1, 1);
  c.sublayers = {LayerConfig{Variant::kFc, in_f, classes, 1, 1, 1, 1}};
  c.edge_cost = edge_cost_of(c.sublayers, 32, 32);
  return c;
}

int round_up_multiple(int x, int m) { return ((x + m - 1) / m) * m; }

}  // namespace

SuperNet fbnet_space(const SpaceInput& input, const MacroSpec& macro,
                     const std::vector<MicroBlockSpec>& micro, double width_scale) {
  if (micro.empty()) fail("fbnet_space: empty candidate list");
  if (width_scale <= 0.0) fail("fbnet_space: width_scale must be > 0");
  int g_max = 1;
  for (const auto& m : micro)
    if (m.type == MicroBlockSpec::Type::kConv) g_max = std::max(g_max, m.g);
  auto scale_ch = [&](int f) {
    const int scaled = static_cast<int>(std::ceil(f * width_scale));
    if (scaled < 1) fail("fbnet_space: scaled channel count < 1");
    return round_up_multiple(scaled, g_max);
  };

  SuperNet net;
  net.in_channels = input.channels;
  net.input_res = input.resolution;
  net.class_count = input.classes;

  int cur_c = input.channels;
  int cur_sz = input.resolution;
  int li = 0;
  int tbs = 0;
  for (const auto& row : macro.rows) {
    for (int r = 0; r < std::max(1, row.n); ++r) {
      const int stride = (r == 0) ? row.s : 1;
      const std::string lname = "l" + std::to_string(li);
      if (row.block == "tbs") {
        const int out = scale_ch(row.f);
        SearchLayer layer;
        layer.name = lname + ".tbs" + std::to_string(tbs++);
        for (const auto& m : micro) {
          const bool identity_like =
              m.type == MicroBlockSpec::Type::kSkip || m.type == MicroBlockSpec::Type::kZero;
          if (identity_like && (stride != 1 || cur_c != out)) continue;
          layer.candidates.push_back(build_block(m, cur_c, out, stride, cur_sz));
        }
        if (layer.candidates.size() < 2)
          fail("fbnet_space: layer '" + layer.name + "' has fewer than 2 legal candidates");
        layer.theta = Tensor::zeros({static_cast<int>(layer.candidates.size())}, true);
        net.layers.push_back(std::move(layer));
        cur_c = out;
        cur_sz = conv_out_size(cur_sz, 3, stride, 1);
      } else if (row.block == "conv3x3") {
        const int out = scale_ch(row.f);
        net.layers.push_back(make_fixed(
            lname + ".stem", fixed_conv("conv3x3", Variant::kSpatial, cur_c, out, 3, stride, 1,
                                        cur_sz)));
        cur_c = out;
        cur_sz = conv_out_size(cur_sz, 3, stride, 1);
      } else if (row.block == "conv1x1") {
        const int out = scale_ch(row.f);
        net.layers.push_back(make_fixed(
            lname + ".conv1x1",
            fixed_conv("conv1x1", Variant::kPointwise, cur_c, out, 1, stride, 0, cur_sz)));
        cur_c = out;
        cur_sz = conv_out_size(cur_sz, 1, stride, 0);
      } else if (row.block == "maxpool2") {
        net.layers.push_back(make_fixed(lname + ".maxpool", fixed_maxpool(cur_c, cur_sz)));
        cur_sz /= 2;
      } else if (row.block == "avgpool") {
        net.layers.push_back(make_fixed(lname + ".avgpool", fixed_avgpool(cur_c, cur_sz)));
        cur_sz = 1;
      } else if (row.block == "fc") {
        net.layers.push_back(make_fixed(lname + ".fc", fixed_fc(cur_c, input.classes)));
      } else {
        fail("fbnet_space: unknown macro block '" + row.block + "'");
      }
      ++li;
    }
  }
  net.validate_shapes();
  return net;
}

SuperNet mixed_precision_space(const SpaceInput& input, const BackboneSpec& backbone,
                               const PrecisionSpec& precisions) {
  precisions.validate();
  if (backbone.stage_channels.size() != backbone.stage_strides.size())
    fail("mixed_precision_space: stage_channels/stage_strides size mismatch");
  if (backbone.blocks_per_stage < 1) fail("mixed_precision_space: blocks_per_stage must be >= 1");

  SuperNet net;
  net.in_channels = input.channels;
  net.input_res = input.resolution;
  net.class_count = input.classes;

  int cur_c = backbone.stem_channels;
  int cur_sz = input.resolution;
  net.layers.push_back(make_fixed(
      "l0.stem",
      fixed_conv("conv3x3", Variant::kSpatial, input.channels, cur_c, 3, 1, 1, cur_sz)));

  int li = 1;
  for (std::size_t s = 0; s < backbone.stage_channels.size(); ++s) {
    const int out = backbone.stage_channels[s];
    for (int b = 0; b < backbone.blocks_per_stage; ++b) {
      const int stride = (b == 0) ? backbone.stage_strides[s] : 1;
      SearchLayer layer;
      layer.name = "l" + std::to_string(li) + ".g" + std::to_string(s + 1) + "b" +
                   std::to_string(b + 1);
      for (auto [wb, ab] : precisions.pairs) {
        if (wb == 0) {
          if (stride != 1 || cur_c != out) continue;
          layer.candidates.push_back(make_identity_candidate(false, cur_c, cur_sz, 1, out));
        } else {
          layer.candidates.push_back(build_quant_res_block(cur_c, out, stride, wb, ab, cur_sz));
        }
      }
      if (layer.candidates.size() < 2)
        fail("mixed_precision_space: layer '" + layer.name + "' has fewer than 2 candidates");
      layer.theta = Tensor::zeros({static_cast<int>(layer.candidates.size())}, true);
      net.layers.push_back(std::move(layer));
      cur_c = out;
      cur_sz = conv_out_size(cur_sz, 3, stride, 1);
      ++li;
    }
  }
  net.layers.push_back(make_fixed("l" + std::to_string(li) + ".avgpool",
                                  fixed_avgpool(cur_c, cur_sz)));
  net.layers.push_back(make_fixed("l" + std::to_string(li + 1) + ".fc",
                                  fixed_fc(cur_c, input.classes)));
  net.validate_shapes();
  return net;
}

SuperNet build_space(const SpaceSpec& spec) {
  SuperNet net = spec.kind == SpaceSpec::Kind::kFbnet
                     ? fbnet_space(spec.input, spec.macro, spec.micro, spec.width_scale)
                     : mixed_precision_space(spec.input, spec.backbone, spec.precisions);
  net.space_signature = spec.to_json();
  return net;
}

// ---- JSON ----

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) fail("space file: unknown key '" + it.key() + "' in " + where);
}

}  // namespace

std::string SpaceSpec::to_json() const {
  json j;
  j["schema"] = 1;
  j["kind"] = kind == Kind::kFbnet ? "fbnet" : "mixed_precision";
  j["input"] = {{"channels", input.channels},
                {"resolution", input.resolution},
                {"classes", input.classes}};
  if (kind == Kind::kFbnet) {
    j["width_scale"] = width_scale;
    j["macro"] = json::array();
    for (const auto& r : macro.rows)
      j["macro"].push_back({{"block", r.block}, {"f", r.f}, {"n", r.n}, {"s", r.s}});
    j["micro"] = json::array();
    for (const auto& m : micro) {
      json mj;
      switch (m.type) {
        case MicroBlockSpec::Type::kConv:
          mj = {{"type", "conv"}, {"e", m.e}, {"k", m.k}, {"g", m.g}};
          break;
        case MicroBlockSpec::Type::kCsc: mj = {{"type", "csc"}, {"e", m.e}}; break;
        case MicroBlockSpec::Type::kSkip: mj = {{"type", "skip"}}; break;
        case MicroBlockSpec::Type::kZero: mj = {{"type", "zero"}}; break;
      }
      j["micro"].push_back(std::move(mj));
    }
  } else {
    j["backbone"] = {{"stem_channels", backbone.stem_channels},
                     {"stage_channels", backbone.stage_channels},
                     {"stage_strides", backbone.stage_strides},
                     {"blocks_per_stage", backbone.blocks_per_stage}};
    json pairs = json::array();
    for (auto [w, a] : precisions.pairs) pairs.push_back({w, a});
    j["precisions"] = {{"pairs", pairs}};
  }
  return j.dump(2) + "\n";
}

SpaceSpec SpaceSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  reject_unknown_keys(j, {"schema", "kind", "input", "width_scale", "macro", "micro", "backbone",
                          "precisions"},
                      "top level");
  if (j.value("schema", 0) != 1) fail("space file: unsupported schema version");
  SpaceSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fbnet")
    spec.kind = Kind::kFbnet;
  else if (kind == "mixed_precision")
    spec.kind = Kind::kMixedPrecision;
  else
    fail("space file: unknown kind '" + kind + "'");

  const json& in = j.at("input");
  reject_unknown_keys(in, {"channels", "resolution", "classes"}, "input");
  spec.input.channels = in.at("channels").get<int>();
  spec.input.resolution = in.at("resolution").get<int>();
  spec.input.classes = in.at("classes").get<int>();

  if (spec.kind == Kind::kFbnet) {
    spec.width_scale = j.value("width_scale", 1.0);
    if (!j.contains("macro") || !j.contains("micro"))
      fail("space file: fbnet spaces need 'macro' and 'micro'");
    for (const auto& r : j.at("macro")) {
      reject_unknown_keys(r, {"block", "f", "n", "s"}, "macro row");
      MacroRow row;
      row.block = r.at("block").get<std::string>();
      row.f = r.value("f", 0);
      row.n = r.value("n", 1);
      row.s = r.value("s", 1);
      if (row.s != 1 && row.s != 2) fail("space file: macro stride must be 1 or 2");
      spec.macro.rows.push_back(std::move(row));
    }
    for (const auto& m : j.at("micro")) {
      reject_unknown_keys(m, {"type", "e", "k", "g"}, "micro block");
      MicroBlockSpec mb;
      const std::string t = m.at("type").get<std::string>();
      if (t == "conv")
        mb.type = MicroBlockSpec::Type::kConv;
      else if (t == "csc")
        mb.type = MicroBlockSpec::Type::kCsc;
      else if (t == "skip")
        mb.type = MicroBlockSpec::Type::kSkip;
      else if (t == "zero")
        mb.type = MicroBlockSpec::Type::kZero;
      else
        fail("space file: unknown micro block type '" + t + "'");
      mb.e = m.value("e", 1);
      mb.k = m.value("k", 3);
      mb.g = m.value("g", 1);
      if (mb.type == MicroBlockSpec::Type::kConv && mb.k != 3 && mb.k != 5)
        fail("space file: conv blocks support kernel 3 or 5");
      spec.micro.push_back(mb);
    }
  } else {
    const json& b = j.at("backbone");
    reject_unknown_keys(b, {"stem_channels", "stage_channels", "stage_strides",
                            "blocks_per_stage"},
                        "backbone");
    spec.backbone.stem_channels = b.at("stem_channels").get<int>();
    spec.backbone.stage_channels = b.at("stage_channels").get<std::vector<int>>();
    spec.backbone.stage_strides = b.at("stage_strides").get<std::vector<int>>();
    spec.backbone.blocks_per_stage = b.at("blocks_per_stage").get<int>();
    const json& p = j.at("precisions");
    reject_unknown_keys(p, {"pairs", "weight_bits"}, "precisions");
    if (p.contains("pairs")) {
      for (const auto& pr : p.at("pairs"))
        spec.precisions.pairs.emplace_back(pr.at(0).get<int>(), pr.at(1).get<int>());
    } else if (p.contains("weight_bits")) {
      for (int w : p.at("weight_bits").get<std::vector<int>>())
        spec.precisions.pairs.emplace_back(w, 32);
    } else {
      fail("space file: precisions need 'pairs' or 'weight_bits'");
    }
    spec.precisions.validate();
  }
  return spec;
}

SpaceSpec reference_fbnet_space() {
  SpaceSpec s;
  s.kind = SpaceSpec::Kind::kFbnet;
  s.input = {3, 224, 1000};
  s.macro.rows = {
      {"conv3x3", 16, 1, 2}, {"tbs", 16, 1, 1},  {"tbs", 24, 4, 2},  {"tbs", 32, 4, 2},
      {"tbs", 64, 4, 2},     {"tbs", 112, 4, 1}, {"tbs", 184, 4, 2}, {"tbs", 352, 1, 1},
      {"conv1x1", 1504, 1, 1}, {"avgpool", 0, 1, 1}, {"fc", 0, 1, 1},
  };
  s.micro = reference_micro_blocks();
  return s;
}

SpaceSpec desk_fbnet_space() {
  SpaceSpec s;
  s.kind = SpaceSpec::Kind::kFbnet;
  s.input = {1, 32, 4};
  s.macro.rows = {
      {"conv3x3", 8, 1, 1}, {"tbs", 16, 2, 2}, {"tbs", 24, 2, 2}, {"tbs", 32, 2, 2},
      {"conv1x1", 64, 1, 1}, {"avgpool", 0, 1, 1}, {"fc", 0, 1, 1},
  };
  s.micro = {
      {MicroBlockSpec::Type::kConv, 1, 3, 1},
      {MicroBlockSpec::Type::kConv, 3, 3, 1},
      {MicroBlockSpec::Type::kConv, 1, 5, 1},
  };
  return s;
}

std::vector<MicroBlockSpec> reference_micro_blocks() {
  using T = MicroBlockSpec::Type;
  return {
      {T::kConv, 1, 3, 1}, {T::kConv, 1, 3, 2}, {T::kConv, 3, 3, 1}, {T::kConv, 6, 3, 1},
      {T::kConv, 1, 5, 1}, {T::kConv, 1, 5, 2}, {T::kConv, 3, 5, 1}, {T::kConv, 6, 5, 1},
      {T::kSkip},
  };
}

}  // namespace dnas::space
