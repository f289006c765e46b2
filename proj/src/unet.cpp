#include "rootscore/unet.hpp"

#include <fstream>
#include <map>

#include "rootscore/error.hpp"
#include "rootscore/optim.hpp"
#include "rootscore/rng.hpp"

namespace rootscore {

using nn::TensorPtr;

void validate(const UnetConfig& cfg) {
  if (cfg.depth < 1) fail(ErrorKind::ConfigError, "unet depth must be >= 1");
  if (cfg.base_channels < 1) {
    fail(ErrorKind::ConfigError, "unet base_channels must be >= 1");
  }
  if (cfg.in_channels < 1 || cfg.num_classes < 2) {
    fail(ErrorKind::ConfigError, "unet needs >= 1 input channel, >= 2 classes");
  }
  const int block = 1 << cfg.depth;
  if (cfg.input_side < block || cfg.input_side % block != 0) {
    fail(ErrorKind::ConfigError,
         "input_side must be a positive multiple of 2^depth");
  }
}

nlohmann::json to_json(const UnetConfig& cfg) {
  return {{"input_side", cfg.input_side},
          {"in_channels", cfg.in_channels},
          {"num_classes", cfg.num_classes},
          {"depth", cfg.depth},
          {"base_channels", cfg.base_channels}};
}

UnetConfig unet_config_from_json(const nlohmann::json& j) {
  UnetConfig cfg;
  try {
    cfg.input_side = j.value("input_side", cfg.input_side);
    cfg.in_channels = j.value("in_channels", cfg.in_channels);
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    cfg.depth = j.value("depth", cfg.depth);
    cfg.base_channels = j.value("base_channels", cfg.base_channels);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("bad unet config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

namespace {

// Parameter init walks layers in declaration order, one substream per tensor.
struct InitCursor {
  uint64_t seed;
  uint64_t index = 0;
  uint64_t next() { return mix_seed(seed, index++); }
};

ConvLayer make_conv(InitCursor& cur, int c_in, int c_out, int k) {
  ConvLayer l;
  l.w = nn::xavier_init({c_out, c_in, k, k}, c_in * k * k, c_out * k * k,
                        cur.next());
  cur.index++;  // reserve a stream for the bias even though it starts at zero
  l.b = nn::make_tensor({c_out}, true);
  return l;
}

BnLayer make_bn(int c) {
  BnLayer l;
  l.gamma = nn::make_tensor({c}, true);
  std::fill(l.gamma->data.begin(), l.gamma->data.end(), 1.0f);
  l.beta = nn::make_tensor({c}, true);
  l.run_mean = nn::make_tensor({c});
  l.run_var = nn::make_tensor({c});
  std::fill(l.run_var->data.begin(), l.run_var->data.end(), 1.0f);
  return l;
}

DoubleConv make_double_conv(InitCursor& cur, int c_in, int c_out) {
  DoubleConv dc;
  dc.c1 = make_conv(cur, c_in, c_out, 3);
  dc.n1 = make_bn(c_out);
  dc.c2 = make_conv(cur, c_out, c_out, 3);
  dc.n2 = make_bn(c_out);
  return dc;
}

TensorPtr run_double_conv(const DoubleConv& dc, nn::Tape* tape,
                          const TensorPtr& x, bool train) {
  auto h = nn::conv2d(tape, x, dc.c1.w, dc.c1.b, 1);
  h = nn::batchnorm2d(tape, h, dc.n1.gamma, dc.n1.beta, dc.n1.run_mean,
                      dc.n1.run_var, train);
  h = nn::relu(tape, h);
  h = nn::conv2d(tape, h, dc.c2.w, dc.c2.b, 1);
  h = nn::batchnorm2d(tape, h, dc.n2.gamma, dc.n2.beta, dc.n2.run_mean,
                      dc.n2.run_var, train);
  return nn::relu(tape, h);
}

void push_conv(std::vector<nn::NamedTensor>& out, const std::string& prefix,
               const ConvLayer& l) {
  out.push_back({prefix + ".weight", l.w});
  out.push_back({prefix + ".bias", l.b});
}

void push_bn(std::vector<nn::NamedTensor>& out, const std::string& prefix,
             const BnLayer& l) {
  out.push_back({prefix + ".gamma", l.gamma});
  out.push_back({prefix + ".beta", l.beta});
  out.push_back({prefix + ".running_mean", l.run_mean});
  out.push_back({prefix + ".running_var", l.run_var});
}

void push_double_conv(std::vector<nn::NamedTensor>& out,
                      const std::string& prefix, const DoubleConv& dc) {
  push_conv(out, prefix + ".conv1", dc.c1);
  push_bn(out, prefix + ".bn1", dc.n1);
  push_conv(out, prefix + ".conv2", dc.c2);
  push_bn(out, prefix + ".bn2", dc.n2);
}

}  // namespace

UnetModel build_unet(const UnetConfig& cfg, uint64_t seed) {
  validate(cfg);
  UnetModel m;
  m.config = cfg;
  InitCursor cur{seed};

  int prev = cfg.in_channels;
  for (int i = 0; i < cfg.depth; ++i) {
    const int ch = cfg.base_channels << i;
    m.enc.push_back(make_double_conv(cur, prev, ch));
    prev = ch;
  }
  const int bottom = cfg.base_channels << cfg.depth;
  m.bottleneck = make_double_conv(cur, prev, bottom);

  m.dec.resize(cfg.depth);
  for (int i = cfg.depth - 1; i >= 0; --i) {
    const int ch = cfg.base_channels << i;  // level-i channel count
    DecoderBlock blk;
    // transposed conv halves channels: [2ch, ch, 2, 2]
    blk.up_w = nn::xavier_init({2 * ch, ch, 2, 2}, 2 * ch, ch * 4, cur.next());
    blk.dc = make_double_conv(cur, 2 * ch, ch);
    m.dec[i] = std::move(blk);
  }

  m.head = make_conv(cur, cfg.base_channels, cfg.num_classes, 1);
  return m;
}

std::vector<nn::NamedTensor> UnetModel::named_tensors() const {
  std::vector<nn::NamedTensor> out;
  for (size_t i = 0; i < enc.size(); ++i) {
    push_double_conv(out, "enc" + std::to_string(i), enc[i]);
  }
  push_double_conv(out, "bottleneck", bottleneck);
  for (int i = (int)dec.size() - 1; i >= 0; --i) {
    const std::string prefix = "dec" + std::to_string(i);
    out.push_back({prefix + ".upconv.weight", dec[i].up_w});
    push_double_conv(out, prefix, dec[i].dc);
  }
  push_conv(out, "head", head);
  return out;
}

std::vector<TensorPtr> UnetModel::parameters() const {
  std::vector<TensorPtr> out;
  for (const auto& [name, t] : named_tensors()) {
    if (t->requires_grad) out.push_back(t);
  }
  return out;
}

TensorPtr UnetModel::forward(nn::Tape* tape, const TensorPtr& x, bool train,
                             ShapeTrace* trace) const {
  if (x->shape.size() != 4 || x->dim(1) != config.in_channels ||
      x->dim(2) != config.input_side || x->dim(3) != config.input_side) {
    fail(ErrorKind::ShapeError, "unet forward expects [N," +
                                    std::to_string(config.in_channels) + "," +
                                    std::to_string(config.input_side) + "," +
                                    std::to_string(config.input_side) + "]");
  }
  auto log = [&](const std::string& name, const TensorPtr& t) {
    if (trace) trace->emplace_back(name, t->shape);
  };

  std::vector<TensorPtr> skips;
  TensorPtr cur = x;
  for (size_t i = 0; i < enc.size(); ++i) {
    cur = run_double_conv(enc[i], tape, cur, train);
    log("enc" + std::to_string(i), cur);
    skips.push_back(cur);
    cur = nn::maxpool2x2(tape, cur);
  }
  cur = run_double_conv(bottleneck, tape, cur, train);
  log("bottleneck", cur);
  for (int i = (int)dec.size() - 1; i >= 0; --i) {
    cur = nn::upconv2x2(tape, cur, dec[i].up_w);
    cur = nn::concat_channels(tape, cur, skips[i]);
    cur = run_double_conv(dec[i].dc, tape, cur, train);
    log("dec" + std::to_string(i), cur);
  }
  cur = nn::conv2d(tape, cur, head.w, head.b, 0);
  cur = nn::softmax_channels(tape, cur);
  log("head", cur);
  return cur;
}

LabelMask predict_mask(const UnetModel& model, const RgbImage& img,
                       bool restore_size) {
  const int side = model.config.input_side;
  RgbImage resized =
      (img.width == side && img.height == side) ? img : resize_bilinear(img, side, side);

  auto x = nn::make_tensor({1, 3, side, side});
  const size_t plane = (size_t)side * side;
  for (int y = 0; y < side; ++y) {
    for (int xx = 0; xx < side; ++xx) {
      const Rgb c = resized.get(xx, y);
      const size_t j = (size_t)y * side + xx;
      x->data[0 * plane + j] = c.r / 255.0f;
      x->data[1 * plane + j] = c.g / 255.0f;
      x->data[2 * plane + j] = c.b / 255.0f;
    }
  }

  auto probs = model.forward(nullptr, x, false);
  LabelMask mask = LabelMask::filled(side, side, 0);
  const int nc = model.config.num_classes;
  for (size_t j = 0; j < plane; ++j) {
    int best = 0;
    float bv = probs->data[j];
    for (int c = 1; c < nc; ++c) {
      const float v = probs->data[(size_t)c * plane + j];
      if (v > bv) {  // ties keep the lower class index
        bv = v;
        best = c;
      }
    }
    mask.classes[j] = (uint8_t)best;
  }
  if (restore_size && (img.width != side || img.height != side)) {
    mask = resize_nearest(mask, img.width, img.height);
  }
  return mask;
}

void save_model(const UnetModel& model, const std::string& path) {
  save_checkpoint(path, model.named_tensors());
  nlohmann::json side;
  side["config"] = to_json(model.config);
  side["normalization"] = {{"divisor", 255.0}};
  std::ofstream out(path + ".json", std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write sidecar: " + path + ".json");
  out << side.dump(2) << "\n";
}

UnetModel load_model(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) fail(ErrorKind::IoError, "missing model sidecar: " + path + ".json");
  nlohmann::json side;
  try {
    in >> side;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("bad model sidecar: ") + e.what());
  }
  UnetConfig cfg = unet_config_from_json(side.at("config"));
  const double divisor =
      side.value("normalization", nlohmann::json::object()).value("divisor", 255.0);
  if (divisor != 255.0) {
    fail(ErrorKind::ConfigError, "unsupported input normalization in sidecar");
  }

  UnetModel model = build_unet(cfg, 0);
  std::map<std::string, TensorPtr> by_name;
  for (auto& [name, t] : model.named_tensors()) by_name[name] = t;

  auto loaded = nn::load_checkpoint(path);
  if (loaded.size() != by_name.size()) {
    fail(ErrorKind::ParseError, "checkpoint tensor count mismatch");
  }
  for (auto& [name, t] : loaded) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      fail(ErrorKind::ParseError, "unexpected tensor in checkpoint: " + name);
    }
    if (it->second->shape != t->shape) {
      fail(ErrorKind::ParseError, "tensor shape mismatch for " + name);
    }
    it->second->data = std::move(t->data);
  }
  return model;
}

}  // namespace rootscore
