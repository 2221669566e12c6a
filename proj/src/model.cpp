// Copyright 2026 The hatemtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hatemtl/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

namespace hatemtl::model {

using num::parameter;

void EncoderConfig::validate() const {
  if (d_model == 0 || max_len == 0 || vocab_size == 0) throw ConfigError("encoder dimensions must be positive");
  if (variant == EncoderVariant::MiniTransformer) {
    if (n_layers == 0 || n_heads == 0 || ff_dim == 0) throw ConfigError("encoder dimensions must be positive");
    if (d_model % n_heads != 0) {
      throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                        std::to_string(n_heads));
    }
  }
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Var xavier(std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    Tensor t({fan_in, fan_out});
    for (auto& x : t.values()) x = dist(rng_);
    return parameter(std::move(t));
  }

  Var normal(std::size_t rows, std::size_t cols, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    Tensor t({rows, cols});
    for (auto& x : t.values()) x = dist(rng_);
    return parameter(std::move(t));
  }

  static Var filled(std::size_t n, double value) { return parameter(Tensor({n}, value)); }

 private:
  std::mt19937_64 rng_;
};

HeadParams make_head(Initializer& init, std::size_t input_dim, std::size_t hidden, std::size_t classes) {
  HeadParams h;
  h.w1 = init.xavier(input_dim, hidden);
  h.b1 = Initializer::filled(hidden, 0.0);
  h.w2 = init.xavier(hidden, hidden);
  h.b2 = Initializer::filled(hidden, 0.0);
  h.w3 = init.xavier(hidden, classes);
  h.b3 = Initializer::filled(classes, 0.0);
  return h;
}

void append_layer(std::vector<Var>& out, const LayerParams& layer) {
  for (const auto& h : layer.heads) out.insert(out.end(), {h.wq, h.bq, h.wk, h.wv, h.bv});
  out.insert(out.end(), {layer.wo, layer.bo, layer.ln1_gain, layer.ln1_offset, layer.w1, layer.b1, layer.w2,
                         layer.b2, layer.ln2_gain, layer.ln2_offset});
}

}  // namespace

std::vector<Var> MtlModel::shared_parameters() const {
  std::vector<Var> out{encoder.token_embedding};
  if (config.variant == EncoderVariant::MiniTransformer) {
    out.insert(out.end(), {encoder.position_embedding, encoder.ln_gain, encoder.ln_offset});
    for (const auto& layer : encoder.layers) append_layer(out, layer);
  }
  out.insert(out.end(), {pooler.weight, pooler.bias});
  return out;
}

std::vector<Var> MtlModel::all_parameters() const {
  auto out = shared_parameters();
  for (const auto& h : heads) {
    auto p = h.params.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  if (nch_head) {
    auto p = nch_head->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::size_t MtlModel::head_index(std::string_view name) const {
  for (std::size_t i = 0; i < heads.size(); ++i)
    if (heads[i].spec.name == name) return i;
  throw ContractViolation("model has no head named '" + std::string(name) + "'");
}

std::vector<Tensor> MtlModel::snapshot() const {
  std::vector<Tensor> out;
  for (const auto& p : all_parameters()) out.push_back(p->value);
  return out;
}

void MtlModel::restore(std::span<const Tensor> values) {
  auto params = all_parameters();
  if (params.size() != values.size()) throw ContractViolation("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape() != values[i].shape()) {
      throw ContractViolation("restore: shape " + num::shape_string(values[i].shape()) + " does not match " +
                              num::shape_string(params[i]->value.shape()));
    }
    params[i]->value = values[i];
  }
}

MtlModel MtlModel::clone() const {
  std::vector<HeadSpec> specs;
  for (const auto& h : heads) specs.push_back(h.spec);
  MtlModel copy = init_model(config, specs, head_hidden, 0);
  if (nch_head) copy.nch_head = init_head(nch_head->input_dim(), nch_head->hidden(), nch_head->classes(), 0);
  copy.restore(snapshot());
  return copy;
}

MtlModel init_model(const EncoderConfig& config, std::span<const HeadSpec> heads, std::size_t head_hidden,
                    std::uint64_t seed) {
  config.validate();
  if (heads.empty()) throw ConfigError("init_model: at least one head is required");
  if (head_hidden == 0) throw ConfigError("init_model: head hidden size must be positive");

  Initializer init(seed);
  MtlModel m;
  m.config = config;
  m.head_hidden = head_hidden;
  const std::size_t d = config.d_model;
  m.encoder.token_embedding = init.normal(config.vocab_size, d, 0.02);
  if (config.variant == EncoderVariant::MiniTransformer) {
    const std::size_t dh = d / config.n_heads;
    m.encoder.position_embedding = init.normal(config.max_len, d, 0.02);
    m.encoder.ln_gain = Initializer::filled(d, 1.0);
    m.encoder.ln_offset = Initializer::filled(d, 0.0);
    for (std::size_t l = 0; l < config.n_layers; ++l) {
      LayerParams layer;
      for (std::size_t h = 0; h < config.n_heads; ++h) {
        AttentionHeadParams a;
        a.wq = init.xavier(d, dh);
        a.bq = Initializer::filled(dh, 0.0);
        a.wk = init.xavier(d, dh);
        a.wv = init.xavier(d, dh);
        a.bv = Initializer::filled(dh, 0.0);
        layer.heads.push_back(std::move(a));
      }
      layer.wo = init.xavier(d, d);
      layer.bo = Initializer::filled(d, 0.0);
      layer.ln1_gain = Initializer::filled(d, 1.0);
      layer.ln1_offset = Initializer::filled(d, 0.0);
      layer.w1 = init.xavier(d, config.ff_dim);
      layer.b1 = Initializer::filled(config.ff_dim, 0.0);
      layer.w2 = init.xavier(config.ff_dim, d);
      layer.b2 = Initializer::filled(d, 0.0);
      layer.ln2_gain = Initializer::filled(d, 1.0);
      layer.ln2_offset = Initializer::filled(d, 0.0);
      m.encoder.layers.push_back(std::move(layer));
    }
  }
  m.pooler.weight = init.xavier(d, d);
  m.pooler.bias = Initializer::filled(d, 0.0);

  for (const auto& spec : heads) {
    if (spec.class_names.size() < 2) throw ConfigError("head '" + spec.name + "' needs at least two classes");
    if (spec.harmful.size() != spec.class_names.size()) {
      throw ConfigError("head '" + spec.name + "' harmful flags do not match its classes");
    }
    for (const auto& other : m.heads)
      if (other.spec.name == spec.name) throw ConfigError("duplicate head name '" + spec.name + "'");
    m.heads.push_back(Head{spec, make_head(init, d, head_hidden, spec.class_names.size())});
  }
  return m;
}

HeadParams init_head(std::size_t input_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
  if (classes < 2) throw ConfigError("a head needs at least two classes");
  Initializer init(seed);
  return make_head(init, input_dim, hidden, classes);
}

Var encode_pool(Graph& g, const MtlModel& model, const tok::TokenSequence& seq) {
  const auto& cfg = model.config;
  if (seq.ids.size() > cfg.max_len) {
    throw ContractViolation("sequence of length " + std::to_string(seq.ids.size()) + " exceeds max_len " +
                            std::to_string(cfg.max_len));
  }
  if (seq.true_length == 0 || seq.true_length > seq.ids.size()) {
    throw ContractViolation("sequence true_length " + std::to_string(seq.true_length) + " is invalid");
  }
  for (int id : seq.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw ContractViolation("token id " + std::to_string(id) + " out of range for vocab_size " +
                              std::to_string(cfg.vocab_size));
    }
  }
  const std::span<const int> live(seq.ids.data(), seq.true_length);
  Var first;
  if (cfg.variant == EncoderVariant::MeanPool) {
    first = g.mean(g.gather_rows(model.encoder.token_embedding, live), 0);
  } else {
    std::vector<int> positions(seq.true_length);
    std::iota(positions.begin(), positions.end(), 0);
    Var x = g.add(g.gather_rows(model.encoder.token_embedding, live),
                  g.gather_rows(model.encoder.position_embedding, positions));
    x = g.layer_norm(x, model.encoder.ln_gain, model.encoder.ln_offset);
    for (const auto& layer : model.encoder.layers) {
      std::vector<Var> parts;
      for (const auto& h : layer.heads) {
        parts.push_back(g.attention(g.add_row(g.matmul(x, h.wq), h.bq), g.matmul(x, h.wk),
                                    g.add_row(g.matmul(x, h.wv), h.bv)));
      }
      Var attn = g.add_row(g.matmul(g.concat_cols(parts), layer.wo), layer.bo);
      x = g.layer_norm(g.add(x, attn), layer.ln1_gain, layer.ln1_offset);
      Var ff = g.relu(g.add_row(g.matmul(x, layer.w1), layer.b1));
      ff = g.add_row(g.matmul(ff, layer.w2), layer.b2);
      x = g.layer_norm(g.add(x, ff), layer.ln2_gain, layer.ln2_offset);
    }
    const int cls_position[] = {0};
    first = g.gather_rows(x, cls_position);
  }
  return g.tanh(g.add_row(g.matmul(first, model.pooler.weight), model.pooler.bias));
}

Var head_forward(Graph& g, const HeadParams& head, const Var& embedding) {
  Var h = g.relu(g.add_row(g.matmul(embedding, head.w1), head.b1));
  h = g.relu(g.add_row(g.matmul(h, head.w2), head.b2));
  return g.softmax_rows(g.add_row(g.matmul(h, head.w3), head.b3));
}

std::vector<double> embed(const MtlModel& model, const tok::TokenSequence& seq) {
  Graph g(false);
  return encode_pool(g, model, seq)->value.values();
}

std::vector<double> head_probabilities(const HeadParams& head, std::span<const double> embedding) {
  Graph g(false);
  auto e = num::constant(Tensor({1, embedding.size()}, std::vector<double>(embedding.begin(), embedding.end())));
  return head_forward(g, head, e)->value.values();
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

// --- serialization -------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'H', 'M', 'T', 'L'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ModelFormatError(FormatErrorKind::TruncatedPayload, "model file: truncated payload");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_bytes(const MtlModel& model) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u8(kModelFormatVersion);
  const auto& c = model.config;
  w.u8(static_cast<std::uint8_t>(c.variant));
  for (auto v : {c.d_model, c.n_layers, c.n_heads, c.ff_dim, c.max_len, c.vocab_size, model.head_hidden})
    w.u32(static_cast<std::uint32_t>(v));
  w.u32(static_cast<std::uint32_t>(model.heads.size()));
  for (const auto& h : model.heads) {
    w.str(h.spec.name);
    w.u32(static_cast<std::uint32_t>(h.spec.class_names.size()));
    for (std::size_t k = 0; k < h.spec.class_names.size(); ++k) {
      w.str(h.spec.class_names[k]);
      w.u8(h.spec.harmful[k] ? 1 : 0);
    }
  }
  w.u8(model.nch_head ? 1 : 0);
  if (model.nch_head) w.u32(static_cast<std::uint32_t>(model.nch_head->hidden()));
  for (const auto& p : model.all_parameters()) {
    const auto& shape = p->value.shape();
    w.u32(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
    for (double x : p->value.values()) w.f64(x);
  }
  return std::move(w.bytes);
}

MtlModel deserialize_bytes(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw ModelFormatError(FormatErrorKind::BadMagic, "model file: bad magic");
  }
  const auto version = r.u8();
  if (version != kModelFormatVersion) {
    throw ModelFormatError(FormatErrorKind::UnsupportedVersion,
                           "model file: unsupported version " + std::to_string(version));
  }
  EncoderConfig c;
  const auto variant = r.u8();
  if (variant > 1) throw ModelFormatError(FormatErrorKind::ShapeMismatch, "model file: unknown encoder variant");
  c.variant = static_cast<EncoderVariant>(variant);
  c.d_model = r.u32();
  c.n_layers = r.u32();
  c.n_heads = r.u32();
  c.ff_dim = r.u32();
  c.max_len = r.u32();
  c.vocab_size = r.u32();
  const std::size_t head_hidden = r.u32();
  std::vector<HeadSpec> specs(r.u32());
  for (auto& spec : specs) {
    spec.name = r.str();
    const auto n = r.u32();
    for (std::uint32_t k = 0; k < n; ++k) {
      spec.class_names.push_back(r.str());
      spec.harmful.push_back(r.u8() != 0);
    }
  }
  const bool has_nch = r.u8() != 0;
  const std::size_t nch_hidden = has_nch ? r.u32() : 0;

  MtlModel m;
  try {
    m = init_model(c, specs, head_hidden, 0);
    if (has_nch) m.nch_head = init_head(c.d_model, nch_hidden, 2, 0);
  } catch (const ConfigError& e) {
    throw ModelFormatError(FormatErrorKind::ShapeMismatch, std::string("model file: ") + e.what());
  }
  for (const auto& p : m.all_parameters()) {
    num::Shape shape(r.u32());
    for (auto& d : shape) d = r.u32();
    if (shape != p->value.shape()) {
      throw ModelFormatError(FormatErrorKind::ShapeMismatch, "model file: shape mismatch, stored " +
                                                                 num::shape_string(shape) + " expected " +
                                                                 num::shape_string(p->value.shape()));
    }
    for (auto& x : p->value.values()) x = r.f64();
  }
  if (!r.done()) throw ModelFormatError(FormatErrorKind::TrailingBytes, "model file: trailing bytes after payload");
  return m;
}

void serialize(const MtlModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_bytes(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing model file " + path.string());
}

MtlModel deserialize(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_bytes(bytes);
}

}  // namespace hatemtl::model
