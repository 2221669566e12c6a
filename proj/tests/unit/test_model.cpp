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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hatemtl/error.hpp"
#include "hatemtl/model.hpp"

using namespace hatemtl;
using model::EncoderConfig;
using model::EncoderVariant;
using model::HeadSpec;
using model::MtlModel;

namespace {

using Mat = std::vector<std::vector<double>>;

// --- straight-line reference forward pass, plain loops only ---------------

Mat to_mat(const num::Var& v) {
  const auto& t = v->value;
  const std::size_t r = t.shape().size() == 1 ? 1 : t.rows();
  const std::size_t c = t.numel() / r;
  Mat m(r, std::vector<double>(c));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m[i][j] = t[i * c + j];
  return m;
}

std::vector<double> to_vec(const num::Var& v) { return v->value.values(); }

Mat affine(const Mat& x, const num::Var& w, const num::Var* b) {
  const Mat wm = to_mat(w);
  const std::vector<double> bv = b ? to_vec(*b) : std::vector<double>(wm[0].size(), 0.0);
  Mat out(x.size(), std::vector<double>(wm[0].size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < wm[0].size(); ++j) {
      double s = bv[j];
      for (std::size_t k = 0; k < wm.size(); ++k) s += x[i][k] * wm[k][j];
      out[i][j] = s;
    }
  return out;
}

Mat layer_norm(const Mat& x, const num::Var& gain, const num::Var& offset) {
  const auto g = to_vec(gain), o = to_vec(offset);
  Mat out = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(x[i].size());
    double mu = 0, var = 0;
    for (double v : x[i]) mu += v / n;
    for (double v : x[i]) var += (v - mu) * (v - mu) / n;
    for (std::size_t j = 0; j < x[i].size(); ++j) out[i][j] = (x[i][j] - mu) / std::sqrt(var + 1e-5) * g[j] + o[j];
  }
  return out;
}

Mat add(Mat a, const Mat& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
  return a;
}

Mat relu(Mat a) {
  for (auto& r : a)
    for (auto& v : r) v = std::max(v, 0.0);
  return a;
}

std::vector<double> softmax(std::vector<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0;
  for (auto& v : z) s += (v = std::exp(v - m));
  for (auto& v : z) v /= s;
  return z;
}

std::vector<double> reference_embed(const MtlModel& m, const tok::TokenSequence& seq) {
  const auto tok_emb = to_mat(m.encoder.token_embedding);
  const std::size_t L = seq.true_length, d = m.config.d_model;
  Mat first(1, std::vector<double>(d, 0.0));
  if (m.config.variant == EncoderVariant::MeanPool) {
    for (std::size_t t = 0; t < L; ++t)
      for (std::size_t j = 0; j < d; ++j) first[0][j] += tok_emb[seq.ids[t]][j] / static_cast<double>(L);
  } else {
    const auto pos = to_mat(m.encoder.position_embedding);
    Mat x(L, std::vector<double>(d));
    for (std::size_t t = 0; t < L; ++t)
      for (std::size_t j = 0; j < d; ++j) x[t][j] = tok_emb[seq.ids[t]][j] + pos[t][j];
    x = layer_norm(x, m.encoder.ln_gain, m.encoder.ln_offset);
    for (const auto& layer : m.encoder.layers) {
      Mat concat(L);
      for (const auto& h : layer.heads) {
        const Mat q = affine(x, h.wq, &h.bq), k = affine(x, h.wk, nullptr), v = affine(x, h.wv, &h.bv);
        const double scale = 1.0 / std::sqrt(static_cast<double>(q[0].size()));
        for (std::size_t i = 0; i < L; ++i) {
          std::vector<double> logits(L);
          for (std::size_t s = 0; s < L; ++s) {
            double dot = 0;
            for (std::size_t c = 0; c < q[i].size(); ++c) dot += q[i][c] * k[s][c];
            logits[s] = dot * scale;
          }
          const auto p = softmax(logits);
          for (std::size_t c = 0; c < v[0].size(); ++c) {
            double acc = 0;
            for (std::size_t s = 0; s < L; ++s) acc += p[s] * v[s][c];
            concat[i].push_back(acc);
          }
        }
      }
      x = layer_norm(add(x, affine(concat, layer.wo, &layer.bo)), layer.ln1_gain, layer.ln1_offset);
      const Mat ff = affine(relu(affine(x, layer.w1, &layer.b1)), layer.w2, &layer.b2);
      x = layer_norm(add(x, ff), layer.ln2_gain, layer.ln2_offset);
    }
    first[0] = x[0];
  }
  auto pooled = affine(first, m.pooler.weight, &m.pooler.bias)[0];
  for (auto& v : pooled) v = std::tanh(v);
  return pooled;
}

std::vector<double> reference_head(const model::HeadParams& h, const std::vector<double>& e) {
  const Mat x{e};
  const Mat a = relu(affine(x, h.w1, &h.b1));
  const Mat b = relu(affine(a, h.w2, &h.b2));
  return softmax(affine(b, h.w3, &h.b3)[0]);
}

// --- fixtures -------------------------------------------------------------

EncoderConfig small_config(EncoderVariant variant = EncoderVariant::MiniTransformer) {
  EncoderConfig c;
  c.variant = variant;
  c.d_model = 8;
  c.n_layers = 2;
  c.n_heads = 2;
  c.ff_dim = 16;
  c.max_len = 10;
  c.vocab_size = 20;
  return c;
}

const std::vector<HeadSpec>& two_specs() {
  static const std::vector<HeadSpec> specs = {{"three", {"a", "b", "c"}, {false, true, true}},
                                              {"two", {"no", "yes"}, {false, true}}};
  return specs;
}

tok::TokenSequence random_seq(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab) {
  tok::TokenSequence s;
  s.true_length = std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
  s.ids.assign(max_len, tok::kPad);
  s.ids[0] = tok::kCls;
  for (std::size_t i = 1; i < s.true_length; ++i)
    s.ids[i] = std::uniform_int_distribution<int>(1, static_cast<int>(vocab) - 1)(rng);
  return s;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void set(const num::Var& v, std::vector<double> values) { v->value = num::Tensor(v->value.shape(), std::move(values)); }

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("forward pass matches the loop-based reference") {
    for (auto variant : {EncoderVariant::MiniTransformer, EncoderVariant::MeanPool}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = model::init_model(small_config(variant), two_specs(), 6, seed);
        // Perturb the zero-initialized biases and unit gains so every term is exercised.
        std::mt19937_64 rng(seed + 100);
        std::uniform_real_distribution<double> d(-0.5, 0.5);
        for (const auto& p : m.all_parameters())
          for (auto& x : p->value.values()) x += d(rng);
        for (int k = 0; k < 5; ++k) {
          const auto seq = random_seq(rng, 10, 20);
          const auto e = model::embed(m, seq);
          CHECK(max_abs_diff(e, reference_embed(m, seq)) < 1e-10);
          for (const auto& h : m.heads)
            CHECK(max_abs_diff(model::head_probabilities(h.params, e), reference_head(h.params, e)) < 1e-10);
        }
      }
    }
  }

  TEST_CASE("output shapes and pooled range") {
    auto m = model::init_model(small_config(), two_specs(), 6, 1);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 50; ++k) {
      const auto e = model::embed(m, random_seq(rng, 10, 20));
      REQUIRE(e.size() == 8);
      for (double v : e) CHECK((v > -1.0 && v < 1.0));
      CHECK(model::head_probabilities(m.heads[0].params, e).size() == 3);
      CHECK(model::head_probabilities(m.heads[1].params, e).size() == 2);
    }
  }

  TEST_CASE("zero pooler gives the zero embedding") {
    auto m = model::init_model(small_config(), two_specs(), 6, 3);
    for (auto& v : m.pooler.weight->value.values()) v = 0;
    for (auto& v : m.pooler.bias->value.values()) v = 0;
    std::mt19937_64 rng(4);
    CHECK(model::embed(m, random_seq(rng, 10, 20)) == std::vector<double>(8, 0.0));
  }

  TEST_CASE("only-CLS sequences are valid") {
    auto m = model::init_model(small_config(), two_specs(), 6, 3);
    tok::TokenSequence s{std::vector<int>(10, tok::kPad), 1};
    s.ids[0] = tok::kCls;
    for (double v : model::embed(m, s)) CHECK(std::isfinite(v));
  }

  TEST_CASE("zero head is uniform over its classes") {
    auto h = model::init_head(8, 6, 4, 9);
    for (const auto& p : h.parameters())
      for (auto& v : p->value.values()) v = 0;
    const auto p = model::head_probabilities(h, std::vector<double>(8, 0.3));
    for (double v : p) CHECK(std::abs(v - 0.25) < 1e-15);
  }

  TEST_CASE("hand-sized head example") {
    auto h = model::init_head(2, 2, 2, 0);
    set(h.w1, {1, 0, 0, 1});
    set(h.b1, {0, 0});
    set(h.w2, {2, 0, 0, 1});
    set(h.b2, {0, 1});
    set(h.w3, {1, 0, 0, 1});
    set(h.b3, {0, 0});
    // relu([1,-1]) = [1,0]; relu([2,0]+[0,1]) = [2,1]; softmax([2,1]).
    const auto p = model::head_probabilities(h, std::vector<double>{1, -1});
    CHECK(std::abs(p[0] - 0.7310585786300049) < 1e-15);
    CHECK(std::abs(p[1] - 0.2689414213699951) < 1e-15);
  }

  TEST_CASE("padding beyond true_length never changes the embedding") {
    auto m = model::init_model(small_config(), two_specs(), 6, 5);
    std::mt19937_64 rng(6);
    for (int k = 0; k < 100; ++k) {
      auto s = random_seq(rng, 6, 20);
      const auto base = model::embed(m, s);
      // Overwrite padded slots with arbitrary ids and extend the sequence.
      for (std::size_t i = s.true_length; i < s.ids.size(); ++i) s.ids[i] = 1 + static_cast<int>(rng() % 19);
      s.ids.resize(10, 7);
      CHECK(model::embed(m, s) == base);
    }
  }

  TEST_CASE("heads are independent of each other") {
    auto m = model::init_model(small_config(), two_specs(), 6, 7);
    std::mt19937_64 rng(8);
    const auto seq = random_seq(rng, 10, 20);
    const auto e = model::embed(m, seq);
    const auto before = model::head_probabilities(m.heads[0].params, e);
    for (const auto& p : m.heads[1].params.parameters())
      for (auto& v : p->value.values()) v = 5.0;
    CHECK(model::embed(m, seq) == e);
    CHECK(model::head_probabilities(m.heads[0].params, e) == before);
  }

  TEST_CASE("initialization is a function of the seed") {
    const auto a = model::init_model(small_config(), two_specs(), 6, 11).snapshot();
    const auto b = model::init_model(small_config(), two_specs(), 6, 11).snapshot();
    const auto c = model::init_model(small_config(), two_specs(), 6, 12).snapshot();
    CHECK(a == b);
    CHECK(a != c);
  }

  TEST_CASE("encode contract violations") {
    auto m = model::init_model(small_config(), two_specs(), 6, 1);
    tok::TokenSequence too_long{std::vector<int>(11, tok::kPad), 1};
    CHECK_THROWS_AS(model::embed(m, too_long), ContractViolation);
    tok::TokenSequence bad_id{{tok::kCls, 20}, 2};
    CHECK_THROWS_AS(model::embed(m, bad_id), ContractViolation);
    tok::TokenSequence empty{{tok::kCls}, 0};
    CHECK_THROWS_AS(model::embed(m, empty), ContractViolation);
  }

  TEST_CASE("bad configurations are rejected") {
    auto c = small_config();
    c.n_heads = 3;
    CHECK_THROWS_AS(model::init_model(c, two_specs(), 6, 0), ConfigError);
    c = small_config();
    c.vocab_size = 0;
    CHECK_THROWS_AS(model::init_model(c, two_specs(), 6, 0), ConfigError);
  }

  TEST_CASE("clone is deep") {
    auto m = model::init_model(small_config(), two_specs(), 6, 1);
    auto copy = m.clone();
    copy.pooler.bias->value[0] = 42.0;
    CHECK(m.pooler.bias->value[0] != 42.0);
    CHECK(copy.snapshot() != m.snapshot());
  }

  TEST_CASE("serialization round trip is byte-identical") {
    for (auto variant : {EncoderVariant::MiniTransformer, EncoderVariant::MeanPool}) {
      auto m = model::init_model(small_config(variant), two_specs(), 6, 21);
      m.nch_head = model::init_head(8, 5, 2, 22);
      const auto bytes = model::serialize_bytes(m);
      const auto back = model::deserialize_bytes(bytes);
      CHECK(model::serialize_bytes(back) == bytes);
      CHECK(back.config == m.config);
      CHECK(back.heads[1].spec == m.heads[1].spec);
      CHECK(back.snapshot() == m.snapshot());
      REQUIRE(back.nch_head.has_value());
      std::mt19937_64 rng(1);
      const auto seq = random_seq(rng, 10, 20);
      CHECK(model::embed(back, seq) == model::embed(m, seq));
    }
  }

  TEST_CASE("format errors are distinguished") {
    auto m = model::init_model(small_config(), two_specs(), 6, 21);
    const auto bytes = model::serialize_bytes(m);
    const auto kind_of = [](std::vector<std::uint8_t> b) {
      try {
        model::deserialize_bytes(b);
      } catch (const model::ModelFormatError& e) {
        return e.kind();
      }
      FAIL("expected a format error");
      return model::FormatErrorKind::BadMagic;
    };
    auto bad = bytes;
    bad[0] = 'X';
    CHECK(kind_of(bad) == model::FormatErrorKind::BadMagic);
    bad = bytes;
    bad[4] = model::kModelFormatVersion + 1;
    CHECK(kind_of(bad) == model::FormatErrorKind::UnsupportedVersion);
    CHECK(kind_of(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 3)) ==
          model::FormatErrorKind::TruncatedPayload);
    bad = bytes;
    bad.push_back(0);
    CHECK(kind_of(bad) == model::FormatErrorKind::TrailingBytes);
    // d_model sits right after magic, version and variant; 16 is a valid
    // config whose parameter shapes no longer match the payload.
    bad = bytes;
    bad[6] = 16;
    CHECK(kind_of(bad) == model::FormatErrorKind::ShapeMismatch);
  }
}
