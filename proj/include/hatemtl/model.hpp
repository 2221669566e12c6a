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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hatemtl/error.hpp"
#include "hatemtl/numerics/graph.hpp"
#include "hatemtl/tokenizer.hpp"

namespace hatemtl::model {

using num::Graph;
using num::Tensor;
using num::Var;

enum class EncoderVariant : std::uint8_t { MeanPool = 0, MiniTransformer = 1 };

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::MiniTransformer;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 2;
  std::size_t ff_dim = 128;
  std::size_t max_len = 64;
  std::size_t vocab_size = 0;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Keys carry no bias: it would shift every logit of a query row equally,
/// which softmax ignores.
struct AttentionHeadParams {
  Var wq, bq, wk, wv, bv;
};

struct LayerParams {
  std::vector<AttentionHeadParams> heads;
  Var wo, bo;
  Var ln1_gain, ln1_offset;
  Var w1, b1, w2, b2;
  Var ln2_gain, ln2_offset;
};

struct EncoderParams {
  Var token_embedding;
  Var position_embedding;  // transformer only
  Var ln_gain, ln_offset;  // transformer only
  std::vector<LayerParams> layers;
};

/// Affine map + tanh over the first-token state.
struct PoolerParams {
  Var weight;  // d_model x d_model
  Var bias;
};

/// Three affine layers d_model -> hidden -> hidden -> classes.
struct HeadParams {
  Var w1, b1, w2, b2, w3, b3;

  std::size_t input_dim() const { return w1->value.rows(); }
  std::size_t hidden() const { return w1->value.cols(); }
  std::size_t classes() const { return w3->value.cols(); }
  std::vector<Var> parameters() const { return {w1, b1, w2, b2, w3, b3}; }
};

/// Label metadata a head needs at inference time: its dataset's class names
/// and which of them count as harmful.
struct HeadSpec {
  std::string name;
  std::vector<std::string> class_names;
  std::vector<bool> harmful;

  bool operator==(const HeadSpec&) const = default;
};

struct Head {
  HeadSpec spec;
  HeadParams params;
};

/// Shared encoder + pooler + one head per training dataset. Parameters are
/// graph leaves, so the type is move-only; use clone() for a deep copy.
class MtlModel {
 public:
  MtlModel() = default;
  MtlModel(const MtlModel&) = delete;
  MtlModel& operator=(const MtlModel&) = delete;
  MtlModel(MtlModel&&) = default;
  MtlModel& operator=(MtlModel&&) = default;

  EncoderConfig config;
  std::size_t head_hidden = 64;
  EncoderParams encoder;
  PoolerParams pooler;
  std::vector<Head> heads;
  std::optional<HeadParams> nch_head;

  /// Encoder and pooler leaves, in serialization order.
  std::vector<Var> shared_parameters() const;
  /// Shared leaves, then each head in order, then the NCH head if present.
  std::vector<Var> all_parameters() const;

  std::size_t head_index(std::string_view name) const;
  const Head& head(std::string_view name) const { return heads[head_index(name)]; }

  MtlModel clone() const;
  std::vector<Tensor> snapshot() const;
  void restore(std::span<const Tensor> values);
};

MtlModel init_model(const EncoderConfig& config, std::span<const HeadSpec> heads, std::size_t head_hidden,
                    std::uint64_t seed);

HeadParams init_head(std::size_t input_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed);

/// Pooled sentence embedding, shape [1, d_model]. Only the first
/// true_length positions are read, so PAD positions never influence it.
Var encode_pool(Graph& graph, const MtlModel& model, const tok::TokenSequence& seq);

/// Class probabilities, shape [1, classes].
Var head_forward(Graph& graph, const HeadParams& head, const Var& embedding);

// Graph-free conveniences for inference.
std::vector<double> embed(const MtlModel& model, const tok::TokenSequence& seq);
std::vector<double> head_probabilities(const HeadParams& head, std::span<const double> embedding);
std::size_t argmax(std::span<const double> values);

enum class FormatErrorKind { BadMagic, UnsupportedVersion, TruncatedPayload, ShapeMismatch, TrailingBytes };

class ModelFormatError : public LoadError {
 public:
  ModelFormatError(FormatErrorKind kind, const std::string& what) : LoadError(what), kind_(kind) {}
  FormatErrorKind kind() const { return kind_; }

 private:
  FormatErrorKind kind_;
};

inline constexpr std::uint8_t kModelFormatVersion = 1;

void serialize(const MtlModel& model, const std::filesystem::path& path);
MtlModel deserialize(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_bytes(const MtlModel& model);
MtlModel deserialize_bytes(std::span<const std::uint8_t> bytes);

}  // namespace hatemtl::model
