/*
 * Copyright 2026 The mpai-sim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef MPAI_NETGRAPH_HPP
#define MPAI_NETGRAPH_HPP

#include "mpai/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace mpai {

/// Id under which layers refer to the network input tensor.
inline constexpr std::string_view kInputId = "input";

/// Dense tensor extents, e.g. {height, width, channels}.
struct TensorShape {
  std::vector<std::int64_t> dims;

  std::int64_t elements() const;
  /// ceil(elements * bits / 8).
  std::int64_t byte_size(int element_bits) const;
  std::int64_t byte_size(Precision p) const {
    return byte_size(mpai::element_bits(p));
  }

  bool operator==(const TensorShape &) const = default;
};

std::string to_string(const TensorShape &shape);

enum class LayerGroup { Pre, Backbone, Head };
inline constexpr LayerGroup kAllGroups[] = {LayerGroup::Pre, LayerGroup::Backbone,
                                            LayerGroup::Head};

std::string_view to_string(LayerGroup g);
LayerGroup parse_group(std::string_view text);

/// Cost-model class of a layer.
enum class LayerClass { Conv, FC, Other };
std::string_view to_string(LayerClass c);

struct ConvParams {
  std::int64_t kernel_h = 1, kernel_w = 1;
  std::int64_t stride_h = 1, stride_w = 1;
  std::int64_t in_channels = 1, out_channels = 1;
  std::int64_t groups = 1;

  bool depthwise() const { return groups > 1 && groups == in_channels; }
  bool operator==(const ConvParams &) const = default;
};

struct FullyConnectedParams {
  std::int64_t in_features = 1, out_features = 1;
  bool operator==(const FullyConnectedParams &) const = default;
};

struct PoolingParams {
  std::string mode = "max";
  std::int64_t kernel_h = 1, kernel_w = 1;
  std::int64_t stride_h = 1, stride_w = 1;
  bool operator==(const PoolingParams &) const = default;
};

struct ElementwiseAddParams {
  bool operator==(const ElementwiseAddParams &) const = default;
};

struct ActivationParams {
  std::string function = "relu";
  bool operator==(const ActivationParams &) const = default;
};

/// Input resampling, only legal ahead of the first convolution.
struct ResampleParams {
  bool operator==(const ResampleParams &) const = default;
};

/// Channel concatenation along the last axis.
struct ConcatParams {
  bool operator==(const ConcatParams &) const = default;
};

using LayerKind =
    std::variant<ConvParams, FullyConnectedParams, PoolingParams,
                 ElementwiseAddParams, ActivationParams, ResampleParams,
                 ConcatParams>;

std::string_view kind_name(const LayerKind &kind);

struct Layer {
  std::string id;
  LayerKind kind;
  std::vector<std::string> inputs;
  TensorShape output_shape;
  LayerGroup group = LayerGroup::Backbone;

  bool operator==(const Layer &) const = default;
};

/// Validated, immutable DAG of layers.
class NetworkGraph {
public:
  /// Validates and takes ownership of the layers; throws ValidationError.
  NetworkGraph(std::string name, TensorShape input_shape,
               std::vector<Layer> layers);

  const std::string &name() const { return name_; }
  const TensorShape &input_shape() const { return input_shape_; }
  /// Layers in document order.
  const std::vector<Layer> &layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }

  bool contains(std::string_view id) const;
  const Layer &layer(std::string_view id) const;
  /// Shape of a layer output or of the network input.
  const TensorShape &tensor_shape(std::string_view id) const;

  /// Deterministic topological order; ties broken by ascending id.
  const std::vector<std::string> &topological_order() const { return order_; }
  /// Position of a layer in topological_order(); -1 for the input.
  int position(std::string_view id) const;
  /// Layers consuming the given tensor, in topological order.
  const std::vector<std::string> &consumers(std::string_view id) const;

  /// Layers of one group in topological order.
  std::vector<std::string> group_layers(LayerGroup g) const;
  bool has_group(LayerGroup g) const;

private:
  void validate();

  std::string name_;
  TensorShape input_shape_;
  std::vector<Layer> layers_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::vector<std::string>> consumers_;
  std::unordered_map<std::string, int> position_;
  std::vector<std::string> order_;
};

/// Parses and validates a graph document; errors name the offending layer.
NetworkGraph load_graph(std::string_view document);
NetworkGraph load_graph_file(const std::filesystem::path &path);
/// Canonical JSON text; load_graph(serialize_graph(g)) reproduces g.
std::string serialize_graph(const NetworkGraph &graph);

/// Arithmetic operations with one MAC counted as two ops.
std::uint64_t op_count(const Layer &layer);
/// Weights plus biases.
std::uint64_t param_count(const Layer &layer);
LayerClass layer_class(const Layer &layer);

std::vector<std::string> topological_order(const NetworkGraph &graph);

/// Sum of op_count over a set of layers.
std::uint64_t total_ops(const NetworkGraph &graph,
                        const std::vector<std::string> &ids);

} // namespace mpai

#endif // MPAI_NETGRAPH_HPP
