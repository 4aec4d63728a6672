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
#include "mpai/netgraph.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <sstream>

namespace mpai {

using detail::json;

std::int64_t TensorShape::elements() const {
  std::int64_t n = 1;
  for (auto d : dims)
    n *= d;
  return n;
}

std::int64_t TensorShape::byte_size(int bits) const {
  return (elements() * bits + 7) / 8;
}

std::string to_string(const TensorShape &shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.dims.size(); ++i)
    os << (i ? "x" : "") << shape.dims[i];
  return os.str();
}

std::string_view to_string(LayerGroup g) {
  switch (g) {
  case LayerGroup::Pre:
    return "PRE";
  case LayerGroup::Backbone:
    return "BACKBONE";
  case LayerGroup::Head:
    return "HEAD";
  }
  return "BACKBONE";
}

LayerGroup parse_group(std::string_view text) {
  if (text == "PRE")
    return LayerGroup::Pre;
  if (text == "BACKBONE")
    return LayerGroup::Backbone;
  if (text == "HEAD")
    return LayerGroup::Head;
  throw ParseError("unknown layer group '" + std::string(text) +
                   "' (expected PRE, BACKBONE or HEAD)");
}

std::string_view to_string(LayerClass c) {
  switch (c) {
  case LayerClass::Conv:
    return "conv";
  case LayerClass::FC:
    return "fc";
  case LayerClass::Other:
    return "other";
  }
  return "other";
}

namespace {

struct KindNameVisitor {
  std::string_view operator()(const ConvParams &) const { return "Convolution"; }
  std::string_view operator()(const FullyConnectedParams &) const {
    return "FullyConnected";
  }
  std::string_view operator()(const PoolingParams &) const { return "Pooling"; }
  std::string_view operator()(const ElementwiseAddParams &) const {
    return "ElementwiseAdd";
  }
  std::string_view operator()(const ActivationParams &) const { return "Activation"; }
  std::string_view operator()(const ResampleParams &) const { return "Resample"; }
  std::string_view operator()(const ConcatParams &) const { return "Concat"; }
};

std::string layer_ctx(const std::string &id) { return "layer '" + id + "'"; }

} // namespace

std::string_view kind_name(const LayerKind &kind) {
  return std::visit(KindNameVisitor{}, kind);
}

// ---------------------------------------------------------------------------
// Work metrics

std::uint64_t op_count(const Layer &layer) {
  const auto &out = layer.output_shape;
  if (const auto *c = std::get_if<ConvParams>(&layer.kind)) {
    const auto h = static_cast<std::uint64_t>(out.dims.at(0));
    const auto w = static_cast<std::uint64_t>(out.dims.at(1));
    return 2ull * c->kernel_h * c->kernel_w * (c->in_channels / c->groups) *
           c->out_channels * h * w;
  }
  if (const auto *f = std::get_if<FullyConnectedParams>(&layer.kind))
    return 2ull * f->in_features * f->out_features;
  if (std::holds_alternative<ConcatParams>(layer.kind))
    return 0; // pure data movement
  return static_cast<std::uint64_t>(out.elements());
}

std::uint64_t param_count(const Layer &layer) {
  if (const auto *c = std::get_if<ConvParams>(&layer.kind))
    return static_cast<std::uint64_t>(c->kernel_h * c->kernel_w *
                                          (c->in_channels / c->groups) * c->out_channels +
                                      c->out_channels);
  if (const auto *f = std::get_if<FullyConnectedParams>(&layer.kind))
    return static_cast<std::uint64_t>(f->in_features * f->out_features + f->out_features);
  return 0;
}

LayerClass layer_class(const Layer &layer) {
  if (const auto *c = std::get_if<ConvParams>(&layer.kind))
    return c->depthwise() ? LayerClass::Other : LayerClass::Conv;
  if (std::holds_alternative<FullyConnectedParams>(layer.kind))
    return LayerClass::FC;
  return LayerClass::Other;
}

// ---------------------------------------------------------------------------
// NetworkGraph

NetworkGraph::NetworkGraph(std::string name, TensorShape input_shape,
                           std::vector<Layer> layers)
    : name_(std::move(name)), input_shape_(std::move(input_shape)),
      layers_(std::move(layers)) {
  validate();
}

bool NetworkGraph::contains(std::string_view id) const {
  return index_.count(std::string(id)) != 0;
}

const Layer &NetworkGraph::layer(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end())
    throw ValidationError("graph '" + name_ + "' has no layer '" + std::string(id) + "'");
  return layers_[it->second];
}

const TensorShape &NetworkGraph::tensor_shape(std::string_view id) const {
  if (id == kInputId)
    return input_shape_;
  return layer(id).output_shape;
}

int NetworkGraph::position(std::string_view id) const {
  if (id == kInputId)
    return -1;
  auto it = position_.find(std::string(id));
  if (it == position_.end())
    throw ValidationError("graph '" + name_ + "' has no layer '" + std::string(id) + "'");
  return it->second;
}

const std::vector<std::string> &NetworkGraph::consumers(std::string_view id) const {
  static const std::vector<std::string> kNone;
  auto it = consumers_.find(std::string(id));
  return it == consumers_.end() ? kNone : it->second;
}

std::vector<std::string> NetworkGraph::group_layers(LayerGroup g) const {
  std::vector<std::string> out;
  for (const auto &id : order_)
    if (layer(id).group == g)
      out.push_back(id);
  return out;
}

bool NetworkGraph::has_group(LayerGroup g) const {
  return std::any_of(layers_.begin(), layers_.end(),
                     [g](const Layer &l) { return l.group == g; });
}

namespace {

void check_shape(const TensorShape &s, const std::string &ctx) {
  if (s.dims.empty())
    throw ValidationError(ctx + ": shape must have at least one dimension");
  for (auto d : s.dims)
    if (d < 1)
      throw ValidationError(ctx + ": shape extents must be >= 1, got " + to_string(s));
}

void check_kind(const NetworkGraph &g, const Layer &l) {
  const std::string ctx = layer_ctx(l.id);
  const auto &out = l.output_shape.dims;
  auto in_shape = [&](std::size_t i) -> const TensorShape & {
    return g.tensor_shape(l.inputs[i]);
  };
  auto single_input = [&]() {
    if (l.inputs.size() != 1)
      throw ValidationError(ctx + ": " + std::string(kind_name(l.kind)) +
                            " takes exactly one input");
  };
  auto rank3 = [&](const TensorShape &s, const char *which) {
    if (s.dims.size() != 3)
      throw ValidationError(ctx + ": " + which + " shape must be HxWxC, got " +
                            to_string(s));
  };

  if (const auto *c = std::get_if<ConvParams>(&l.kind)) {
    single_input();
    rank3(in_shape(0), "input");
    rank3(l.output_shape, "output");
    if (c->kernel_h < 1 || c->kernel_w < 1 || c->stride_h < 1 || c->stride_w < 1)
      throw ValidationError(ctx + ": kernel and stride must be >= 1");
    if (c->groups < 1 || c->in_channels % c->groups || c->out_channels % c->groups)
      throw ValidationError(ctx + ": groups must divide in_channels and out_channels");
    if (in_shape(0).dims[2] != c->in_channels)
      throw ValidationError(ctx + ": in_channels " + std::to_string(c->in_channels) +
                            " does not match input " + to_string(in_shape(0)));
    if (out[2] != c->out_channels)
      throw ValidationError(ctx + ": out_channels does not match output shape");
  } else if (const auto *f = std::get_if<FullyConnectedParams>(&l.kind)) {
    single_input();
    if (f->in_features < 1 || f->out_features < 1)
      throw ValidationError(ctx + ": feature counts must be >= 1");
    if (in_shape(0).elements() != f->in_features)
      throw ValidationError(ctx + ": in_features " + std::to_string(f->in_features) +
                            " does not match input " + to_string(in_shape(0)));
    if (out.size() != 1 || out[0] != f->out_features)
      throw ValidationError(ctx + ": output shape must be [out_features]");
  } else if (const auto *p = std::get_if<PoolingParams>(&l.kind)) {
    single_input();
    rank3(in_shape(0), "input");
    rank3(l.output_shape, "output");
    if (p->mode != "max" && p->mode != "avg")
      throw ValidationError(ctx + ": pooling mode must be 'max' or 'avg'");
    if (p->kernel_h < 1 || p->kernel_w < 1 || p->stride_h < 1 || p->stride_w < 1)
      throw ValidationError(ctx + ": kernel and stride must be >= 1");
    if (out[2] != in_shape(0).dims[2])
      throw ValidationError(ctx + ": pooling must preserve channels");
  } else if (std::holds_alternative<ElementwiseAddParams>(l.kind)) {
    if (l.inputs.size() < 2)
      throw ValidationError(ctx + ": ElementwiseAdd takes at least two inputs");
    for (std::size_t i = 0; i < l.inputs.size(); ++i)
      if (in_shape(i) != l.output_shape)
        throw ValidationError(ctx + ": input '" + l.inputs[i] +
                              "' shape differs from output shape");
  } else if (std::holds_alternative<ActivationParams>(l.kind)) {
    single_input();
    if (in_shape(0) != l.output_shape)
      throw ValidationError(ctx + ": activation must preserve shape");
  } else if (std::holds_alternative<ResampleParams>(l.kind)) {
    single_input();
    if (in_shape(0).dims.size() != out.size() || in_shape(0).dims.back() != out.back())
      throw ValidationError(ctx + ": resample must preserve rank and channels");
  } else if (std::holds_alternative<ConcatParams>(l.kind)) {
    rank3(l.output_shape, "output");
    std::int64_t channels = 0;
    for (std::size_t i = 0; i < l.inputs.size(); ++i) {
      const auto &s = in_shape(i);
      rank3(s, "input");
      if (s.dims[0] != out[0] || s.dims[1] != out[1])
        throw ValidationError(ctx + ": concat inputs must share spatial extents");
      channels += s.dims[2];
    }
    if (channels != out[2])
      throw ValidationError(ctx + ": concat output channels must equal the input sum");
  }
}

} // namespace

void NetworkGraph::validate() {
  const std::string gctx = "graph '" + name_ + "'";
  check_shape(input_shape_, gctx + " input_shape");
  if (layers_.empty())
    throw ValidationError(gctx + ": must contain at least one layer");

  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto &l = layers_[i];
    if (l.id.empty())
      throw ValidationError(gctx + ": layer ids must be non-empty");
    if (l.id == kInputId)
      throw ValidationError(layer_ctx(l.id) + ": id is reserved for the network input");
    if (!index_.emplace(l.id, i).second)
      throw ValidationError(layer_ctx(l.id) + ": duplicate layer id");
    check_shape(l.output_shape, layer_ctx(l.id) + " output_shape");
  }

  std::unordered_map<std::string, int> indegree;
  for (const auto &l : layers_) {
    if (l.inputs.empty())
      throw ValidationError(layer_ctx(l.id) + ": must have at least one input");
    int deg = 0;
    for (const auto &in : l.inputs) {
      if (in != kInputId && !index_.count(in))
        throw ValidationError(layer_ctx(l.id) + ": input '" + in +
                              "' does not name a layer");
      if (in == l.id)
        throw ValidationError(layer_ctx(l.id) + ": cycle detected (self-reference)");
      auto &cons = consumers_[in];
      if (std::find(cons.begin(), cons.end(), l.id) == cons.end()) {
        cons.push_back(l.id);
        if (in != kInputId)
          ++deg;
      }
    }
    indegree[l.id] = deg;
  }

  // Kahn's algorithm with the smallest ready id first.
  std::set<std::string> ready;
  for (const auto &l : layers_)
    if (indegree[l.id] == 0)
      ready.insert(l.id);
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    position_[id] = static_cast<int>(order_.size());
    order_.push_back(id);
    for (const auto &c : consumers_[id])
      if (--indegree[c] == 0)
        ready.insert(c);
  }
  if (order_.size() != layers_.size()) {
    std::string offender;
    for (const auto &l : layers_)
      if (!position_.count(l.id)) {
        offender = l.id;
        break;
      }
    throw ValidationError(layer_ctx(offender) + ": cycle detected");
  }
  for (auto &[id, cons] : consumers_)
    std::sort(cons.begin(), cons.end(), [this](const std::string &a, const std::string &b) {
      return position_.at(a) < position_.at(b);
    });

  for (const auto &id : order_)
    check_kind(*this, layer(id));

  // Resample layers are pre-processing: no convolution may precede them.
  std::unordered_map<std::string, bool> after_conv;
  for (const auto &id : order_) {
    const auto &l = layer(id);
    bool seen = false;
    for (const auto &in : l.inputs)
      if (in != kInputId)
        seen = seen || after_conv[in] ||
               std::holds_alternative<ConvParams>(layer(in).kind);
    if (seen && std::holds_alternative<ResampleParams>(l.kind))
      throw ValidationError(layer_ctx(id) +
                            ": Resample must precede every Convolution");
    after_conv[id] = seen;
  }
}

std::vector<std::string> topological_order(const NetworkGraph &graph) {
  return graph.topological_order();
}

std::uint64_t total_ops(const NetworkGraph &graph, const std::vector<std::string> &ids) {
  std::uint64_t sum = 0;
  for (const auto &id : ids)
    sum += op_count(graph.layer(id));
  return sum;
}

// ---------------------------------------------------------------------------
// Document format

namespace {

TensorShape parse_shape(const json &v, const std::string &ctx) {
  if (!v.is_array())
    throw ParseError(ctx + ": shape must be an array of integers");
  TensorShape s;
  for (const auto &d : v)
    s.dims.push_back(detail::as_int(d, ctx));
  return s;
}

std::pair<std::int64_t, std::int64_t> parse_pair(const json &obj, std::string_view key,
                                                  std::int64_t dflt, const std::string &ctx) {
  auto it = obj.find(key);
  if (it == obj.end())
    return {dflt, dflt};
  if (it->is_number_integer()) {
    auto v = it->get<std::int64_t>();
    return {v, v};
  }
  if (!it->is_array() || it->size() != 2)
    throw ParseError(ctx + ": field '" + std::string(key) + "' must be [h, w]");
  return {detail::as_int((*it)[0], ctx), detail::as_int((*it)[1], ctx)};
}

std::int64_t get_int(const json &obj, std::string_view key, const std::string &ctx) {
  return detail::as_int(detail::require(obj, key, ctx),
                        ctx + ": field '" + std::string(key) + "'");
}

Layer parse_layer(const json &j) {
  if (!j.is_object())
    throw ParseError("layers: each entry must be an object");
  std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "?";
  const std::string ctx = layer_ctx(id);
  id = detail::get_string(j, "id", ctx);
  const std::string kind = detail::get_string(j, "kind", ctx);

  Layer l;
  l.id = id;
  l.group = parse_group(detail::get_string(j, "group", ctx));
  l.output_shape = parse_shape(detail::require(j, "output_shape", ctx), ctx);
  const json &inputs = detail::require(j, "inputs", ctx);
  if (!inputs.is_array())
    throw ParseError(ctx + ": inputs must be an array of ids");
  for (const auto &in : inputs) {
    if (!in.is_string())
      throw ParseError(ctx + ": inputs must be strings");
    l.inputs.push_back(in.get<std::string>());
  }

  if (kind == "Convolution") {
    detail::check_fields(j, {"id", "kind", "inputs", "output_shape", "group", "kernel",
                             "stride", "in_channels", "out_channels", "groups"},
                         ctx);
    ConvParams c;
    std::tie(c.kernel_h, c.kernel_w) = parse_pair(j, "kernel", -1, ctx);
    if (c.kernel_h < 0)
      throw ParseError(ctx + ": missing field 'kernel'");
    std::tie(c.stride_h, c.stride_w) = parse_pair(j, "stride", 1, ctx);
    c.in_channels = get_int(j, "in_channels", ctx);
    c.out_channels = get_int(j, "out_channels", ctx);
    c.groups = j.contains("groups") ? get_int(j, "groups", ctx) : 1;
    l.kind = c;
  } else if (kind == "FullyConnected") {
    detail::check_fields(j, {"id", "kind", "inputs", "output_shape", "group", "in_features",
                             "out_features"},
                         ctx);
    l.kind = FullyConnectedParams{get_int(j, "in_features", ctx),
                                  get_int(j, "out_features", ctx)};
  } else if (kind == "Pooling") {
    detail::check_fields(j, {"id", "kind", "inputs", "output_shape", "group", "mode",
                             "kernel", "stride"},
                         ctx);
    PoolingParams p;
    p.mode = j.contains("mode") ? detail::get_string(j, "mode", ctx) : "max";
    std::tie(p.kernel_h, p.kernel_w) = parse_pair(j, "kernel", 1, ctx);
    std::tie(p.stride_h, p.stride_w) = parse_pair(j, "stride", 1, ctx);
    l.kind = p;
  } else if (kind == "ElementwiseAdd") {
    detail::check_fields(j, {"id", "kind", "inputs", "output_shape", "group"}, ctx);
    l.kind = ElementwiseAddParams{};
  } else if (kind == "Activation") {
    detail::check_fields(j, {"id", "kind", "inputs", "output_shape", "group", "function"},
                         ctx);
    ActivationParams a;
    if (j.contains("function"))
      a.function = detail::get_string(j, "function", ctx);
    l.kind = a;
  } else if (kind == "Resample") {
    detail::check_fields(j, {"id", "kind", "inputs", "output_shape", "group"}, ctx);
    l.kind = ResampleParams{};
  } else if (kind == "Concat") {
    detail::check_fields(j, {"id", "kind", "inputs", "output_shape", "group"}, ctx);
    l.kind = ConcatParams{};
  } else {
    throw ParseError(ctx + ": unknown kind '" + kind + "'");
  }
  return l;
}

json shape_json(const TensorShape &s) { return json(s.dims); }

json layer_json(const Layer &l) {
  json j;
  j["id"] = l.id;
  j["kind"] = std::string(kind_name(l.kind));
  j["inputs"] = l.inputs;
  j["output_shape"] = shape_json(l.output_shape);
  j["group"] = std::string(to_string(l.group));
  if (const auto *c = std::get_if<ConvParams>(&l.kind)) {
    j["kernel"] = {c->kernel_h, c->kernel_w};
    j["stride"] = {c->stride_h, c->stride_w};
    j["in_channels"] = c->in_channels;
    j["out_channels"] = c->out_channels;
    j["groups"] = c->groups;
  } else if (const auto *f = std::get_if<FullyConnectedParams>(&l.kind)) {
    j["in_features"] = f->in_features;
    j["out_features"] = f->out_features;
  } else if (const auto *p = std::get_if<PoolingParams>(&l.kind)) {
    j["mode"] = p->mode;
    j["kernel"] = {p->kernel_h, p->kernel_w};
    j["stride"] = {p->stride_h, p->stride_w};
  } else if (const auto *a = std::get_if<ActivationParams>(&l.kind)) {
    j["function"] = a->function;
  }
  return j;
}

} // namespace

NetworkGraph load_graph(std::string_view document) {
  json doc = detail::parse_document(document, "graph document");
  detail::check_fields(doc, {"name", "input_shape", "layers"}, "graph document");
  std::string name = detail::get_string(doc, "name", "graph document");
  TensorShape input = parse_shape(detail::require(doc, "input_shape", "graph document"),
                                  "graph '" + name + "' input_shape");
  const json &layers = detail::require(doc, "layers", "graph document");
  if (!layers.is_array())
    throw ParseError("graph '" + name + "': layers must be an array");
  std::vector<Layer> parsed;
  parsed.reserve(layers.size());
  for (const auto &l : layers)
    parsed.push_back(parse_layer(l));
  return NetworkGraph(std::move(name), std::move(input), std::move(parsed));
}

NetworkGraph load_graph_file(const std::filesystem::path &path) {
  return load_graph(read_text_file(path));
}

std::string serialize_graph(const NetworkGraph &graph) {
  json doc;
  doc["name"] = graph.name();
  doc["input_shape"] = shape_json(graph.input_shape());
  json layers = json::array();
  for (const auto &l : graph.layers())
    layers.push_back(layer_json(l));
  doc["layers"] = std::move(layers);
  return doc.dump(1);
}

} // namespace mpai
