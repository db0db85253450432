#include "melmine/cvacpt.hpp"

#include <cmath>
#include <map>
#include <random>

#include <json.hpp>

#include "melmine/data_io.hpp"

namespace melmine {
namespace {

using nlohmann::json;

DenseLayer zero_layer(std::size_t in, std::size_t out) {
  return {RowMatrix<float>(out, in, 0.0f), std::vector<float>(out, 0.0f)};
}

TwoLayerNet zero_net(std::size_t in, std::size_t hidden, std::size_t out) {
  return {zero_layer(in, hidden), zero_layer(hidden, out)};
}

void check_layer(const DenseLayer& l, std::size_t in, std::size_t out, const char* name) {
  if (l.in_features() != in || l.out_features() != out || l.bias.size() != out) {
    throw Error(Errc::kShapeMismatch, std::string(name) + ": expected " + std::to_string(out) +
                                          "x" + std::to_string(in) + " with bias " +
                                          std::to_string(out));
  }
  for (float v : l.weight.data()) {
    if (!std::isfinite(v)) throw Error(Errc::kInvalidArgument, std::string(name) + " not finite");
  }
  for (float v : l.bias) {
    if (!std::isfinite(v)) throw Error(Errc::kInvalidArgument, std::string(name) + " not finite");
  }
}

template <typename Fn>
void for_each_tensor(CvacptParams& p, Fn&& fn) {
  struct Named {
    const char* name;
    TwoLayerNet* net;
  };
  for (Named n : {Named{"context", &p.context}, Named{"global_affine", &p.global_affine},
                  Named{"local_affine", &p.local_affine}}) {
    for (auto [layer_name, layer] : {std::pair{"first", &n.net->first}, std::pair{"second", &n.net->second}}) {
      const std::string prefix = std::string(n.name) + "." + layer_name;
      fn(prefix + ".weight", layer->weight);
      fn(prefix + ".bias", *layer);
    }
  }
}

std::vector<double> concat(std::span<const float> a, std::span<const float> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  for (float v : a) out.push_back(v);
  for (float v : b) out.push_back(v);
  return out;
}

std::vector<double> concat(std::span<const float> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  for (float v : a) out.push_back(v);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void apply_affine(std::span<const float> x, std::span<float> y, std::span<const double> context,
                  const TwoLayerNet& net, double blend) {
  const std::size_t d = x.size();
  const auto ab = net.forward(concat(x, context));
  for (std::size_t i = 0; i < d; ++i) {
    const double delta = blend * (ab[i] * static_cast<double>(x[i]) + ab[d + i]);
    y[i] = delta == 0.0 ? x[i] : static_cast<float>(static_cast<double>(x[i]) + delta);
  }
}

}  // namespace

std::vector<double> DenseLayer::forward(std::span<const double> x) const {
  if (x.size() != in_features()) {
    throw Error(Errc::kDimensionMismatch, "layer input " + std::to_string(x.size()) +
                                              ", expected " + std::to_string(in_features()));
  }
  std::vector<double> y(out_features());
  for (std::size_t o = 0; o < y.size(); ++o) {
    const auto w = weight.row(o);
    double acc = bias[o];
    for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(w[i]) * x[i];
    y[o] = acc;
  }
  return y;
}

std::vector<double> TwoLayerNet::forward(std::span<const double> x) const {
  auto h = first.forward(x);
  for (double& v : h) v = std::max(v, 0.0);
  return second.forward(h);
}

void validate(const CvacptParams& p) {
  const std::size_t d = p.dim;
  if (d == 0) throw Error(Errc::kShapeMismatch, "dimension must be positive");
  if (!(p.blend >= 0.0 && p.blend <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "blend must lie in [0, 1]");
  }
  check_layer(p.context.first, 2 * d, d, "context.first");
  check_layer(p.context.second, d, d, "context.second");
  check_layer(p.global_affine.first, 2 * d, d, "global_affine.first");
  check_layer(p.global_affine.second, d, 2 * d, "global_affine.second");
  check_layer(p.local_affine.first, 2 * d, d, "local_affine.first");
  check_layer(p.local_affine.second, d, 2 * d, "local_affine.second");
}

CvacptParams zero_params(std::size_t dim, double blend) {
  CvacptParams p;
  p.dim = dim;
  p.blend = blend;
  p.context = zero_net(2 * dim, dim, dim);
  p.global_affine = zero_net(2 * dim, dim, 2 * dim);
  p.local_affine = zero_net(2 * dim, dim, 2 * dim);
  return p;
}

CvacptParams init_params(std::size_t dim, std::uint64_t seed, double blend) {
  CvacptParams p = zero_params(dim, blend);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto fill = [&](DenseLayer& layer) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_features()));
    auto draw = [&] {
      float v = static_cast<float>(bound * unit(rng));
      while (std::abs(static_cast<double>(v)) > bound) v = std::nextafter(v, 0.0f);
      return v;
    };
    for (float& w : layer.weight.data()) w = draw();
    for (float& b : layer.bias) b = draw();
  };
  for (TwoLayerNet* net : {&p.context, &p.global_affine, &p.local_affine}) {
    fill(net->first);
    fill(net->second);
  }
  validate(p);
  return p;
}

void save_params(const CvacptParams& params, const std::filesystem::path& manifest) {
  validate(params);
  CvacptParams copy = params;
  const std::string stem = manifest.stem().string();
  const auto dir = manifest.parent_path();
  json tensors = json::array();
  auto write = [&](const std::string& name, const RowMatrix<float>& m) {
    const std::string file = stem + "." + name + ".emb";
    save_embeddings(m, dir / file);
    tensors.push_back({{"name", name}, {"file", file}, {"rows", m.rows()}, {"cols", m.cols()}});
  };
  for_each_tensor(copy, [&](const std::string& name, auto& tensor) {
    if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, RowMatrix<float>>) {
      write(name, tensor);
    } else {
      write(name, RowMatrix<float>(1, tensor.bias.size(), tensor.bias));
    }
  });
  json doc = {{"format", "cvacpt-params"},
              {"dim", params.dim},
              {"blend", params.blend},
              {"tensors", std::move(tensors)}};
  write_file(manifest, doc.dump(2) + "\n");
}

CvacptParams load_params(const std::filesystem::path& manifest) {
  json doc;
  try {
    doc = json::parse(read_file(manifest));
  } catch (const json::parse_error& e) {
    throw ParseError(1, e.what());
  }
  CvacptParams p;
  std::map<std::string, std::pair<std::string, std::pair<std::size_t, std::size_t>>> entries;
  try {
    if (doc.at("format").get<std::string>() != "cvacpt-params") {
      throw Error(Errc::kShapeMismatch, "not a cvacpt parameter manifest");
    }
    p = zero_params(doc.at("dim").get<std::size_t>(), doc.at("blend").get<double>());
    for (const auto& t : doc.at("tensors")) {
      entries[t.at("name").get<std::string>()] = {
          t.at("file").get<std::string>(),
          {t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>()}};
    }
  } catch (const json::exception& e) {
    throw ParseError(1, e.what());
  }
  const auto dir = manifest.parent_path();
  auto read = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto it = entries.find(name);
    if (it == entries.end()) throw Error(Errc::kShapeMismatch, "manifest lacks tensor " + name);
    const auto& [file, shape] = it->second;
    RowMatrix<float> m = load_embeddings(dir / file).matrix;
    if (shape != std::pair{rows, cols} || m.rows() != rows || m.cols() != cols) {
      throw Error(Errc::kShapeMismatch, name + ": expected " + std::to_string(rows) + "x" +
                                            std::to_string(cols) + ", found " +
                                            std::to_string(m.rows()) + "x" +
                                            std::to_string(m.cols()));
    }
    return m;
  };
  for_each_tensor(p, [&](const std::string& name, auto& tensor) {
    if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, RowMatrix<float>>) {
      tensor = read(name, tensor.rows(), tensor.cols());
    } else {
      tensor.bias = read(name, 1, tensor.bias.size()).data();
    }
  });
  validate(p);
  return p;
}

std::vector<double> contextual_encode(std::span<const float> view, std::span<const float> text,
                                      const CvacptParams& params) {
  if (view.size() != params.dim || text.size() != params.dim) {
    throw Error(Errc::kDimensionMismatch, "view/text dimension does not match parameters");
  }
  return params.context.forward(concat(view, text));
}

template <typename T>
std::vector<double> max_pool(std::span<const std::span<const T>> vectors) {
  if (vectors.empty()) throw Error(Errc::kEmptyViewSet, "no views to pool");
  std::vector<double> out(vectors.front().begin(), vectors.front().end());
  for (const auto& v : vectors.subspan(1)) {
    if (v.size() != out.size()) throw Error(Errc::kDimensionMismatch, "views differ in size");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], static_cast<double>(v[i]));
  }
  return out;
}

template std::vector<double> max_pool<float>(std::span<const std::span<const float>>);
template std::vector<double> max_pool<double>(std::span<const std::span<const double>>);

std::vector<double> pool_views(std::span<const std::span<const float>> views,
                               std::span<const float> text, const CvacptParams& params) {
  if (views.empty()) throw Error(Errc::kEmptyViewSet, "no synthetic views");
  std::vector<std::vector<double>> encoded;
  encoded.reserve(views.size());
  for (const auto& v : views) encoded.push_back(contextual_encode(v, text, params));
  std::vector<std::span<const double>> spans(encoded.begin(), encoded.end());
  return max_pool<double>(spans);
}

FeatureBundle transform(const FeatureBundle& visual, std::span<const double> context,
                        const CvacptParams& params, unsigned threads) {
  const std::size_t d = params.dim;
  if (visual.dim() != d || context.size() != d || (visual.patches() > 0 && visual.local.cols() != d)) {
    throw Error(Errc::kDimensionMismatch, "visual bundle or context does not match parameters");
  }
  if (!(params.blend >= 0.0 && params.blend <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "blend must lie in [0, 1]");
  }
  FeatureBundle out;
  out.global.resize(d);
  apply_affine(visual.global, out.global, context, params.global_affine, params.blend);
  out.local = RowMatrix<float>(visual.patches(), visual.local.cols());
  parallel_for(visual.patches(), threads, [&](std::size_t p) {
    apply_affine(visual.local.row(p), out.local.row(p), context, params.local_affine, params.blend);
  });
  return out;
}

}  // namespace melmine
