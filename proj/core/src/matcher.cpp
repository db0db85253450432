#include "melmine/matcher.hpp"

#include <cmath>

namespace melmine {
namespace {

template <typename T>
double dot(std::span<const T> x, std::span<const T> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  return s;
}

template <typename T>
double norm(std::span<const T> x) {
  return std::sqrt(dot(x, x));
}

template <typename T>
std::vector<double> normalized(std::span<const T> x) {
  std::vector<double> out(x.size(), 0.0);
  const double n = norm(x);
  if (n == 0.0) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>(x[i]) / n;
  return out;
}

template <typename T>
std::vector<double> fuse(const GlobalFeatures<T>& f) {
  std::vector<double> u = normalized(f.text);
  if (!f.image.empty()) {
    const auto v = normalized(f.image);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += v[i];
  }
  for (double& x : u) x *= 0.5;
  return u;
}

template <typename T>
void check_dims(const GlobalFeatures<T>& m, const GlobalFeatures<T>& e, MatcherVariant variant) {
  const std::size_t d = m.text.size();
  if (e.text.size() != d) {
    throw Error(Errc::kDimensionMismatch, "text features of size " + std::to_string(d) +
                                              " and " + std::to_string(e.text.size()));
  }
  if (variant == MatcherVariant::kCosineFused) {
    for (auto img : {m.image, e.image}) {
      if (!img.empty() && img.size() != d) {
        throw Error(Errc::kDimensionMismatch, "image feature of size " +
                                                  std::to_string(img.size()) + ", expected " +
                                                  std::to_string(d));
      }
    }
  }
}

// Gradient of cos(x, y) with respect to x; zero when either vector vanishes.
std::vector<double> cosine_grad(std::span<const double> x, std::span<const double> y) {
  std::vector<double> g(x.size(), 0.0);
  const double nx = norm(x);
  const double ny = norm(y);
  if (nx == 0.0 || ny == 0.0) return g;
  const double c = dot(x, y) / (nx * ny);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = y[i] / (nx * ny) - c * x[i] / (nx * nx);
  return g;
}

// Pulls g = dL/du back through u = normalize(x) / 2 (one half of the fused average).
std::vector<double> normalize_backward(std::span<const double> x, std::span<const double> g) {
  std::vector<double> out(x.size(), 0.0);
  const double nx = norm(x);
  if (nx == 0.0) return out;
  double proj = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) proj += x[i] * g[i];
  proj /= nx;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = 0.5 * (g[i] - (x[i] / nx) * proj) / nx;
  return out;
}

}  // namespace

std::string_view variant_name(MatcherVariant v) noexcept {
  return v == MatcherVariant::kCosineText ? "cosine-text" : "cosine-fused";
}

MatcherVariant parse_variant(std::string_view name) {
  if (name == "cosine-text") return MatcherVariant::kCosineText;
  if (name == "cosine-fused") return MatcherVariant::kCosineFused;
  throw Error(Errc::kInvalidArgument, "unknown matcher variant '" + std::string(name) + "'");
}

void validate(const MatcherConfig& cfg) {
  if (!std::isfinite(cfg.temperature) || cfg.temperature <= 0.0) {
    throw Error(Errc::kInvalidArgument, "temperature must be finite and positive");
  }
}

template <typename T>
double cosine(std::span<const T> x, std::span<const T> y) {
  if (x.size() != y.size()) {
    throw Error(Errc::kDimensionMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  const double nx = norm(x);
  const double ny = norm(y);
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return dot(x, y) / (nx * ny);
}

template <typename T>
double score(const GlobalFeatures<T>& mention, const GlobalFeatures<T>& entity,
             const MatcherConfig& cfg, Diagnostics* diag) {
  check_dims(mention, entity, cfg.variant);
  if (cfg.variant == MatcherVariant::kCosineText) {
    return cosine(mention.text, entity.text) / cfg.temperature;
  }
  const auto um = fuse(mention);
  const auto ue = fuse(entity);
  const double nm = norm(std::span<const double>(um));
  const double ne = norm(std::span<const double>(ue));
  if (nm == 0.0 && ne == 0.0) {
    warn(diag, "fused features of mention and entity are both zero; score set to 0");
    return 0.0;
  }
  return cosine(std::span<const double>(um), std::span<const double>(ue)) / cfg.temperature;
}

template <typename T>
std::vector<double> score_all(const GlobalFeatures<T>& mention,
                              std::span<const GlobalFeatures<T>> entities,
                              const MatcherConfig& cfg, Diagnostics* diag, unsigned threads) {
  std::vector<double> out(entities.size());
  if (threads <= 1 || diag != nullptr) {
    for (std::size_t e = 0; e < entities.size(); ++e) out[e] = score(mention, entities[e], cfg, diag);
    return out;
  }
  parallel_for(entities.size(), threads,
               [&](std::size_t e) { out[e] = score(mention, entities[e], cfg); });
  return out;
}

ScoreGradient score_with_gradient(const GlobalFeatures<double>& mention,
                                  const GlobalFeatures<double>& entity, const MatcherConfig& cfg) {
  check_dims(mention, entity, cfg.variant);
  const double inv_t = 1.0 / cfg.temperature;
  ScoreGradient out;
  if (cfg.variant == MatcherVariant::kCosineText) {
    out.value = cosine(mention.text, entity.text) * inv_t;
    out.mention_text = cosine_grad(mention.text, entity.text);
    out.entity_text = cosine_grad(entity.text, mention.text);
    for (double& g : out.mention_text) g *= inv_t;
    for (double& g : out.entity_text) g *= inv_t;
    return out;
  }
  const auto um = fuse(mention);
  const auto ue = fuse(entity);
  out.value = cosine(std::span<const double>(um), std::span<const double>(ue)) * inv_t;
  auto gm = cosine_grad(um, ue);
  auto ge = cosine_grad(ue, um);
  for (double& g : gm) g *= inv_t;
  for (double& g : ge) g *= inv_t;
  out.mention_text = normalize_backward(mention.text, gm);
  out.entity_text = normalize_backward(entity.text, ge);
  if (!mention.image.empty()) out.mention_image = normalize_backward(mention.image, gm);
  if (!entity.image.empty()) out.entity_image = normalize_backward(entity.image, ge);
  return out;
}

GlobalFeatures<float> mention_features(const Mention& mention, const EmbeddingStore& store) {
  GlobalFeatures<float> f;
  f.text = store.row(mention.text_row);
  if (mention.image_row) f.image = store.row(*mention.image_row);
  return f;
}

GlobalFeatures<float> entity_features(const KnowledgeBase& kb, Ordinal i,
                                      const EmbeddingStore& store) {
  GlobalFeatures<float> f;
  f.text = store.row(kb.text_row(i));
  const Entity& e = kb.entity(i);
  if (e.has_image()) f.image = store.row(e.image_rows.front());
  return f;
}

std::vector<GlobalFeatures<float>> all_entity_features(const KnowledgeBase& kb,
                                                       const EmbeddingStore& store) {
  std::vector<GlobalFeatures<float>> out;
  out.reserve(kb.size());
  for (Ordinal i = 0; i < kb.size(); ++i) out.push_back(entity_features(kb, i, store));
  return out;
}

template double cosine<float>(std::span<const float>, std::span<const float>);
template double cosine<double>(std::span<const double>, std::span<const double>);
template double score<float>(const GlobalFeatures<float>&, const GlobalFeatures<float>&,
                             const MatcherConfig&, Diagnostics*);
template double score<double>(const GlobalFeatures<double>&, const GlobalFeatures<double>&,
                              const MatcherConfig&, Diagnostics*);
template std::vector<double> score_all<float>(const GlobalFeatures<float>&,
                                              std::span<const GlobalFeatures<float>>,
                                              const MatcherConfig&, Diagnostics*, unsigned);
template std::vector<double> score_all<double>(const GlobalFeatures<double>&,
                                               std::span<const GlobalFeatures<double>>,
                                               const MatcherConfig&, Diagnostics*, unsigned);

}  // namespace melmine
