#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "melmine/data_io.hpp"

namespace melmine {

enum class MatcherVariant {
  kCosineText,   // cos(t_M, t_E)
  kCosineFused,  // cos(u_M, u_E), u = (normalize(t) + normalize(v)) / 2
};

std::string_view variant_name(MatcherVariant v) noexcept;
MatcherVariant parse_variant(std::string_view name);

struct MatcherConfig {
  MatcherVariant variant = MatcherVariant::kCosineText;
  double temperature = 1.0;
};

/// Throws Error{kInvalidArgument} unless the temperature is finite and positive.
void validate(const MatcherConfig& cfg);

/// Global features of one mention or entity. An empty `image` span is a missing image and
/// behaves as the zero vector.
template <typename T>
struct GlobalFeatures {
  std::span<const T> text;
  std::span<const T> image;
};

/// Cosine similarity in double precision; cos(x, 0) := 0.
template <typename T>
double cosine(std::span<const T> x, std::span<const T> y);

/// F(M, E) = cosine / temperature for the configured variant. When both fused vectors vanish
/// the score is 0 and a warning is recorded.
/// Throws Error{kDimensionMismatch}.
template <typename T>
double score(const GlobalFeatures<T>& mention, const GlobalFeatures<T>& entity,
             const MatcherConfig& cfg, Diagnostics* diag = nullptr);

/// score(mention, entities[e]) for every e, in order.
template <typename T>
std::vector<double> score_all(const GlobalFeatures<T>& mention,
                              std::span<const GlobalFeatures<T>> entities,
                              const MatcherConfig& cfg, Diagnostics* diag = nullptr,
                              unsigned threads = 1);

/// Score and its gradient with respect to every input vector (empty when the input is absent).
struct ScoreGradient {
  double value = 0.0;
  std::vector<double> mention_text;
  std::vector<double> mention_image;
  std::vector<double> entity_text;
  std::vector<double> entity_image;
};

ScoreGradient score_with_gradient(const GlobalFeatures<double>& mention,
                                  const GlobalFeatures<double>& entity, const MatcherConfig& cfg);

GlobalFeatures<float> mention_features(const Mention& mention, const EmbeddingStore& store);
GlobalFeatures<float> entity_features(const KnowledgeBase& kb, Ordinal i,
                                      const EmbeddingStore& store);
std::vector<GlobalFeatures<float>> all_entity_features(const KnowledgeBase& kb,
                                                       const EmbeddingStore& store);

}  // namespace melmine
