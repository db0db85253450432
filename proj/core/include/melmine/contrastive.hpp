#pragma once

#include <optional>
#include <span>
#include <vector>

#include "melmine/matcher.hpp"
#include "melmine/sampler.hpp"

namespace melmine {

/// Loss and its gradient with respect to the score vector (positive first).
struct LossResult {
  double loss = 0.0;
  std::vector<double> score_grad;
};

/// −log(e^{s_pos} / (e^{s_pos} + Σ_j e^{s_neg,j})) evaluated with a max shift.
/// Gradient: softmax(scores) − onehot(0).
/// Throws Error{kInvalidArgument} with fewer than two scores, Error{kNonFiniteScore}.
LossResult contrastive_loss(std::span<const double> scores);

/// Store rows holding the global features of one mention or entity.
struct FeatureRows {
  RowIndex text = 0;
  std::optional<RowIndex> image;
};

struct FeatureLayout {
  std::vector<FeatureRows> mentions;  // by mention ordinal
  std::vector<FeatureRows> entities;  // by entity ordinal
};

FeatureLayout make_feature_layout(const KnowledgeBase& kb, std::span<const Mention> mentions);

struct BatchLoss {
  double loss = 0.0;                           // mean over batches
  std::vector<std::vector<double>> score_grads;  // per batch, already divided by batch count
  RowMatrix<double> embedding_grad;            // d(mean loss)/d(embeddings); empty unless requested
};

/// Mean contrastive loss over batches, scored with the cosine matcher on `embeddings`.
/// Per-batch work may run in parallel; reduction is in batch order.
BatchLoss batch_loss(std::span<const TrainingBatch> batches, const RowMatrix<double>& embeddings,
                     const FeatureLayout& layout, const MatcherConfig& cfg,
                     bool with_embedding_grad = false, unsigned threads = 1);

}  // namespace melmine
