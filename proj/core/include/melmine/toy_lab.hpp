#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "melmine/contrastive.hpp"
#include "melmine/rank_eval.hpp"

namespace melmine {

/// Desk-scale knowledge base of G groups × m near-duplicate entities. Entities in a group share
/// a centroid and 3 coarse attributes; each adds a small fine-grained offset and 2 unique fine
/// attributes, so in-group Jaccard is 3/7 and cross-group Jaccard is 0.
struct SyntheticSpec {
  std::size_t groups = 20;
  std::size_t per_group = 5;
  std::size_t coarse_attributes = 3;
  std::size_t fine_attributes = 2;
  std::size_t input_dim = 32;
  double group_scale = 1.0;
  double fine_scale = 0.3;
  double mention_noise = 0.2;
  std::size_t train_mentions_per_entity = 4;
  std::size_t test_mentions_per_entity = 2;
  std::uint64_t seed = 5;

  std::size_t entities() const noexcept { return groups * per_group; }
};

void validate(const SyntheticSpec& spec);

struct ToyData {
  KnowledgeBase kb;
  EmbeddingStore store;  // entity rows first, then train mentions, then test mentions
  std::vector<Mention> train;
  std::vector<Mention> test;
};

ToyData generate(const SyntheticSpec& spec);

enum class NegativeSampling { kConditional, kRandom };

std::string_view sampling_name(NegativeSampling s) noexcept;

struct TrainConfig {
  std::size_t projected_dim = 16;
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  std::size_t k = 4;
  NegativeSampling sampling = NegativeSampling::kConditional;
  MatcherConfig matcher;
  std::uint64_t seed = 5;
  unsigned threads = 1;
};

/// Linear projection followed by the cosine matcher.
struct ToyModel {
  RowMatrix<double> projection;  // projected_dim × input_dim
};

ToyModel init_model(std::size_t projected_dim, std::size_t input_dim, std::uint64_t seed);

/// Mean contrastive loss of `batches` (mention ordinals index data.train) under `model`, and
/// optionally d(loss)/d(projection).
double toy_loss(const ToyModel& model, const ToyData& data,
                std::span<const TrainingBatch> batches, const TrainConfig& cfg,
                RowMatrix<double>* projection_grad = nullptr);

/// Training batches for one epoch. Conditional batches are the top-k rows of the exact
/// negative table and do not change between epochs; random batches are redrawn per epoch.
std::vector<TrainingBatch> epoch_batches(const ToyData& data, const NegativeTable& table,
                                         const TrainConfig& cfg, std::size_t epoch);

struct TrainResult {
  ToyModel model;
  std::vector<double> loss_curve;  // mean loss at the start of each epoch
};

/// Full-batch gradient descent. Throws Error{kDivergedLoss} on a non-finite loss or weight.
TrainResult train(const ToyData& data, const TrainConfig& cfg);

RankReport evaluate_toy(const ToyModel& model, const ToyData& data,
                        std::span<const Mention> mentions, TiePolicy policy);

struct AblationRow {
  std::size_t k = 0;
  NegativeSampling sampling = NegativeSampling::kConditional;
  std::vector<std::uint64_t> seeds;
  std::vector<double> hits_at_1;  // per seed, percent
  std::vector<double> mrr;        // per seed
  std::vector<double> final_loss; // per seed
  double mean_hits_at_1 = 0.0;
  double mean_mrr = 0.0;
};

/// Trains and evaluates conditional and random sampling for every k and seed. Each seed drives
/// both the synthetic data and the projection initialization; the two samplers share them.
std::vector<AblationRow> ablate(const SyntheticSpec& spec, const TrainConfig& base,
                                std::span<const std::size_t> ks,
                                std::span<const std::uint64_t> seeds,
                                TiePolicy policy = TiePolicy::kPessimistic);

std::string ablation_to_json(std::span<const AblationRow> rows, std::string_view config_json);
std::string ablation_to_table(std::span<const AblationRow> rows);

}  // namespace melmine
