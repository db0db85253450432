#include "melmine/contrastive.hpp"

#include <algorithm>
#include <cmath>

namespace melmine {
namespace {

GlobalFeatures<double> fetch(const RowMatrix<double>& emb, const FeatureRows& rows) {
  GlobalFeatures<double> f;
  f.text = emb.row(rows.text);
  if (rows.image) f.image = emb.row(*rows.image);
  return f;
}

void accumulate(RowMatrix<double>& grad, RowIndex row, const std::vector<double>& g, double scale) {
  auto dst = grad.row(row);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += scale * g[i];
}

struct PerBatch {
  double loss = 0.0;
  std::vector<double> score_grad;
  std::vector<ScoreGradient> pair_grads;  // one per scored entity, positive first
};

}  // namespace

LossResult contrastive_loss(std::span<const double> scores) {
  if (scores.size() < 2) {
    throw Error(Errc::kInvalidArgument, "need a positive and at least one negative score");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(Errc::kNonFiniteScore, "score is NaN or Inf");
  }
  const double shift = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s - shift);
  const double log_denom = std::log(denom) + shift;

  LossResult out;
  out.loss = log_denom - scores[0];
  out.score_grad.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.score_grad[i] = std::exp(scores[i] - log_denom);
  }
  out.score_grad[0] -= 1.0;
  return out;
}

FeatureLayout make_feature_layout(const KnowledgeBase& kb, std::span<const Mention> mentions) {
  FeatureLayout layout;
  layout.entities.reserve(kb.size());
  for (Ordinal i = 0; i < kb.size(); ++i) {
    const Entity& e = kb.entity(i);
    FeatureRows rows{kb.text_row(i), std::nullopt};
    if (e.has_image()) rows.image = e.image_rows.front();
    layout.entities.push_back(rows);
  }
  layout.mentions.reserve(mentions.size());
  for (const auto& m : mentions) layout.mentions.push_back({m.text_row, m.image_row});
  return layout;
}

BatchLoss batch_loss(std::span<const TrainingBatch> batches, const RowMatrix<double>& embeddings,
                     const FeatureLayout& layout, const MatcherConfig& cfg,
                     bool with_embedding_grad, unsigned threads) {
  validate(cfg);
  if (batches.empty()) throw Error(Errc::kInvalidArgument, "no batches");

  std::vector<PerBatch> results(batches.size());
  parallel_for(batches.size(), threads, [&](std::size_t b) {
    const TrainingBatch& batch = batches[b];
    if (batch.mention >= layout.mentions.size() || batch.positive >= layout.entities.size()) {
      throw Error(Errc::kInvalidArgument, "batch references unknown mention or entity");
    }
    const auto m = fetch(embeddings, layout.mentions[batch.mention]);
    PerBatch& out = results[b];
    std::vector<double> scores;
    scores.reserve(batch.negatives.size() + 1);
    auto add = [&](Ordinal entity) {
      if (entity >= layout.entities.size()) {
        throw Error(Errc::kInvalidArgument, "batch references unknown entity");
      }
      const auto e = fetch(embeddings, layout.entities[entity]);
      if (with_embedding_grad) {
        out.pair_grads.push_back(score_with_gradient(m, e, cfg));
        scores.push_back(out.pair_grads.back().value);
      } else {
        scores.push_back(score(m, e, cfg));
      }
    };
    add(batch.positive);
    for (Ordinal neg : batch.negatives) add(neg);
    LossResult lr = contrastive_loss(scores);
    out.loss = lr.loss;
    out.score_grad = std::move(lr.score_grad);
  });

  const double inv = 1.0 / static_cast<double>(batches.size());
  BatchLoss total;
  if (with_embedding_grad) total.embedding_grad = RowMatrix<double>(embeddings.rows(), embeddings.cols());
  total.score_grads.reserve(batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) {
    PerBatch& r = results[b];
    total.loss += r.loss;
    for (double& g : r.score_grad) g *= inv;
    if (with_embedding_grad) {
      const TrainingBatch& batch = batches[b];
      const FeatureRows& mrows = layout.mentions[batch.mention];
      for (std::size_t s = 0; s < r.pair_grads.size(); ++s) {
        const Ordinal entity = s == 0 ? batch.positive : batch.negatives[s - 1];
        const FeatureRows& erows = layout.entities[entity];
        const ScoreGradient& pg = r.pair_grads[s];
        const double w = r.score_grad[s];
        accumulate(total.embedding_grad, mrows.text, pg.mention_text, w);
        if (mrows.image && !pg.mention_image.empty()) {
          accumulate(total.embedding_grad, *mrows.image, pg.mention_image, w);
        }
        accumulate(total.embedding_grad, erows.text, pg.entity_text, w);
        if (erows.image && !pg.entity_image.empty()) {
          accumulate(total.embedding_grad, *erows.image, pg.entity_image, w);
        }
      }
    }
    total.score_grads.push_back(std::move(r.score_grad));
  }
  total.loss *= inv;
  return total;
}

}  // namespace melmine
