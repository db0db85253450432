#include "melmine/toy_lab.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

namespace melmine {
namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(Errc::kDivergedLoss, what);
}

// Projects entity rows and the given mention rows. Row layout of the result: entities first,
// then one row per mention in `mentions` order.
RowMatrix<double> project(const ToyModel& model, const ToyData& data,
                          std::span<const Mention> mentions) {
  const std::size_t n = data.kb.size();
  const auto& P = model.projection;
  RowMatrix<double> out(n + mentions.size(), P.rows());
  auto project_row = [&](std::span<const float> x, std::span<double> y) {
    for (std::size_t o = 0; o < P.rows(); ++o) {
      const auto w = P.row(o);
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * static_cast<double>(x[i]);
      y[o] = acc;
    }
  };
  for (Ordinal i = 0; i < n; ++i) project_row(data.store.row(data.kb.text_row(i)), out.row(i));
  for (std::size_t j = 0; j < mentions.size(); ++j) {
    project_row(data.store.row(mentions[j].text_row), out.row(n + j));
  }
  return out;
}

FeatureLayout projected_layout(std::size_t entities, std::size_t mentions) {
  FeatureLayout layout;
  for (std::size_t i = 0; i < entities; ++i) layout.entities.push_back({static_cast<RowIndex>(i), std::nullopt});
  for (std::size_t j = 0; j < mentions; ++j) {
    layout.mentions.push_back({static_cast<RowIndex>(entities + j), std::nullopt});
  }
  return layout;
}

}  // namespace

void validate(const SyntheticSpec& s) {
  if (s.groups * s.per_group < 2) throw Error(Errc::kInvalidArgument, "need at least 2 entities");
  if (s.input_dim == 0) throw Error(Errc::kInvalidArgument, "input_dim must be positive");
  if (!(s.group_scale > 0.0) || !(s.fine_scale >= 0.0) || !(s.mention_noise >= 0.0)) {
    throw Error(Errc::kInvalidArgument, "group scale must be positive, fine scale and noise non-negative");
  }
}

std::string_view sampling_name(NegativeSampling s) noexcept {
  return s == NegativeSampling::kConditional ? "conditional" : "random";
}

ToyData generate(const SyntheticSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.entities();
  const std::size_t d = spec.input_dim;
  const std::size_t train_rows = n * spec.train_mentions_per_entity;
  const std::size_t test_rows = n * spec.test_mentions_per_entity;

  ToyData data;
  data.store.matrix = RowMatrix<float>(n + train_rows + test_rows, d);
  data.store.source_path = "synthetic";

  std::vector<Entity> entities;
  entities.reserve(n);
  std::vector<double> centroid(d);
  for (std::size_t g = 0; g < spec.groups; ++g) {
    for (double& c : centroid) c = spec.group_scale * normal(rng);
    for (std::size_t j = 0; j < spec.per_group; ++j) {
      const std::size_t i = g * spec.per_group + j;
      Entity e;
      e.id = "E" + std::to_string(g) + "_" + std::to_string(j);
      e.name = "group " + std::to_string(g) + " member " + std::to_string(j);
      for (std::size_t c = 0; c < spec.coarse_attributes; ++c) {
        e.attributes.push_back("g" + std::to_string(g) + ":coarse" + std::to_string(c));
      }
      for (std::size_t f = 0; f < spec.fine_attributes; ++f) {
        e.attributes.push_back(e.id + ":fine" + std::to_string(f));
      }
      e.text_row = static_cast<RowIndex>(i);
      auto row = data.store.matrix.row(i);
      for (std::size_t c = 0; c < d; ++c) {
        row[c] = static_cast<float>(centroid[c] + spec.fine_scale * normal(rng));
      }
      entities.push_back(std::move(e));
    }
  }

  RowIndex next_row = static_cast<RowIndex>(n);
  auto make_mentions = [&](std::size_t per_entity, const char* split, std::vector<Mention>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < per_entity; ++r) {
        Mention m;
        m.id = std::string(split) + "_" + entities[i].id + "_" + std::to_string(r);
        m.mention_words = entities[i].name;
        m.sentence = "A sentence about " + entities[i].name + ".";
        m.gold_entity = entities[i].id;
        m.text_row = next_row;
        const auto src = data.store.matrix.row(i);
        auto dst = data.store.matrix.row(next_row);
        for (std::size_t c = 0; c < d; ++c) {
          dst[c] = static_cast<float>(static_cast<double>(src[c]) + spec.mention_noise * normal(rng));
        }
        ++next_row;
        out.push_back(std::move(m));
      }
    }
  };
  make_mentions(spec.train_mentions_per_entity, "train", data.train);
  make_mentions(spec.test_mentions_per_entity, "test", data.test);
  data.kb = build_kb(std::move(entities));
  return data;
}

ToyModel init_model(std::size_t projected_dim, std::size_t input_dim, std::uint64_t seed) {
  ToyModel model;
  model.projection = RowMatrix<double>(projected_dim, input_dim);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  std::uniform_real_distribution<double> unit(-bound, bound);
  for (double& w : model.projection.data()) w = unit(rng);
  return model;
}

double toy_loss(const ToyModel& model, const ToyData& data,
                std::span<const TrainingBatch> batches, const TrainConfig& cfg,
                RowMatrix<double>* projection_grad) {
  const auto projected = project(model, data, data.train);
  const auto layout = projected_layout(data.kb.size(), data.train.size());
  const bool want_grad = projection_grad != nullptr;
  BatchLoss result = batch_loss(batches, projected, layout, cfg.matcher, want_grad, cfg.threads);
  if (want_grad) {
    const auto& P = model.projection;
    RowMatrix<double> grad(P.rows(), P.cols());
    const std::size_t n = data.kb.size();
    for (std::size_t r = 0; r < projected.rows(); ++r) {
      const auto g = result.embedding_grad.row(r);
      if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
      const auto x = r < n ? data.store.row(data.kb.text_row(static_cast<Ordinal>(r)))
                           : data.store.row(data.train[r - n].text_row);
      for (std::size_t o = 0; o < P.rows(); ++o) {
        auto dst = grad.row(o);
        for (std::size_t i = 0; i < P.cols(); ++i) dst[i] += g[o] * static_cast<double>(x[i]);
      }
    }
    *projection_grad = std::move(grad);
  }
  return result.loss;
}

std::vector<TrainingBatch> epoch_batches(const ToyData& data, const NegativeTable& table,
                                         const TrainConfig& cfg, std::size_t epoch) {
  std::vector<TrainingBatch> batches;
  batches.reserve(data.train.size());
  const std::uint64_t epoch_seed = mix64(cfg.seed + epoch);
  for (std::size_t j = 0; j < data.train.size(); ++j) {
    const Ordinal positive = *data.kb.find(data.train[j].gold_entity);
    Rng rng(derive_seed(epoch_seed, j));
    TrainingBatch b = cfg.sampling == NegativeSampling::kConditional
                          ? sample_conditional(table, positive, cfg.k, rng)
                          : sample_random(data.kb.size(), positive, cfg.k, rng);
    b.mention = static_cast<Ordinal>(j);
    batches.push_back(std::move(b));
  }
  return batches;
}

TrainResult train(const ToyData& data, const TrainConfig& cfg) {
  if (data.train.empty()) throw Error(Errc::kInvalidArgument, "no training mentions");
  TrainResult result;
  result.model = init_model(cfg.projected_dim, data.store.dim(), cfg.seed);
  NegativeTable table;
  if (cfg.sampling == NegativeSampling::kConditional) table = build_exact_table(data.kb, cfg.k, cfg.threads);

  std::vector<TrainingBatch> batches;
  RowMatrix<double> grad;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch == 0 || cfg.sampling == NegativeSampling::kRandom) {
      batches = epoch_batches(data, table, cfg, epoch);
    }
    double loss = 0.0;
    try {
      loss = toy_loss(result.model, data, batches, cfg, &grad);
    } catch (const Error& e) {
      if (e.code() != Errc::kNonFiniteScore) throw;
      throw Error(Errc::kDivergedLoss, "epoch " + std::to_string(epoch) + ": " + e.what());
    }
    check_finite(loss, "training loss is not finite");
    result.loss_curve.push_back(loss);
    auto& w = result.model.projection.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= cfg.learning_rate * grad.data()[i];
      check_finite(w[i], "projection weight is not finite");
    }
  }
  return result;
}

RankReport evaluate_toy(const ToyModel& model, const ToyData& data,
                        std::span<const Mention> mentions, TiePolicy policy) {
  const auto projected = project(model, data, mentions);
  const std::size_t n = data.kb.size();
  std::vector<GlobalFeatures<double>> entities(n);
  for (std::size_t i = 0; i < n; ++i) entities[i].text = projected.row(i);
  std::vector<GoldPlacement> placements;
  std::vector<std::string> ids;
  placements.reserve(mentions.size());
  for (std::size_t j = 0; j < mentions.size(); ++j) {
    GlobalFeatures<double> m;
    m.text = projected.row(n + j);
    const auto scores = score_all<double>(m, entities, MatcherConfig{});
    placements.push_back(place_gold(scores, *data.kb.find(mentions[j].gold_entity)));
    ids.push_back(mentions[j].id);
  }
  return summarize(std::move(ids), placements, policy);
}

std::vector<AblationRow> ablate(const SyntheticSpec& spec, const TrainConfig& base,
                                std::span<const std::size_t> ks,
                                std::span<const std::uint64_t> seeds, TiePolicy policy) {
  std::vector<AblationRow> rows;
  for (std::size_t k : ks) {
    for (NegativeSampling sampling : {NegativeSampling::kConditional, NegativeSampling::kRandom}) {
      AblationRow row;
      row.k = k;
      row.sampling = sampling;
      row.seeds.assign(seeds.begin(), seeds.end());
      row.hits_at_1.resize(seeds.size());
      row.mrr.resize(seeds.size());
      row.final_loss.resize(seeds.size());
      rows.push_back(std::move(row));
    }
  }
  // Cells are independent; each one writes only its own slots.
  const std::size_t cells = rows.size() * seeds.size();
  parallel_for(cells, base.threads, [&](std::size_t cell) {
    AblationRow& row = rows[cell / seeds.size()];
    const std::size_t s = cell % seeds.size();
    SyntheticSpec data_spec = spec;
    data_spec.seed = seeds[s];
    const ToyData data = generate(data_spec);
    TrainConfig cfg = base;
    cfg.k = row.k;
    cfg.sampling = row.sampling;
    cfg.seed = seeds[s];
    cfg.threads = 1;
    const TrainResult trained = train(data, cfg);
    const RankReport report = evaluate_toy(trained.model, data, data.test, policy);
    row.hits_at_1[s] = report.hits_at_1;
    row.mrr[s] = report.mrr;
    row.final_loss[s] = trained.loss_curve.empty() ? 0.0 : trained.loss_curve.back();
  });
  for (auto& row : rows) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      row.mean_hits_at_1 += row.hits_at_1[s];
      row.mean_mrr += row.mrr[s];
    }
    if (!seeds.empty()) {
      row.mean_hits_at_1 /= static_cast<double>(seeds.size());
      row.mean_mrr /= static_cast<double>(seeds.size());
    }
  }
  return rows;
}

std::string ablation_to_json(std::span<const AblationRow> rows, std::string_view config_json) {
  using nlohmann::json;
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"k", r.k},
                   {"negatives", sampling_name(r.sampling)},
                   {"seeds", r.seeds},
                   {"hits_at_1", r.hits_at_1},
                   {"mrr", r.mrr},
                   {"final_loss", r.final_loss},
                   {"mean_hits_at_1", r.mean_hits_at_1},
                   {"mean_mrr", r.mean_mrr}});
  }
  json doc = {{"config", json::parse(config_json)}, {"rows", std::move(out)}};
  return doc.dump(2) + "\n";
}

std::string ablation_to_table(std::span<const AblationRow> rows) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%4s  %-12s %6s %8s %9s\n", "k", "negatives", "seeds", "H@1", "MRR");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%4zu  %-12s %6zu %8.2f %9.5f\n", r.k,
                  std::string(sampling_name(r.sampling)).c_str(), r.seeds.size(),
                  r.mean_hits_at_1, r.mean_mrr);
    out << buf;
  }
  return out.str();
}

}  // namespace melmine
