// melmine: command-line front end for the hard-negative mining and evaluation pipeline.
//
// Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "melmine/contrastive.hpp"
#include "melmine/cvacpt.hpp"
#include "melmine/data_io.hpp"
#include "melmine/jaccard.hpp"
#include "melmine/minhash.hpp"
#include "melmine/rank_eval.hpp"
#include "melmine/table_io.hpp"
#include "melmine/toy_lab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Options {
  std::string kb, mentions, emb, table, params, index, out, mention_id;
  std::string save_params;
  std::string method_flag;  // set by --exact / --minhash
  bool exact = false, minhash = false, fold_case = false;
  std::size_t k = 4, sig = 256, bands = 32, rows = 8, ns = 0, top = 10;
  std::optional<double> blend;
  double tau = 1.0;
  std::uint64_t seed = 5;
  std::optional<std::uint64_t> init_seed;
  std::optional<std::size_t> init_dim;
  std::string variant = "cosine-text", tie = "pessimistic", format = "json";
  std::string reference = "entity-image";
  unsigned threads = 1;

  // toy
  std::vector<std::size_t> ks{2, 4, 6};
  std::size_t seeds = 5, groups = 20, per_group = 5, epochs = 200;
  double fine_scale = 0.3, noise = 0.2, lr = 0.1;
  std::string curve;
};

unsigned default_threads() {
  if (const char* env = std::getenv("MELMINE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid MELMINE_THREADS='" << env << "'\n";
  }
  return 1;
}

void emit_warnings(const melmine::Diagnostics& diag) {
  for (const auto& w : diag.warnings) std::cerr << "warning: " << w << '\n';
}

// Input paths are checked before any work so a missing file is reported as an I/O error.
void require_inputs(const Options& o) {
  for (const std::string* p : {&o.kb, &o.mentions, &o.emb, &o.params, &o.index}) {
    if (p->empty()) continue;
    std::error_code ec;
    if (!fs::is_regular_file(*p, ec)) {
      throw melmine::Error(melmine::Errc::kIoError, "cannot open input '" + *p + "'");
    }
  }
}

void print_seed(std::uint64_t seed) { std::cerr << "seed: " << seed << '\n'; }

// Primary output goes to --out when given, otherwise to stdout.
void deliver(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  melmine::write_file(o.out, text);
}

melmine::KnowledgeBase load_kb(const Options& o) {
  return melmine::load_kb(o.kb, melmine::KbOptions{o.fold_case});
}

melmine::MatcherConfig matcher(const Options& o) {
  melmine::MatcherConfig cfg{melmine::parse_variant(o.variant), o.tau};
  melmine::validate(cfg);
  return cfg;
}

std::optional<melmine::CvacptParams> cvacpt_params(const Options& o, std::size_t dim) {
  std::optional<melmine::CvacptParams> params;
  if (!o.params.empty()) {
    params = melmine::load_params(o.params);
  } else if (o.init_seed) {
    params = melmine::init_params(o.init_dim.value_or(dim), *o.init_seed);
    print_seed(*o.init_seed);
  }
  if (params && o.blend) {
    params->blend = *o.blend;
    melmine::validate(*params);
  }
  if (params && !o.save_params.empty()) {
    const auto parent = fs::path(o.save_params).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    melmine::save_params(*params, o.save_params);
  }
  return params;
}

json cvacpt_config(const Options& o, const std::optional<melmine::CvacptParams>& params) {
  if (!params) return nullptr;
  json c = {{"blend", params->blend}, {"views", o.ns}};
  if (!o.params.empty()) c["params"] = o.params;
  if (o.init_seed) c["init_seed"] = *o.init_seed;
  return c;
}

int cmd_stats(const Options& o) {
  const auto kb = load_kb(o);
  melmine::Diagnostics diag;
  const auto mentions = melmine::load_mentions(o.mentions, kb, &diag);
  emit_warnings(diag);
  const auto stats = melmine::dataset_stats(kb, mentions);
  json doc = {{"entities", kb.size()},
              {"mentions", mentions.size()},
              {"attribute_vocab", kb.vocab_size()},
              {"kb_fingerprint", melmine::format_fingerprint(kb.fingerprint())},
              {"image_pairs",
               {{"both_have_image", stats.both_have_image},
                {"mention_only", stats.mention_only},
                {"entity_only", stats.entity_only},
                {"neither", stats.neither}}},
              {"warnings", diag.warnings.size()}};
  deliver(o, doc.dump(2) + "\n");
  return 0;
}

melmine::MinHashConfig minhash_config(const Options& o) {
  melmine::MinHashConfig cfg{o.sig, o.bands, o.rows, o.seed};
  melmine::validate(cfg);
  return cfg;
}

int cmd_build_index(const Options& o) {
  const auto cfg = minhash_config(o);
  const auto kb = load_kb(o);
  print_seed(cfg.seed);
  const auto index = melmine::build_minhash_index(kb, cfg, o.threads);
  deliver(o, melmine::serialize_index(index));
  return 0;
}

int cmd_mine(const Options& o) {
  if (o.exact && o.minhash) {
    throw melmine::Error(melmine::Errc::kInvalidArgument, "--exact and --minhash are exclusive");
  }
  if (o.k == 0) throw melmine::Error(melmine::Errc::kInvalidArgument, "--k must be at least 1");
  std::optional<melmine::MinHashConfig> cfg;
  if (o.minhash) cfg = minhash_config(o);
  const auto kb = load_kb(o);
  melmine::NegativeTable table;
  if (cfg) {
    print_seed(cfg->seed);
    const auto index = o.index.empty()
                           ? melmine::build_minhash_index(kb, *cfg, o.threads)
                           : melmine::deserialize_index(melmine::read_file(o.index));
    table = melmine::build_approx_table(kb, o.k, index, o.threads);
  } else {
    table = melmine::build_exact_table(kb, o.k, o.threads);
  }
  std::ostringstream out;
  melmine::write_negative_table(out, table, kb);
  deliver(o, out.str());
  return 0;
}

int cmd_transform(const Options& o) {
  if (o.out.empty()) {
    throw melmine::Error(melmine::Errc::kInvalidArgument, "--out is required for transform");
  }
  const auto kb = load_kb(o);
  melmine::Diagnostics diag;
  const auto mentions = melmine::load_mentions(o.mentions, kb, &diag);
  auto store = melmine::load_embeddings(o.emb);
  melmine::check_row_references(kb, mentions, store);
  const auto params = cvacpt_params(o, store.dim());
  if (!params) {
    throw melmine::Error(melmine::Errc::kInvalidArgument, "--params or --init-seed is required");
  }
  if (params->dim != store.dim()) {
    throw melmine::Error(melmine::Errc::kDimensionMismatch, "parameter dimension " +
                                                                std::to_string(params->dim) +
                                                                " vs embeddings " +
                                                                std::to_string(store.dim()));
  }

  melmine::RowMatrix<float> result = store.matrix;
  std::map<melmine::RowIndex, std::string> written;
  auto claim = [&](melmine::RowIndex row, const std::string& mention) {
    auto [it, inserted] = written.emplace(row, mention);
    if (!inserted) {
      throw melmine::Error(melmine::Errc::kInvalidArgument,
                           "row " + std::to_string(row) + " is a visual row of both '" +
                               it->second + "' and '" + mention + "'");
    }
  };
  std::size_t transformed = 0;
  for (const auto& m : mentions) {
    const auto bundle = melmine::transform_mention(m, store, *params, o.ns, o.threads);
    if (!bundle) continue;
    ++transformed;
    claim(*m.image_row, m.id);
    std::copy(bundle->global.begin(), bundle->global.end(), result.row(*m.image_row).begin());
    for (std::size_t p = 0; p < m.patch_rows.size(); ++p) {
      claim(m.patch_rows[p], m.id);
      const auto src = bundle->local.row(p);
      std::copy(src.begin(), src.end(), result.row(m.patch_rows[p]).begin());
    }
  }
  emit_warnings(diag);
  melmine::save_embeddings(result, o.out);
  json summary = {{"transformed_mentions", transformed},
                  {"skipped_mentions", mentions.size() - transformed},
                  {"out", o.out},
                  {"cvacpt", cvacpt_config(o, params)}};
  std::cerr << summary.dump() << '\n';
  return 0;
}

struct EvalInputs {
  melmine::KnowledgeBase kb;
  std::vector<melmine::Mention> mentions;
  melmine::EmbeddingStore store;
};

EvalInputs load_eval_inputs(const Options& o) {
  EvalInputs in;
  in.kb = load_kb(o);
  melmine::Diagnostics diag;
  in.mentions = melmine::load_mentions(o.mentions, in.kb, &diag);
  emit_warnings(diag);
  in.store = melmine::load_embeddings(o.emb);
  melmine::check_row_references(in.kb, in.mentions, in.store);
  return in;
}

int cmd_score(const Options& o) {
  const auto cfg = matcher(o);
  const auto in = load_eval_inputs(o);
  const melmine::Mention* mention = nullptr;
  for (const auto& m : in.mentions) {
    if (m.id == o.mention_id) mention = &m;
  }
  if (mention == nullptr) {
    throw melmine::Error(melmine::Errc::kInvalidArgument, "unknown mention '" + o.mention_id + "'");
  }
  const auto params = cvacpt_params(o, in.store.dim());
  auto features = melmine::mention_features(*mention, in.store);
  std::optional<melmine::FeatureBundle> bundle;
  if (params) {
    bundle = melmine::transform_mention(*mention, in.store, *params, o.ns);
    if (bundle) features.image = bundle->global;
  }
  const auto entities = melmine::all_entity_features(in.kb, in.store);
  melmine::Diagnostics diag;
  const auto scores = melmine::score_all<float>(features, entities, cfg, &diag);
  emit_warnings(diag);

  std::vector<melmine::Negative> order;
  for (melmine::Ordinal e = 0; e < scores.size(); ++e) order.push_back({e, scores[e]});
  std::sort(order.begin(), order.end(), melmine::ranks_before);
  const std::size_t shown = o.top == 0 ? order.size() : std::min(o.top, order.size());
  json ranked = json::array();
  for (std::size_t i = 0; i < shown; ++i) {
    ranked.push_back({{"entity", in.kb.entity(order[i].entity).id}, {"score", order[i].score}});
  }
  const auto gold = *in.kb.find(mention->gold_entity);
  json doc = {{"mention", mention->id},
              {"gold_entity", mention->gold_entity},
              {"gold_score", scores[gold]},
              {"gold_rank", melmine::rank_of_gold(scores, gold, melmine::parse_tie_policy(o.tie))},
              {"matcher", {{"variant", o.variant}, {"temperature", o.tau}}},
              {"tie_policy", o.tie},
              {"cvacpt", cvacpt_config(o, params)},
              {"scores", std::move(ranked)}};
  deliver(o, doc.dump(2) + "\n");
  return 0;
}

int cmd_eval(const Options& o) {
  const auto cfg = matcher(o);
  const auto policy = melmine::parse_tie_policy(o.tie);
  if (o.format != "json" && o.format != "table") {
    throw melmine::Error(melmine::Errc::kInvalidArgument, "--format must be json or table");
  }
  const auto in = load_eval_inputs(o);
  const auto params = cvacpt_params(o, in.store.dim());
  melmine::EvalOptions opts;
  opts.matcher = cfg;
  opts.tie_policy = policy;
  opts.cvacpt = params ? &*params : nullptr;
  opts.max_views = o.ns;
  opts.threads = o.threads;
  melmine::Diagnostics diag;
  const auto report = melmine::evaluate(in.mentions, in.kb, in.store, opts, &diag);
  emit_warnings(diag);
  if (o.format == "table") {
    deliver(o, melmine::format_report_table(report));
    return 0;
  }
  json config = {{"kb", o.kb},
                 {"mentions", o.mentions},
                 {"embeddings", o.emb},
                 {"matcher", {{"variant", o.variant}, {"temperature", o.tau}}},
                 {"tie_policy", o.tie},
                 {"cvacpt", cvacpt_config(o, params)}};
  deliver(o, melmine::report_to_json(report, config.dump()));
  return 0;
}

int cmd_pooled_sim(const Options& o) {
  if (o.reference != "entity-image" && o.reference != "mention-image") {
    throw melmine::Error(melmine::Errc::kInvalidArgument,
                         "--reference must be entity-image or mention-image");
  }
  const auto in = load_eval_inputs(o);
  std::vector<std::vector<std::span<const float>>> views;
  std::vector<std::span<const float>> refs;
  std::size_t skipped = 0;
  for (const auto& m : in.mentions) {
    std::optional<melmine::RowIndex> ref;
    if (o.reference == "mention-image") {
      ref = m.image_row;
    } else {
      const auto& e = in.kb.entity(*in.kb.find(m.gold_entity));
      if (e.has_image()) ref = e.image_rows.front();
    }
    if (!ref || m.synthetic_rows.empty()) {
      ++skipped;
      continue;
    }
    const std::size_t n = o.ns == 0 ? m.synthetic_rows.size() : std::min(o.ns, m.synthetic_rows.size());
    std::vector<std::span<const float>> v;
    for (std::size_t h = 0; h < n; ++h) v.push_back(in.store.row(m.synthetic_rows[h]));
    views.push_back(std::move(v));
    refs.push_back(in.store.row(*ref));
  }
  const auto result = melmine::pooled_similarity(views, refs);
  json doc = {{"reference", o.reference},
              {"views", o.ns},
              {"items", result.items},
              {"skipped", skipped},
              {"mean_individual_cosine", result.individual},
              {"pooled_cosine", result.pooled}};
  deliver(o, doc.dump(2) + "\n");
  return 0;
}

int cmd_toy(const Options& o) {
  if (o.format != "json" && o.format != "table") {
    throw melmine::Error(melmine::Errc::kInvalidArgument, "--format must be json or table");
  }
  melmine::SyntheticSpec spec;
  spec.groups = o.groups;
  spec.per_group = o.per_group;
  spec.fine_scale = o.fine_scale;
  spec.mention_noise = o.noise;
  spec.seed = o.seed;
  melmine::validate(spec);
  melmine::TrainConfig train;
  train.learning_rate = o.lr;
  train.epochs = o.epochs;
  train.matcher = matcher(o);
  train.seed = o.seed;
  train.threads = o.threads;
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < o.seeds; ++s) seeds.push_back(o.seed + s);
  print_seed(o.seed);

  const auto rows = melmine::ablate(spec, train, o.ks, seeds, melmine::parse_tie_policy(o.tie));

  if (!o.curve.empty()) {
    // Loss curves of the first seed, one block per (k, sampler).
    std::ostringstream curves;
    const auto data = melmine::generate(spec);
    for (std::size_t k : o.ks) {
      for (auto sampling : {melmine::NegativeSampling::kConditional, melmine::NegativeSampling::kRandom}) {
        auto cfg = train;
        cfg.k = k;
        cfg.sampling = sampling;
        cfg.threads = 1;
        const auto result = melmine::train(data, cfg);
        curves << "# k=" << k << " negatives=" << melmine::sampling_name(sampling) << '\n';
        for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%zu %.17g\n", e, result.loss_curve[e]);
          curves << buf;
        }
      }
    }
    melmine::write_file(o.curve, curves.str());
  }

  if (o.format == "table") {
    deliver(o, melmine::ablation_to_table(rows));
    return 0;
  }
  json config = {{"groups", spec.groups},
                 {"per_group", spec.per_group},
                 {"fine_scale", spec.fine_scale},
                 {"mention_noise", spec.mention_noise},
                 {"epochs", train.epochs},
                 {"learning_rate", train.learning_rate},
                 {"temperature", train.matcher.temperature},
                 {"tie_policy", o.tie},
                 {"seed", o.seed},
                 {"k", o.ks}};
  deliver(o, melmine::ablation_to_json(rows, config.dump()));
  return 0;
}

void add_inputs(CLI::App* cmd, Options& o, bool mentions, bool emb) {
  cmd->add_option("--kb", o.kb, "Entities file (JSON Lines)")->required();
  if (mentions) {
    cmd->add_option("--mentions", o.mentions, "Mentions file (JSON Lines)")
        ->required();
  }
  if (emb) {
    cmd->add_option("--emb", o.emb, "Embedding store (EMB1)")->required();
  }
  cmd->add_flag("--fold-case", o.fold_case, "Lowercase attribute tokens");
}

void add_matcher(CLI::App* cmd, Options& o) {
  cmd->add_option("--variant", o.variant, "cosine-text | cosine-fused")->capture_default_str();
  cmd->add_option("--tau", o.tau, "Matcher temperature")->capture_default_str();
  cmd->add_option("--tie", o.tie, "pessimistic | optimistic | average")->capture_default_str();
}

void add_cvacpt(CLI::App* cmd, Options& o) {
  cmd->add_option("--params", o.params, "CVaCPT parameter manifest");
  cmd->add_option("--init-seed", o.init_seed, "Initialize CVaCPT parameters from this seed");
  cmd->add_option("--save-params", o.save_params, "Write the parameters in use to this manifest");
  cmd->add_option("--w", o.blend, "Override the blend coefficient w in [0,1]");
  cmd->add_option("--ns", o.ns, "Use at most this many synthetic views (0 = all)");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  o.threads = default_threads();

  CLI::App app{"melmine: attribute-conditioned hard-negative mining and entity-linking evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--threads", o.threads, "Worker threads (env MELMINE_THREADS)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Write the primary output here instead of stdout");

  auto* stats = app.add_subcommand("stats", "Image-availability statistics of mention/entity pairs");
  add_inputs(stats, o, true, false);

  auto* build_index = app.add_subcommand("build-index", "Build a MinHash/LSH index over attributes");
  add_inputs(build_index, o, false, false);
  build_index->add_option("--sig", o.sig, "Signature length")->capture_default_str();
  build_index->add_option("--bands", o.bands, "LSH bands")->capture_default_str();
  build_index->add_option("--rows", o.rows, "Rows per band")->capture_default_str();
  build_index->add_option("--seed", o.seed, "Hash seed")->capture_default_str();

  auto* mine = app.add_subcommand("mine", "Mine top-k Jaccard hard negatives per entity");
  add_inputs(mine, o, false, false);
  mine->add_option("--k", o.k, "Negatives per entity")->required();
  mine->add_flag("--exact", o.exact, "Exhaustive mining (default)");
  mine->add_flag("--minhash", o.minhash, "LSH candidates with exact rerank");
  mine->add_option("--sig", o.sig, "Signature length")->capture_default_str();
  mine->add_option("--bands", o.bands, "LSH bands")->capture_default_str();
  mine->add_option("--rows", o.rows, "Rows per band")->capture_default_str();
  mine->add_option("--seed", o.seed, "Hash and fill seed")->capture_default_str();
  mine->add_option("--index", o.index, "Prebuilt index from build-index");

  auto* transform = app.add_subcommand("transform", "Apply CVaCPT to mention visual features");
  add_inputs(transform, o, true, true);
  add_cvacpt(transform, o);
  transform->add_option("--dim", o.init_dim, "Dimension for --init-seed (default: store dim)");

  auto* score = app.add_subcommand("score", "Score one mention against every entity");
  add_inputs(score, o, true, true);
  add_matcher(score, o);
  add_cvacpt(score, o);
  score->add_option("--mention", o.mention_id, "Mention id")->required();
  score->add_option("--top", o.top, "Entities to list (0 = all)")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Full-KB ranking metrics (H@1/3/5, MRR)");
  add_inputs(eval, o, true, true);
  add_matcher(eval, o);
  add_cvacpt(eval, o);
  eval->add_option("--format", o.format, "json | table")->capture_default_str();

  auto* pooled = app.add_subcommand("pooled-sim", "Mean per-view vs max-pooled view similarity");
  add_inputs(pooled, o, true, true);
  pooled->add_option("--reference", o.reference, "entity-image | mention-image")
      ->capture_default_str();
  pooled->add_option("--ns", o.ns, "Use at most this many synthetic views (0 = all)");

  auto* toy = app.add_subcommand("toy", "Synthetic conditional vs random negative ablation");
  toy->add_option("--k", o.ks, "Negative counts to sweep")->delimiter(',')->capture_default_str();
  toy->add_option("--seeds", o.seeds, "Number of seeds (seed, seed+1, ...)")->capture_default_str();
  toy->add_option("--seed", o.seed, "First seed")->capture_default_str();
  toy->add_option("--groups", o.groups, "Entity groups")->capture_default_str();
  toy->add_option("--per-group", o.per_group, "Entities per group")->capture_default_str();
  toy->add_option("--fine-scale", o.fine_scale, "Fine-signal scale")->capture_default_str();
  toy->add_option("--noise", o.noise, "Mention noise sigma")->capture_default_str();
  toy->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  toy->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
  toy->add_option("--tau", o.tau, "Matcher temperature")->capture_default_str();
  toy->add_option("--tie", o.tie, "Tie policy for evaluation")->capture_default_str();
  toy->add_option("--format", o.format, "json | table")->capture_default_str();
  toy->add_option("--curve", o.curve, "Write loss curves (epoch loss) here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    require_inputs(o);
    if (*stats) return cmd_stats(o);
    if (*build_index) return cmd_build_index(o);
    if (*mine) return cmd_mine(o);
    if (*transform) return cmd_transform(o);
    if (*score) return cmd_score(o);
    if (*eval) return cmd_eval(o);
    if (*pooled) return cmd_pooled_sim(o);
    if (*toy) return cmd_toy(o);
  } catch (const melmine::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_io() ? kExitIo : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
