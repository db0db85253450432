// Fixtures and brute-force reference implementations shared by the unit and acceptance tests.
// Oracles here deliberately avoid the library's algorithms: plain O(N^2) loops, std::set
// algebra, straight-line arithmetic.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "melmine/data_io.hpp"
#include "melmine/jaccard.hpp"

namespace support {

inline std::vector<melmine::Entity> random_entities(std::size_t n, std::size_t vocab,
                                                    std::size_t max_attrs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(0, max_attrs);
  std::uniform_int_distribution<std::size_t> tok(0, vocab - 1);
  std::vector<melmine::Entity> out;
  for (std::size_t i = 0; i < n; ++i) {
    melmine::Entity e;
    e.id = "e" + std::to_string(i);
    std::set<std::size_t> picked;
    const std::size_t want = size(rng);
    while (picked.size() < want) picked.insert(tok(rng));
    for (auto t : picked) e.attributes.push_back("t" + std::to_string(t));
    std::shuffle(e.attributes.begin(), e.attributes.end(), rng);
    out.push_back(std::move(e));
  }
  return out;
}

// Near-duplicate clusters: `clusters` prototypes of `tokens` attributes each, `per_cluster`
// copies per prototype, and each copy swaps one token for a fresh one with probability
// `p_edit`. Entity i belongs to cluster i / per_cluster.
inline std::vector<melmine::Entity> clustered_entities(std::size_t clusters, std::size_t per_cluster,
                                                       std::size_t tokens, double p_edit,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edit(p_edit);
  std::vector<melmine::Entity> out;
  std::size_t fresh = 0;
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t j = 0; j < per_cluster; ++j) {
      melmine::Entity e;
      e.id = "c" + std::to_string(c) + "_" + std::to_string(j);
      for (std::size_t t = 0; t < tokens; ++t) e.attributes.push_back("p" + std::to_string(c) + "_" + std::to_string(t));
      if (edit(rng)) e.attributes[rng() % tokens] = "f" + std::to_string(fresh++);
      out.push_back(std::move(e));
    }
  }
  return out;
}

// Tie-aware recall of an approximate table against the exact one: an approximate entry is a
// hit when its score reaches the exact list's k-th score.
inline double tie_aware_recall(const melmine::NegativeTable& exact,
                               const melmine::NegativeTable& approx) {
  std::size_t hits = 0, total = 0;
  for (melmine::Ordinal i = 0; i < exact.size(); ++i) {
    const auto ex = exact.list(i);
    if (ex.empty()) continue;
    const double kth = ex.back().score;
    std::size_t h = 0;
    for (const auto& n : approx.list(i)) h += n.score >= kth ? 1 : 0;
    hits += std::min(h, ex.size());
    total += ex.size();
  }
  return total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(total);
}

inline std::set<std::string> token_set(const melmine::Entity& e) {
  return {e.attributes.begin(), e.attributes.end()};
}

inline double brute_jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

struct Scored {
  std::size_t entity;
  double score;
};

// Every other entity scored against i, sorted by score descending then index ascending,
// truncated to k.
inline std::vector<Scored> brute_top_k(const std::vector<melmine::Entity>& es, std::size_t i,
                                       std::size_t k) {
  std::vector<Scored> all;
  const auto a = token_set(es[i]);
  for (std::size_t j = 0; j < es.size(); ++j) {
    if (j != i) all.push_back({j, brute_jaccard(a, token_set(es[j]))});
  }
  std::sort(all.begin(), all.end(), [](const Scored& x, const Scored& y) {
    return x.score != y.score ? x.score > y.score : x.entity < y.entity;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

inline std::vector<float> random_floats(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                        double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(u(rng));
  return v;
}

inline std::vector<double> random_doubles(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                          double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline double plain_cosine(const std::vector<double>& x, const std::vector<double>& y) {
  double dot = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0 || ny == 0) return 0.0;
  return dot / (std::sqrt(nx) * std::sqrt(ny));
}

inline double rel_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("melmine_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Three mentions over five entities in the plane. Entity i sits at angle 15°·i and every
// mention text points along the x axis, so scores fall strictly with i. The mentions' gold
// entities are E0, E1 and E3: gold ranks 1, 2 and 4.
struct ThreeMentionFixture {
  std::filesystem::path kb, mentions, emb;
};

inline ThreeMentionFixture write_three_mention_fixture(const std::filesystem::path& dir) {
  std::vector<melmine::Entity> es;
  melmine::RowMatrix<float> m(8, 2);
  for (int i = 0; i < 5; ++i) {
    melmine::Entity e;
    e.id = "E" + std::to_string(i);
    e.name = "entity " + std::to_string(i);
    e.attributes = {"kind"};
    es.push_back(std::move(e));
    const double a = 15.0 * i * 3.14159265358979323846 / 180.0;
    m(i, 0) = static_cast<float>(std::cos(a));
    m(i, 1) = static_cast<float>(std::sin(a));
  }
  std::vector<melmine::Mention> ms;
  const char* gold[] = {"E0", "E1", "E3"};
  for (int j = 0; j < 3; ++j) {
    melmine::Mention men;
    men.id = "m" + std::to_string(j);
    men.gold_entity = gold[j];
    men.mention_words = "it";
    men.sentence = "it is here";
    men.text_row = static_cast<melmine::RowIndex>(5 + j);
    m(5 + j, 0) = 1.0f;
    ms.push_back(std::move(men));
  }
  ThreeMentionFixture f{dir / "kb.jsonl", dir / "mentions.jsonl", dir / "emb.bin"};
  melmine::save_entities(es, f.kb);
  melmine::save_mentions(ms, f.mentions);
  melmine::save_embeddings(m, f.emb);
  return f;
}

struct CommandResult {
  int status = -1;
  std::string out;
};

// Runs a shell command and captures its standard output.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace support
