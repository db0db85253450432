// Writes the bundled demo fixtures: 50 entities in 10 attribute groups, 30 mentions, and a
// 96-dimensional embedding store with text, image, synthetic-view and patch rows.
//
//   make_demo <out-dir> [seed]

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "melmine/data_io.hpp"

namespace {

constexpr std::size_t kDim = 96;
constexpr std::size_t kGroups = 10;
constexpr std::size_t kPerGroup = 5;
constexpr std::size_t kMentions = 30;
constexpr std::size_t kViews = 3;
constexpr std::size_t kPatches = 4;

using Vec = std::vector<float>;

Vec gaussian(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  Vec v(kDim);
  for (auto& x : v) x = static_cast<float>(n(rng));
  return v;
}

Vec noisy(const Vec& base, std::mt19937_64& rng, double sigma) {
  Vec v = gaussian(rng, sigma);
  for (std::size_t i = 0; i < kDim; ++i) v[i] += base[i];
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_demo <out-dir> [seed]\n";
    return 1;
  }
  const std::filesystem::path dir = argv[1];
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 5;
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);

  std::vector<Vec> rows;
  auto push = [&](Vec v) {
    rows.push_back(std::move(v));
    return static_cast<melmine::RowIndex>(rows.size() - 1);
  };

  // Entity text rows occupy ordinals 0..49 so text_row can stay implicit.
  std::vector<melmine::Entity> entities;
  std::vector<Vec> text, image;
  std::vector<Vec> centroids;
  for (std::size_t g = 0; g < kGroups; ++g) centroids.push_back(gaussian(rng, 1.0));
  const char* kinds[] = {"city", "river", "painter", "club", "ship",
                         "album", "bridge", "novel", "team", "mountain"};
  for (std::size_t g = 0; g < kGroups; ++g) {
    for (std::size_t j = 0; j < kPerGroup; ++j) {
      melmine::Entity e;
      e.id = "Q" + std::to_string(1000 + g * kPerGroup + j);
      e.name = std::string(kinds[g]) + " " + std::to_string(j);
      e.description = "a " + std::string(kinds[g]) + " in the demo set";
      e.attributes = {std::string("type:") + kinds[g], "group:" + std::to_string(g)};
      if (j % 2 == 0) e.attributes.push_back("region:north");
      if (j % 3 == 0) e.attributes.push_back("era:modern");
      e.attributes.push_back("tag:" + std::to_string(g) + "_" + std::to_string(j));
      entities.push_back(std::move(e));
      text.push_back(noisy(centroids[g], rng, 0.5));
      image.push_back(noisy(centroids[g], rng, 0.6));
    }
  }
  for (const auto& t : text) push(t);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (i % 7 == 6) continue;  // a few entities without an image
    entities[i].image_rows = {push(image[i])};
  }

  std::vector<melmine::Mention> mentions;
  std::uniform_int_distribution<std::size_t> pick(0, entities.size() - 1);
  for (std::size_t m = 0; m < kMentions; ++m) {
    const std::size_t gold = pick(rng);
    melmine::Mention men;
    men.id = "M" + std::to_string(m);
    men.gold_entity = entities[gold].id;
    men.mention_words = entities[gold].name;
    men.sentence = "We visited the " + entities[gold].name + " last spring.";
    men.text_row = push(noisy(text[gold], rng, 1.3));
    if (m % 5 != 4) {
      const Vec img = noisy(image[gold], rng, 1.0);
      men.image_row = push(img);
      for (std::size_t h = 0; h < kViews; ++h) men.synthetic_rows.push_back(push(noisy(img, rng, 0.4)));
      for (std::size_t p = 0; p < kPatches; ++p) men.patch_rows.push_back(push(noisy(img, rng, 0.8)));
    }
    mentions.push_back(std::move(men));
  }

  melmine::RowMatrix<float> matrix(rows.size(), kDim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), matrix.row(r).begin());
  }
  melmine::save_entities(entities, dir / "kb.jsonl");
  melmine::save_mentions(mentions, dir / "mentions.jsonl");
  melmine::save_embeddings(matrix, dir / "emb.bin");
  std::cerr << "wrote " << entities.size() << " entities, " << mentions.size() << " mentions, "
            << rows.size() << "x" << kDim << " embeddings to " << dir.string() << '\n';
  return 0;
}
