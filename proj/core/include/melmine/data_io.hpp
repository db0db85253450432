#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "melmine/kb.hpp"

namespace melmine {

/// Row-major float32 matrix as stored in an EMB1 file.
struct EmbeddingStore {
  RowMatrix<float> matrix;
  std::string source_path;

  std::size_t rows() const noexcept { return matrix.rows(); }
  std::size_t dim() const noexcept { return matrix.cols(); }
  std::span<const float> row(std::size_t r) const { return matrix.row(r); }
};

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kDtypeFloat32 = 0;
inline constexpr std::size_t kEmbeddingHeaderBytes = 16;

// EMB1 layout: "EMB1", u32 rows, u32 dim, u32 dtype (0 = binary32), then rows*dim
// little-endian binary32 values in row-major order.
std::string encode_embeddings(const RowMatrix<float>& matrix);
RowMatrix<float> decode_embeddings(std::string_view bytes);

EmbeddingStore load_embeddings(const std::filesystem::path& path);
void save_embeddings(const RowMatrix<float>& matrix, const std::filesystem::path& path);
inline void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  save_embeddings(store.matrix, path);
}

// Metadata is JSON Lines: one object per line, blank lines skipped, unknown fields ignored.
std::vector<Entity> parse_entities(std::istream& in);
std::vector<Mention> parse_mentions(std::istream& in, const KnowledgeBase& kb,
                                    Diagnostics* diag = nullptr);

KnowledgeBase load_kb(const std::filesystem::path& path, const KbOptions& options = {});
std::vector<Mention> load_mentions(const std::filesystem::path& path, const KnowledgeBase& kb,
                                   Diagnostics* diag = nullptr);

void write_entities(std::ostream& out, std::span<const Entity> entities);
void write_mentions(std::ostream& out, std::span<const Mention> mentions);
void save_entities(std::span<const Entity> entities, const std::filesystem::path& path);
void save_mentions(std::span<const Mention> mentions, const std::filesystem::path& path);

/// Image availability of mention/gold-entity pairs.
struct DatasetStats {
  std::size_t both_have_image = 0;
  std::size_t mention_only = 0;
  std::size_t entity_only = 0;
  std::size_t neither = 0;

  std::size_t total() const noexcept {
    return both_have_image + mention_only + entity_only + neither;
  }
  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(const KnowledgeBase& kb, std::span<const Mention> mentions);

/// Throws Error{kSizeMismatch} naming the first row reference that falls outside the store.
void check_row_references(const KnowledgeBase& kb, std::span<const Mention> mentions,
                          const EmbeddingStore& store);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace melmine
