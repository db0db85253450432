#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "melmine/common.hpp"

namespace melmine {

using Ordinal = std::uint32_t;
using AttributeId = std::uint32_t;
using RowIndex = std::uint32_t;

struct Entity {
  std::string id;
  std::string name;
  std::vector<std::string> attributes;
  std::string description;
  std::vector<RowIndex> image_rows;  // empty: entity has no image
  std::optional<RowIndex> text_row;  // global text feature; unset: same as the entity ordinal

  bool has_image() const noexcept { return !image_rows.empty(); }
};

struct Mention {
  std::string id;
  std::string mention_words;
  std::string sentence;
  std::string gold_entity;
  std::optional<RowIndex> image_row;
  std::vector<RowIndex> synthetic_rows;  // one global embedding per synthetic view
  RowIndex text_row = 0;
  std::vector<RowIndex> patch_rows;  // local visual features of the mention image
};

struct KbOptions {
  bool fold_case = false;  // lowercase attribute tokens (ASCII)
};

/// Trims surrounding whitespace and optionally lowercases.
std::string normalize_attribute(std::string_view token, bool fold_case);

/// Immutable, validated entity collection. Ordinals follow input order and attribute ids are
/// dense and assigned in first-seen order.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  std::size_t size() const noexcept { return entities_.size(); }
  bool empty() const noexcept { return entities_.empty(); }
  std::size_t vocab_size() const noexcept { return vocab_tokens_.size(); }

  const Entity& entity(Ordinal i) const { return entities_.at(i); }
  const std::vector<Entity>& entities() const noexcept { return entities_; }

  std::optional<Ordinal> find(std::string_view id) const;
  std::optional<AttributeId> attribute_id(std::string_view token) const;
  const std::string& attribute_token(AttributeId id) const { return vocab_tokens_.at(id); }

  /// Sorted attribute-id set of entity i, cached at build time.
  std::span<const AttributeId> attribute_set(Ordinal i) const { return encoded_.at(i); }

  RowIndex text_row(Ordinal i) const;

  /// Stable 64-bit hash of the ordered entity-id list.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  bool fold_case() const noexcept { return fold_case_; }

 private:
  friend KnowledgeBase build_kb(std::vector<Entity> entities, const KbOptions& options);

  std::vector<Entity> entities_;
  std::unordered_map<std::string, Ordinal> index_;
  std::unordered_map<std::string, AttributeId> vocab_;
  std::vector<std::string> vocab_tokens_;
  std::vector<std::vector<AttributeId>> encoded_;
  std::uint64_t fingerprint_ = 0;
  bool fold_case_ = false;
};

/// Validates and indexes `entities`. Attribute tokens are normalized and deduplicated.
/// Throws Error{kDuplicateId | kEmptyId | kEmptyAttribute}.
KnowledgeBase build_kb(std::vector<Entity> entities, const KbOptions& options = {});

/// Maps an entity's attribute tokens to a strictly increasing id sequence.
/// Throws Error{kUnknownAttribute} for tokens outside the vocabulary.
std::vector<AttributeId> encode_attributes(const KnowledgeBase& kb, const Entity& entity);

std::vector<std::string> decode_attributes(const KnowledgeBase& kb,
                                           std::span<const AttributeId> ids);

std::uint64_t fingerprint_ids(std::span<const std::string> ids) noexcept;

}  // namespace melmine
