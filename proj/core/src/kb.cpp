#include "melmine/kb.hpp"

#include <algorithm>
#include <cctype>

namespace melmine {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kDuplicateId: return "DuplicateId";
    case Errc::kEmptyId: return "EmptyId";
    case Errc::kEmptyAttribute: return "EmptyAttribute";
    case Errc::kUnknownAttribute: return "UnknownAttribute";
    case Errc::kParseError: return "ParseError";
    case Errc::kDanglingReference: return "DanglingReference";
    case Errc::kIoError: return "IoError";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kTruncatedFile: return "TruncatedFile";
    case Errc::kSizeMismatch: return "SizeMismatch";
    case Errc::kUnsupportedDtype: return "UnsupportedDtype";
    case Errc::kNonFiniteValue: return "NonFiniteValue";
    case Errc::kBadBandConfig: return "BadBandConfig";
    case Errc::kIndexMismatch: return "IndexMismatch";
    case Errc::kPositiveNotInTable: return "PositiveNotInTable";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kNonFiniteScore: return "NonFiniteScore";
    case Errc::kEmptyViewSet: return "EmptyViewSet";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kDivergedLoss: return "DivergedLoss";
  }
  return "Unknown";
}

std::string normalize_attribute(std::string_view token, bool fold_case) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!token.empty() && is_space(token.front())) token.remove_prefix(1);
  while (!token.empty() && is_space(token.back())) token.remove_suffix(1);
  std::string out(token);
  if (fold_case) {
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  return out;
}

std::uint64_t fingerprint_ids(std::span<const std::string> ids) noexcept {
  std::uint64_t h = fnv1a({});
  for (const auto& id : ids) {
    h = fnv1a(id, h);
    h = fnv1a(std::string_view("\0", 1), h);
  }
  return h;
}

KnowledgeBase build_kb(std::vector<Entity> entities, const KbOptions& options) {
  KnowledgeBase kb;
  kb.fold_case_ = options.fold_case;
  kb.index_.reserve(entities.size());
  kb.encoded_.reserve(entities.size());

  for (std::size_t i = 0; i < entities.size(); ++i) {
    Entity& e = entities[i];
    if (e.id.empty()) {
      throw Error(Errc::kEmptyId, "entity at position " + std::to_string(i) + " has an empty id");
    }
    if (!kb.index_.emplace(e.id, static_cast<Ordinal>(i)).second) {
      throw Error(Errc::kDuplicateId, e.id);
    }

    std::vector<std::string> tokens;
    tokens.reserve(e.attributes.size());
    std::vector<AttributeId> ids;
    ids.reserve(e.attributes.size());
    for (const auto& raw : e.attributes) {
      std::string token = normalize_attribute(raw, options.fold_case);
      if (token.empty()) {
        throw Error(Errc::kEmptyAttribute, "entity '" + e.id + "' has a blank attribute token");
      }
      auto [it, inserted] =
          kb.vocab_.emplace(token, static_cast<AttributeId>(kb.vocab_tokens_.size()));
      if (inserted) kb.vocab_tokens_.push_back(token);
      if (std::find(ids.begin(), ids.end(), it->second) == ids.end()) {
        ids.push_back(it->second);
        tokens.push_back(std::move(token));
      }
    }
    e.attributes = std::move(tokens);
    std::sort(ids.begin(), ids.end());
    kb.encoded_.push_back(std::move(ids));
  }

  std::vector<std::string> ids;
  ids.reserve(entities.size());
  for (const auto& e : entities) ids.push_back(e.id);
  kb.fingerprint_ = fingerprint_ids(ids);
  kb.entities_ = std::move(entities);
  return kb;
}

std::optional<Ordinal> KnowledgeBase::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<AttributeId> KnowledgeBase::attribute_id(std::string_view token) const {
  auto it = vocab_.find(std::string(token));
  if (it == vocab_.end()) return std::nullopt;
  return it->second;
}

RowIndex KnowledgeBase::text_row(Ordinal i) const {
  const Entity& e = entities_.at(i);
  return e.text_row.value_or(i);
}

std::vector<AttributeId> encode_attributes(const KnowledgeBase& kb, const Entity& entity) {
  std::vector<AttributeId> ids;
  ids.reserve(entity.attributes.size());
  for (const auto& raw : entity.attributes) {
    const std::string token = normalize_attribute(raw, kb.fold_case());
    auto id = kb.attribute_id(token);
    if (!id) throw Error(Errc::kUnknownAttribute, token);
    ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::string> decode_attributes(const KnowledgeBase& kb,
                                           std::span<const AttributeId> ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (AttributeId id : ids) out.push_back(kb.attribute_token(id));
  return out;
}

}  // namespace melmine
