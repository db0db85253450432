#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "melmine/minhash.hpp"

namespace melmine {

/// "0x" followed by 16 lowercase hex digits.
std::string format_fingerprint(std::uint64_t fp);
std::uint64_t parse_fingerprint(std::string_view text);

// Negative table as JSON Lines. First line is the header
//   {"k":4,"method":"exact","seed":5,"kb_fingerprint":"0x...","entities":N}
// followed by one {"entity_id": id, "negatives": [[id, score], ...]} per entity in ordinal order.
void write_negative_table(std::ostream& out, const NegativeTable& table, const KnowledgeBase& kb);
NegativeTable read_negative_table(std::istream& in, const KnowledgeBase& kb);
void save_negative_table(const NegativeTable& table, const KnowledgeBase& kb,
                         const std::filesystem::path& path);
NegativeTable load_negative_table(const std::filesystem::path& path, const KnowledgeBase& kb);

/// Single JSON document holding configuration, hash coefficients and signatures.
std::string serialize_index(const MinHashIndex& index);
MinHashIndex deserialize_index(std::string_view text);

}  // namespace melmine
