#include "melmine/data_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace melmine {
namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

template <typename T>
T required(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + field + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(line, std::string("field '") + field + "': " + e.what());
  }
}

template <typename T>
T optional_field(const json& obj, const char* field, std::size_t line, T fallback) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(line, std::string("field '") + field + "': " + e.what());
  }
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "record is not a JSON object");
    fn(obj, line);
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoError, "cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::kIoError, "read failed on '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  auto out = open_out(path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIoError, "write failed on '" + path.string() + "'");
}

std::string encode_embeddings(const RowMatrix<float>& matrix) {
  if (matrix.rows() > UINT32_MAX || matrix.cols() > UINT32_MAX) {
    throw Error(Errc::kInvalidArgument, "matrix too large for EMB1");
  }
  std::string out;
  out.reserve(kEmbeddingHeaderBytes + matrix.data().size() * 4);
  out.append(kEmbeddingMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(matrix.rows()));
  put_u32(out, static_cast<std::uint32_t>(matrix.cols()));
  put_u32(out, kDtypeFloat32);
  for (float v : matrix.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

RowMatrix<float> decode_embeddings(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
    throw Error(Errc::kBadMagic, "expected 'EMB1' header");
  }
  if (bytes.size() < kEmbeddingHeaderBytes) {
    throw Error(Errc::kTruncatedFile, "header shorter than 16 bytes");
  }
  const std::uint32_t rows = get_u32(bytes, 4);
  const std::uint32_t dim = get_u32(bytes, 8);
  const std::uint32_t dtype = get_u32(bytes, 12);
  if (dtype != kDtypeFloat32) {
    throw Error(Errc::kUnsupportedDtype, "dtype code " + std::to_string(dtype));
  }
  if (dim == 0) throw Error(Errc::kSizeMismatch, "dimension must be positive");
  const std::uint64_t expected =
      kEmbeddingHeaderBytes + static_cast<std::uint64_t>(rows) * dim * 4;
  if (bytes.size() < expected) {
    throw Error(Errc::kTruncatedFile, "declared " + std::to_string(rows) + "x" +
                                          std::to_string(dim) + " needs " +
                                          std::to_string(expected) + " bytes, have " +
                                          std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw Error(Errc::kSizeMismatch, std::to_string(bytes.size() - expected) +
                                         " trailing bytes after payload");
  }
  RowMatrix<float> m(rows, dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const std::size_t off = kEmbeddingHeaderBytes + (r * dim + c) * 4;
      const float v = std::bit_cast<float>(get_u32(bytes, off));
      if (!std::isfinite(v)) throw NonFiniteValue(r, c);
      m(r, c) = v;
    }
  }
  return m;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  EmbeddingStore store;
  store.matrix = decode_embeddings(read_file(path));
  store.source_path = path.string();
  return store;
}

void save_embeddings(const RowMatrix<float>& matrix, const std::filesystem::path& path) {
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      if (!std::isfinite(matrix(r, c))) throw NonFiniteValue(r, c);
    }
  }
  write_file(path, encode_embeddings(matrix));
}

std::vector<Entity> parse_entities(std::istream& in) {
  std::vector<Entity> entities;
  for_each_record(in, [&](const json& obj, std::size_t line) {
    Entity e;
    e.id = required<std::string>(obj, "id", line);
    e.name = optional_field<std::string>(obj, "name", line, "");
    e.attributes = optional_field<std::vector<std::string>>(obj, "attributes", line, {});
    e.description = optional_field<std::string>(obj, "description", line, "");
    e.image_rows = optional_field<std::vector<RowIndex>>(obj, "image_rows", line, {});
    if (auto it = obj.find("text_row"); it != obj.end() && !it->is_null()) {
      e.text_row = required<RowIndex>(obj, "text_row", line);
    }
    if (e.id.empty()) throw ParseError(line, "empty entity id");
    entities.push_back(std::move(e));
  });
  return entities;
}

std::vector<Mention> parse_mentions(std::istream& in, const KnowledgeBase& kb, Diagnostics* diag) {
  std::vector<Mention> mentions;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_record(in, [&](const json& obj, std::size_t line) {
    Mention m;
    m.id = required<std::string>(obj, "id", line);
    if (m.id.empty()) throw ParseError(line, "empty mention id");
    if (!seen.emplace(m.id, line).second) throw ParseError(line, "duplicate mention id '" + m.id + "'");
    m.mention_words = optional_field<std::string>(obj, "mention_words", line, "");
    m.sentence = optional_field<std::string>(obj, "sentence", line, "");
    m.gold_entity = required<std::string>(obj, "gold_entity", line);
    if (auto it = obj.find("image_row"); it != obj.end() && !it->is_null()) {
      m.image_row = required<RowIndex>(obj, "image_row", line);
    }
    m.synthetic_rows = optional_field<std::vector<RowIndex>>(obj, "synthetic_rows", line, {});
    m.text_row = required<RowIndex>(obj, "text_row", line);
    m.patch_rows = optional_field<std::vector<RowIndex>>(obj, "patch_rows", line, {});
    if (!kb.find(m.gold_entity)) throw DanglingReference(line, m.id, m.gold_entity);
    if (m.sentence.find(m.mention_words) == std::string::npos) {
      warn(diag, "line " + std::to_string(line) + ": mention '" + m.id +
                     "' words do not occur in its sentence");
    }
    mentions.push_back(std::move(m));
  });
  return mentions;
}

KnowledgeBase load_kb(const std::filesystem::path& path, const KbOptions& options) {
  auto in = open_in(path);
  return build_kb(parse_entities(in), options);
}

std::vector<Mention> load_mentions(const std::filesystem::path& path, const KnowledgeBase& kb,
                                   Diagnostics* diag) {
  auto in = open_in(path);
  return parse_mentions(in, kb, diag);
}

void write_entities(std::ostream& out, std::span<const Entity> entities) {
  for (const auto& e : entities) {
    json obj = {{"id", e.id},
                {"name", e.name},
                {"attributes", e.attributes},
                {"description", e.description},
                {"image_rows", e.image_rows}};
    if (e.text_row) obj["text_row"] = *e.text_row;
    out << obj.dump() << '\n';
  }
}

void write_mentions(std::ostream& out, std::span<const Mention> mentions) {
  for (const auto& m : mentions) {
    json obj = {{"id", m.id},
                {"mention_words", m.mention_words},
                {"sentence", m.sentence},
                {"gold_entity", m.gold_entity},
                {"image_row", m.image_row ? json(*m.image_row) : json(nullptr)},
                {"synthetic_rows", m.synthetic_rows},
                {"text_row", m.text_row},
                {"patch_rows", m.patch_rows}};
    out << obj.dump() << '\n';
  }
}

void save_entities(std::span<const Entity> entities, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_entities(out, entities);
  if (!out) throw Error(Errc::kIoError, "write failed on '" + path.string() + "'");
}

void save_mentions(std::span<const Mention> mentions, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_mentions(out, mentions);
  if (!out) throw Error(Errc::kIoError, "write failed on '" + path.string() + "'");
}

DatasetStats dataset_stats(const KnowledgeBase& kb, std::span<const Mention> mentions) {
  DatasetStats stats;
  for (const auto& m : mentions) {
    auto gold = kb.find(m.gold_entity);
    if (!gold) throw DanglingReference(0, m.id, m.gold_entity);
    const bool mention_image = m.image_row.has_value();
    const bool entity_image = kb.entity(*gold).has_image();
    if (mention_image && entity_image) {
      ++stats.both_have_image;
    } else if (mention_image) {
      ++stats.mention_only;
    } else if (entity_image) {
      ++stats.entity_only;
    } else {
      ++stats.neither;
    }
  }
  return stats;
}

void check_row_references(const KnowledgeBase& kb, std::span<const Mention> mentions,
                          const EmbeddingStore& store) {
  const std::size_t rows = store.rows();
  auto check = [&](RowIndex r, const std::string& what) {
    if (r >= rows) {
      throw Error(Errc::kSizeMismatch, what + " references row " + std::to_string(r) +
                                           " but the store has " + std::to_string(rows));
    }
  };
  for (Ordinal i = 0; i < kb.size(); ++i) {
    const Entity& e = kb.entity(i);
    check(kb.text_row(i), "entity '" + e.id + "' text_row");
    for (RowIndex r : e.image_rows) check(r, "entity '" + e.id + "' image_rows");
  }
  for (const auto& m : mentions) {
    check(m.text_row, "mention '" + m.id + "' text_row");
    if (m.image_row) check(*m.image_row, "mention '" + m.id + "' image_row");
    for (RowIndex r : m.synthetic_rows) check(r, "mention '" + m.id + "' synthetic_rows");
    for (RowIndex r : m.patch_rows) check(r, "mention '" + m.id + "' patch_rows");
  }
}

}  // namespace melmine
