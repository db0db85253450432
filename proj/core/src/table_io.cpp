#include "melmine/table_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "melmine/data_io.hpp"

namespace melmine {

using nlohmann::json;

std::string format_fingerprint(std::uint64_t fp) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

std::uint64_t parse_fingerprint(std::string_view text) {
  if (text.size() != 18 || text.substr(0, 2) != "0x") {
    throw Error(Errc::kInvalidArgument, "malformed fingerprint '" + std::string(text) + "'");
  }
  std::uint64_t v = 0;
  for (char c : text.substr(2)) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      throw Error(Errc::kInvalidArgument, "malformed fingerprint '" + std::string(text) + "'");
    }
  }
  return v;
}

void write_negative_table(std::ostream& out, const NegativeTable& table, const KnowledgeBase& kb) {
  if (table.size() != kb.size()) {
    throw Error(Errc::kIndexMismatch, "table does not cover the knowledge base");
  }
  json header = {{"k", table.k},
                 {"method", method_name(table.method)},
                 {"seed", table.seed},
                 {"kb_fingerprint", format_fingerprint(table.kb_fingerprint)},
                 {"entities", table.size()}};
  out << header.dump() << '\n';
  for (Ordinal i = 0; i < table.size(); ++i) {
    json negatives = json::array();
    for (const auto& n : table.lists[i]) {
      negatives.push_back(json::array({kb.entity(n.entity).id, n.score}));
    }
    json row = {{"entity_id", kb.entity(i).id}, {"negatives", std::move(negatives)}};
    out << row.dump() << '\n';
  }
}

NegativeTable read_negative_table(std::istream& in, const KnowledgeBase& kb) {
  std::string text;
  std::size_t line = 0;
  auto next = [&]() -> json {
    while (std::getline(in, text)) {
      ++line;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        return json::parse(text);
      } catch (const json::parse_error& e) {
        throw ParseError(line, e.what());
      }
    }
    return json();
  };

  NegativeTable table;
  json header = next();
  if (!header.is_object()) throw ParseError(line, "missing table header");
  try {
    table.k = header.at("k").get<std::size_t>();
    table.method = parse_method(header.at("method").get<std::string>());
    table.seed = header.at("seed").get<std::uint64_t>();
    table.kb_fingerprint = parse_fingerprint(header.at("kb_fingerprint").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(line, e.what());
  }
  if (table.kb_fingerprint != kb.fingerprint()) {
    throw Error(Errc::kIndexMismatch, "negative table was mined on a different knowledge base");
  }
  table.lists.resize(kb.size());
  std::vector<bool> seen(kb.size(), false);
  for (json row = next(); !row.is_null(); row = next()) {
    try {
      const auto id = row.at("entity_id").get<std::string>();
      auto ord = kb.find(id);
      if (!ord) throw ParseError(line, "unknown entity '" + id + "'");
      if (seen[*ord]) throw ParseError(line, "duplicate entity '" + id + "'");
      seen[*ord] = true;
      auto& list = table.lists[*ord];
      for (const auto& pair : row.at("negatives")) {
        const auto neg_id = pair.at(0).get<std::string>();
        auto neg = kb.find(neg_id);
        if (!neg) throw ParseError(line, "unknown negative '" + neg_id + "'");
        list.push_back({*neg, pair.at(1).get<double>()});
      }
    } catch (const json::exception& e) {
      throw ParseError(line, e.what());
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw ParseError(line, "entity '" + kb.entity(static_cast<Ordinal>(i)).id + "' missing from table");
    }
  }
  return table;
}

void save_negative_table(const NegativeTable& table, const KnowledgeBase& kb,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoError, "cannot open '" + path.string() + "' for writing");
  write_negative_table(out, table, kb);
  if (!out) throw Error(Errc::kIoError, "write failed on '" + path.string() + "'");
}

NegativeTable load_negative_table(const std::filesystem::path& path, const KnowledgeBase& kb) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot open '" + path.string() + "' for reading");
  return read_negative_table(in, kb);
}

std::string serialize_index(const MinHashIndex& index) {
  const auto& cfg = index.config();
  json coeffs = json::array();
  for (const auto& c : index.coefficients()) coeffs.push_back(json::array({c.a, c.b}));
  json sigs = json::array();
  for (Ordinal i = 0; i < index.size(); ++i) {
    const auto row = index.signature(i);
    sigs.push_back(std::vector<std::uint64_t>(row.begin(), row.end()));
  }
  json doc = {{"signature_length", cfg.signature_length},
              {"bands", cfg.bands},
              {"rows_per_band", cfg.rows_per_band},
              {"seed", cfg.seed},
              {"kb_fingerprint", format_fingerprint(index.kb_fingerprint())},
              {"modulus", kMersenne61},
              {"coefficients", std::move(coeffs)},
              {"signatures", std::move(sigs)}};
  return doc.dump() + "\n";
}

MinHashIndex deserialize_index(std::string_view text) {
  try {
    const json doc = json::parse(text);
    MinHashConfig cfg;
    cfg.signature_length = doc.at("signature_length").get<std::size_t>();
    cfg.bands = doc.at("bands").get<std::size_t>();
    cfg.rows_per_band = doc.at("rows_per_band").get<std::size_t>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.at("modulus").get<std::uint64_t>() != kMersenne61) {
      throw Error(Errc::kInvalidArgument, "unsupported hash modulus");
    }
    std::vector<HashCoefficients> coeffs;
    for (const auto& c : doc.at("coefficients")) {
      coeffs.push_back({c.at(0).get<std::uint64_t>(), c.at(1).get<std::uint64_t>()});
    }
    const auto& sigs = doc.at("signatures");
    RowMatrix<std::uint64_t> matrix(sigs.size(), cfg.signature_length);
    for (std::size_t i = 0; i < sigs.size(); ++i) {
      const auto row = sigs[i].get<std::vector<std::uint64_t>>();
      if (row.size() != cfg.signature_length) {
        throw Error(Errc::kShapeMismatch, "signature " + std::to_string(i) + " has wrong length");
      }
      std::copy(row.begin(), row.end(), matrix.row(i).begin());
    }
    return MinHashIndex::from_signatures(cfg,
                                         parse_fingerprint(doc.at("kb_fingerprint").get<std::string>()),
                                         std::move(coeffs), std::move(matrix));
  } catch (const json::exception& e) {
    throw ParseError(1, e.what());
  }
}

}  // namespace melmine
