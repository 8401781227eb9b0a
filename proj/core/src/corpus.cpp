#include "mamp/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "mamp/error.hpp"
#include "mamp/rng.hpp"

namespace mamp {

namespace {

int parse_int_field(const std::string& s, const std::string& path, std::size_t line,
                    const char* field) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != s.size() || s.empty()) {
    throw DataError(path + ":" + std::to_string(line) + ": bad " + field + " value '" + s + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::size_t Corpus::num_classes() const {
  int max_label = -1;
  for (const auto& e : train) max_label = std::max(max_label, e.seq.label);
  for (const auto& e : test) max_label = std::max(max_label, e.seq.label);
  return static_cast<std::size_t>(max_label + 1);
}

std::vector<ManifestRow> read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(manifest_path + ": empty manifest file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,label,subject,view") {
    throw DataError(manifest_path + ":1: expected header 'path,label,subject,view', got '" +
                    line + "'");
  }
  std::vector<ManifestRow> rows;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw DataError(manifest_path + ":" + std::to_string(line_no) +
                      ": expected 4 comma-separated fields, got " +
                      std::to_string(fields.size()));
    }
    ManifestRow row;
    row.path = fields[0];
    if (row.path.empty()) {
      throw DataError(manifest_path + ":" + std::to_string(line_no) + ": empty path");
    }
    if (!seen.insert(row.path).second) {
      throw DataError(manifest_path + ":" + std::to_string(line_no) + ": duplicate path '" +
                      row.path + "'");
    }
    row.label = parse_int_field(fields[1], manifest_path, line_no, "label");
    row.subject = parse_int_field(fields[2], manifest_path, line_no, "subject");
    row.view = parse_int_field(fields[3], manifest_path, line_no, "view");
    if (row.label < 0) {
      throw DataError(manifest_path + ":" + std::to_string(line_no) + ": negative label");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(manifest_path + ": empty corpus");
  return rows;
}

void write_manifest(const std::string& manifest_path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(manifest_path);
  if (!out) throw DataError("cannot open for writing: " + manifest_path);
  out << "path,label,subject,view\n";
  for (const auto& r : rows) {
    out << r.path << ',' << r.label << ',' << r.subject << ',' << r.view << '\n';
  }
  if (!out) throw DataError("write failed: " + manifest_path);
}

Corpus load_corpus(const std::string& manifest_path, const SplitRule& rule) {
  const auto rows = read_manifest(manifest_path);
  const auto base_dir = std::filesystem::path(manifest_path).parent_path();

  std::vector<CorpusEntry> entries;
  entries.reserve(rows.size());
  for (const auto& row : rows) {
    std::filesystem::path p(row.path);
    if (p.is_relative()) p = base_dir / p;
    CorpusEntry e;
    e.path = row.path;
    e.seq = read_sequence_file(p.string());
    e.seq.label = row.label;
    e.seq.subject_id = row.subject;
    e.seq.view_id = row.view;
    e.seq.validate();
    entries.push_back(std::move(e));
  }

  Corpus corpus;
  switch (rule.kind) {
    case SplitRule::Kind::kBySubject:
    case SplitRule::Kind::kByView: {
      const bool by_subject = rule.kind == SplitRule::Kind::kBySubject;
      if (rule.train_ids.empty()) {
        throw ConfigError("split rule: train id list must not be empty");
      }
      for (auto& e : entries) {
        const int id = by_subject ? e.seq.subject_id : e.seq.view_id;
        const bool in_train =
            std::find(rule.train_ids.begin(), rule.train_ids.end(), id) != rule.train_ids.end();
        (in_train ? corpus.train : corpus.test).push_back(std::move(e));
      }
      break;
    }
    case SplitRule::Kind::kByFraction: {
      if (!(rule.train_fraction > 0.0 && rule.train_fraction < 1.0)) {
        throw ConfigError("split rule: train fraction must be in (0,1)");
      }
      std::vector<std::size_t> order(entries.size());
      std::iota(order.begin(), order.end(), 0);
      RandomStream rng(mix_seed({rule.fraction_seed, 0x5eedu}));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_index(i)]);
      }
      const auto n_train = static_cast<std::size_t>(
          std::llround(rule.train_fraction * static_cast<double>(entries.size())));
      for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? corpus.train : corpus.test).push_back(std::move(entries[order[i]]));
      }
      break;
    }
  }
  if (corpus.train.empty() || corpus.test.empty()) {
    throw DataError("split rule leaves an empty train or test set (" +
                    std::to_string(corpus.train.size()) + " train / " +
                    std::to_string(corpus.test.size()) + " test)");
  }
  return corpus;
}

}  // namespace mamp
