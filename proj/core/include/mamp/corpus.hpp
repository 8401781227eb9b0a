#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mamp/skeleton.hpp"

namespace mamp {

// How manifest entries are partitioned into train/test.
struct SplitRule {
  enum class Kind { kBySubject, kByView, kByFraction };
  Kind kind = Kind::kBySubject;
  std::vector<int> train_ids;        // subject or view ids in the training set
  double train_fraction = 0.8;       // kByFraction only
  std::uint64_t fraction_seed = 0;   // kByFraction only
};

struct CorpusEntry {
  std::string path;  // as written in the manifest
  SkeletonSequence seq;
};

struct Corpus {
  std::vector<CorpusEntry> train;
  std::vector<CorpusEntry> test;

  // One past the largest label across both splits (labels are 0-based).
  std::size_t num_classes() const;
};

// Parses `path,label,subject,view` rows (header required). Relative sequence
// paths resolve against the manifest's directory. Every sequence file is
// loaded and validated eagerly.
Corpus load_corpus(const std::string& manifest_path, const SplitRule& rule);

// Manifest rows without the sequence payloads, in file order.
struct ManifestRow {
  std::string path;
  int label = -1;
  int subject = -1;
  int view = -1;
};
std::vector<ManifestRow> read_manifest(const std::string& manifest_path);
void write_manifest(const std::string& manifest_path, const std::vector<ManifestRow>& rows);

}  // namespace mamp
