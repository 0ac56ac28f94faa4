#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lexsem/types.hpp"

namespace lexsem {

/// Provenance record written to <run>/manifest.json by every subcommand.
/// Two runs with equal config_hash, corpus_hash and seed against the stub
/// backend produce identical `outputs` digests.
struct RunManifest {
  std::string run_id;  // basename of the run directory
  std::string timestamp;
  std::string subcommand;
  std::string config_hash;  // hash of the resolved parameter set
  std::string corpus_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;
  std::map<std::string, std::string> outputs;  // run-relative path -> digest
  std::string error;  // non-empty when the run failed after starting

  static RunManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

/// Digest over the three corpus JSONL files.
std::string corpus_digest(const std::filesystem::path& dir);

/// Reads every per-query ranking file under <run>/rankings. File bodies are
/// "docid score" lines in rank order, scores formatted by format_score.
std::map<DocId, RankedList> load_run_rankings(const std::filesystem::path& run_dir);

/// Entry point behind main(). `args` excludes the program name. Returns the
/// process exit code: 0 ok, 1 usage, 2 data, 3 backend, 4 internal.
int run_cli(std::vector<std::string> args);

}  // namespace lexsem
