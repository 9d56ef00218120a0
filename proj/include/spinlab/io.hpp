// Deterministic file output: locale-free CSV, JSON documents, and the run
// manifest that lets any CLI invocation be replayed byte-for-byte.
//
// All numeric formatting goes through std::to_chars, so output never depends
// on the process locale. Wall-clock timestamps appear in manifests only;
// data files are pure functions of the run configuration.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace spinlab {

// Version tag recorded in every manifest.
inline constexpr const char* kCodeVersion = "artifact-0.1.0";

// 17 significant digits, '.' separator: parses back to the same bits.
std::string format_double(double v);

using CsvCell = std::variant<std::int64_t, double, std::string>;

// Streams rows to a file with RFC-style quoting for cells containing
// commas, quotes, or newlines. Throws io_error when the file cannot be
// opened and std::invalid_argument on a row arity mismatch.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);

  void row(const std::vector<CsvCell>& cells);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::size_t columns_ = 0;
  std::ofstream out_;
};

// Explicit flag value wins, then $SPINLAB_OUT, then the current directory.
// Creates the directory if missing; throws io_error when that fails.
std::string resolve_output_dir(const std::string& flag_value);

// UTC wall clock, e.g. "2026-08-22T12:34:56Z".
std::string now_utc_iso();

// Pretty-printed JSON with a trailing newline; throws io_error on failure.
void write_json(const std::string& path, const nlohmann::json& doc);

// Throws io_error naming the path when the file is missing or malformed.
nlohmann::json load_json(const std::string& path);

// Writes <out_dir>/manifest_<subcommand>.json recording the subcommand, the
// fully resolved configuration, the data files the run produced (paths
// relative to out_dir), the code version, and start/finish timestamps.
// Returns the manifest path.
std::string write_run_manifest(const std::string& out_dir,
                               const std::string& subcommand,
                               const nlohmann::json& config,
                               const std::vector<std::string>& outputs,
                               const std::string& started_at,
                               const std::string& finished_at);

}  // namespace spinlab
