#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "epsts/harness.hpp"

namespace epsts {

struct OutputPaths {
  std::filesystem::path records;
  std::filesystem::path summary;   // iter,median,q1,q3,mean_proposal_s
  std::filesystem::path branches;  // proposal runtime per branch
  std::filesystem::path errors;    // aborted trials
};

// "out/r.csv" -> out/r.csv, out/r.summary.csv, out/r.branches.csv, out/r.errors.csv
OutputPaths output_paths(const std::filesystem::path& records, OutputFormat format);

// Throws IoError unless `path` can be created or overwritten. Leaves no file
// behind when it did not exist before.
void check_writable(const std::filesystem::path& path);

// Writes all four files. Numbers carry 17 significant digits; log_error is
// empty (CSV) or null (JSON lines) when the optimum is unknown.
// Throws IoError; the caller's records are untouched either way.
OutputPaths emit_results(const ExperimentResult& result, Eigen::Index d, OutputFormat format,
                         const std::filesystem::path& path);

struct RecordRow {
  int trial = 0;
  IterationRow row;
};

// Parses a records file written by emit_results.
std::vector<RecordRow> read_records(const std::filesystem::path& path, OutputFormat format);
std::vector<IterationSummary> read_summary(const std::filesystem::path& path, OutputFormat format);

std::string csv_header(Eigen::Index d);

}  // namespace epsts
