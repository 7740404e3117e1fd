#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mns/cohort.hpp"
#include "mns/graph.hpp"

namespace mns::cli {

namespace fs = std::filesystem;

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// RFC-4180 numeric table with a header row. Quoted header fields are
/// accepted; every data cell must parse as a finite double.
CsvTable read_csv(const fs::path& path);

/// Header row plus one row per matrix row, LF line endings, 17 significant
/// digits so values round-trip exactly.
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

/// Square matrix as TSV: a header of node labels, then one labelled row per
/// node.
void write_matrix_tsv(const fs::path& path, const NodeSet& nodes, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_tsv(const fs::path& path, const NodeSet& nodes);

void write_edges(const fs::path& path, const NodeSet& nodes, const EdgeSet& edges,
                 const WeightedNetwork* weights = nullptr);
EdgeSet read_edges(const fs::path& path, const NodeSet& nodes);

/// Name of the manifest inside a cohort directory.
inline constexpr const char* kCohortManifest = "cohort.json";

struct SubjectEntry {
  std::string id;
  /// Relative to the manifest's directory.
  std::string file;
};

struct IngestReport {
  CohortData cohort;
  std::vector<int> observations;
  /// Node labels that are constant within a subject, per subject.
  std::vector<std::vector<std::string>> constant_columns;
  fs::path manifest;
  std::vector<fs::path> files;
};

/// Reads a cohort manifest (or a directory holding cohort.json) and every
/// subject CSV it lists. All subjects must share the header, which becomes
/// the node set; columns are centered. Constant columns are reported with a
/// warning.
IngestReport ingest_cohort(const fs::path& manifest_or_dir);

/// Writes one CSV per subject plus cohort.json. `extra` is a JSON object
/// text merged into the manifest (simulation config, seed).
void export_cohort(const fs::path& dir, const NodeSet& nodes,
                   const std::vector<Eigen::MatrixXd>& subjects,
                   const std::vector<std::string>& ids, const std::string& extra_json = "{}");

/// 64-bit FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const fs::path& path);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace mns::cli
