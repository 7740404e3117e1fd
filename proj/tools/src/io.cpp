#include "mns/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mns/errors.hpp"
#include "mns/log.hpp"

namespace mns::cli {
namespace {

using json = nlohmann::json;

// Splits one CSV record. Quotes may wrap a field; "" inside quotes is a
// literal quote.
std::vector<std::string> split_record(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == sep) {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  auto in = open_in(path);
  const std::string source = path.string();
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      for (auto& h : split_record(line, ',')) table.header.push_back(trim(h));
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_record(line, ',');
    if (fields.size() != table.header.size()) {
      throw ParseError(source, lineno, 0,
                       "row has " + std::to_string(fields.size()) + " fields but the header has " +
                           std::to_string(table.header.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], row[c])) {
        throw ParseError(source, lineno, c + 1, "non-numeric value '" + fields[c] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw ParseError(source, 1, 0, "missing header row");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw DimensionError("CSV header has " + std::to_string(header.size()) + " names for " +
                         std::to_string(values.cols()) + " columns");
  }
  std::string buf;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) buf.push_back(',');
    buf += csv_field(header[c]);
  }
  buf.push_back('\n');
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) buf.push_back(',');
      buf += format_double(values(r, c));
    }
    buf.push_back('\n');
  }
  open_out(path) << buf;
}

void write_matrix_tsv(const fs::path& path, const NodeSet& nodes, const Eigen::MatrixXd& m) {
  const auto p = static_cast<Eigen::Index>(nodes.size());
  if (m.rows() != p || m.cols() != p) throw DimensionError("matrix shape differs from node count");
  std::string buf = "node";
  for (const auto& l : nodes.labels()) buf += "\t" + l;
  buf.push_back('\n');
  for (Eigen::Index r = 0; r < p; ++r) {
    buf += nodes.label(static_cast<std::size_t>(r));
    for (Eigen::Index c = 0; c < p; ++c) buf += "\t" + format_double(m(r, c));
    buf.push_back('\n');
  }
  open_out(path) << buf;
}

Eigen::MatrixXd read_matrix_tsv(const fs::path& path, const NodeSet& nodes) {
  auto in = open_in(path);
  const auto p = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd m(p, p);
  std::string line;
  std::size_t lineno = 0;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_record(line, '\t');
    if (lineno == 1) {
      if (static_cast<Eigen::Index>(fields.size()) != p + 1) {
        throw DimensionError(path.string() + ": matrix has " + std::to_string(fields.size() - 1) +
                             " columns, expected " + std::to_string(p));
      }
      continue;
    }
    if (line.empty()) continue;
    if (row >= p || static_cast<Eigen::Index>(fields.size()) != p + 1) {
      throw DimensionError(path.string() + ": matrix shape differs from node count " + std::to_string(p));
    }
    for (Eigen::Index c = 0; c < p; ++c) {
      double v = 0;
      if (!parse_double(fields[static_cast<std::size_t>(c + 1)], v)) {
        // NaN marks undefined entries.
        if (trim(fields[static_cast<std::size_t>(c + 1)]) == "nan") {
          v = std::numeric_limits<double>::quiet_NaN();
        } else {
          throw ParseError(path.string(), lineno, static_cast<std::size_t>(c + 2), "non-numeric value");
        }
      }
      m(row, c) = v;
    }
    ++row;
  }
  if (row != p) throw DimensionError(path.string() + ": expected " + std::to_string(p) + " rows");
  return m;
}

void write_edges(const fs::path& path, const NodeSet& nodes, const EdgeSet& edges,
                 const WeightedNetwork* weights) {
  auto out = open_out(path);
  write_edge_tsv(out, nodes, edges, weights);
}

EdgeSet read_edges(const fs::path& path, const NodeSet& nodes) {
  auto in = open_in(path);
  return read_edge_tsv(in, nodes, path.string());
}

IngestReport ingest_cohort(const fs::path& manifest_or_dir) {
  fs::path manifest = manifest_or_dir;
  if (fs::is_directory(manifest)) manifest /= kCohortManifest;
  if (!fs::exists(manifest)) throw Error("cohort manifest '" + manifest.string() + "' not found");
  json doc;
  try {
    doc = json::parse(read_text(manifest));
  } catch (const json::parse_error& e) {
    throw ParseError(manifest.string() + ": " + e.what());
  }
  if (!doc.contains("subjects") || !doc["subjects"].is_array() || doc["subjects"].empty()) {
    throw ParseError(manifest.string() + ": 'subjects' must be a non-empty array");
  }
  const fs::path base = manifest.parent_path();

  IngestReport report;
  report.manifest = manifest;
  std::vector<std::string> header;
  std::string first_file;
  std::vector<Eigen::MatrixXd> data;
  std::vector<std::string> ids;
  for (const auto& entry : doc["subjects"]) {
    if (!entry.contains("file")) throw ParseError(manifest.string() + ": subject entry without 'file'");
    const std::string file = entry["file"].get<std::string>();
    const std::string id = entry.value("id", fs::path(file).stem().string());
    const fs::path path = base / file;
    auto table = read_csv(path);
    if (header.empty()) {
      header = table.header;
      first_file = path.string();
    } else if (table.header.size() != header.size()) {
      throw DimensionError("'" + path.string() + "' has " + std::to_string(table.header.size()) +
                           " columns but '" + first_file + "' has " + std::to_string(header.size()));
    } else if (table.header != header) {
      throw ParseError("'" + path.string() + "' header differs from '" + first_file + "'");
    }
    if (table.values.rows() < 2) throw DomainError("'" + path.string() + "' has fewer than 2 observations");
    report.files.push_back(path);
    report.observations.push_back(static_cast<int>(table.values.rows()));
    data.push_back(std::move(table.values));
    ids.push_back(id);
  }
  if (doc.contains("nodes")) {
    const auto nodes = doc["nodes"].get<std::vector<std::string>>();
    if (nodes != header) throw ParseError(manifest.string() + ": 'nodes' differ from the CSV header");
  }
  report.cohort = CohortData(NodeSet(header), std::move(data), std::move(ids));
  const auto constant = report.cohort.constant_columns();
  report.constant_columns.resize(constant.size());
  for (std::size_t i = 0; i < constant.size(); ++i) {
    for (int j : constant[i]) {
      report.constant_columns[i].push_back(header[static_cast<std::size_t>(j)]);
      warn("subject " + report.cohort.subject_ids()[i] + ": column '" + header[static_cast<std::size_t>(j)] +
           "' is constant; its coefficients will be zero");
    }
  }
  return report;
}

void export_cohort(const fs::path& dir, const NodeSet& nodes,
                   const std::vector<Eigen::MatrixXd>& subjects,
                   const std::vector<std::string>& ids, const std::string& extra_json) {
  if (ids.size() != subjects.size()) throw DimensionError("one id per subject required");
  json doc = json::parse(extra_json);
  doc["format"] = "mns-cohort/1";
  doc["nodes"] = nodes.labels();
  json list = json::array();
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const std::string file = "subject_" + ids[i] + ".csv";
    write_csv(dir / file, nodes.labels(), subjects[i]);
    list.push_back({{"id", ids[i]}, {"file", file}});
  }
  doc["subjects"] = list;
  write_text(dir / kCohortManifest, doc.dump(2) + "\n");
}

std::string file_digest(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mns::cli
