#include "frt/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "frt/error.hpp"

namespace frt {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end) return std::nullopt;
  return v;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r\n") == std::string::npos; }

}  // namespace

RawDataset parse_csv(std::istream& in, const IngestOptions& options) {
  if (options.stratified && options.cluster)
    throw Error(Errc::InvalidArgument, "choose either a stratified or a cluster design");
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw Error(Errc::ParseError, "line 1: missing header row");

  std::map<std::string, int> col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (col.count(header[c])) throw Error(Errc::ParseError, "line " + std::to_string(line_no) +
                                                                ": duplicate column '" + header[c] + "'");
    col[header[c]] = static_cast<int>(c);
  }
  if (!col.count("treatment"))
    throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": missing 'treatment' column");
  std::vector<int> outcome_cols;
  if (col.count("outcome")) {
    outcome_cols.push_back(col["outcome"]);
  } else {
    for (int k = 1; col.count("outcome_" + std::to_string(k)); ++k) outcome_cols.push_back(col["outcome_" + std::to_string(k)]);
  }
  if (outcome_cols.empty())
    throw Error(Errc::ParseError,
                "line " + std::to_string(line_no) + ": need an 'outcome' column or outcome_1..outcome_d");
  if (options.stratified && !col.count("stratum"))
    throw Error(Errc::ParseError, "stratified design requested but there is no 'stratum' column");
  if (options.cluster && !col.count("cluster"))
    throw Error(Errc::ParseError, "cluster design requested but there is no 'cluster' column");

  RawDataset raw;
  raw.design = options.stratified ? Design::Stratified : options.cluster ? Design::Cluster : Design::Complete;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_fields(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != header.size())
      throw Error(Errc::ParseError, where + "expected " + std::to_string(header.size()) + " fields, found " +
                                        std::to_string(fields.size()));
    RawUnit u;
    u.treatment = fields[col["treatment"]];
    if (u.treatment.empty()) throw Error(Errc::ParseError, where + "empty treatment label");
    for (int c : outcome_cols) {
      const auto v = parse_double(fields[c]);
      if (!v) throw Error(Errc::ParseError, where + "non-numeric outcome '" + fields[c] + "'");
      u.outcome.push_back(*v);
    }
    u.unit_id = col.count("unit_id") ? fields[col["unit_id"]] : std::to_string(raw.units.size() + 1);
    if (options.stratified) {
      u.stratum = fields[col["stratum"]];
      if (u.stratum->empty()) throw Error(Errc::ParseError, where + "empty stratum label");
    }
    if (options.cluster) {
      u.cluster = fields[col["cluster"]];
      if (u.cluster->empty()) throw Error(Errc::ParseError, where + "empty cluster label");
    }
    raw.units.push_back(std::move(u));
  }
  if (raw.units.empty()) throw Error(Errc::ParseError, "no data rows after the header");
  return raw;
}

Dataset ingest_csv(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open '" + path + "'");
  return validate_dataset(parse_csv(in, options));
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || trim(line).front() == '#') continue;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      const auto v = parse_double(tok);
      if (!v) throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": non-numeric entry '" + tok + "'");
      row.push_back(*v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": ragged matrix row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::ParseError, "matrix file is empty");
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) M(r, c) = rows[r][c];
  return M;
}

Eigen::MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open '" + path + "'");
  return read_matrix(in);
}

}  // namespace frt
