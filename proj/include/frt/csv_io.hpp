#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "frt/dataset.hpp"

namespace frt {

struct IngestOptions {
  bool stratified = false;  // requires a stratum column
  bool cluster = false;     // requires a cluster column
};

// Header row required. Columns: treatment; outcome or outcome_1..outcome_d;
// optional stratum, cluster, unit_id. Row order is preserved. Malformed rows
// raise ParseError naming the line; validation errors pass through unchanged.
RawDataset parse_csv(std::istream& in, const IngestOptions& options = {});
Dataset ingest_csv(const std::string& path, const IngestOptions& options = {});

// Numeric matrix, one row per line, separated by commas or whitespace.
// Lines starting with '#' are skipped.
Eigen::MatrixXd read_matrix(std::istream& in);
Eigen::MatrixXd read_matrix_file(const std::string& path);

}  // namespace frt
