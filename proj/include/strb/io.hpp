#pragma once

#include "strb/fom.hpp"

#include <filesystem>
#include <map>
#include <optional>

namespace strb::io {

namespace fs = std::filesystem;

/// Matrix Market coordinate files. Reads real/integer/pattern, general or
/// symmetric; always writes real general with round-trip precision.
SpMat read_matrix_market(const fs::path& path);
void write_matrix_market(const fs::path& path, const SpMat& m);

/// "%%STRB-TENSOR3" header, one "n n n nnz" size line, then "i j m value" (1-based).
ConvectiveTensor read_tensor3(const fs::path& path);
void write_tensor3(const fs::path& path, const ConvectiveTensor& c);

/// STRB-DENSE v1 array: dims plus column-major payload.
struct DenseArray {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  std::uint64_t size() const;
};
DenseArray read_dense_array(const fs::path& path);
void write_dense_array(const fs::path& path, const DenseArray& a);

/// Matrix view of STRB-DENSE files; a 1-d file reads as a column.
Mat read_dense(const fs::path& path);
void write_dense(const fs::path& path, const Mat& m);
/// Same, but rejects files whose shape disagrees with the expectation.
Mat read_dense(const fs::path& path, Index rows, Index cols);

/// Plain "key = value" text records; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(const fs::path& path);
void write_key_values(const fs::path& path, const KeyValues& kv);
std::string format_double(double v);  // %.17g
double parse_double(const KeyValues& kv, const std::string& key);
Index parse_index(const KeyValues& kv, const std::string& key);
std::vector<double> parse_list(const std::string& s);
std::string format_list(const std::vector<double>& v);

void store_operators(const fs::path& dir, const FomOperators& ops);
FomOperators load_operators(const fs::path& dir);

void store_snapshots(const fs::path& dir, const SnapshotSet& set);
SnapshotSet load_snapshots(const fs::path& dir);

/// One row per step: t, then the DOF values of the chosen field.
void write_trajectory_csv(const fs::path& path, const Mat& field, double dt, double t0 = 0.0);

void ensure_directory(const fs::path& dir);

}  // namespace strb::io
