#include "strb/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace strb::io {

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// skips comment and blank lines; false at EOF
bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return true;
  }
  return false;
}

template <class T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& out, T v) {
  v = byteswap_if_big(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const fs::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw TruncatedError(path.string() + ": unexpected end of file in header");
  return byteswap_if_big(v);
}

}  // namespace

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

SpMat read_matrix_market(const fs::path& path) {
  auto in = open_in(path);
  std::string banner;
  if (!std::getline(in, banner)) throw FormatError(path.string() + ": empty file");
  std::istringstream bs(banner);
  std::string magic, object, format, field, symmetry;
  bs >> magic >> object >> format >> field >> symmetry;
  if (magic != "%%MatrixMarket") throw FormatError(path.string() + ": missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix" || format != "coordinate")
    throw FormatError(path.string() + ": only coordinate matrices are supported");
  const bool pattern = field == "pattern";
  if (!pattern && field != "real" && field != "integer" && field != "double")
    throw FormatError(path.string() + ": unsupported field '" + field + "'");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw FormatError(path.string() + ": unsupported symmetry '" + symmetry + "'");

  std::string line;
  if (!next_data_line(in, line)) throw TruncatedError(path.string() + ": missing size line");
  long long rows = -1, cols = -1, nnz = -1;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      throw FormatError(path.string() + ": malformed size line '" + line + "'");
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<size_t>(symmetric ? 2 * nnz : nnz));
  for (long long k = 0; k < nnz; ++k) {
    if (!next_data_line(in, line))
      throw TruncatedError(path.string() + ": expected " + std::to_string(nnz) + " entries, found " + std::to_string(k));
    long long i = 0, j = 0;
    double v = 1.0;
    const char* p = line.c_str();
    char* end = nullptr;
    i = std::strtoll(p, &end, 10);
    if (end == p) throw FormatError(path.string() + ": malformed entry '" + line + "'");
    p = end;
    j = std::strtoll(p, &end, 10);
    if (end == p) throw FormatError(path.string() + ": malformed entry '" + line + "'");
    p = end;
    if (!pattern) {
      v = std::strtod(p, &end);
      if (end == p) throw FormatError(path.string() + ": malformed entry '" + line + "'");
    }
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw FormatError(path.string() + ": entry index out of range in '" + line + "'");
    t.emplace_back(i - 1, j - 1, v);
    if (symmetric && i != j) t.emplace_back(j - 1, i - 1, v);
  }
  SpMat m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

void write_matrix_market(const fs::path& path, const SpMat& m) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  char buf[96];
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SpMat::InnerIterator it(m, c); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(it.row() + 1),
                    static_cast<long long>(it.col() + 1), it.value());
      out << buf;
    }
  if (!out) throw IoError("write failed: " + path.string());
}

ConvectiveTensor read_tensor3(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%STRB-TENSOR3", 0) != 0)
    throw FormatError(path.string() + ": missing %%STRB-TENSOR3 header");
  if (!next_data_line(in, line)) throw TruncatedError(path.string() + ": missing size line");
  long long n1 = 0, n2 = 0, n3 = 0, nnz = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> n1 >> n2 >> n3 >> nnz) || n1 < 0 || nnz < 0)
      throw FormatError(path.string() + ": malformed size line");
    if (n1 != n2 || n2 != n3) throw ShapeMismatchError(path.string() + ": convective tensor must be cubic");
  }
  ConvectiveTensor c;
  c.n = n1;
  c.entries.reserve(static_cast<size_t>(nnz));
  for (long long k = 0; k < nnz; ++k) {
    if (!next_data_line(in, line))
      throw TruncatedError(path.string() + ": expected " + std::to_string(nnz) + " entries, found " + std::to_string(k));
    std::istringstream ss(line);
    long long i, j, m;
    double v;
    if (!(ss >> i >> j >> m >> v)) throw FormatError(path.string() + ": malformed entry '" + line + "'");
    if (i < 1 || j < 1 || m < 1 || i > n1 || j > n1 || m > n1)
      throw FormatError(path.string() + ": entry index out of range");
    c.entries.push_back({i - 1, j - 1, m - 1, v});
  }
  return c;
}

void write_tensor3(const fs::path& path, const ConvectiveTensor& c) {
  auto out = open_out(path);
  out << "%%STRB-TENSOR3\n" << c.n << ' ' << c.n << ' ' << c.n << ' ' << c.entries.size() << '\n';
  char buf[128];
  for (const auto& e : c.entries) {
    std::snprintf(buf, sizeof buf, "%lld %lld %lld %.17g\n", static_cast<long long>(e.i + 1),
                  static_cast<long long>(e.j + 1), static_cast<long long>(e.m + 1), e.value);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::uint64_t DenseArray::size() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

DenseArray read_dense_array(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() < 4) throw TruncatedError(path.string() + ": file shorter than the magic");
  if (std::memcmp(magic, "STRB", 4) != 0) throw FormatError(path.string() + ": bad magic, not an STRB-DENSE file");
  const auto version = get<std::uint32_t>(in, path);
  if (version != 1) throw FormatError(path.string() + ": unsupported STRB-DENSE version " + std::to_string(version));
  const auto ndims = get<std::uint32_t>(in, path);
  if (ndims > 16) throw FormatError(path.string() + ": implausible rank " + std::to_string(ndims));
  DenseArray a;
  for (std::uint32_t k = 0; k < ndims; ++k) a.dims.push_back(get<std::uint64_t>(in, path));
  const std::uint64_t n = a.size();
  a.data.resize(n);
  in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::uint64_t>(in.gcount()) != n * sizeof(double))
    throw TruncatedError(path.string() + ": payload truncated (" + std::to_string(in.gcount()) + " of " +
                         std::to_string(n * sizeof(double)) + " bytes)");
  for (auto& v : a.data) v = byteswap_if_big(v);
  return a;
}

void write_dense_array(const fs::path& path, const DenseArray& a) {
  require_dims(a.data.size() == a.size(), "write_dense_array: payload size");
  auto out = open_out(path, std::ios::binary);
  out.write("STRB", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(a.dims.size()));
  for (auto d : a.dims) put<std::uint64_t>(out, d);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  } else {
    for (double v : a.data) put(out, v);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Mat read_dense(const fs::path& path) {
  const DenseArray a = read_dense_array(path);
  Index rows = 0, cols = 0;
  if (a.dims.size() == 1) {
    rows = static_cast<Index>(a.dims[0]);
    cols = 1;
  } else if (a.dims.size() == 2) {
    rows = static_cast<Index>(a.dims[0]);
    cols = static_cast<Index>(a.dims[1]);
  } else {
    throw ShapeMismatchError(path.string() + ": expected a matrix, found rank " + std::to_string(a.dims.size()));
  }
  return Eigen::Map<const Mat>(a.data.data(), rows, cols);
}

Mat read_dense(const fs::path& path, Index rows, Index cols) {
  Mat m = read_dense(path);
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeMismatchError(path.string() + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                             ", found " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  return m;
}

void write_dense(const fs::path& path, const Mat& m) {
  DenseArray a;
  a.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  a.data.assign(m.data(), m.data() + m.size());
  write_dense_array(path, a);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

KeyValues read_key_values(const fs::path& path) {
  auto in = open_in(path);
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

double parse_double(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("missing key '" + key + "'");
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str()) throw FormatError("key '" + key + "' is not a number: " + it->second);
  return v;
}

Index parse_index(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("missing key '" + key + "'");
  char* end = nullptr;
  const long long v = std::strtoll(it->second.c_str(), &end, 10);
  if (end == it->second.c_str()) throw FormatError("key '" + key + "' is not an integer: " + it->second);
  return static_cast<Index>(v);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string tok;
  std::istringstream ss(s);
  while (std::getline(ss, tok, ',')) {
    if (tok.find_first_not_of(" \t") == std::string::npos) continue;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw FormatError("not a number in list: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

void store_operators(const fs::path& dir, const FomOperators& ops) {
  ops.check_shapes();
  ensure_directory(dir);
  write_matrix_market(dir / "M.mtx", ops.M);
  write_matrix_market(dir / "A.mtx", ops.A);
  write_matrix_market(dir / "B.mtx", ops.B);
  write_matrix_market(dir / "L.mtx", ops.L);
  write_matrix_market(dir / "Ms.mtx", ops.Ms);
  write_matrix_market(dir / "As1.mtx", ops.As1);
  write_matrix_market(dir / "As2.mtx", ops.As2);
  write_matrix_market(dir / "Xu.mtx", ops.Xu);
  write_matrix_market(dir / "Xp.mtx", ops.Xp);
  write_matrix_market(dir / "Xd.mtx", ops.Xd);
  write_tensor3(dir / "C.tns", ops.C);
  for (size_t k = 0; k < ops.g_space.size(); ++k) write_dense(dir / ("g" + std::to_string(k) + ".bin"), ops.g_space[k]);
  Mat q(ops.n_u(), static_cast<Index>(ops.resistance.size()));
  std::vector<double> rvals;
  for (size_t k = 0; k < ops.resistance.size(); ++k) {
    q.col(static_cast<Index>(k)) = ops.resistance[k].flux;
    rvals.push_back(ops.resistance[k].resistance);
  }
  write_dense(dir / "q.bin", q);
  Mat bd(static_cast<Index>(ops.boundary_dofs.size()), 1);
  for (size_t k = 0; k < ops.boundary_dofs.size(); ++k) bd(static_cast<Index>(k), 0) = static_cast<double>(ops.boundary_dofs[k]);
  write_dense(dir / "boundary_dofs.bin", bd);
  KeyValues kv;
  kv["format"] = "strb-operators 1";
  kv["n_u"] = std::to_string(ops.n_u());
  kv["n_p"] = std::to_string(ops.n_p());
  kv["n_boundaries"] = std::to_string(ops.g_space.size());
  kv["n_resistance"] = std::to_string(ops.resistance.size());
  kv["resistance"] = format_list(rvals);
  kv["c_s"] = format_double(ops.c_s);
  write_key_values(dir / "operators.txt", kv);
}

FomOperators load_operators(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("operator directory not found: " + dir.string());
  const KeyValues kv = read_key_values(dir / "operators.txt");
  FomOperators ops;
  ops.M = read_matrix_market(dir / "M.mtx");
  ops.A = read_matrix_market(dir / "A.mtx");
  ops.B = read_matrix_market(dir / "B.mtx");
  ops.L = read_matrix_market(dir / "L.mtx");
  ops.Ms = read_matrix_market(dir / "Ms.mtx");
  ops.As1 = read_matrix_market(dir / "As1.mtx");
  ops.As2 = read_matrix_market(dir / "As2.mtx");
  ops.Xu = read_matrix_market(dir / "Xu.mtx");
  ops.Xp = read_matrix_market(dir / "Xp.mtx");
  ops.Xd = read_matrix_market(dir / "Xd.mtx");
  ops.C = read_tensor3(dir / "C.tns");
  const Index nb = parse_index(kv, "n_boundaries");
  for (Index k = 0; k < nb; ++k) ops.g_space.push_back(read_dense(dir / ("g" + std::to_string(k) + ".bin")).col(0));
  const Index nr = parse_index(kv, "n_resistance");
  const Mat q = read_dense(dir / "q.bin");
  const auto rvals = parse_list(kv.at("resistance"));
  if (q.cols() != nr || static_cast<Index>(rvals.size()) != nr)
    throw ShapeMismatchError(dir.string() + ": resistance data disagrees with manifest");
  for (Index k = 0; k < nr; ++k) ops.resistance.push_back({rvals[static_cast<size_t>(k)], q.col(k)});
  const Mat bd = read_dense(dir / "boundary_dofs.bin");
  for (Index k = 0; k < bd.rows(); ++k) ops.boundary_dofs.push_back(static_cast<Index>(bd(k, 0)));
  ops.c_s = parse_double(kv, "c_s");
  if (ops.n_u() != parse_index(kv, "n_u") || ops.n_p() != parse_index(kv, "n_p"))
    throw ShapeMismatchError(dir.string() + ": operator sizes disagree with manifest");
  try {
    ops.check_shapes();
  } catch (const DimensionError& e) {
    throw ShapeMismatchError(dir.string() + ": " + e.what());
  }
  return ops;
}

namespace {

Mat stack_columns(const std::vector<Vec>& v, Index rows) {
  Mat m(rows, static_cast<Index>(v.size()));
  for (size_t k = 0; k < v.size(); ++k) m.col(static_cast<Index>(k)) = v[k];
  return m;
}

std::vector<Vec> split_columns(const Mat& m) {
  std::vector<Vec> v;
  for (Index k = 0; k < m.cols(); ++k) v.push_back(m.col(k));
  return v;
}

}  // namespace

void store_snapshots(const fs::path& dir, const SnapshotSet& set) {
  ensure_directory(dir);
  require_dims(set.parameters.size() == set.trajectories.size(), "snapshot parameters and trajectories");
  KeyValues kv;
  kv["format"] = "strb-snapshots 1";
  kv["count"] = std::to_string(set.size());
  if (!set.parameters.empty()) {
    Mat params(set.parameters.front().stacked().size(), set.size());
    for (Index k = 0; k < set.size(); ++k) params.col(k) = set.parameters[static_cast<size_t>(k)].stacked();
    write_dense(dir / "parameters.bin", params);
    kv["n_mu_f"] = std::to_string(set.parameters.front().mu_f.size());
  }
  for (Index k = 0; k < set.size(); ++k) {
    const auto& tr = set.trajectories[static_cast<size_t>(k)];
    char name[32];
    std::snprintf(name, sizeof name, "sample_%04lld", static_cast<long long>(k));
    const fs::path sd = dir / name;
    ensure_directory(sd);
    write_dense(sd / "u.bin", tr.u);
    write_dense(sd / "p.bin", tr.p);
    write_dense(sd / "lambda.bin", tr.lambda);
    write_dense(sd / "d.bin", tr.d);
    write_dense(sd / "init_u.bin", stack_columns(tr.initial.u, tr.u.rows()));
    write_dense(sd / "init_d.bin", stack_columns(tr.initial.d, tr.d.rows()));
    write_dense(sd / "init_p.bin", tr.initial.p);
    write_dense(sd / "init_lambda.bin", tr.initial.lambda);
    KeyValues meta;
    meta["wall_seconds"] = format_double(tr.wall_seconds);
    std::vector<double> its(tr.newton_iterations.begin(), tr.newton_iterations.end());
    meta["newton_iterations"] = format_list(its);
    write_key_values(sd / "meta.txt", meta);
  }
  write_key_values(dir / "snapshots.txt", kv);
}

SnapshotSet load_snapshots(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("snapshot directory not found: " + dir.string());
  const KeyValues kv = read_key_values(dir / "snapshots.txt");
  const Index count = parse_index(kv, "count");
  SnapshotSet set;
  if (count == 0) return set;
  const Index nf = parse_index(kv, "n_mu_f");
  const Mat params = read_dense(dir / "parameters.bin");
  if (params.cols() != count || params.rows() != nf + 4)
    throw ShapeMismatchError(dir.string() + ": parameter table shape");
  for (Index k = 0; k < count; ++k) {
    ParameterSample s;
    s.mu_f = params.col(k).head(nf);
    for (int i = 0; i < 4; ++i) s.mu_m[static_cast<size_t>(i)] = params(nf + i, k);
    set.parameters.push_back(s);
    char name[32];
    std::snprintf(name, sizeof name, "sample_%04lld", static_cast<long long>(k));
    const fs::path sd = dir / name;
    Trajectory tr;
    tr.u = read_dense(sd / "u.bin");
    tr.p = read_dense(sd / "p.bin");
    tr.lambda = read_dense(sd / "lambda.bin");
    tr.d = read_dense(sd / "d.bin", tr.u.rows(), tr.u.cols());
    if (tr.p.cols() != tr.u.cols() || tr.lambda.cols() != tr.u.cols())
      throw ShapeMismatchError(sd.string() + ": fields have different step counts");
    tr.initial.u = split_columns(read_dense(sd / "init_u.bin"));
    tr.initial.d = split_columns(read_dense(sd / "init_d.bin"));
    tr.initial.p = read_dense(sd / "init_p.bin").col(0);
    tr.initial.lambda = read_dense(sd / "init_lambda.bin").col(0);
    const KeyValues meta = read_key_values(sd / "meta.txt");
    tr.wall_seconds = parse_double(meta, "wall_seconds");
    for (double v : parse_list(meta.at("newton_iterations"))) tr.newton_iterations.push_back(static_cast<int>(v));
    set.trajectories.push_back(std::move(tr));
  }
  return set;
}

void write_trajectory_csv(const fs::path& path, const Mat& field, double dt, double t0) {
  auto out = open_out(path);
  out << "t";
  for (Index i = 0; i < field.rows(); ++i) out << ",x" << i;
  out << '\n';
  char buf[40];
  for (Index n = 0; n < field.cols(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g", t0 + static_cast<double>(n + 1) * dt);
    out << buf;
    for (Index i = 0; i < field.rows(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", field(i, n));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace strb::io
