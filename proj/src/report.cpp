#include "strb/report.hpp"
#include "strb/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace strb {

namespace {

// column name, accessor pair for each field; order here is the CSV order
struct Column {
  const char* name;
  enum Kind { Text, Int, Real } kind;
  std::string MetricsRecord::*text = nullptr;
  Index MetricsRecord::*integer = nullptr;
  double MetricsRecord::*real = nullptr;
  bool timing = false;
};

Column text(const char* n, std::string MetricsRecord::*m) { return {n, Column::Text, m, nullptr, nullptr}; }
Column integer(const char* n, Index MetricsRecord::*m) { return {n, Column::Int, nullptr, m, nullptr}; }
Column real(const char* n, double MetricsRecord::*m, bool timing = false) {
  return {n, Column::Real, nullptr, nullptr, m, timing};
}

const std::vector<Column>& columns() {
  using R = MetricsRecord;
  static const std::vector<Column> cols{
      text("method", &R::method),           real("eps_u", &R::eps_u),
      real("eps_p", &R::eps_p),             real("eps_lambda_s", &R::eps_lambda_s),
      real("eps_lambda_t", &R::eps_lambda_t), integer("n_c", &R::n_c),
      integer("n_cJ", &R::n_cJ),            integer("n_u_s", &R::n_u_s),
      integer("n_u_t", &R::n_u_t),          integer("n_p_s", &R::n_p_s),
      integer("n_p_t", &R::n_p_t),          integer("n_lambda_s", &R::n_lambda_s),
      integer("n_lambda_t", &R::n_lambda_t), integer("n_supremizers", &R::n_supremizers),
      integer("n_stabilizers", &R::n_stabilizers), integer("reduced_dim", &R::reduced_dim),
      integer("full_dim", &R::full_dim),    real("RF", &R::RF),
      real("E_u", &R::E_u),                 real("E_p", &R::E_p),
      real("E_d", &R::E_d),                 real("E_u_over_eps", &R::E_u_ratio),
      real("E_p_over_eps", &R::E_p_ratio),  real("avg_iterations", &R::avg_iterations),
      integer("converged", &R::converged),  integer("tests", &R::tests),
      text("warm_start", &R::warm_start),   real("offline_s", &R::offline_s, true),
      real("online_s", &R::online_s, true), real("fom_s", &R::fom_s, true),
      real("SU", &R::SU, true)};
  return cols;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string to_csv(const std::vector<MetricsRecord>& table, bool timing) {
  std::ostringstream os;
  bool first = true;
  for (const auto& c : columns()) {
    if (c.timing && !timing) continue;
    os << (first ? "" : ",") << c.name;
    first = false;
  }
  os << '\n';
  for (const auto& r : table) {
    first = true;
    for (const auto& c : columns()) {
      if (c.timing && !timing) continue;
      os << (first ? "" : ",");
      first = false;
      switch (c.kind) {
        case Column::Text: os << r.*(c.text); break;
        case Column::Int: os << r.*(c.integer); break;
        case Column::Real: os << format_real(r.*(c.real)); break;
      }
    }
    os << '\n';
  }
  return os.str();
}

std::vector<MetricsRecord> parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty report");
  const auto header = split(line);
  std::vector<const Column*> map;
  for (const auto& h : header) {
    const Column* found = nullptr;
    for (const auto& c : columns())
      if (h == c.name) found = &c;
    if (!found) throw FormatError("unknown report column '" + h + "'");
    map.push_back(found);
  }
  std::vector<MetricsRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != map.size()) throw FormatError("report row with " + std::to_string(cells.size()) + " cells");
    MetricsRecord r;
    for (size_t k = 0; k < cells.size(); ++k) {
      const Column& c = *map[k];
      try {
        switch (c.kind) {
          case Column::Text: r.*(c.text) = cells[k]; break;
          case Column::Int: r.*(c.integer) = std::stoll(cells[k]); break;
          case Column::Real: r.*(c.real) = std::stod(cells[k]); break;
        }
      } catch (const std::logic_error&) {
        throw FormatError("bad value '" + cells[k] + "' in column " + c.name);
      }
    }
    out.push_back(r);
  }
  return out;
}

std::string summary_text(const std::vector<MetricsRecord>& table, const ReportOptions& opts) {
  std::ostringstream os;
  os << "# configuration\n";
  for (const auto& [k, v] : opts.config_echo) os << "# " << k << " = " << v << '\n';
  char line[512];
  std::snprintf(line, sizeof line, "%-16s %-10s | %-9s %-9s %-9s %-7s | %-11s %-11s %-11s %-8s | %-11s %-11s %-11s %-9s %-9s\n",
                "method", "eps", "(nu_s,t)", "(np_s,t)", "(nl_s,t)", "n_c", "RF", "SU", "online_s", "iters", "E_u", "E_p",
                "E_d", "E_u/eps", "E_p/eps");
  os << line;
  for (const auto& r : table) {
    auto pair = [](Index a, Index b) { return "(" + std::to_string(a) + "," + std::to_string(b) + ")"; };
    std::snprintf(line, sizeof line,
                  "%-16s %-10.2e | %-9s %-9s %-9s %-7lld | %-11.3e %-11.3e %-11.3e %-8.2f | %-11.3e %-11.3e %-11.3e %-9.2f %-9.2f\n",
                  r.method.c_str(), r.eps_u, pair(r.n_u_s, r.n_u_t).c_str(), pair(r.n_p_s, r.n_p_t).c_str(),
                  pair(r.n_lambda_s, r.n_lambda_t).c_str(), static_cast<long long>(r.n_c), r.RF,
                  opts.timing ? r.SU : 0.0, opts.timing ? r.online_s : 0.0, r.avg_iterations, r.E_u, r.E_p, r.E_d,
                  r.E_u_ratio, r.E_p_ratio);
    os << line;
  }
  return os.str();
}

void emit_report(const std::vector<MetricsRecord>& table, const std::filesystem::path& path, const ReportOptions& opts) {
  if (path.has_parent_path()) io::ensure_directory(path.parent_path());
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << to_csv(table, opts.timing);
    if (!f) throw IoError("write failed: " + path.string());
  }
  const auto summary = path.parent_path() / (path.stem().string() + "_summary.txt");
  std::ofstream s(summary, std::ios::binary);
  if (!s) throw IoError("cannot write " + summary.string());
  s << summary_text(table, opts);
}

}  // namespace strb
