#include "strb/config.hpp"
#include "strb/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace strb {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double to_real(const std::string& key, const std::string& v) {
  size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

Index to_int(const std::string& key, const std::string& v) {
  size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<Index>(x);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  const Index x = to_int(key, v);
  if (x < 0) throw ConfigError(key + ": seeds are nonnegative");
  return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(to_real(key, trim(tok)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::array<double, 4> to_four(const std::string& key, const std::string& v) {
  const auto l = to_list(key, v);
  if (l.size() != 4) throw ConfigError(key + ": expected 4 values (h_s, rho_s, E, nu)");
  return {l[0], l[1], l[2], l[3]};
}

Vec to_vec(const std::string& key, const std::string& v) {
  const auto l = to_list(key, v);
  return Eigen::Map<const Vec>(l.data(), static_cast<Index>(l.size()));
}

using Setter = std::function<void(PipelineConfig&, const std::string& key, const std::string& value)>;

struct Tolerances {
  std::optional<double> u, p, lambda_s, lambda_t;
};

// registry of accepted "section.key" names
std::map<std::string, Setter> setters(Tolerances& tol) {
  std::map<std::string, Setter> s;
  auto& T = tol;
  s["fom.source"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    const auto x = lower(v);
    if (x == "synth") c.source = OperatorSource::Synth;
    else if (x == "ingest") c.source = OperatorSource::Ingest;
    else throw ConfigError(k + ": expected synth or ingest, got '" + v + "'");
  };
  s["fom.path"] = [](PipelineConfig& c, const std::string&, const std::string& v) { c.ingest_path = v; };
  s["fom.n_u"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.synth.n_u = to_int(k, v); };
  s["fom.n_p"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.synth.n_p = to_int(k, v); };
  s["fom.n_lambda"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.synth.n_lambda_per_boundary.clear();
    for (double x : to_list(k, v)) {
      if (x != std::floor(x) || x < 1) throw ConfigError(k + ": sizes must be positive integers");
      c.synth.n_lambda_per_boundary.push_back(static_cast<Index>(x));
    }
  };
  s["fom.n_resistance"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.synth.n_resistance = to_int(k, v);
  };
  s["fom.boundary_fraction"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.synth.boundary_fraction = to_real(k, v);
  };
  s["fom.convection_scale"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.synth.convection_scale = to_real(k, v);
  };
  s["fom.membrane_scale"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.synth.membrane_scale = to_real(k, v);
  };
  s["fom.c_s"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.synth.c_s = to_real(k, v); };
  s["fom.seed"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.synth.seed = to_seed(k, v); };

  s["time.dt"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.campaign.dt = to_real(k, v); };
  s["time.N_t"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.campaign.n_t = to_int(k, v); };
  s["time.S"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.order = static_cast<int>(to_int(k, v));
  };
  s["time.period"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.waveform.period = to_real(k, v);
  };
  s["time.waveform"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    const auto x = lower(v);
    if (x == "sinusoidal") c.campaign.waveform.kind = FlowWaveform::Kind::Sinusoidal;
    else if (x == "constant") c.campaign.waveform.kind = FlowWaveform::Kind::Constant;
    else if (x == "zero") c.campaign.waveform.kind = FlowWaveform::Kind::Zero;
    else throw ConfigError(k + ": expected sinusoidal, constant or zero");
  };

  s["parameters.M"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.campaign.M = to_int(k, v); };
  s["parameters.M_test"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.M_test = to_int(k, v);
  };
  s["parameters.train_seed"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.train_seed = to_seed(k, v);
  };
  s["parameters.test_seed"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.test_seed = to_seed(k, v);
  };
  s["parameters.flow_lo"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.box.f_lo = to_vec(k, v);
  };
  s["parameters.flow_hi"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.box.f_hi = to_vec(k, v);
  };
  s["parameters.membrane_lo"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.box.m_lo = to_four(k, v);
  };
  s["parameters.membrane_hi"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.box.m_hi = to_four(k, v);
  };

  s["pod.eps"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.campaign.eps_grid = to_list(k, v); };
  s["pod.eps_u"] = [&T](PipelineConfig&, const std::string& k, const std::string& v) { T.u = to_real(k, v); };
  s["pod.eps_p"] = [&T](PipelineConfig&, const std::string& k, const std::string& v) { T.p = to_real(k, v); };
  s["pod.eps_lambda_s"] = [&T](PipelineConfig&, const std::string& k, const std::string& v) {
    T.lambda_s = to_real(k, v);
  };
  s["pod.eps_lambda_t"] = [&T](PipelineConfig&, const std::string& k, const std::string& v) {
    T.lambda_t = to_real(k, v);
  };
  s["pod.lambda_space_factor"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.lambda_space_factor = to_real(k, v);
  };
  s["pod.randomized"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.randomized_pod = to_bool(k, v);
  };
  s["pod.seed"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.pod_seed = to_seed(k, v);
  };
  s["pod.max_time_rank"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.max_time_rank = to_int(k, v);
  };
  s["pod.min_time_rank"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.min_time_rank = to_int(k, v);
  };
  s["pod.supremizers"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.supremizers = to_bool(k, v);
  };
  s["pod.stabilizers"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.stabilizers = to_bool(k, v);
  };

  s["hyper.n_c"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.hyper.n_c = to_int(k, v);
  };
  s["hyper.n_cJ"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.hyper.n_cJ = to_int(k, v);
  };
  s["hyper.include_supremizers"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.hyper.convective_with_supremizers = to_bool(k, v);
  };

  s["newton.tau"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.newton.tau = to_real(k, v);
  };
  s["newton.max_iter"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.newton.max_iter = static_cast<int>(to_int(k, v));
  };
  s["newton.jacobian"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    const auto x = lower(v);
    if (x == "full") c.campaign.newton.mode = JacobianMode::Full;
    else if (x == "quasi") c.campaign.newton.mode = JacobianMode::Quasi;
    else throw ConfigError(k + ": expected full or quasi");
  };

  s["warmstart.strategy"] = [](PipelineConfig& c, const std::string&, const std::string& v) {
    c.campaign.warm.kind = parse_warm_start_kind(lower(v));
  };
  s["warmstart.K"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.warm.k = to_int(k, v);
  };
  s["warmstart.nni_weighting"] = [](PipelineConfig& c, const std::string&, const std::string& v) {
    c.campaign.warm.weighting = parse_nni_weighting(lower(v));
  };

  s["lifting.enabled"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.lifting = to_bool(k, v); };
  s["lifting.N_T"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.window = to_int(k, v); };
  s["lifting.cycles"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.cycles = to_int(k, v); };

  s["output.directory"] = [](PipelineConfig& c, const std::string&, const std::string& v) { c.output = v; };
  s["output.timing"] = [](PipelineConfig& c, const std::string& k, const std::string& v) { c.timing = to_bool(k, v); };

  s["bench.methods"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.run_st = c.campaign.run_srb = false;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto m = lower(trim(tok));
      if (m == "st-grb") c.campaign.run_st = true;
      else if (m == "srb-tfo") c.campaign.run_srb = true;
      else throw ConfigError(k + ": unknown method '" + m + "' (st-grb | srb-tfo)");
    }
  };
  s["bench.timing_reps"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.campaign.timing_reps = static_cast<int>(to_int(k, v));
  };
  return s;
}

PipelineConfig from_tree(const pt::ptree& tree) {
  PipelineConfig cfg;
  Tolerances tol;
  const auto table = setters(tol);
  for (const auto& [section, body] : tree) {
    if (!body.data().empty() && body.empty())
      throw ConfigError("key '" + section + "' outside of any section");
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      const auto it = table.find(name);
      if (it == table.end()) throw ConfigError("unknown configuration key '" + name + "'");
      const std::string value = trim(node.data());
      it->second(cfg, name, value);
      cfg.echo.emplace_back(name, value);
    }
  }
  if (tol.u || tol.p || tol.lambda_s || tol.lambda_t) {
    const double base = cfg.campaign.eps_grid.front();
    PodTolerances t{base, base, cfg.campaign.lambda_space_factor * base, base};
    if (tol.u) t.u = *tol.u;
    if (tol.p) t.p = *tol.p;
    if (tol.lambda_s) t.lambda_s = *tol.lambda_s;
    if (tol.lambda_t) t.lambda_t = *tol.lambda_t;
    cfg.campaign.field_tolerances = t;
    cfg.campaign.eps_grid = {t.u};
  }
  cfg.validate();
  return cfg;
}

}  // namespace

void PipelineConfig::validate() const {
  campaign.validate();
  if (source == OperatorSource::Synth) {
    if (synth.n_u < 1 || synth.n_p < 1) throw ConfigError("fom.n_u and fom.n_p must be positive");
    if (synth.n_lambda_per_boundary.empty()) throw ConfigError("fom.n_lambda needs at least one boundary");
    if (!(synth.boundary_fraction > 0.0 && synth.boundary_fraction <= 1.0))
      throw ConfigError("fom.boundary_fraction must lie in (0, 1]");
    Index nl = 0;
    for (Index k : synth.n_lambda_per_boundary) nl += k;
    if (synth.n_p + nl > synth.n_u) throw ConfigError("fom: n_p + n_lambda exceeds n_u, constraints cannot have full rank");
  } else {
    if (ingest_path.empty()) throw ConfigError("fom.path is required when fom.source = ingest");
    if (!std::filesystem::is_directory(ingest_path))
      throw ConfigError("fom.path is not a directory: " + ingest_path.string());
  }
  if (campaign.box.f_lo.size() < 3)
    throw ConfigError("parameters.flow_lo/flow_hi need three entries for the inflow family");
  if (campaign.warm.k < 1) throw ConfigError("warmstart.K must be positive");
  if (campaign.hyper.n_c < -1 || campaign.hyper.n_cJ < -1) throw ConfigError("hyper ranks must be >= -1");
  if (campaign.max_time_rank == 0 || campaign.min_time_rank < 0) throw ConfigError("pod time ranks out of range");
  if (!campaign.run_st && !campaign.run_srb) throw ConfigError("bench.methods selects nothing");
  if (cycles < 1) throw ConfigError("lifting.cycles must be positive");
  if (window < 0) throw ConfigError("lifting.N_T must be nonnegative");
  if (lifting && window > 0 && window < campaign.order) throw ConfigError("lifting.N_T shorter than the BDF start");
  if (output.empty()) throw ConfigError("output.directory is empty");
  const auto parent = std::filesystem::absolute(output).parent_path();
  if (!std::filesystem::is_directory(parent))
    throw ConfigError("parent of output.directory does not exist: " + parent.string());
  if (std::filesystem::exists(output) && !std::filesystem::is_directory(output))
    throw ConfigError("output.directory exists and is not a directory: " + output.string());
}

PipelineConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return from_tree(tree);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read configuration " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string default_config_text() {
  return R"([fom]
source = synth
n_u = 200
n_p = 40
n_lambda = 4, 1
seed = 42

[time]
dt = 0.005
N_t = 200
S = 2

[parameters]
M = 10
M_test = 3
train_seed = 1
test_seed = 2

[pod]
eps = 1e-3
lambda_space_factor = 1e-2
randomized = false

[hyper]
n_c = -1
n_cJ = -1
include_supremizers = false

[newton]
tau = 1e-5
max_iter = 10
jacobian = full

[warmstart]
strategy = podi
K = 3
nni_weighting = paper

[lifting]
enabled = false
cycles = 1

[output]
directory = strb_out
)";
}

}  // namespace strb
