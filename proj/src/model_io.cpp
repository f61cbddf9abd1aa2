#include "strb/assembly.hpp"
#include "strb/io.hpp"

namespace strb {

namespace {

Mat hstack(const std::vector<Mat>& ms, Index rows, Index cols) {
  Mat out(rows, cols * static_cast<Index>(ms.size()));
  for (size_t k = 0; k < ms.size(); ++k) out.middleCols(static_cast<Index>(k) * cols, cols) = ms[k];
  return out;
}

std::vector<Mat> hsplit(const Mat& m, Index cols, Index count) {
  if (m.cols() != cols * count) throw ShapeMismatchError("stacked array has the wrong width");
  std::vector<Mat> out;
  for (Index k = 0; k < count; ++k) out.push_back(m.middleCols(k * cols, cols));
  return out;
}

}  // namespace

void store_reduced_model(const std::filesystem::path& dir, const ReducedModel& m) {
  namespace fs = std::filesystem;
  io::ensure_directory(dir);
  store_bases(dir / "bases", m.bases);
  const fs::path b = dir / "space";
  io::write_dense(b / "M.bin", m.bar.M);
  io::write_dense(b / "A.bin", m.bar.A);
  io::write_dense(b / "R.bin", m.bar.R);
  io::write_dense(b / "Ms.bin", m.bar.Ms);
  io::write_dense(b / "As1.bin", m.bar.As1);
  io::write_dense(b / "As2.bin", m.bar.As2);
  io::write_dense(b / "B.bin", m.bar.B);
  io::write_dense(b / "L.bin", m.bar.L);
  io::write_dense(b / "g.bin", m.bar.g);
  const fs::path t = dir / "time";
  io::write_dense(t / "G.bin", hstack(m.grams.G, m.bases.n_u_t(), m.bases.n_u_t()));
  io::write_dense(t / "up.bin", m.grams.up);
  io::write_dense(t / "ul.bin", m.grams.ul);
  io::write_dense(t / "prim.bin", m.grams.prim);
  io::write_dense(t / "psi3.bin", m.grams.psi3);
  io::write_dense(t / "ones_u.bin", m.grams.ones_u);
  io::write_dense(t / "ones_p.bin", m.grams.ones_p);
  io::write_dense(t / "ones_lambda.bin", m.grams.ones_lambda);
  io::write_dense(t / "ramp_u.bin", m.grams.ramp_u);
  io::write_dense(t / "hom_u.bin", m.grams.hom_u);
  io::write_dense(t / "lead_u.bin", m.grams.lead_u);
  const fs::path c = dir / "convective";
  io::write_dense(c / "kbar.bin", m.conv.kbar);
  io::write_dense(c / "Kbar.bin", hstack(m.conv.Kbar, m.conv.n_us, m.conv.n_us));
  const fs::path l = dir / "lifting";
  io::write_dense(l / "M.bin", m.lift.M);
  io::write_dense(l / "Ms.bin", m.lift.Ms);
  io::write_dense(l / "AR.bin", m.lift.AR);
  io::write_dense(l / "As1.bin", m.lift.As1);
  io::write_dense(l / "As2.bin", m.lift.As2);
  io::write_dense(l / "Bt.bin", m.lift.Bt);
  io::write_dense(l / "Lt.bin", m.lift.Lt);
  io::write_dense(l / "B.bin", m.lift.B);
  io::write_dense(l / "L.bin", m.lift.L);
  io::write_dense(l / "Xu_phi.bin", m.lift.Xu_phi);

  io::KeyValues kv;
  kv["format"] = "strb-model 1";
  kv["order"] = std::to_string(m.scheme.order);
  kv["dt"] = io::format_double(m.dt);
  kv["n_t"] = std::to_string(m.n_t);
  kv["n_boundaries"] = std::to_string(m.n_boundaries);
  kv["c_s"] = io::format_double(m.c_s);
  kv["lifted"] = m.lifted ? "1" : "0";
  kv["n_c"] = std::to_string(m.conv.n_c);
  kv["n_cJ"] = std::to_string(m.conv.n_cJ);
  kv["n_u_s"] = std::to_string(m.bases.n_u_s());
  kv["n_u_t"] = std::to_string(m.bases.n_u_t());
  kv["n_p_s"] = std::to_string(m.bases.n_p_s());
  kv["n_p_t"] = std::to_string(m.bases.n_p_t());
  kv["n_lambda_s"] = std::to_string(m.bases.n_lambda_s());
  kv["n_lambda_t"] = std::to_string(m.bases.n_lambda_t());
  kv["eps_u"] = io::format_double(m.bases.tol.u);
  kv["eps_p"] = io::format_double(m.bases.tol.p);
  kv["eps_lambda_s"] = io::format_double(m.bases.tol.lambda_s);
  kv["eps_lambda_t"] = io::format_double(m.bases.tol.lambda_t);
  io::write_key_values(dir / "manifest.txt", kv);
}

ReducedModel load_reduced_model(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir / "manifest.txt")) throw IoError("missing reduced model in " + dir.string());
  const auto kv = io::read_key_values(dir / "manifest.txt");
  ReducedModel m;
  m.scheme = BdfScheme::of_order(static_cast<int>(io::parse_index(kv, "order")));
  m.dt = io::parse_double(kv, "dt");
  m.n_t = io::parse_index(kv, "n_t");
  m.n_boundaries = io::parse_index(kv, "n_boundaries");
  m.c_s = io::parse_double(kv, "c_s");
  m.lifted = io::parse_index(kv, "lifted") != 0;
  m.bases = load_bases(dir / "bases");
  const Index nus = m.bases.n_u_s(), nut = m.bases.n_u_t();
  if (nus != io::parse_index(kv, "n_u_s") || nut != io::parse_index(kv, "n_u_t") ||
      m.bases.n_p_s() != io::parse_index(kv, "n_p_s") || m.bases.n_lambda_t() != io::parse_index(kv, "n_lambda_t") ||
      m.bases.psi_u.rows() != m.n_t)
    throw ShapeMismatchError(dir.string() + ": bases disagree with the manifest");

  const fs::path b = dir / "space";
  m.bar.M = io::read_dense(b / "M.bin", nus, nus);
  m.bar.A = io::read_dense(b / "A.bin", nus, nus);
  m.bar.R = io::read_dense(b / "R.bin", nus, nus);
  m.bar.Ms = io::read_dense(b / "Ms.bin", nus, nus);
  m.bar.As1 = io::read_dense(b / "As1.bin", nus, nus);
  m.bar.As2 = io::read_dense(b / "As2.bin", nus, nus);
  m.bar.B = io::read_dense(b / "B.bin", m.bases.n_p_s(), nus);
  m.bar.L = io::read_dense(b / "L.bin", m.bases.n_lambda_s(), nus);
  m.bar.g = io::read_dense(b / "g.bin", m.bases.n_lambda_s(), m.n_boundaries);

  const fs::path t = dir / "time";
  m.grams.G = hsplit(io::read_dense(t / "G.bin"), nut, m.scheme.order + 1);
  m.grams.up = io::read_dense(t / "up.bin", nut, m.bases.n_p_t());
  m.grams.ul = io::read_dense(t / "ul.bin", nut, m.bases.n_lambda_t());
  m.grams.prim = io::read_dense(t / "prim.bin", nut, nut);
  m.grams.psi3 = io::read_dense(t / "psi3.bin");
  m.grams.ones_u = io::read_dense(t / "ones_u.bin").col(0);
  m.grams.ones_p = io::read_dense(t / "ones_p.bin").col(0);
  m.grams.ones_lambda = io::read_dense(t / "ones_lambda.bin").col(0);
  m.grams.ramp_u = io::read_dense(t / "ramp_u.bin").col(0);
  m.grams.hom_u = io::read_dense(t / "hom_u.bin", nut, m.scheme.order);
  m.grams.lead_u = io::read_dense(t / "lead_u.bin");

  const fs::path c = dir / "convective";
  m.conv.n_c = io::parse_index(kv, "n_c");
  m.conv.n_cJ = io::parse_index(kv, "n_cJ");
  m.conv.n_us = nus;
  m.conv.kbar = io::read_dense(c / "kbar.bin", m.conv.n_c * m.conv.n_c, nus);
  m.conv.Kbar = hsplit(io::read_dense(c / "Kbar.bin"), nus, m.conv.n_cJ);

  const fs::path l = dir / "lifting";
  m.lift.M = io::read_dense(l / "M.bin");
  m.lift.Ms = io::read_dense(l / "Ms.bin");
  m.lift.AR = io::read_dense(l / "AR.bin");
  m.lift.As1 = io::read_dense(l / "As1.bin");
  m.lift.As2 = io::read_dense(l / "As2.bin");
  m.lift.Bt = io::read_dense(l / "Bt.bin");
  m.lift.Lt = io::read_dense(l / "Lt.bin");
  m.lift.B = io::read_dense(l / "B.bin");
  m.lift.L = io::read_dense(l / "L.bin");
  m.lift.Xu_phi = io::read_dense(l / "Xu_phi.bin");
  m.finalize();
  return m;
}

}  // namespace strb
