#pragma once

#include "strb/config.hpp"

#include <filesystem>
#include <functional>

namespace strb {

/// A stage found its inputs missing (e.g. online before offline).
struct MissingInputError : Error {
  using Error::Error;
};

/// Directory layout below the output root.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path operators() const { return root / "operators"; }
  std::filesystem::path train() const { return root / "snapshots" / "train"; }
  std::filesystem::path test() const { return root / "snapshots" / "test"; }
  std::filesystem::path offline(size_t eps_index) const;
  std::filesystem::path online(size_t eps_index) const;
  std::filesystem::path bench() const { return root / "bench"; }
};

struct StageContext {
  PipelineConfig cfg;
  Workspace ws;
  std::function<void(const std::string&)> log = [](const std::string&) {};
};

void cmd_generate(const StageContext& ctx);
void cmd_fom(const StageContext& ctx);
void cmd_offline(const StageContext& ctx);
/// Returns false when some online solve did not converge.
bool cmd_online(const StageContext& ctx);
void cmd_bench(const StageContext& ctx);

struct CheckResult {
  std::string name;
  bool ok = true;
  std::string detail;
};
/// Invariant suite over the operators and whichever later artifacts exist.
/// Without stored operators the configured source is checked in memory.
std::vector<CheckResult> cmd_validate(const StageContext& ctx);

/// Numerical invariants of an operator set.
std::vector<CheckResult> check_operators(const FomOperators& ops);

}  // namespace strb
