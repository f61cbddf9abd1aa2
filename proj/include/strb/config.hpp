#pragma once

#include "strb/campaign.hpp"

#include <filesystem>

namespace strb {

enum class OperatorSource { Synth, Ingest };

/// Everything a pipeline run needs, read from one INI file.
struct PipelineConfig {
  OperatorSource source = OperatorSource::Synth;
  SynthConfig synth;
  std::filesystem::path ingest_path;  // operator directory when source = ingest
  CampaignConfig campaign;
  bool lifting = false;
  Index window = 0;  // N_T; 0 means N_t
  Index cycles = 1;
  std::filesystem::path output = "strb_out";
  bool timing = true;  // wall-clock columns in the bench CSV

  /// Key/value echo written next to the bench table.
  std::vector<std::pair<std::string, std::string>> echo;

  void validate() const;
};

/// Parses an INI file. Unknown sections or keys, malformed values and
/// inconsistent settings raise ConfigError; an unreadable file raises IoError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text);

/// Default configuration as INI text, useful as a template.
std::string default_config_text();

}  // namespace strb
