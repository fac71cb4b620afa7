#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "crackdet/train.hpp"

namespace crackdet {

// Resolved invocation of one CLI command. Every run writes `resolved_config.json`
// next to its outputs so it can be reproduced from the snapshot plus seeds.
struct RunConfig {
  std::string command;  // prepare | train | eval | localize | scan | report | matrix
  std::filesystem::path dataset_root;
  std::filesystem::path out_dir;
  std::string backbone;
  int case_id = 0;
  Regime regime = Regime::Scratch;
  uint64_t seed = 0;
  TrainConfig train;
  std::map<std::string, std::string> extra;  // command-specific knobs

  std::string to_json() const;
  void write_snapshot(const std::filesystem::path& dir) const;
};

// runs/<timestamp>-<command>/ under `base`; nonexistent directories created.
std::filesystem::path make_run_dir(const std::filesystem::path& base,
                                   const std::string& command);

}  // namespace crackdet
