#include "crackdet/runcfg.hpp"

#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "crackdet/errors.hpp"

using nlohmann::json;

namespace crackdet {

std::string RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["dataset_root"] = dataset_root.string();
  j["out_dir"] = out_dir.string();
  j["backbone"] = backbone;
  j["case_id"] = case_id;
  j["regime"] = to_string(regime);
  j["seed"] = seed;
  j["train"] = json::parse(train.to_json());
  for (const auto& [k, v] : extra) j["extra"][k] = v;
  return j.dump(2);
}

void RunConfig::write_snapshot(const std::filesystem::path& dir) const {
  std::ofstream f(dir / "resolved_config.json");
  if (!f) throw ConfigError("cannot write resolved_config.json under " + dir.string());
  f << to_json() << '\n';
}

std::filesystem::path make_run_dir(const std::filesystem::path& base,
                                   const std::string& command) {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch()).count() % 1000;
  std::filesystem::path dir =
      base / (std::string(buf) + "-" + std::to_string(ms) + "-" + command);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace crackdet
