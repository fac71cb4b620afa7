#include "crackdet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crackdet/errors.hpp"
#include "crackdet/image.hpp"
#include "crackdet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace crackdet {

const char* to_string(Label l) { return l == Label::Crack ? "Crack" : "NoCrack"; }
const char* to_string(Site s) {
  switch (s) {
    case Site::Naillac: return "Naillac";
    case Site::StNikolaos: return "StNikolaos";
    case Site::Random: return "Random";
  }
  return "?";
}

namespace {
std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}
}  // namespace

std::optional<Label> parse_label(const std::string& s) {
  const std::string l = lower(s);
  if (l == "crack" || l == "cracks") return Label::Crack;
  if (l == "no_crack" || l == "nocrack" || l == "no_cracks" || l == "no crack")
    return Label::NoCrack;
  return std::nullopt;
}

std::optional<Site> parse_site(const std::string& s) {
  const std::string l = lower(s);
  if (l == "naillac") return Site::Naillac;
  if (l == "stnikolaos" || l == "st_nikolaos" || l == "st.nikolaos" || l == "st. nikolaos")
    return Site::StNikolaos;
  if (l == "random" || l == "random_images" || l == "internet") return Site::Random;
  return std::nullopt;
}

int DatasetManifest::count(Site s, Label l) const {
  auto it = counts.find({s, l});
  return it == counts.end() ? 0 : it->second;
}

int DatasetManifest::count(Label l) const {
  int n = 0;
  for (const auto& [key, v] : counts)
    if (key.second == l) n += v;
  return n;
}

std::vector<std::string> DatasetManifest::table1_mismatches() const {
  static constexpr std::array<std::tuple<Site, Label, int>, 6> kTable1 = {{
      {Site::Naillac, Label::Crack, 22},
      {Site::Naillac, Label::NoCrack, 14},
      {Site::StNikolaos, Label::Crack, 8},
      {Site::StNikolaos, Label::NoCrack, 16},
      {Site::Random, Label::Crack, 26},
      {Site::Random, Label::NoCrack, 12},
  }};
  std::vector<std::string> out;
  for (const auto& [site, label, expected] : kTable1) {
    const int got = count(site, label);
    if (got != expected) {
      std::ostringstream os;
      os << to_string(site) << "/" << to_string(label) << ": found " << got
         << ", published tally is " << expected;
      out.push_back(os.str());
    }
  }
  return out;
}

namespace {

void ingest_file(DatasetManifest& m, const fs::path& p, Site site, Label label,
                 std::set<std::string>& seen) {
  auto dims = probe_image_size(p);
  if (!dims) {
    m.skipped.push_back({p, "undecodable image"});
    return;
  }
  const std::string key = fs::weakly_canonical(p).string();
  if (!seen.insert(key).second)
    throw DataError("duplicate sample path: " + p.string());
  m.samples.push_back({p, label, site, dims->first, dims->second});
  m.counts[{site, label}]++;
}

DatasetManifest load_from_json(const fs::path& root, const fs::path& manifest_path) {
  std::ifstream f(manifest_path);
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest.json: " + std::string(e.what()));
  }
  if (!doc.is_array()) throw ConfigError("manifest.json must be an array");
  DatasetManifest m;
  std::set<std::string> seen;
  for (const auto& entry : doc) {
    fs::path p = entry.at("path").get<std::string>();
    if (p.is_relative()) p = root / p;
    auto label = parse_label(entry.at("label").get<std::string>());
    auto site = parse_site(entry.at("site").get<std::string>());
    if (!label) throw ConfigError("manifest.json: bad label for " + p.string());
    if (!site) throw ConfigError("manifest.json: bad site for " + p.string());
    if (!fs::exists(p)) {
      m.skipped.push_back({p, "listed in manifest.json but missing on disk"});
      continue;
    }
    ingest_file(m, p, *site, *label, seen);
  }
  return m;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& root) {
  if (!fs::is_directory(root))
    throw ConfigError("dataset root is not a directory: " + root.string());

  if (fs::exists(root / "manifest.json")) return load_from_json(root, root / "manifest.json");

  DatasetManifest m;
  std::set<std::string> seen;
  std::vector<fs::path> site_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (!e.is_directory()) continue;
    site_dirs.push_back(e.path());
  }
  std::sort(site_dirs.begin(), site_dirs.end());
  if (site_dirs.empty()) return m;

  for (const auto& sdir : site_dirs) {
    auto site = parse_site(sdir.filename().string());
    if (!site)
      throw ConfigError("unrecognized site directory '" + sdir.filename().string() +
                        "' (expected Naillac, StNikolaos or Random)");
    std::vector<fs::path> label_dirs;
    for (const auto& e : fs::directory_iterator(sdir)) {
      if (e.is_directory()) label_dirs.push_back(e.path());
    }
    std::sort(label_dirs.begin(), label_dirs.end());
    for (const auto& ldir : label_dirs) {
      auto label = parse_label(ldir.filename().string());
      if (!label)
        throw ConfigError("unrecognized label directory '" + ldir.filename().string() +
                          "' under " + sdir.string() + " (expected Crack or No_crack)");
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(ldir)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) ingest_file(m, f, *site, *label, seen);
    }
  }
  return m;
}

void write_skip_report(const DatasetManifest& m, const fs::path& path) {
  std::ofstream f(path);
  for (const auto& s : m.skipped) f << s.path.string() << '\t' << s.reason << '\n';
}

CaseCounts table2_counts(int case_id) {
  // Published per-label train/test counts for the six test cases.
  switch (case_id) {
    case 0: return {35, 35, 21, 20};
    case 1: return {28, 28, 27, 27};
    case 2: return {50, 39, 8, 16};
    case 3: return {36, 41, 22, 14};
    case 4: return {30, 30, 26, 12};
    case 5: return {26, 12, 30, 30};
  }
  throw ConfigError("case_id must be in 0..5, got " + std::to_string(case_id));
}

namespace {

std::vector<ImageSample> filter(const std::vector<ImageSample>& pool,
                                auto&& pred) {
  std::vector<ImageSample> out;
  for (const auto& s : pool)
    if (pred(s)) out.push_back(s);
  return out;
}

// Draw `n` samples of `label` from `pool` into `dst`, removing them from pool.
void draw_stratified(std::vector<ImageSample>& pool, Label label, int n,
                     std::vector<ImageSample>& dst, Rng& rng, int case_id,
                     const char* what) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < pool.size(); ++i)
    if (pool[i].label == label) idx.push_back(i);
  if (static_cast<int>(idx.size()) < n) {
    std::ostringstream os;
    os << "case " << case_id << " needs " << n << ' ' << to_string(label)
       << " samples for the " << what << " set but only " << idx.size()
       << " are available (deficit " << n - static_cast<int>(idx.size()) << ')';
    throw DataError(os.str());
  }
  rng.shuffle(idx);
  idx.resize(static_cast<size_t>(n));
  std::sort(idx.begin(), idx.end(), std::greater<>());
  for (size_t i : idx) {
    dst.push_back(pool[i]);
    pool.erase(pool.begin() + static_cast<long>(i));
  }
}

}  // namespace

TestCaseSplit make_split(const DatasetManifest& manifest, int case_id, uint64_t seed) {
  const CaseCounts counts = table2_counts(case_id);  // validates case_id
  TestCaseSplit split;
  split.case_id = case_id;
  split.seed = seed;

  const auto is_hyperion = [](const ImageSample& s) {
    return s.site == Site::Naillac || s.site == Site::StNikolaos;
  };

  switch (case_id) {
    case 0:
    case 1: {
      std::vector<ImageSample> pool = manifest.samples;
      Rng rng(seed);
      rng = rng.fork("split", static_cast<uint64_t>(case_id));
      draw_stratified(pool, Label::Crack, counts.train_crack, split.train, rng, case_id, "train");
      draw_stratified(pool, Label::NoCrack, counts.train_nocrack, split.train, rng, case_id, "train");
      draw_stratified(pool, Label::Crack, counts.test_crack, split.test, rng, case_id, "test");
      draw_stratified(pool, Label::NoCrack, counts.test_nocrack, split.test, rng, case_id, "test");
      break;
    }
    case 2:
      split.test = filter(manifest.samples, [](const auto& s) { return s.site == Site::StNikolaos; });
      split.train = filter(manifest.samples, [](const auto& s) { return s.site != Site::StNikolaos; });
      break;
    case 3:
      split.test = filter(manifest.samples, [](const auto& s) { return s.site == Site::Naillac; });
      split.train = filter(manifest.samples, [](const auto& s) { return s.site != Site::Naillac; });
      break;
    case 4:
      split.train = filter(manifest.samples, is_hyperion);
      split.test = filter(manifest.samples, [](const auto& s) { return s.site == Site::Random; });
      break;
    case 5:
      split.train = filter(manifest.samples, [](const auto& s) { return s.site == Site::Random; });
      split.test = filter(manifest.samples, is_hyperion);
      break;
  }

  for (Label l : {Label::Crack, Label::NoCrack}) {
    const auto has = [l](const auto& v) {
      return std::any_of(v.begin(), v.end(), [l](const auto& s) { return s.label == l; });
    };
    if (!split.train.empty() && !has(split.train))
      throw DataError("case " + std::to_string(case_id) + ": train set has no " +
                      to_string(l) + " samples");
  }
  if (split.train.empty() || split.test.empty())
    throw DataError("case " + std::to_string(case_id) +
                    ": manifest does not cover the sites this case requires");
  return split;
}

namespace {

json sample_to_json(const ImageSample& s) {
  return json{{"path", s.path.string()},
              {"label", to_string(s.label)},
              {"site", to_string(s.site)},
              {"width", s.width},
              {"height", s.height}};
}

ImageSample sample_from_json(const json& j, const fs::path& root) {
  ImageSample s;
  fs::path p = j.at("path").get<std::string>();
  if (p.is_relative() && !root.empty()) p = root / p;
  s.path = p;
  auto label = parse_label(j.at("label").get<std::string>());
  auto site = parse_site(j.at("site").get<std::string>());
  if (!label || !site) throw ConfigError("bad label/site in split json");
  s.label = *label;
  s.site = *site;
  s.width = j.value("width", 0);
  s.height = j.value("height", 0);
  return s;
}

}  // namespace

void write_split_json(const TestCaseSplit& split, const fs::path& path) {
  json doc;
  doc["case_id"] = split.case_id;
  doc["seed"] = split.seed;
  doc["train"] = json::array();
  doc["test"] = json::array();
  for (const auto& s : split.train) doc["train"].push_back(sample_to_json(s));
  for (const auto& s : split.test) doc["test"].push_back(sample_to_json(s));
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write split: " + path.string());
  f << doc.dump(2) << '\n';
}

TestCaseSplit read_split_json(const fs::path& path, const fs::path& dataset_root) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open split: " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("malformed split json: " + std::string(e.what()));
  }
  TestCaseSplit split;
  split.case_id = doc.at("case_id").get<int>();
  split.seed = doc.value("seed", 0ull);
  for (const auto& j : doc.at("train")) split.train.push_back(sample_from_json(j, dataset_root));
  for (const auto& j : doc.at("test")) split.test.push_back(sample_from_json(j, dataset_root));
  return split;
}

}  // namespace crackdet
