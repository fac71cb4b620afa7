#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace crackdet {

enum class Label : int { NoCrack = 0, Crack = 1 };
enum class Site : int { Naillac = 0, StNikolaos = 1, Random = 2 };

const char* to_string(Label l);
const char* to_string(Site s);
std::optional<Label> parse_label(const std::string& s);
std::optional<Site> parse_site(const std::string& s);

struct ImageSample {
  std::filesystem::path path;
  Label label = Label::NoCrack;
  Site site = Site::Random;
  int width = 0;
  int height = 0;
};

struct SkipEntry {
  std::filesystem::path path;
  std::string reason;
};

// Tally key: (site, label).
using Tally = std::map<std::pair<Site, Label>, int>;

struct DatasetManifest {
  std::vector<ImageSample> samples;
  Tally counts;
  std::vector<SkipEntry> skipped;

  int count(Site s, Label l) const;
  int count(Label l) const;
  int total() const { return static_cast<int>(samples.size()); }
  // The published CRACK-CH tallies; mismatches are reported, not fatal.
  std::vector<std::string> table1_mismatches() const;
};

// Scan a `<site>/<Crack|No_crack>/` tree (or a manifest.json override at the
// root) into a manifest. Undecodable files land in the skip list.
DatasetManifest load_manifest(const std::filesystem::path& root);

void write_skip_report(const DatasetManifest& m, const std::filesystem::path& path);

struct TestCaseSplit {
  int case_id = 0;
  uint64_t seed = 0;
  std::vector<ImageSample> train;
  std::vector<ImageSample> test;
};

// Per-label target counts for the two shuffled cases (train, test).
struct CaseCounts {
  int train_crack, train_nocrack, test_crack, test_nocrack;
};
CaseCounts table2_counts(int case_id);

// Cases 0-1: seeded stratified draws of the published per-label counts.
// Cases 2-5: deterministic site partitions (2: test=StNikolaos, 3: test=Naillac,
// 4: train=Naillac+StNikolaos test=Random, 5: the reverse of 4).
TestCaseSplit make_split(const DatasetManifest& manifest, int case_id, uint64_t seed);

void write_split_json(const TestCaseSplit& split, const std::filesystem::path& path);
TestCaseSplit read_split_json(const std::filesystem::path& path,
                              const std::filesystem::path& dataset_root = {});

}  // namespace crackdet
