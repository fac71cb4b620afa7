#include <doctest.h>

#include <fstream>
#include <set>

#include "crackdet/dataset.hpp"
#include "crackdet/errors.hpp"
#include "testutil.hpp"

using namespace crackdet;
using testutil::TempDir;

TEST_SUITE_BEGIN("dataset");

TEST_CASE("manifest over a published-shape tree hits the published tallies") {
  TempDir tmp("manifest");
  testutil::write_dataset_tree(tmp.path, testutil::table1_counts());
  DatasetManifest m = load_manifest(tmp.path);

  CHECK(m.total() == 98);
  CHECK(m.count(Label::Crack) == 56);
  CHECK(m.count(Label::NoCrack) == 42);
  CHECK(m.count(Site::Naillac, Label::Crack) == 22);
  CHECK(m.count(Site::Naillac, Label::NoCrack) == 14);
  CHECK(m.count(Site::StNikolaos, Label::Crack) == 8);
  CHECK(m.count(Site::StNikolaos, Label::NoCrack) == 16);
  CHECK(m.count(Site::Random, Label::Crack) == 26);
  CHECK(m.count(Site::Random, Label::NoCrack) == 12);
  CHECK(m.table1_mismatches().empty());
  CHECK(m.skipped.empty());

  // No duplicate paths.
  std::set<std::string> paths;
  for (const auto& s : m.samples) CHECK(paths.insert(s.path.string()).second);
}

TEST_CASE("empty tree yields an empty manifest") {
  TempDir tmp("empty");
  DatasetManifest m = load_manifest(tmp.path);
  CHECK(m.total() == 0);
  CHECK(m.counts.empty());
}

TEST_CASE("singleton tree tallies exactly one cell") {
  TempDir tmp("single");
  testutil::write_dataset_tree(tmp.path, {1, 0, 0, 0, 0, 0});
  DatasetManifest m = load_manifest(tmp.path);
  CHECK(m.total() == 1);
  CHECK(m.count(Site::Naillac, Label::Crack) == 1);
  for (auto site : {Site::Naillac, Site::StNikolaos, Site::Random})
    for (auto label : {Label::Crack, Label::NoCrack})
      if (!(site == Site::Naillac && label == Label::Crack))
        CHECK(m.count(site, label) == 0);
  CHECK(m.table1_mismatches().size() == 5);  // every other cell is short
}

TEST_CASE("missing root is a configuration error") {
  CHECK_THROWS_AS(load_manifest("/nonexistent/crackch"), ConfigError);
}

TEST_CASE("unknown site directory is a configuration error") {
  TempDir tmp("badsite");
  std::filesystem::create_directories(tmp.path / "Atlantis" / "Crack");
  CHECK_THROWS_AS(load_manifest(tmp.path), ConfigError);
}

TEST_CASE("undecodable files land in the skip report, not silently dropped") {
  TempDir tmp("skip");
  testutil::write_dataset_tree(tmp.path, {1, 1, 0, 0, 0, 0});
  std::ofstream(tmp.path / "Naillac" / "Crack" / "broken.png") << "not an image";
  DatasetManifest m = load_manifest(tmp.path);
  CHECK(m.total() == 2);
  REQUIRE(m.skipped.size() == 1);
  CHECK(m.skipped[0].path.filename() == "broken.png");

  write_skip_report(m, tmp.path / "ingest_skipped.txt");
  std::ifstream rep(tmp.path / "ingest_skipped.txt");
  std::string line;
  std::getline(rep, line);
  CHECK(line.find("broken.png") != std::string::npos);
}

TEST_CASE("manifest.json override wins over the directory layout") {
  TempDir tmp("override");
  testutil::write_dataset_tree(tmp.path, {2, 1, 0, 0, 0, 0});
  // Point the override at one image only, with a deliberately different site.
  std::ofstream(tmp.path / "manifest.json")
      << R"([{"path": "Naillac/Crack/img_0.png", "label": "Crack", "site": "Random"}])";
  DatasetManifest m = load_manifest(tmp.path);
  CHECK(m.total() == 1);
  CHECK(m.count(Site::Random, Label::Crack) == 1);
}

TEST_CASE("site-based splits partition by provenance, independent of seed") {
  TempDir tmp("splits");
  testutil::write_dataset_tree(tmp.path, testutil::table1_counts());
  DatasetManifest m = load_manifest(tmp.path);

  SUBCASE("case 2: test is exactly StNikolaos") {
    TestCaseSplit s1 = make_split(m, 2, 1);
    TestCaseSplit s2 = make_split(m, 2, 999);
    CHECK(s1.test.size() == 24);
    CHECK(s1.train.size() == 74);
    for (const auto& s : s1.test) CHECK(s.site == Site::StNikolaos);
    for (const auto& s : s1.train) CHECK(s.site != Site::StNikolaos);
    // Membership independent of seed.
    REQUIRE(s1.test.size() == s2.test.size());
    for (size_t i = 0; i < s1.test.size(); ++i)
      CHECK(s1.test[i].path == s2.test[i].path);
  }

  SUBCASE("case 3: test is exactly Naillac") {
    TestCaseSplit s = make_split(m, 3, 7);
    int crack = 0, nocrack = 0;
    for (const auto& t : s.test) {
      CHECK(t.site == Site::Naillac);
      (t.label == Label::Crack ? crack : nocrack)++;
    }
    CHECK(crack == 22);
    CHECK(nocrack == 14);
  }

  SUBCASE("cases 4/5 swap the HYPERION and Random pools") {
    TestCaseSplit c4 = make_split(m, 4, 0);
    for (const auto& s : c4.train) CHECK(s.site != Site::Random);
    for (const auto& s : c4.test) CHECK(s.site == Site::Random);
    TestCaseSplit c5 = make_split(m, 5, 0);
    for (const auto& s : c5.train) CHECK(s.site == Site::Random);
    for (const auto& s : c5.test) CHECK(s.site != Site::Random);
    CHECK(c4.train.size() == c5.test.size());
  }
}

TEST_CASE("shuffled cases draw the published counts and stay disjoint") {
  TempDir tmp("shuffled");
  // 111-image pool (56 Crack / 55 NoCrack), the mixed-pool shape the two
  // shuffled cases presume.
  testutil::write_dataset_tree(tmp.path, {22, 14, 8, 16, 26, 25});
  DatasetManifest m = load_manifest(tmp.path);
  REQUIRE(m.count(Label::Crack) == 56);
  REQUIRE(m.count(Label::NoCrack) == 55);

  for (int case_id : {0, 1}) {
    const CaseCounts want = table2_counts(case_id);
    TestCaseSplit s = make_split(m, case_id, 42);
    int tc = 0, tn = 0, ec = 0, en = 0;
    for (const auto& x : s.train) (x.label == Label::Crack ? tc : tn)++;
    for (const auto& x : s.test) (x.label == Label::Crack ? ec : en)++;
    CAPTURE(case_id);
    CHECK(tc == want.train_crack);
    CHECK(tn == want.train_nocrack);
    CHECK(ec == want.test_crack);
    CHECK(en == want.test_nocrack);

    std::set<std::string> train_paths;
    for (const auto& x : s.train) train_paths.insert(x.path.string());
    for (const auto& x : s.test) CHECK(!train_paths.contains(x.path.string()));
  }
}

TEST_CASE("same seed reproduces the same shuffled split") {
  TempDir tmp("determinism");
  testutil::write_dataset_tree(tmp.path, {22, 14, 8, 16, 26, 25});
  DatasetManifest m = load_manifest(tmp.path);
  TestCaseSplit a = make_split(m, 0, 123);
  TestCaseSplit b = make_split(m, 0, 123);
  REQUIRE(a.train.size() == b.train.size());
  for (size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].path == b.train[i].path);
  for (size_t i = 0; i < a.test.size(); ++i) CHECK(a.test[i].path == b.test[i].path);

  TestCaseSplit c = make_split(m, 0, 124);
  bool any_diff = false;
  for (size_t i = 0; i < a.train.size(); ++i)
    if (a.train[i].path != c.train[i].path) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("insufficient samples raise a deficit error naming the shortfall") {
  TempDir tmp("deficit");
  // Published Table-1 shape: only 42 NoCrack, case 0 needs 35 + 20 = 55.
  testutil::write_dataset_tree(tmp.path, testutil::table1_counts());
  DatasetManifest m = load_manifest(tmp.path);
  try {
    make_split(m, 0, 1);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("NoCrack") != std::string::npos);
    CHECK(msg.find("deficit") != std::string::npos);
  }
}

TEST_CASE("split json round-trips") {
  TempDir tmp("splitjson");
  testutil::write_dataset_tree(tmp.path, {3, 3, 2, 2, 2, 2});
  DatasetManifest m = load_manifest(tmp.path);
  TestCaseSplit s = make_split(m, 2, 5);
  const auto file = tmp.path / "split_case2.json";
  write_split_json(s, file);
  TestCaseSplit r = read_split_json(file);
  CHECK(r.case_id == 2);
  REQUIRE(r.train.size() == s.train.size());
  REQUIRE(r.test.size() == s.test.size());
  for (size_t i = 0; i < s.test.size(); ++i) {
    CHECK(r.test[i].path == s.test[i].path);
    CHECK(r.test[i].label == s.test[i].label);
    CHECK(r.test[i].site == s.test[i].site);
  }
}

TEST_CASE("invalid case id is rejected") {
  CHECK_THROWS_AS(table2_counts(6), ConfigError);
  CHECK_THROWS_AS(table2_counts(-1), ConfigError);
}

TEST_SUITE_END();
