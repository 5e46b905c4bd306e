#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "streetsafe/runstore.hpp"

using namespace streetsafe;
using namespace streetsafe::runstore;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

Assessment make(const std::string& run, const std::string& persona, const std::string& image, Label label) {
  Assessment a;
  a.run_id = run;
  a.persona_id = persona;
  a.image_id = image;
  a.classification = label;
  a.keywords = {"quiet", "clean", "residential"};
  a.reason = "Line one, with \"quotes\".";
  a.raw_response = "{\"Classification\":\"Safe\"}\n";
  a.latency = std::chrono::milliseconds{12};
  a.attempt_count = 1;
  return a;
}

RunManifest manifest(const std::string& id, int replicate, const std::string& fp = "fp") {
  RunManifest m;
  m.run_id = id;
  m.replicate_index = replicate;
  m.backend = "mock:7";
  m.template_version = "v";
  m.corpus_fingerprint = fp;
  m.personas = {"neutral"};
  m.started_at = utc_now();
  return m;
}

// Fabricated run set: `unsafe` of `total` assessments per (run, city).
RunData fabricate(const std::string& run, int replicate, const std::vector<std::tuple<std::string, int, int>>& cities,
                  ImageCityIndex& index) {
  RunData d{manifest(run, replicate), {}};
  for (const auto& [city, unsafe, total] : cities) {
    for (int i = 0; i < total; ++i) {
      std::string id = city + std::to_string(i);
      index[id] = city;
      d.assessments.push_back(make(run, "neutral", id, i < unsafe ? Label::Unsafe : Label::Safe));
    }
  }
  return d;
}

}  // namespace

TEST_CASE("assessment json round trip") {
  auto a = make("r", "nat:brazil", "img", Label::Unsafe);
  CHECK(assessment_from_json(to_json_line(a)) == a);
  CHECK(to_json_line(a).find('\n') == std::string::npos);
}

TEST_CASE("append, read back, conflicts") {
  TempDir dir("streetsafe_store_test");
  RunStore store(dir.path.string());
  store.write_manifest(manifest("run-r1", 1));
  CHECK(store.read_manifest("run-r1") == manifest("run-r1", 1));
  {
    RunWriter w(store, "run-r1");
    w.append(make("run-r1", "neutral", "a", Label::Safe));
    CHECK_THROWS_AS(w.append(make("run-r1", "neutral", "a", Label::Unsafe)), ConflictError);
    for (int i = 0; i < 999; ++i) w.append(make("run-r1", "neutral", "img" + std::to_string(i), Label::Unsafe));
    CHECK(w.size() == 1000);
  }
  auto back = store.read_assessments("run-r1");
  REQUIRE(back.size() == 1000);
  CHECK(back[0] == make("run-r1", "neutral", "a", Label::Safe));

  RunWriter reopened(store, "run-r1");
  CHECK(reopened.contains("neutral", "img5"));
  CHECK_FALSE(reopened.contains("neutral", "img5000"));
  CHECK_THROWS_AS(reopened.append(make("run-r1", "neutral", "img5", Label::Safe)), ConflictError);
}

TEST_CASE("a torn trailing line is discarded, earlier lines kept") {
  TempDir dir("streetsafe_torn_test");
  RunStore store(dir.path.string());
  store.write_manifest(manifest("r", 1));
  {
    RunWriter w(store, "r");
    w.append(make("r", "neutral", "a", Label::Safe));
    w.append(make("r", "neutral", "b", Label::Safe));
  }
  {
    std::ofstream out(store.assessments_path("r"), std::ios::app);
    out << R"({"run_id":"r","persona_id":"neutral","image_id":"c","classif)";
  }
  CHECK(store.read_assessments("r").size() == 2);
  RunWriter w(store, "r");
  CHECK(w.size() == 2);
  w.append(make("r", "neutral", "c", Label::Unsafe));
  auto back = store.read_assessments("r");
  REQUIRE(back.size() == 3);
  CHECK(back[2].image_id == "c");
}

TEST_CASE("replicate discovery and fingerprint checks") {
  TempDir dir("streetsafe_sets_test");
  RunStore store(dir.path.string());
  store.write_manifest(manifest("exp-r2", 2));
  store.write_manifest(manifest("exp-r1", 1));
  store.write_manifest(manifest("exp-r10", 10));
  store.write_manifest(manifest("expx-r1", 1));
  store.write_manifest(manifest("other-r1", 1, "different"));
  CHECK(replicate_ids(store, "exp") == std::vector<std::string>{"exp-r1", "exp-r2", "exp-r10"});
  auto ids = replicate_ids(store, "exp");
  auto set = load_run_set(store, ids);
  CHECK(set.runs.size() == 3);
  CHECK(set.runs[2].manifest.replicate_index == 10);
  std::vector<std::string> mixed{"exp-r1", "other-r1"};
  CHECK_THROWS_AS(load_run_set(store, mixed), DataError);
  std::vector<std::string> missing{"nope"};
  CHECK_THROWS_AS(load_run_set(store, missing), DataError);
}

TEST_CASE("unsafe_rate examples") {
  ImageCityIndex index;
  RunSet one{{fabricate("r1", 1, {{"Oslo", 3, 8}, {"Lima", 0, 4}}, index)}};
  auto oslo = unsafe_rate(one, index, "neutral", CityFilter::only("Oslo"));
  CHECK(oslo.unsafe_percent == 37.5);
  CHECK(oslo.sample_count == 8);
  CHECK(unsafe_rate(one, index, "neutral", CityFilter::only("Lima")).unsafe_percent == 0.0);
  CHECK_THROWS_AS(unsafe_rate(one, index, "nat:peru", CityFilter::only("Lima")), DataError);

  ImageCityIndex idx2;
  RunSet two{{fabricate("r1", 1, {{"Oslo", 3, 10}}, idx2), fabricate("r2", 2, {{"Oslo", 4, 10}}, idx2)}};
  auto rate = unsafe_rate(two, idx2, "neutral", CityFilter::only("Oslo"));
  CHECK(rate.unsafe_percent == doctest::Approx(35.0));
  CHECK(rate.replicate_spread == doctest::Approx(7.0710678118).epsilon(1e-10));
  CHECK(rate.sample_count == 20);
}

TEST_CASE("pooled filters weight by count; ALL weights cities equally") {
  ImageCityIndex index;
  RunSet set{{fabricate("r1", 1, {{"Oslo", 3, 8}, {"Lima", 1, 2}, {"Rome", 5, 5}}, index)}};
  auto pooled = unsafe_rate(set, index, "neutral", CityFilter{{"Oslo", "Lima"}, false});
  auto oslo = unsafe_rate(set, index, "neutral", CityFilter::only("Oslo"));
  auto lima = unsafe_rate(set, index, "neutral", CityFilter::only("Lima"));
  CHECK(pooled.unsafe_percent ==
        doctest::Approx((oslo.unsafe_percent * 8 + lima.unsafe_percent * 2) / 10).epsilon(1e-12));
  auto all = unsafe_rate(set, index, "neutral", CityFilter::every_city());
  CHECK(all.city == "ALL");
  CHECK(all.unsafe_percent == doctest::Approx((37.5 + 50.0 + 100.0) / 3).epsilon(1e-12));
  CHECK(all.sample_count == 15);
}

TEST_CASE("export lists every assessment") {
  ImageCityIndex index;
  RunSet set{{fabricate("r1", 1, {{"Oslo", 1, 2}}, index)}};
  std::ostringstream out;
  export_assessments(out, set, index);
  auto text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("r1,neutral,Oslo0,Oslo,Unsafe,quiet,clean,residential,\"Line one, with \"\"quotes\"\".\",1,12") !=
        std::string::npos);
}
