#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "streetsafe/error.hpp"
#include "streetsafe/personas.hpp"

using namespace streetsafe;
using namespace streetsafe::personas;

namespace {

// Shared sentences of every template body.
const char* kCore[] = {
    "Your task is to classify the area in the image as \"Safe\" or \"Unsafe\" based on visible indicators of "
    "security, safety, and livability",
    "Avoid assuming safety unless there is clear, strong, and visible evidence supporting a \"Safe\" classification.",
    "Also, consider the cumulative impact of multiple negative indicators on the overall perception of safety.",
    "Organize your response in a JSON object with the following keys:",
};

std::string first_sentence(const std::string& body) { return body.substr(0, body.find(". ") + 1); }

}  // namespace

TEST_CASE("catalog has 38 personas in a fixed order") {
  const auto& cat = catalog();
  REQUIRE(cat.size() == 38);
  CHECK(cat.front().kind == PersonaKind::Neutral);
  CHECK(nations().size() == 32);
  std::set<std::string> ids;
  for (const auto& p : cat) {
    ids.insert(p.id);
    CHECK(from_id(p.id) == p);
  }
  CHECK(ids.size() == 38);
  CHECK(cat[33].id == "gender:male");
  CHECK(cat[37].id == "age:elderly");
}

TEST_CASE("selection") {
  CHECK(select("all").size() == 38);
  auto s = select("age:young, neutral");
  REQUIRE(s.size() == 2);
  CHECK(s[0].id == "neutral");
  CHECK_THROWS_AS(select("nat:atlantis"), UsageError);
  CHECK_THROWS_AS(nationality("Atlantis"), UsageError);
}

TEST_CASE("rendered openings") {
  CHECK(render_prompt(neutral()).body.starts_with("Your task is to classify the area in the image"));
  CHECK(render_prompt(nationality("Brazil")).body.starts_with("Assume the role of a person born and raised in Brazil"));
  auto elderly = render_prompt(age(AgeGroup::Elderly)).body;
  CHECK(elderly.find("elderly person") != std::string::npos);
  CHECK(render_prompt(gender(Gender::Female)).body.starts_with("Assume the role of a female person."));
  CHECK(render_prompt(age(AgeGroup::Middle)).body.starts_with("Assume the role of a middle-aged person."));
}

TEST_CASE("every body carries the shared core and schema keys") {
  for (const auto& p : catalog()) {
    auto prompt = render_prompt(p);
    CHECK(prompt.persona_id == p.id);
    CHECK(prompt.body == render_prompt(p).body);
    CHECK(prompt.body.find('{' + std::string("COUNTRY}")) == std::string::npos);
    for (auto key : kSchemaKeys) CHECK(prompt.body.find("\"" + std::string(key) + "\"") != std::string::npos);
    for (const char* s : kCore) CHECK_MESSAGE(prompt.body.find(s) != std::string::npos, p.id << " lacks: " << s);
  }
}

TEST_CASE("bodies of one persona kind differ only in the opening sentence") {
  for (auto kind : {PersonaKind::Nationality, PersonaKind::Gender, PersonaKind::Age}) {
    std::string reference;
    for (const auto& p : catalog()) {
      if (p.kind != kind) continue;
      auto body = render_prompt(p).body;
      auto tail = body.substr(first_sentence(body).size());
      if (reference.empty()) reference = tail;
      // The identity word recurs in "someone of your nationality/gender/age", never the value itself.
      CHECK(tail == reference);
    }
  }
}

TEST_CASE("template overrides") {
  auto dir = std::filesystem::temp_directory_path() / "streetsafe_tpl_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "gender.txt") << "Be a {GENDER} person. Return Classification, Keywords, Reason.";
  auto t = TemplateSet::load_overrides(dir.string());
  CHECK(t.version.starts_with("override-"));
  CHECK(render_prompt(gender(Gender::Male), t).body == "Be a male person. Return Classification, Keywords, Reason.");
  CHECK(render_prompt(neutral(), t).body == render_prompt(neutral()).body);
  std::filesystem::remove_all(dir);
}
