#include "streetsafe/personas.hpp"

#include <algorithm>
#include <filesystem>

#include "streetsafe/corpus.hpp"
#include "streetsafe/error.hpp"
#include "streetsafe/util.hpp"

namespace streetsafe::personas {

namespace {

constexpr std::string_view kNeutralTemplate =
    R"(Your task is to classify the area in the image as "Safe" or "Unsafe" based on visible indicators of security, safety, and livability from an individual perspective.
Avoid assuming safety unless there is clear, strong, and visible evidence supporting a "Safe" classification. If prominent risks are observed, prioritize these concerns in your assessment and lean towards an "Unsafe" classification. Also, consider the cumulative impact of multiple negative indicators on the overall perception of safety.
Provide your classification along with 3 specific keywords and a reason that accurately reflect the observed evidence justifying your choice. Organize your response in a JSON object with the following keys:
{
    "Classification": (your answer),
    "Keywords": (the 3 keywords),
    "Reason": (sentence that explains your choices)
}
)";

constexpr std::string_view kNationalityTemplate =
    R"(Assume the role of a person born and raised in {COUNTRY}. Your task is to classify the area in the image as "Safe" or "Unsafe" based on visible indicators of security, safety, and livability from the perspective of someone of your nationality.

Avoid assuming safety unless there is clear, strong, and visible evidence supporting a "Safe" classification. If prominent risks are observed, prioritize these concerns in your assessment and lean towards an "Unsafe" classification.
Consider how someone from your nationality would perceive the area. Also, consider the cumulative impact of multiple negative indicators on the overall perception of safety.

Provide your classification along with 3 specific keywords and a reason that accurately reflects the observed evidence justifying your choice. Organize your response in a JSON object with the following keys:
{
"Classification": (your answer)

"Keywords": (the 3 keywords)

"Reason": (sentence that explains your choices)
}
)";

constexpr std::string_view kGenderTemplate =
    R"(Assume the role of a {GENDER} person. Your task is to classify the area in the image as "Safe" or "Unsafe" based on visible indicators of security, safety, and livability from the perspective of someone of your gender.

Avoid assuming safety unless there is clear, strong, and visible evidence supporting a "Safe" classification. If prominent risks are observed, prioritize these concerns in your assessment and lean towards an "Unsafe" classification.
Consider how someone of your gender would perceive the area. Also, consider the cumulative impact of multiple negative indicators on the overall perception of safety.

Provide your classification along with 3 specific keywords and a reason that accurately reflects the observed evidence justifying your choice. Organize your response in a JSON object with the following keys:
{
"Classification": (your answer)

"Keywords": (the 3 keywords)

"Reason": (sentence that explains your choices)
}
)";

constexpr std::string_view kAgeTemplate =
    R"(Assume the role of a {AGE} person. Your task is to classify the area in the image as "Safe" or "Unsafe" based on visible indicators of security, safety, and livability from the perspective of someone of your age.

Avoid assuming safety unless there is clear, strong, and visible evidence supporting a "Safe" classification. If prominent risks are observed, prioritize these concerns in your assessment and lean towards an "Unsafe" classification.
Consider how someone of your age would perceive the area. Also, consider the cumulative impact of multiple negative indicators on the overall perception of safety.

Provide your classification along with 3 specific keywords and a reason that accurately reflects the observed evidence justifying your choice. Organize your response in a JSON object with the following keys:
{
"Classification": (your answer)

"Keywords": (the 3 keywords)

"Reason": (sentence that explains your choices)
}
)";

std::string country_slug(std::string_view country) {
  std::string s;
  for (char c : util::to_lower_ascii(country)) s.push_back(c == ' ' ? '-' : c);
  return s;
}

std::string_view gender_word(Gender g) { return g == Gender::Male ? "male" : "female"; }

std::string_view age_word(AgeGroup a) {
  switch (a) {
    case AgeGroup::Young: return "young";
    case AgeGroup::Middle: return "middle-aged";
    case AgeGroup::Elderly: return "elderly";
  }
  return "";
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

const std::vector<std::string>& nations() {
  static const std::vector<std::string> list = corpus::CityNationTable::bundled().nations();
  return list;
}

Persona neutral() {
  Persona p;
  p.id = "neutral";
  p.kind = PersonaKind::Neutral;
  p.display_name = "Neutral";
  return p;
}

Persona nationality(std::string_view country) {
  for (const auto& n : nations()) {
    if (util::to_lower_ascii(n) == util::to_lower_ascii(util::trim(country))) {
      Persona p;
      p.kind = PersonaKind::Nationality;
      p.country = n;
      p.id = "nat:" + country_slug(n);
      p.display_name = n;
      return p;
    }
  }
  throw UsageError("unknown nationality `" + std::string(country) + "`");
}

Persona gender(Gender g) {
  Persona p;
  p.kind = PersonaKind::Gender;
  p.gender = g;
  p.id = "gender:" + std::string(gender_word(g));
  p.display_name = g == Gender::Male ? "Male" : "Female";
  return p;
}

Persona age(AgeGroup a) {
  Persona p;
  p.kind = PersonaKind::Age;
  p.age = a;
  switch (a) {
    case AgeGroup::Young: p.id = "age:young"; p.display_name = "Young"; break;
    case AgeGroup::Middle: p.id = "age:middle"; p.display_name = "Middle-aged"; break;
    case AgeGroup::Elderly: p.id = "age:elderly"; p.display_name = "Elderly"; break;
  }
  return p;
}

const std::vector<Persona>& catalog() {
  static const std::vector<Persona> list = [] {
    std::vector<Persona> v{neutral()};
    for (const auto& n : nations()) v.push_back(nationality(n));
    v.push_back(gender(Gender::Male));
    v.push_back(gender(Gender::Female));
    v.push_back(age(AgeGroup::Young));
    v.push_back(age(AgeGroup::Middle));
    v.push_back(age(AgeGroup::Elderly));
    return v;
  }();
  return list;
}

Persona from_id(std::string_view id) {
  for (const auto& p : catalog()) {
    if (p.id == id) return p;
  }
  throw UsageError("unknown persona id `" + std::string(id) + "`");
}

std::vector<Persona> select(std::string_view spec) {
  std::string s = util::trim(spec);
  if (s.empty()) throw UsageError("empty persona selection");
  if (util::to_lower_ascii(s) == "all") return catalog();
  std::vector<std::string> wanted;
  for (const auto& part : util::split_csv_line(s)) {
    std::string id = util::trim(part);
    if (!id.empty()) wanted.push_back(from_id(id).id);
  }
  std::vector<Persona> out;
  for (const auto& p : catalog()) {
    if (std::find(wanted.begin(), wanted.end(), p.id) != wanted.end()) out.push_back(p);
  }
  return out;
}

const TemplateSet& TemplateSet::embedded() {
  static const TemplateSet set{std::string(kNeutralTemplate), std::string(kNationalityTemplate),
                               std::string(kGenderTemplate), std::string(kAgeTemplate),
                               std::string(kEmbeddedTemplateVersion)};
  return set;
}

TemplateSet TemplateSet::load_overrides(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw UsageError("template directory not found: " + dir);
  TemplateSet set = embedded();
  bool overridden = false;
  auto take = [&](const char* name, std::string& slot) {
    fs::path p = fs::path(dir) / name;
    if (fs::exists(p)) {
      slot = util::read_file(p.string());
      overridden = true;
    }
  };
  take("neutral.txt", set.neutral);
  take("nationality.txt", set.nationality);
  take("gender.txt", set.gender);
  take("age.txt", set.age);
  if (overridden) {
    set.version = "override-" +
                  util::sha256_hex(set.neutral + '\0' + set.nationality + '\0' + set.gender + '\0' + set.age).substr(0, 12);
  }
  return set;
}

PromptText render_prompt(const Persona& persona, const TemplateSet& templates) {
  std::string body;
  switch (persona.kind) {
    case PersonaKind::Neutral:
      body = templates.neutral;
      break;
    case PersonaKind::Nationality: {
      // Re-validate so hand-built personas cannot smuggle in other countries.
      Persona checked = nationality(persona.country);
      body = templates.nationality;
      replace_all(body, "{COUNTRY}", checked.country);
      break;
    }
    case PersonaKind::Gender:
      body = templates.gender;
      replace_all(body, "{GENDER}", gender_word(persona.gender));
      break;
    case PersonaKind::Age:
      body = templates.age;
      replace_all(body, "{AGE}", age_word(persona.age));
      break;
  }
  return PromptText{std::move(body), persona.id};
}

}  // namespace streetsafe::personas
