#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace streetsafe::personas {

enum class PersonaKind { Neutral, Nationality, Gender, Age };
enum class Gender { Male, Female };
enum class AgeGroup { Young, Middle, Elderly };

struct Persona {
  std::string id;
  PersonaKind kind = PersonaKind::Neutral;
  std::string display_name;
  std::string country;  // Nationality only
  Gender gender = Gender::Male;
  AgeGroup age = AgeGroup::Young;

  friend bool operator==(const Persona&, const Persona&) = default;
};

/// The 32 nations of the Place Pulse 2.0 city mapping, alphabetical.
const std::vector<std::string>& nations();

Persona neutral();
/// Throws UsageError when the country is not one of nations().
Persona nationality(std::string_view country);
Persona gender(Gender g);
Persona age(AgeGroup a);

/// neutral, 32 nationalities, 2 genders, 3 ages, in that order.
const std::vector<Persona>& catalog();

/// Inverse of Persona::id. Throws UsageError for unknown slugs.
Persona from_id(std::string_view id);

/// Parses "all" or a comma-separated id list; order follows the catalog.
std::vector<Persona> select(std::string_view spec);

inline constexpr std::array<std::string_view, 3> kSchemaKeys{"Classification", "Keywords", "Reason"};

struct PromptText {
  std::string body;
  std::string persona_id;
};

/// One body per persona kind with {COUNTRY}, {GENDER} and {AGE} slots.
struct TemplateSet {
  std::string neutral;
  std::string nationality;
  std::string gender;
  std::string age;
  std::string version;

  /// Templates as printed in the study's prompt tables.
  static const TemplateSet& embedded();
  /// Reads neutral.txt, nationality.txt, gender.txt and age.txt from `dir`;
  /// missing files fall back to the embedded text.
  static TemplateSet load_overrides(const std::string& dir);
};

inline constexpr std::string_view kEmbeddedTemplateVersion = "pp2-persona-v1";

PromptText render_prompt(const Persona& persona, const TemplateSet& templates = TemplateSet::embedded());

}  // namespace streetsafe::personas
