#pragma once

// Jyutping syllable structure and the two phone schemes built on it:
// Initial-Final (IF), where the tone rides on a monolithic final, and
// Onset-Nucleus-Coda (ONC), where the final is split and both the nucleus and
// the coda carry the tone.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace yueasr {

inline constexpr std::size_t kOnsetCount = 20;  // including NULL
inline constexpr std::size_t kNucleusCount = 15;
inline constexpr std::size_t kCodaCount = 9;  // non-null codas
inline constexpr std::size_t kFinalCount = 53;

/// Lexical tone, 1..6 in the LSHK system.
class Tone {
 public:
  explicit Tone(int value);
  int value() const { return value_; }
  auto operator<=>(const Tone&) const = default;

 private:
  int value_;
};

/// Onset and coda are empty strings when NULL; the nucleus never is.
struct Syllable {
  std::string onset;
  std::string nucleus;
  std::string coda;
  Tone tone{1};

  bool operator==(const Syllable&) const = default;
};

enum class Scheme { kIF, kONC };
enum class PhoneKind { kInitial, kFinal, kOnset, kNucleus, kCoda };

std::string_view scheme_name(Scheme s);
Scheme parse_scheme(std::string_view name);  // "if" / "onc", case-insensitive

/// One acoustic unit. Initials and onsets are toneless; finals, nuclei and
/// codas always carry a tone.
struct Phone {
  Scheme scheme = Scheme::kIF;
  PhoneKind kind = PhoneKind::kInitial;
  std::string base;
  std::optional<Tone> tone;

  /// Text label: bare for initials/onsets, `<base><tone>` for finals and
  /// nuclei, `_<base><tone>` for codas.
  std::string label() const;
  static Phone from_label(std::string_view label, Scheme scheme);

  auto operator<=>(const Phone& o) const { return label() <=> o.label(); }
  bool operator==(const Phone& o) const {
    return scheme == o.scheme && kind == o.kind && base == o.base &&
           tone == o.tone;
  }
};

using PhoneSeq = std::vector<Phone>;

/// Space-joined phone labels.
std::string join_labels(const PhoneSeq& phones);

/// Rewrites a coda into another, optionally only after listed nuclei.
struct MergeRule {
  std::string from_coda;  // "" for NULL
  std::string to_coda;
  std::optional<std::set<std::string>> nucleus_filter;
};

class MergeRuleSet {
 public:
  MergeRuleSet() = default;
  explicit MergeRuleSet(std::vector<MergeRule> rules);

  /// Parses a comma/semicolon separated list such as "t>k:aa|a|o;ng>n".
  /// Nucleus filters are `|` separated after a colon.
  static MergeRuleSet parse(std::string_view spec);

  const std::vector<MergeRule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

 private:
  std::vector<MergeRule> rules_;
};

/// Sound inventory loaded from a TSV file; immutable after construction.
class Inventory {
 public:
  static Inventory load(const std::filesystem::path& path);
  static Inventory from_text(std::string_view text);
  /// The inventory shipped with the library (data/inventory.tsv).
  static const Inventory& bundled();

  const std::set<std::string>& onsets() const { return onsets_; }  // "-" = NULL
  const std::set<std::string>& nuclei() const { return nuclei_; }
  const std::set<std::string>& codas() const { return codas_; }
  const std::map<std::string, std::pair<std::string, std::string>>& finals()
      const {
    return finals_;
  }

  /// Final spelled by (nucleus, coda), if the inventory has one.
  std::optional<std::string> final_of(const std::string& nucleus,
                                      const std::string& coda) const;

  Syllable parse(std::string_view jyutping) const;
  std::string render(const Syllable& syl) const;
  PhoneSeq to_if(const Syllable& syl) const;
  PhoneSeq to_onc(const Syllable& syl) const;
  PhoneSeq to_phones(const Syllable& syl, Scheme scheme) const;

  /// Rewrites the coda with the first matching rule. A rule matches when its
  /// from-coda equals the syllable's coda, the nucleus passes its filter and
  /// the resulting (nucleus, coda) is a final of this inventory.
  Syllable apply_merge(const Syllable& syl, const MergeRuleSet& rules) const;

 private:
  std::set<std::string> onsets_;
  std::set<std::string> nuclei_;
  std::set<std::string> codas_;
  std::map<std::string, std::pair<std::string, std::string>> finals_;
  std::map<std::pair<std::string, std::string>, std::string> final_by_parts_;
  std::vector<std::string> onsets_by_length_;  // longest first, NULL excluded
};

}  // namespace yueasr
