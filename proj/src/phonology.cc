#include "yueasr/phonology.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "inventory_data.h"
#include "yueasr/error.h"

namespace yueasr {

namespace {

const std::string kNull = "-";

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string null_to_empty(const std::string& s) { return s == kNull ? "" : s; }

void check_count(const char* what, std::size_t got, std::size_t want) {
  if (got != want)
    throw Error(std::string("inventory cardinality mismatch in ") + what +
                ": expected " + std::to_string(want) + ", found " +
                std::to_string(got));
}

}  // namespace

Tone::Tone(int value) : value_(value) {
  if (value < 1 || value > 6)
    throw SyllableError(SyllableError::Kind::kInvalidTone,
                        "tone must be in 1..6, got " + std::to_string(value));
}

std::string_view scheme_name(Scheme s) { return s == Scheme::kIF ? "IF" : "ONC"; }

Scheme parse_scheme(std::string_view name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(c));
  if (lower == "if") return Scheme::kIF;
  if (lower == "onc") return Scheme::kONC;
  throw Error("unknown phone scheme '" + std::string(name) + "'");
}

std::string Phone::label() const {
  std::string out = kind == PhoneKind::kCoda ? "_" + base : base;
  if (tone) out += static_cast<char>('0' + tone->value());
  return out;
}

Phone Phone::from_label(std::string_view label, Scheme scheme) {
  if (label.empty()) throw Error("empty phone label");
  Phone p;
  p.scheme = scheme;
  std::string_view body = label;
  const char last = body.back();
  if (last >= '0' && last <= '9') {
    p.tone = Tone(last - '0');
    body.remove_suffix(1);
  }
  if (scheme == Scheme::kIF) {
    p.kind = p.tone ? PhoneKind::kFinal : PhoneKind::kInitial;
  } else if (!body.empty() && body.front() == '_') {
    p.kind = PhoneKind::kCoda;
    body.remove_prefix(1);
  } else {
    p.kind = p.tone ? PhoneKind::kNucleus : PhoneKind::kOnset;
  }
  if (body.empty() || (p.kind == PhoneKind::kCoda && !p.tone))
    throw Error("malformed phone label '" + std::string(label) + "'");
  p.base = std::string(body);
  return p;
}

std::string join_labels(const PhoneSeq& phones) {
  std::string out;
  for (const auto& p : phones) {
    if (!out.empty()) out += ' ';
    out += p.label();
  }
  return out;
}

MergeRuleSet::MergeRuleSet(std::vector<MergeRule> rules)
    : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    if (r.from_coda == r.to_coda)
      throw Error("merge rule maps coda '" + r.from_coda + "' onto itself");
  }
}

MergeRuleSet MergeRuleSet::parse(std::string_view spec) {
  std::vector<MergeRule> rules;
  std::string normalized(spec);
  std::replace(normalized.begin(), normalized.end(), ',', ';');
  for (const auto& item : split(normalized, ';')) {
    const std::string rule_text = trim(item);
    if (rule_text.empty()) continue;
    const auto colon = rule_text.find(':');
    const std::string head = rule_text.substr(0, colon);
    const auto arrow = head.find('>');
    if (arrow == std::string::npos)
      throw Error("merge rule '" + rule_text + "' must look like from>to");
    MergeRule rule;
    rule.from_coda = null_to_empty(trim(head.substr(0, arrow)));
    rule.to_coda = null_to_empty(trim(head.substr(arrow + 1)));
    if (colon != std::string::npos) {
      std::set<std::string> filter;
      for (const auto& n : split(rule_text.substr(colon + 1), '|')) {
        if (!trim(n).empty()) filter.insert(trim(n));
      }
      rule.nucleus_filter = std::move(filter);
    }
    rules.push_back(std::move(rule));
  }
  return MergeRuleSet(std::move(rules));
}

Inventory Inventory::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open inventory file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

Inventory Inventory::from_text(std::string_view text) {
  enum class Section { kNone, kOnsets, kNuclei, kCodas, kFinals };
  Inventory inv;
  Section section = Section::kNone;
  std::size_t line_no = 0;
  std::vector<std::pair<std::string, std::size_t>> final_lines;

  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t == "#onsets") { section = Section::kOnsets; continue; }
    if (t == "#nuclei") { section = Section::kNuclei; continue; }
    if (t == "#codas") { section = Section::kCodas; continue; }
    if (t == "#finals") { section = Section::kFinals; continue; }
    if (t.empty() || t[0] == '#') continue;

    switch (section) {
      case Section::kNone:
        throw ParseError("record before any section header", line_no);
      case Section::kOnsets:
        if (!inv.onsets_.insert(t).second)
          throw ParseError("duplicate onset '" + t + "'", line_no);
        break;
      case Section::kNuclei:
        if (t == kNull) throw ParseError("nucleus cannot be NULL", line_no);
        if (!inv.nuclei_.insert(t).second)
          throw ParseError("duplicate nucleus '" + t + "'", line_no);
        break;
      case Section::kCodas:
        if (t == kNull) throw ParseError("NULL coda is implicit", line_no);
        if (!inv.codas_.insert(t).second)
          throw ParseError("duplicate coda '" + t + "'", line_no);
        break;
      case Section::kFinals: {
        auto fields = split(line, '\t');
        if (fields.size() != 3)
          throw ParseError("final line needs final<TAB>nucleus<TAB>coda",
                           line_no);
        for (auto& f : fields) f = trim(f);
        if (inv.finals_.count(fields[0]))
          throw ParseError("duplicate final '" + fields[0] + "'", line_no);
        inv.finals_[fields[0]] = {fields[1], null_to_empty(fields[2])};
        final_lines.emplace_back(fields[0], line_no);
        break;
      }
    }
  }

  for (const auto& [final, line] : final_lines) {
    const auto& [nucleus, coda] = inv.finals_[final];
    if (!inv.nuclei_.count(nucleus))
      throw ParseError("final '" + final + "' references unknown nucleus '" +
                           nucleus + "'",
                       line);
    if (!coda.empty() && !inv.codas_.count(coda))
      throw ParseError(
          "final '" + final + "' references unknown coda '" + coda + "'", line);
    auto [it, fresh] = inv.final_by_parts_.emplace(std::pair{nucleus, coda}, final);
    if (!fresh)
      throw ParseError("finals '" + it->second + "' and '" + final +
                           "' share one decomposition",
                       line);
  }

  check_count("onsets", inv.onsets_.size(), kOnsetCount);
  check_count("nuclei", inv.nuclei_.size(), kNucleusCount);
  check_count("codas", inv.codas_.size(), kCodaCount);
  check_count("finals", inv.finals_.size(), kFinalCount);
  if (!inv.onsets_.count(kNull))
    throw Error("inventory onsets must list the NULL onset '-'");

  for (const auto& o : inv.onsets_) {
    if (o != kNull) inv.onsets_by_length_.push_back(o);
  }
  std::stable_sort(inv.onsets_by_length_.begin(), inv.onsets_by_length_.end(),
                   [](const std::string& a, const std::string& b) {
                     return a.size() > b.size();
                   });
  return inv;
}

const Inventory& Inventory::bundled() {
  static const Inventory inv = from_text(kBundledInventoryTsv);
  return inv;
}

std::optional<std::string> Inventory::final_of(const std::string& nucleus,
                                               const std::string& coda) const {
  auto it = final_by_parts_.find({nucleus, coda});
  if (it == final_by_parts_.end()) return std::nullopt;
  return it->second;
}

Syllable Inventory::parse(std::string_view jyutping) const {
  using Kind = SyllableError::Kind;
  if (jyutping.empty()) throw SyllableError(Kind::kEmptyInput, "empty syllable");
  const char digit = jyutping.back();
  if (digit < '0' || digit > '9')
    throw SyllableError(Kind::kInvalidTone, "syllable '" + std::string(jyutping) +
                                                "' does not end in a tone digit");
  if (digit < '1' || digit > '6')
    throw SyllableError(Kind::kInvalidTone, "syllable '" + std::string(jyutping) +
                                                "' has tone outside 1..6");
  const std::string body(jyutping.substr(0, jyutping.size() - 1));
  if (body.empty())
    throw SyllableError(Kind::kUnknownSyllable, "syllable has no segments");

  Syllable syl;
  syl.tone = Tone(digit - '0');
  auto take_final = [&](const std::string& onset, const std::string& rest) {
    auto it = finals_.find(rest);
    if (it == finals_.end()) return false;
    syl.onset = onset;
    syl.nucleus = it->second.first;
    syl.coda = it->second.second;
    return true;
  };
  // A body that is itself a final is onsetless (covers syllabic m / ng).
  if (take_final("", body)) return syl;
  for (const auto& onset : onsets_by_length_) {
    if (body.size() > onset.size() && body.compare(0, onset.size(), onset) == 0 &&
        take_final(onset, body.substr(onset.size())))
      return syl;
  }
  throw SyllableError(Kind::kUnknownSyllable,
                      "unknown syllable '" + std::string(jyutping) + "'");
}

std::string Inventory::render(const Syllable& syl) const {
  auto f = final_of(syl.nucleus, syl.coda);
  if (!f)
    throw Error("no final for nucleus '" + syl.nucleus + "' and coda '" +
                syl.coda + "'");
  return syl.onset + *f + static_cast<char>('0' + syl.tone.value());
}

PhoneSeq Inventory::to_if(const Syllable& syl) const {
  PhoneSeq out;
  if (!syl.onset.empty())
    out.push_back({Scheme::kIF, PhoneKind::kInitial, syl.onset, std::nullopt});
  auto f = final_of(syl.nucleus, syl.coda);
  if (!f)
    throw Error("no final for nucleus '" + syl.nucleus + "' and coda '" +
                syl.coda + "'");
  out.push_back({Scheme::kIF, PhoneKind::kFinal, *f, syl.tone});
  return out;
}

PhoneSeq Inventory::to_onc(const Syllable& syl) const {
  PhoneSeq out;
  if (!syl.onset.empty())
    out.push_back({Scheme::kONC, PhoneKind::kOnset, syl.onset, std::nullopt});
  out.push_back({Scheme::kONC, PhoneKind::kNucleus, syl.nucleus, syl.tone});
  if (!syl.coda.empty())
    out.push_back({Scheme::kONC, PhoneKind::kCoda, syl.coda, syl.tone});
  return out;
}

PhoneSeq Inventory::to_phones(const Syllable& syl, Scheme scheme) const {
  return scheme == Scheme::kIF ? to_if(syl) : to_onc(syl);
}

Syllable Inventory::apply_merge(const Syllable& syl,
                                const MergeRuleSet& rules) const {
  for (const auto& rule : rules.rules()) {
    if (rule.from_coda != syl.coda) continue;
    if (rule.nucleus_filter && !rule.nucleus_filter->count(syl.nucleus)) continue;
    if (!final_of(syl.nucleus, rule.to_coda)) continue;
    Syllable merged = syl;
    merged.coda = rule.to_coda;
    return merged;
  }
  return syl;
}

}  // namespace yueasr
