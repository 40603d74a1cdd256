#pragma once

#include "normality/density.hpp"
#include "normality/dese.hpp"
#include "normality/error.hpp"
#include "normality/genprob.hpp"
#include "normality/rational.hpp"
#include "normality/scenarios/flipping.hpp"
#include "normality/scenarios/racing.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace normality {

// A line-oriented text format for models:
//
//   # comment
//   states: 1..7
//   evidence low = {1, 2, 3}
//   evidence high = {4, 5, 6, 7}
//   prior: 1=.2 2=.2 3=.1 4=.2 5=.1 6=.1 7=.1
//   question: finest
//   threshold: 1/2
//   rule: sufficiency
//   variant: stalnaker
//
// Infinite models come from named generators instead of `states:`:
//   generator: geometric depth=64     (flip until heads; evidence afterX)
//   generator: racing coins=10        (with question: exact|shape|total-tails|until-over|end-together)
//   generator: decay                  (with measuring: index|log)
// and continuous models from `density: gaussian mu=0 sigma=1`.

enum class Severity { Error, Warning };
enum class DiagnosticKind { Syntax, Model };

struct Diagnostic {
  std::size_t line = 0;
  std::size_t column = 0;
  Severity severity = Severity::Error;
  DiagnosticKind kind = DiagnosticKind::Syntax;
  std::string message;

  std::string format(std::string_view source) const {
    return std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
           (severity == Severity::Error ? "error" : "warning") + ": " + message;
  }
};

/// Listed members; `open_tail` adds every later state (and the truncated tail).
struct SetSpec {
  std::vector<std::string> members;
  bool open_tail = false;
  bool operator==(const SetSpec&) const = default;
};

using Params = std::vector<std::pair<std::string, std::string>>;

struct GeneratorSpec {
  std::string name;
  Params params;
  bool operator==(const GeneratorSpec&) const = default;
};

struct QuestionSpec {
  enum class Kind { Finest, Whole, Cells, Builtin };
  Kind kind = Kind::Finest;
  std::vector<std::pair<std::string, std::vector<std::string>>> cells;
  std::string builtin;
  bool operator==(const QuestionSpec&) const = default;
};

struct DensitySpec {
  std::string family;
  Params params;
  bool operator==(const DensitySpec&) const = default;
};

struct ModelDocument {
  std::vector<std::string> states;
  std::optional<GeneratorSpec> generator;
  std::vector<std::pair<std::string, SetSpec>> evidence;
  std::vector<std::pair<std::string, Rational>> prior;
  bool uniform_prior = false;
  QuestionSpec question;
  std::optional<Rational> threshold;
  std::optional<SufficiencyRule> rule;
  std::optional<KnowledgeVariant> variant;
  std::optional<DensitySpec> density;
  std::optional<Measuring> measuring;
  bool operator==(const ModelDocument&) const = default;
};

struct ParseResult {
  std::optional<ModelDocument> document;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return document.has_value(); }
  bool has_syntax_errors() const {
    return std::any_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) {
      return d.severity == Severity::Error && d.kind == DiagnosticKind::Syntax;
    });
  }
};

inline const char* to_string(SufficiencyRule r) {
  return r == SufficiencyRule::Sufficiency ? "sufficiency" : "sufficiency-plus";
}

inline const char* to_string(KnowledgeVariant v) {
  return v == KnowledgeVariant::Stalnakerian ? "stalnaker" : "williamson";
}

inline std::optional<SufficiencyRule> parse_rule(std::string_view s) {
  if (s == "sufficiency") return SufficiencyRule::Sufficiency;
  if (s == "sufficiency-plus" || s == "sufficiency+") return SufficiencyRule::SufficiencyPlus;
  return std::nullopt;
}

inline std::optional<KnowledgeVariant> parse_variant(std::string_view s) {
  if (s == "stalnaker" || s == "stalnakerian") return KnowledgeVariant::Stalnakerian;
  if (s == "williamson" || s == "williamsonian") return KnowledgeVariant::Williamsonian;
  return std::nullopt;
}

inline std::optional<scenarios::RacingQuestion> parse_racing_question(std::string_view s) {
  using Q = scenarios::RacingQuestion;
  if (s == "exact") return Q::ExactOutcome;
  if (s == "shape") return Q::OutcomeShape;
  if (s == "total-tails") return Q::TotalTails;
  if (s == "until-over") return Q::HowLongUntilOver;
  if (s == "end-together") return Q::HowManyEndTogether;
  return std::nullopt;
}

inline std::optional<scenarios::EndTogetherReading> parse_reading(std::string_view s) {
  using R = scenarios::EndTogetherReading;
  if (s == "max-simultaneous") return R::MaxSimultaneous;
  if (s == "final-together") return R::FinalTogether;
  if (s == "first-flip") return R::FirstFlip;
  return std::nullopt;
}

namespace detail {

struct Token {
  enum class Type { Word, Punct } type;
  std::string text;
  std::size_t column;  // 1-based
};

inline bool is_punct(char c) { return c == '{' || c == '}' || c == '=' || c == ',' || c == '@'; }

inline std::vector<Token> tokenize(std::string_view text, std::size_t first_column) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (is_punct(c)) {
      out.push_back(Token{Token::Type::Punct, std::string(1, c), first_column + i});
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != ' ' && text[j] != '\t' && text[j] != '\r' && !is_punct(text[j])) ++j;
      out.push_back(Token{Token::Type::Word, std::string(text.substr(i, j - i)), first_column + i});
      i = j;
    }
  }
  return out;
}

// Expands "a..b" over integers; other words pass through.
inline std::optional<std::vector<std::string>> expand_range(const std::string& word, std::string& error) {
  const auto dots = word.find("..");
  if (dots == std::string::npos) return std::vector<std::string>{word};
  auto integer = [](std::string_view s) -> std::optional<long> {
    if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return std::nullopt;
    return std::stol(std::string(s));
  };
  auto a = integer(std::string_view(word).substr(0, dots));
  auto b = integer(std::string_view(word).substr(dots + 2));
  if (!a || !b) {
    error = "range '" + word + "' needs integer ends (a..b)";
    return std::nullopt;
  }
  if (*a > *b) {
    error = "range '" + word + "' is empty";
    return std::nullopt;
  }
  if (*b - *a >= 100000) {
    error = "range '" + word + "' is too large";
    return std::nullopt;
  }
  std::vector<std::string> out;
  for (long v = *a; v <= *b; ++v) out.push_back(std::to_string(v));
  return out;
}

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, std::size_t line, std::size_t end_column, std::vector<Diagnostic>& diags)
      : tokens_(std::move(tokens)), line_(line), end_column_(end_column), diags_(diags) {}

  bool done() const { return pos_ >= tokens_.size(); }
  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < tokens_.size() ? &tokens_[pos_ + ahead] : nullptr;
  }
  std::size_t column() const { return done() ? end_column_ : tokens_[pos_].column; }
  std::size_t line() const { return line_; }

  bool at_punct(char c, std::size_t ahead = 0) const {
    auto t = peek(ahead);
    return t && t->type == Token::Type::Punct && t->text[0] == c;
  }
  bool at_word(std::size_t ahead = 0) const {
    auto t = peek(ahead);
    return t && t->type == Token::Type::Word;
  }

  bool accept(char c) {
    if (!at_punct(c)) return false;
    ++pos_;
    return true;
  }

  bool expect(char c, std::string_view what) {
    if (accept(c)) return true;
    error(column(), "expected '" + std::string(1, c) + "' " + std::string(what) + found());
    return false;
  }

  std::optional<Token> word(std::string_view what) {
    if (at_word()) return tokens_[pos_++];
    error(column(), "expected " + std::string(what) + found());
    return std::nullopt;
  }

  bool expect_end() {
    if (done()) return true;
    error(column(), "unexpected '" + tokens_[pos_].text + "'");
    return false;
  }

  void error(std::size_t col, std::string message, DiagnosticKind kind = DiagnosticKind::Syntax) {
    diags_.push_back(Diagnostic{line_, col, Severity::Error, kind, std::move(message)});
  }

 private:
  std::string found() const { return done() ? " at end of line" : ", found '" + tokens_[pos_].text + "'"; }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t line_;
  std::size_t end_column_;
  std::vector<Diagnostic>& diags_;
};

// Where each piece of the document came from, for semantic diagnostics.
struct SourceMap {
  struct Pos {
    std::size_t line = 1, column = 1;
  };
  Pos states, generator, prior, question, threshold, density, measuring;
  std::map<std::string, Pos> state_tokens;
  std::vector<Pos> evidence;                       // per evidence line
  std::vector<std::vector<Pos>> evidence_members;  // per member
  std::vector<Pos> prior_entries;
  std::vector<std::vector<Pos>> cell_members;
  std::map<std::string, Pos> params;
};

inline std::optional<SetSpec> parse_set(LineParser& p, std::vector<SourceMap::Pos>* positions) {
  if (!p.expect('{', "to open a set")) return std::nullopt;
  SetSpec set;
  while (!p.at_punct('}')) {
    if (set.open_tail) {
      p.error(p.column(), "'...' must end the set");
      return std::nullopt;
    }
    auto w = p.word("a state name, a range a..b or '...'");
    if (!w) return std::nullopt;
    if (w->text == "...") {
      if (set.members.empty()) {
        p.error(w->column, "'...' needs a state before it");
        return std::nullopt;
      }
      set.open_tail = true;
    } else {
      std::string err;
      auto items = expand_range(w->text, err);
      if (!items) {
        p.error(w->column, err);
        return std::nullopt;
      }
      for (auto& item : *items) {
        set.members.push_back(std::move(item));
        if (positions) positions->push_back({p.line(), w->column});
      }
    }
    if (!p.accept(',') && !p.at_punct('}')) {
      if (p.done()) {
        p.expect('}', "to close the set");
        return std::nullopt;
      }
      if (!p.at_word()) {
        p.expect('}', "to close the set");
        return std::nullopt;
      }
    }
  }
  p.accept('}');
  return set;
}

inline std::optional<Params> parse_params(LineParser& p, SourceMap& map) {
  Params params;
  while (!p.done()) {
    auto key = p.word("a parameter name");
    if (!key) return std::nullopt;
    if (!p.expect('=', "after parameter '" + key->text + "'")) return std::nullopt;
    auto value = p.word("a value for '" + key->text + "'");
    if (!value) return std::nullopt;
    for (const auto& [k, v] : params)
      if (k == key->text) {
        p.error(key->column, "duplicate parameter '" + key->text + "'");
        return std::nullopt;
      }
    params.emplace_back(key->text, value->text);
    map.params[key->text] = {p.line(), value->column};
    p.accept(',');
  }
  return params;
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xE ? 2 : (c >> 3) == 0x1E ? 3 : 99;
    if (extra == 99 || i + extra >= s.size() + (extra == 0 ? 1 : 0)) return false;
    for (std::size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    i += extra + 1;
  }
  return true;
}

inline const std::map<std::string, std::vector<std::string>>& generator_params() {
  static const std::map<std::string, std::vector<std::string>> known{
      {"geometric", {"depth"}}, {"racing", {"coins", "depth", "reading"}}, {"decay", {}}};
  return known;
}

inline const std::map<std::string, std::vector<std::string>>& density_params() {
  static const std::map<std::string, std::vector<std::string>> known{
      {"gaussian", {"mu", "sigma"}}, {"uniform", {"lo", "hi"}}, {"wrapped-normal", {"centre", "sigma"}}};
  return known;
}

inline std::optional<double> parse_real(const std::string& s) {
  if (s.empty() || s.size() > 64) return std::nullopt;
  if (auto r = parse_rational(s)) return to_double(*r);
  std::istringstream in(s);
  double v = 0;
  in >> v;
  if (!in || !in.eof() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<unsigned> parse_count(const std::string& s) {
  if (s.empty() || s.size() > 6 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return std::nullopt;
  return static_cast<unsigned>(std::stoul(s));
}

// Sizes the generators accept.
inline bool count_in_range(const std::string& gen, const std::string& key, unsigned v) {
  if (gen == "geometric") return v >= 2 && v <= scenarios::max_flipping_depth();
  if (key == "coins") return v >= 1 && v <= 64;
  return v >= 4 && v <= 4096;
}

inline std::string param_or(const Params& params, const std::string& key, const std::string& fallback) {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  return fallback;
}

// Cross-reference and value checks; all positioned.
inline void check_document(const ModelDocument& d, const SourceMap& map, std::vector<Diagnostic>& diags) {
  auto model_error = [&](SourceMap::Pos pos, std::string message) {
    diags.push_back(Diagnostic{pos.line, pos.column, Severity::Error, DiagnosticKind::Model, std::move(message)});
  };
  const bool continuous = d.density.has_value();
  const std::string gen = d.generator ? d.generator->name : "";

  if (d.generator && !d.states.empty()) model_error(map.generator, "give either 'states:' or 'generator:', not both");
  if (continuous && (d.generator || !d.states.empty()))
    model_error(map.density, "a density model takes no 'states:' or 'generator:'");
  if (!continuous && !d.generator && d.states.empty()) model_error(map.states, "no states (give 'states:', 'generator:' or 'density:')");

  if (d.generator) {
    const auto& known = generator_params();
    auto it = known.find(gen);
    if (it == known.end()) {
      model_error(map.generator, "unknown generator '" + gen + "' (geometric, racing or decay)");
    } else {
      for (const auto& [k, v] : d.generator->params) {
        auto pos = map.params.count(k) ? map.params.at(k) : map.generator;
        if (std::find(it->second.begin(), it->second.end(), k) == it->second.end())
          model_error(pos, "generator '" + gen + "' has no parameter '" + k + "'");
        else if (k == "reading" ? !parse_reading(v) : !parse_count(v))
          model_error(pos, "bad value '" + v + "' for '" + k + "'");
        else if (k != "reading" && !count_in_range(gen, k, *parse_count(v)))
          model_error(pos, "'" + k + "' " + v + " out of range for generator '" + gen + "'");
      }
    }
    if (!d.prior.empty() || d.uniform_prior) model_error(map.prior, "generated models fix their own prior");
    if (gen != "geometric" && !d.evidence.empty())
      model_error(map.evidence.front(), "generator '" + gen + "' fixes its own evidence");
    if (gen == "racing" && (d.question.kind != QuestionSpec::Kind::Builtin || !parse_racing_question(d.question.builtin)))
      model_error(map.question, "racing needs 'question: exact|shape|total-tails|until-over|end-together'");
    if (gen == "geometric" && (d.question.kind == QuestionSpec::Kind::Cells ||
                               (d.question.kind == QuestionSpec::Kind::Builtin && d.question.builtin != "more-flips")))
      model_error(map.question, "geometric models take 'question: finest', 'whole' or 'more-flips'");
    if (gen == "decay" && d.question.kind != QuestionSpec::Kind::Finest &&
        !(d.question.kind == QuestionSpec::Kind::Builtin &&
          (d.question.builtin == "from-now" || d.question.builtin == "from-creation")))
      model_error(map.question, "decay takes 'question: from-now' or 'from-creation'");
    if ((gen == "racing" || gen == "decay") && !d.threshold)
      model_error(map.generator, "generator '" + gen + "' needs a 'threshold:'");
  }
  if (d.measuring && gen != "decay") model_error(map.measuring, "'measuring:' applies to the decay generator only");

  if (continuous) {
    const auto& known = density_params();
    auto it = known.find(d.density->family);
    if (it == known.end()) {
      model_error(map.density, "unknown density '" + d.density->family + "' (gaussian, uniform or wrapped-normal)");
    } else {
      for (const auto& name : it->second)
        if (param_or(d.density->params, name, "").empty())
          model_error(map.density, "density '" + d.density->family + "' needs '" + name + "'");
      for (const auto& [k, v] : d.density->params) {
        auto pos = map.params.count(k) ? map.params.at(k) : map.density;
        if (std::find(it->second.begin(), it->second.end(), k) == it->second.end())
          model_error(pos, "density '" + d.density->family + "' has no parameter '" + k + "'");
        else if (!parse_real(v))
          model_error(pos, "bad number '" + v + "' for '" + k + "'");
      }
    }
    if (!d.threshold) model_error(map.density, "density models need a 'threshold:'");
    if (d.question.kind != QuestionSpec::Kind::Finest) model_error(map.question, "density models ask the finest question");
    if (!d.evidence.empty() || !d.prior.empty()) model_error(map.density, "density models take no evidence or prior");
  }

  if (d.threshold && (*d.threshold <= 0 || *d.threshold > 1))
    model_error(map.threshold, "threshold " + to_string(*d.threshold) + " outside (0, 1]");

  if (d.generator || continuous) {
    if (gen == "geometric")
      for (std::size_t i = 0; i < d.evidence.size(); ++i) {
        const auto& set = d.evidence[i].second;
        bool contiguous = !set.open_tail && !set.members.empty();
        for (std::size_t k = 0; contiguous && k < set.members.size(); ++k) {
          auto n = parse_count(set.members[k]);
          contiguous = n && *n >= 1 && (k == 0 || *n == *parse_count(set.members[k - 1]) + 1);
        }
        if (!contiguous)
          model_error(map.evidence[i], "extra evidence for geometric models must be a finite run {a..b} of flips");
      }
    return;
  }

  // Enumerated models.
  std::set<std::string> names;
  for (const auto& s : d.states)
    if (!names.insert(s).second) model_error(map.state_tokens.at(s), "duplicate state id '" + s + "'");
  if (d.evidence.empty()) model_error(map.states, "no evidence sets (add 'evidence NAME = {...}')");
  std::set<std::string> evidence_names;
  for (std::size_t i = 0; i < d.evidence.size(); ++i) {
    const auto& [name, set] = d.evidence[i];
    if (!evidence_names.insert(name).second) model_error(map.evidence[i], "duplicate evidence '" + name + "'");
    if (set.members.empty()) model_error(map.evidence[i], "evidence '" + name + "' is empty");
    if (set.open_tail) model_error(map.evidence[i], "'...' needs a generator; enumerated models are finite");
    for (std::size_t k = 0; k < set.members.size(); ++k)
      if (!names.count(set.members[k]))
        model_error(map.evidence_members[i][k], "evidence '" + name + "' names '" + set.members[k] + "', not a state");
  }
  std::map<std::string, Rational> prior;
  Rational sum = 0;
  if (d.uniform_prior) {
    for (const auto& s : d.states) prior[s] = Rational(1, static_cast<long>(std::max<std::size_t>(1, d.states.size())));
    sum = 1;
  }
  for (std::size_t i = 0; i < d.prior.size(); ++i) {
    const auto& [s, p] = d.prior[i];
    if (!names.count(s)) model_error(map.prior_entries[i], "prior for '" + s + "', not a state");
    else if (prior.count(s)) model_error(map.prior_entries[i], "second prior for '" + s + "'");
    if (p < 0) model_error(map.prior_entries[i], "negative prior for '" + s + "'");
    prior[s] = p;
    sum += p;
  }
  if (!d.prior.empty() || d.uniform_prior) {
    if (sum != 1) model_error(map.prior, "prior mass " + to_string(sum) + " ≠ 1");
  } else if (!d.states.empty()) {
    model_error(map.states, "no prior (add 'prior: s=p ...' or 'prior: uniform')");
  }
  if (!d.threshold) model_error(map.states, "no threshold (add 'threshold: t')");
  for (std::size_t i = 0; i < d.evidence.size(); ++i) {
    Rational m = 0;
    for (const auto& s : d.evidence[i].second.members)
      if (prior.count(s)) m += prior.at(s);
    if (!d.evidence[i].second.members.empty() && m == 0 && (!d.prior.empty() || d.uniform_prior))
      model_error(map.evidence[i], "evidence '" + d.evidence[i].first + "' has zero prior mass");
  }
  if (d.question.kind == QuestionSpec::Kind::Builtin)
    model_error(map.question, "unknown question '" + d.question.builtin + "' (finest, whole or label=states ...)");
  if (d.question.kind == QuestionSpec::Kind::Cells) {
    std::set<std::string> labelled, labels;
    for (std::size_t i = 0; i < d.question.cells.size(); ++i) {
      const auto& [label, members] = d.question.cells[i];
      if (!labels.insert(label).second) model_error(map.question, "answer '" + label + "' appears twice");
      for (std::size_t k = 0; k < members.size(); ++k) {
        auto pos = map.cell_members[i][k];
        if (!names.count(members[k])) model_error(pos, "answer '" + label + "' names '" + members[k] + "', not a state");
        else if (!labelled.insert(members[k]).second) model_error(pos, "state '" + members[k] + "' is in two answers");
      }
    }
    for (const auto& s : d.states)
      if (!labelled.count(s)) model_error(map.question, "state '" + s + "' is in no answer");
  }
}

}  // namespace detail

/// Parses a model document. Never throws; every failure is a diagnostic.
inline ParseResult parse_model(std::string_view text) {
  ParseResult result;
  auto& diags = result.diagnostics;
  if (!detail::valid_utf8(text)) {
    diags.push_back({1, 1, Severity::Error, DiagnosticKind::Syntax, "input is not valid UTF-8"});
    return result;
  }
  ModelDocument doc;
  detail::SourceMap map;
  std::set<std::string> seen_keys;
  bool prior_given = false;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (detail::trim(raw).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::size_t first = raw.find_first_not_of(" \t\r") + 1;
    const std::size_t end_col = raw.size() + 1;

    // evidence NAME = {...}
    if (raw.substr(first - 1).rfind("evidence", 0) == 0 &&
        (raw.size() == first + 7 || raw[first + 7] == ' ' || raw[first + 7] == '\t')) {
      detail::LineParser p(detail::tokenize(raw.substr(first + 7), first + 8), line_no, end_col, diags);
      auto name = p.word("an evidence name");
      std::vector<detail::SourceMap::Pos> positions;
      if (!name || !p.expect('=', "after the evidence name")) continue;
      auto set = detail::parse_set(p, &positions);
      if (!set || !p.expect_end()) continue;
      doc.evidence.emplace_back(name->text, std::move(*set));
      map.evidence.push_back({line_no, name->column});
      map.evidence_members.push_back(std::move(positions));
      continue;
    }

    const auto colon = raw.find(':');
    if (colon == std::string_view::npos) {
      diags.push_back({line_no, first, Severity::Error, DiagnosticKind::Syntax,
                       "expected 'key: value' or 'evidence NAME = {...}'"});
      continue;
    }
    const std::string key = detail::trim(raw.substr(0, colon));
    const std::size_t value_col = colon + 2;
    detail::LineParser p(detail::tokenize(raw.substr(colon + 1), value_col), line_no, end_col, diags);
    const detail::SourceMap::Pos here{line_no, first};

    static const std::set<std::string> single{"states",   "generator", "question", "threshold",
                                              "rule",     "variant",   "density",  "measuring"};
    if (single.count(key) && !seen_keys.insert(key).second) {
      p.error(first, "'" + key + "' given twice");
      continue;
    }

    if (key == "states") {
      map.states = here;
      while (!p.done()) {
        if (p.accept(',')) continue;
        auto w = p.word("a state name");
        if (!w) break;
        if (w->text == "...") {
          p.error(w->column, "'...' needs a generator; enumerated models are finite", DiagnosticKind::Model);
          break;
        }
        std::string err;
        auto items = detail::expand_range(w->text, err);
        if (!items) {
          p.error(w->column, err);
          break;
        }
        for (auto& s : *items) {
          map.state_tokens[s] = {line_no, w->column};
          doc.states.push_back(std::move(s));
        }
      }
    } else if (key == "generator") {
      map.generator = here;
      auto name = p.word("a generator name");
      if (!name) continue;
      auto params = detail::parse_params(p, map);
      if (!params) continue;
      doc.generator = GeneratorSpec{name->text, std::move(*params)};
    } else if (key == "prior") {
      if (!prior_given) map.prior = here;
      prior_given = true;
      if (p.at_word() && p.peek()->text == "uniform" && !p.at_punct('=', 1)) {
        p.word("uniform");
        if (p.expect_end()) doc.uniform_prior = true;
        continue;
      }
      while (!p.done()) {
        if (p.accept(',')) continue;
        auto s = p.word("a state name");
        if (!s || !p.expect('=', "after '" + s->text + "'")) break;
        auto v = p.word("a probability for '" + s->text + "'");
        if (!v) break;
        auto r = parse_rational(v->text);
        if (!r) {
          p.error(v->column, "'" + v->text + "' is not a rational (a/b or a decimal)");
          break;
        }
        doc.prior.emplace_back(s->text, *r);
        map.prior_entries.push_back({line_no, s->column});
      }
    } else if (key == "question") {
      map.question = here;
      if (p.done()) continue;  // empty: finest
      if (p.at_word() && !p.at_punct('=', 1)) {
        auto w = *p.word("a question");
        if (!p.expect_end()) continue;
        if (w.text == "finest") doc.question.kind = QuestionSpec::Kind::Finest;
        else if (w.text == "whole") doc.question.kind = QuestionSpec::Kind::Whole;
        else {
          doc.question.kind = QuestionSpec::Kind::Builtin;
          doc.question.builtin = w.text;
        }
        continue;
      }
      doc.question.kind = QuestionSpec::Kind::Cells;
      bool bad = false;
      while (!p.done() && !bad) {
        auto label = p.word("an answer label");
        if (!label || !p.expect('=', "after answer '" + label->text + "'")) {
          bad = true;
          break;
        }
        std::vector<std::string> members;
        std::vector<detail::SourceMap::Pos> positions;
        do {
          auto m = p.word("a state for answer '" + label->text + "'");
          if (!m) {
            bad = true;
            break;
          }
          std::string err;
          auto items = detail::expand_range(m->text, err);
          if (!items) {
            p.error(m->column, err);
            bad = true;
            break;
          }
          for (auto& it : *items) {
            members.push_back(std::move(it));
            positions.push_back({line_no, m->column});
          }
        } while (p.accept(','));
        doc.question.cells.emplace_back(label->text, std::move(members));
        map.cell_members.push_back(std::move(positions));
      }
      if (bad) {
        doc.question = {};
        map.cell_members.clear();
      }
    } else if (key == "threshold") {
      map.threshold = here;
      auto w = p.word("a threshold");
      if (!w || !p.expect_end()) continue;
      auto r = parse_rational(w->text);
      if (!r) {
        p.error(w->column, "'" + w->text + "' is not a rational (a/b or a decimal)");
        continue;
      }
      doc.threshold = *r;
    } else if (key == "rule" || key == "variant" || key == "measuring") {
      auto w = p.word("a value for '" + key + "'");
      if (!w || !p.expect_end()) continue;
      if (key == "rule") {
        if (auto r = parse_rule(w->text)) doc.rule = *r;
        else p.error(w->column, "unknown rule '" + w->text + "' (sufficiency or sufficiency-plus)");
      } else if (key == "variant") {
        if (auto v = parse_variant(w->text)) doc.variant = *v;
        else p.error(w->column, "unknown variant '" + w->text + "' (stalnaker or williamson)");
      } else {
        map.measuring = here;
        try {
          doc.measuring = parse_measuring(w->text);
        } catch (const ModelError&) {
          p.error(w->column, "unknown measuring function '" + w->text + "' (index or log)");
        }
      }
    } else if (key == "density") {
      map.density = here;
      auto family = p.word("a density family");
      if (!family) continue;
      auto params = detail::parse_params(p, map);
      if (!params) continue;
      doc.density = DensitySpec{family->text, std::move(*params)};
    } else {
      p.error(first, "unknown key '" + key + "'");
    }
    if (end == text.size()) break;
  }

  if (!result.has_syntax_errors()) detail::check_document(doc, map, diags);
  if (std::none_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; }))
    result.document = std::move(doc);
  return result;
}

/// Canonical text for a document; parse_model(render_model(d)) yields d.
inline std::string render_model(const ModelDocument& d) {
  std::ostringstream out;
  auto params = [&](const Params& ps) {
    for (const auto& [k, v] : ps) out << ' ' << k << '=' << v;
  };
  if (!d.states.empty()) {
    out << "states:";
    for (const auto& s : d.states) out << ' ' << s;
    out << '\n';
  }
  if (d.generator) {
    out << "generator: " << d.generator->name;
    params(d.generator->params);
    out << '\n';
  }
  if (d.density) {
    out << "density: " << d.density->family;
    params(d.density->params);
    out << '\n';
  }
  if (d.measuring) out << "measuring: " << to_string(*d.measuring) << '\n';
  for (const auto& [name, set] : d.evidence) {
    out << "evidence " << name << " = {";
    for (std::size_t i = 0; i < set.members.size(); ++i) out << (i ? ", " : "") << set.members[i];
    if (set.open_tail) out << ", ...";
    out << "}\n";
  }
  if (d.uniform_prior) out << "prior: uniform\n";
  if (!d.prior.empty()) {
    out << "prior:";
    for (const auto& [s, p] : d.prior) out << ' ' << s << '=' << to_string(p);
    out << '\n';
  }
  switch (d.question.kind) {
    case QuestionSpec::Kind::Finest: break;
    case QuestionSpec::Kind::Whole: out << "question: whole\n"; break;
    case QuestionSpec::Kind::Builtin: out << "question: " << d.question.builtin << '\n'; break;
    case QuestionSpec::Kind::Cells:
      out << "question:";
      for (const auto& [label, members] : d.question.cells) {
        out << ' ' << label << '=';
        for (std::size_t i = 0; i < members.size(); ++i) out << (i ? "," : "") << members[i];
      }
      out << '\n';
      break;
  }
  if (d.threshold) out << "threshold: " << to_string(*d.threshold) << '\n';
  if (d.rule) out << "rule: " << to_string(*d.rule) << '\n';
  if (d.variant) out << "variant: " << to_string(*d.variant) << '\n';
  return out.str();
}

/// A document turned into something queryable.
struct BuiltModel {
  enum class Kind { Finite, Geometric, Racing, Decay, Density };
  Kind kind = Kind::Finite;
  std::optional<ProbabilityStructure> structure;  // Finite, Geometric
  scenarios::RacingOptions racing;
  scenarios::RacingQuestion racing_question = scenarios::RacingQuestion::ExactOutcome;
  Rational threshold = 1;
  std::optional<DecayModel> decay;
  std::optional<DensityStructure> density;
  SufficiencyRule rule = SufficiencyRule::Sufficiency;
  KnowledgeVariant variant = KnowledgeVariant::Stalnakerian;
};

/// Builds a checked document. Throws ModelError (or a subclass) on failure.
inline BuiltModel build_model(const ModelDocument& d) {
  BuiltModel m;
  m.rule = d.rule.value_or(SufficiencyRule::Sufficiency);
  m.variant = d.variant.value_or(KnowledgeVariant::Stalnakerian);

  if (d.density) {
    const auto& ps = d.density->params;
    auto num = [&](const std::string& k) {
      auto v = detail::parse_real(detail::param_or(ps, k, ""));
      if (!v) throw ModelError("density parameter '" + k + "' missing or not a number");
      return *v;
    };
    std::optional<Density> f;
    if (d.density->family == "gaussian") {
      if (!(num("sigma") > 0)) throw ModelError("gaussian sigma must be positive");
      f = gaussian_density(num("mu"), num("sigma"));
    } else if (d.density->family == "uniform") {
      f = uniform_density(num("lo"), num("hi"));
    } else if (d.density->family == "wrapped-normal") {
      if (!(num("sigma") > 0)) throw ModelError("wrapped-normal sigma must be positive");
      f = wrapped_normal(num("centre"), num("sigma"));
    } else {
      throw ModelError("unknown density '" + d.density->family + "'");
    }
    if (!d.threshold) throw ModelError("density models need a threshold");
    m.kind = BuiltModel::Kind::Density;
    m.threshold = *d.threshold;
    m.density.emplace("value", std::vector<DensityEvidence>{DensityEvidence{"E", *f}}, to_double(*d.threshold));
    return m;
  }

  if (d.generator) {
    const auto& g = *d.generator;
    auto count = [&](const std::string& k, unsigned fallback) {
      auto s = detail::param_or(g.params, k, "");
      if (s.empty()) return fallback;
      auto v = detail::parse_count(s);
      if (!v) throw ModelError("generator parameter '" + k + "' is not a count");
      return *v;
    };
    if (g.name == "geometric") {
      scenarios::FlippingOptions o;
      o.depth = count("depth", scenarios::default_depth());
      if (d.threshold) o.threshold = *d.threshold;
      for (const auto& [name, set] : d.evidence) {
        auto a = detail::parse_count(set.members.front()), b = detail::parse_count(set.members.back());
        if (!a || !b) throw ModelError("evidence '" + name + "' is not a run of flips");
        o.extra_evidence.emplace_back(*a, *b);
      }
      auto ps = scenarios::build_flipping(o);
      if (d.question.kind == QuestionSpec::Kind::Whole) ps = with_question(ps, Question::whole());
      if (d.question.kind == QuestionSpec::Kind::Builtin) ps = with_question(ps, scenarios::flips_remaining_question(ps));
      // Extra evidence takes the names the document gave it.
      auto evidence = ps.evidence_family();
      for (std::size_t i = 0; i < d.evidence.size(); ++i)
        evidence[evidence.size() - d.evidence.size() + i].name = d.evidence[i].first;
      m.structure.emplace(ps.states(), evidence, ps.question(), ps.prior(), ps.threshold(), ps.tail());
      m.kind = BuiltModel::Kind::Geometric;
      m.threshold = ps.threshold();
      return m;
    }
    if (g.name == "racing") {
      m.kind = BuiltModel::Kind::Racing;
      m.racing.coins = count("coins", m.racing.coins);
      m.racing.depth = count("depth", m.racing.depth);
      auto reading = detail::param_or(g.params, "reading", "max-simultaneous");
      if (auto r = parse_reading(reading)) m.racing.reading = *r;
      else throw ModelError("unknown reading '" + reading + "'");
      auto q = parse_racing_question(d.question.builtin);
      if (!q) throw ModelError("racing needs a racing question");
      m.racing_question = *q;
      if (!d.threshold) throw ModelError("racing needs a threshold");
      m.threshold = *d.threshold;
      return m;
    }
    if (g.name == "decay") {
      if (!d.threshold) throw ModelError("decay needs a threshold");
      m.kind = BuiltModel::Kind::Decay;
      m.threshold = *d.threshold;
      DecayModel dm{d.measuring.value_or(Measuring::Logarithmic),
                    d.question.kind == QuestionSpec::Kind::Builtin && d.question.builtin == "from-creation"
                        ? DecayQuestion::DeDicto
                        : DecayQuestion::DeSe,
                    to_double(*d.threshold)};
      dm.validate();
      m.decay = dm;
      return m;
    }
    throw ModelError("unknown generator '" + g.name + "'");
  }

  std::map<std::string, StateIndex> index;
  for (StateIndex s = 0; s < d.states.size(); ++s) index[d.states[s]] = s;
  std::vector<Evidence> evidence;
  for (const auto& [name, set] : d.evidence) {
    StateSet ss;
    for (const auto& s : set.members) {
      auto it = index.find(s);
      if (it == index.end()) throw ModelError("evidence '" + name + "' names '" + s + "', not a state");
      ss.members.push_back(it->second);
    }
    evidence.push_back(Evidence{name, ss});
  }
  std::vector<Rational> prior(d.states.size(), Rational(0));
  if (d.uniform_prior)
    for (auto& p : prior) p = Rational(1, static_cast<long>(d.states.size()));
  for (const auto& [s, p] : d.prior) {
    auto it = index.find(s);
    if (it == index.end()) throw ModelError("prior for '" + s + "', not a state");
    prior[it->second] = p;
  }
  Question q = Question::finest();
  if (d.question.kind == QuestionSpec::Kind::Whole) q = Question::whole();
  if (d.question.kind == QuestionSpec::Kind::Builtin) throw ModelError("unknown question '" + d.question.builtin + "'");
  if (d.question.kind == QuestionSpec::Kind::Cells) {
    std::vector<std::string> labels(d.states.size());
    for (const auto& [label, members] : d.question.cells)
      for (const auto& s : members) {
        auto it = index.find(s);
        if (it == index.end()) throw ModelError("answer '" + label + "' names '" + s + "', not a state");
        labels[it->second] = label;
      }
    for (StateIndex s = 0; s < labels.size(); ++s)
      if (labels[s].empty()) throw ModelError("state '" + d.states[s] + "' is in no answer");
    q = Question::de_dicto(std::move(labels));
  }
  if (!d.threshold) throw ModelError("no threshold");
  m.structure.emplace(d.states, std::move(evidence), std::move(q), std::move(prior), *d.threshold);
  m.kind = BuiltModel::Kind::Finite;
  m.threshold = *d.threshold;
  return m;
}

/// The document describing a finite structure with a de dicto question.
inline ModelDocument to_document(const ProbabilityStructure& ps) {
  if (ps.tail().mass != 0) throw ModelError("truncated structures need a generator");
  if (ps.question().kind() != QuestionKind::DeDicto) throw ModelError("de se questions have no document form");
  ModelDocument d;
  d.states = ps.states();
  for (const auto& ev : ps.evidence_family()) {
    SetSpec set;
    for (auto s : ev.states.members) set.members.push_back(ps.states()[s]);
    d.evidence.emplace_back(ev.name, std::move(set));
  }
  for (StateIndex s = 0; s < ps.states().size(); ++s) d.prior.emplace_back(ps.states()[s], ps.prior()[s]);
  if (ps.question().is_whole()) {
    d.question.kind = QuestionSpec::Kind::Whole;
  } else if (!ps.question().is_finest()) {
    d.question.kind = QuestionSpec::Kind::Cells;
    const auto& labels = ps.question().table();
    for (StateIndex s = 0; s < labels.size(); ++s) {
      auto it = std::find_if(d.question.cells.begin(), d.question.cells.end(),
                             [&](const auto& cell) { return cell.first == labels[s]; });
      if (it == d.question.cells.end()) d.question.cells.push_back({labels[s], {ps.states()[s]}});
      else it->second.push_back(ps.states()[s]);
    }
  }
  d.threshold = ps.threshold();
  return d;
}

/// A set of states written as in the format: `{1, 2, 3}`, `{2..8}`, `{2, ...}`.
/// `...` continues through every later state and the truncated tail.
inline StateSet parse_state_set(const ProbabilityStructure& ps, std::string_view text) {
  std::vector<Diagnostic> diags;
  detail::LineParser p(detail::tokenize(text, 1), 1, text.size() + 1, diags);
  auto spec = detail::parse_set(p, nullptr);
  if (spec) p.expect_end();
  if (!spec || !diags.empty())
    throw ModelError("bad set '" + std::string(text) + "': " + (diags.empty() ? "" : diags.front().message));
  StateSet out;
  for (const auto& s : spec->members) {
    auto it = std::find(ps.states().begin(), ps.states().end(), s);
    if (it == ps.states().end()) throw ModelError("set names '" + s + "', not a state");
    out.members.push_back(static_cast<StateIndex>(it - ps.states().begin()));
  }
  std::sort(out.members.begin(), out.members.end());
  out.members.erase(std::unique(out.members.begin(), out.members.end()), out.members.end());
  if (spec->open_tail) {
    for (StateIndex s = out.members.back() + 1; s < ps.states().size(); ++s) out.members.push_back(s);
    out.open_tail = ps.tail().mass > 0;
  }
  return out;
}

/// A world written `state@evidence`.
inline World parse_world(const ProbabilityStructure& ps, std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) throw ModelError("world '" + std::string(text) + "' is not state@evidence");
  const auto state = text.substr(0, at), evidence = text.substr(at + 1);
  auto it = std::find(ps.states().begin(), ps.states().end(), state);
  if (it == ps.states().end()) throw ModelError("no state '" + std::string(state) + "'");
  auto e = ps.find_evidence(evidence);
  if (!e) throw ModelError("no evidence '" + std::string(evidence) + "'");
  World w{static_cast<StateIndex>(it - ps.states().begin()), *e};
  if (!ps.evidence_family()[*e].states.contains(w.state))
    throw ModelError("state '" + std::string(state) + "' is not in evidence '" + std::string(evidence) + "'");
  return w;
}

inline std::string world_name(const ProbabilityStructure& ps, const World& w) {
  return ps.states().at(w.state) + "@" + ps.evidence_family().at(w.evidence).name;
}

}  // namespace normality
