#pragma once

#include "normality/core.hpp"
#include "normality/density.hpp"
#include "normality/dese.hpp"
#include "normality/genprob.hpp"
#include "normality/modelspec.hpp"
#include "normality/scenarios/decay.hpp"
#include "normality/scenarios/flipping.hpp"
#include "normality/scenarios/heading.hpp"
#include "normality/scenarios/instruments.hpp"
#include "normality/scenarios/lottery.hpp"
#include "normality/scenarios/racing.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace normality::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kModelError = 1;
inline constexpr int kParseError = 2;

enum class Format { Text, Tsv, Csv, Json };

/// Rows of named columns. Text output omits the header and keeps only the
/// columns flagged for it; list cells are joined by spaces.
struct Table {
  using Cell = std::variant<std::string, std::vector<std::string>>;
  std::vector<std::string> headers;
  std::vector<bool> in_text;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

inline std::string join(const std::vector<std::string>& v, const std::string& sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

inline std::string flat(const Table::Cell& c) {
  return std::holds_alternative<std::string>(c) ? std::get<std::string>(c) : join(std::get<std::vector<std::string>>(c));
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline void print(const Table& t, Format f, std::ostream& out) {
  switch (f) {
    case Format::Text:
      for (const auto& row : t.rows) {
        std::vector<std::string> cells;
        for (std::size_t i = 0; i < row.size(); ++i)
          if (t.in_text.empty() || t.in_text[i]) cells.push_back(flat(row[i]));
        out << join(cells, "\t") << '\n';
      }
      break;
    case Format::Tsv:
    case Format::Csv: {
      const std::string sep = f == Format::Tsv ? "\t" : ",";
      auto cell = [&](const std::string& s) { return f == Format::Csv ? csv_field(s) : s; };
      std::vector<std::string> head;
      for (const auto& h : t.headers) head.push_back(cell(h));
      out << join(head, sep) << '\n';
      for (const auto& row : t.rows) {
        std::vector<std::string> cells;
        for (const auto& c : row) cells.push_back(cell(flat(c)));
        out << join(cells, sep) << '\n';
      }
      break;
    }
    case Format::Json: {
      auto array = nlohmann::ordered_json::array();
      for (const auto& row : t.rows) {
        nlohmann::ordered_json o = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (std::holds_alternative<std::string>(row[i])) o[t.headers[i]] = std::get<std::string>(row[i]);
          else o[t.headers[i]] = std::get<std::vector<std::string>>(row[i]);
        }
        array.push_back(std::move(o));
      }
      out << array.dump(2) << '\n';
      break;
    }
  }
}

inline std::string real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

inline std::vector<std::string> state_names(const ProbabilityStructure& ps, const StateSet& set) {
  std::vector<std::string> out;
  for (auto s : set.members) out.push_back(ps.states()[s]);
  if (set.open_tail && ps.tail().mass > 0) out.push_back("...");
  return out;
}

inline std::vector<std::string> region_text(const BeliefRegion& r) {
  std::vector<std::string> out;
  for (double a : r.atoms) out.push_back("{" + real(a) + "}");
  for (const auto& i : r.intervals) out.push_back("[" + real(i.lo) + ", " + real(i.hi) + "]");
  return out;
}

inline std::string interval_text(const DecayInterval& i) {
  return std::string(i.lo_open ? "(" : "[") + real(i.lo) + ", " + real(i.hi) + "]";
}

/// The generated structure, refusing evidence whose beliefs truncation left open.
inline NormalityStructure structure_for(const ProbabilityStructure& ps, SufficiencyRule rule, const World& w) {
  auto g = generate(ps, rule);
  if (!g.exact.at(w.evidence))
    throw UndecidedAtDepth("beliefs given '" + ps.evidence_family()[w.evidence].name +
                           "' are not settled at this truncation depth; raise NORMALITY_DEPTH");
  return std::move(g.structure);
}

inline StateSet believed_states(const ProbabilityStructure& ps, SufficiencyRule rule, const World& w) {
  return project_states(doxastic_accessible(structure_for(ps, rule, w), w));
}

inline StateSet known_states(const ProbabilityStructure& ps, SufficiencyRule rule, KnowledgeVariant v,
                             const World& w) {
  return project_states(epistemic_accessible(structure_for(ps, rule, w), w, v));
}

inline Table racing_rows(const std::vector<scenarios::RacingRow>& rows) {
  Table t{{"question", "most normal", "t", "min tails", "max tails", "min trials", "max trials", "same end"}, {}, {}};
  for (const auto& r : rows) {
    const auto& s = r.summary;
    t.add({scenarios::to_string(r.question), s.most_normal, scenarios::format_threshold(r.threshold),
           std::to_string(s.min_tails), scenarios::format_bound(s.max_tails), std::to_string(s.min_trials),
           scenarios::format_bound(s.max_trials), scenarios::to_string(s.same_end)});
  }
  return t;
}

inline std::string read_input(const std::string& path) {
  std::ostringstream buf;
  if (path == "-") {
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  buf << in.rdbuf();
  return buf.str();
}

struct Loaded {
  std::optional<BuiltModel> model;
  int status = kOk;
};

inline Loaded load(const std::string& path, std::ostream& err) {
  Loaded l;
  std::string text;
  try {
    text = read_input(path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    l.status = kParseError;
    return l;
  }
  auto parsed = parse_model(text);
  for (const auto& d : parsed.diagnostics) err << d.format(path) << '\n';
  if (!parsed.ok()) {
    l.status = parsed.has_syntax_errors() ? kParseError : kModelError;
    return l;
  }
  l.model = build_model(*parsed.document);
  return l;
}

inline const ProbabilityStructure& finite(const BuiltModel& m, const std::string& command) {
  if (!m.structure) throw ModelError("'" + command + "' needs a model with enumerable worlds");
  return *m.structure;
}

inline std::string need_world(const std::string& at) {
  if (at.empty()) throw ModelError("give the world with --at state@evidence");
  return at;
}

struct Options {
  std::string model;
  std::string at;
  std::vector<std::string> learn;
  std::string variant;
  std::string rule;
  double since = 0;
  Format format = Format::Text;
};

inline KnowledgeVariant variant_or(const Options& o, KnowledgeVariant fallback) {
  if (o.variant.empty()) return fallback;
  auto v = parse_variant(o.variant);
  if (!v) throw ModelError("unknown variant '" + o.variant + "'");
  return *v;
}

inline SufficiencyRule rule_or(const Options& o, SufficiencyRule fallback) {
  if (o.rule.empty()) return fallback;
  auto r = parse_rule(o.rule);
  if (!r) throw ModelError("unknown rule '" + o.rule + "'");
  return *r;
}

inline Table believe(const BuiltModel& m, const Options& o) {
  const auto rule = rule_or(o, m.rule);
  switch (m.kind) {
    case BuiltModel::Kind::Finite:
    case BuiltModel::Kind::Geometric: {
      const auto& ps = *m.structure;
      auto w = parse_world(ps, need_world(o.at));
      return Table{{"world", "believed"}, {false, true}, {{world_name(ps, w), state_names(ps, believed_states(ps, rule, w))}}};
    }
    case BuiltModel::Kind::Racing: {
      auto s = scenarios::racing_summary(m.racing_question, m.threshold, m.racing);
      return racing_rows({scenarios::RacingRow{m.racing_question, m.threshold, s}});
    }
    case BuiltModel::Kind::Decay: {
      auto i = decay_belief_interval(*m.decay, o.since);
      return Table{{"since", "r", "mass"}, {false, true, false}, {{real(o.since), interval_text(i), real(i.mass)}}};
    }
    case BuiltModel::Kind::Density: {
      auto r = doxastic_region(*m.density, 0);
      return Table{{"region", "mass", "cutoff"}, {true, false, false}, {{region_text(r), real(r.mass), real(r.cutoff)}}};
    }
  }
  return {};
}

inline Table know(const BuiltModel& m, const Options& o) {
  const auto variant = variant_or(o, m.variant);
  if (m.kind == BuiltModel::Kind::Density) {
    auto x = detail::parse_real(need_world(o.at));
    if (!x) throw ModelError("give the true value with --at x");
    auto r = epistemic_region(*m.density, ContinuousWorld{*x, 0}, variant);
    return Table{{"value", "known", "mass"}, {false, true, false}, {{real(*x), region_text(r), real(r.mass)}}};
  }
  const auto& ps = finite(m, "know");
  auto w = parse_world(ps, need_world(o.at));
  return Table{{"world", "variant", "known"},
               {false, false, true},
               {{world_name(ps, w), to_string(variant), state_names(ps, known_states(ps, rule_or(o, m.rule), variant, w))}}};
}

inline Table discover_steps(const BuiltModel& m, const Options& o) {
  const auto& ps = finite(m, "discover");
  if (o.learn.empty()) throw ModelError("give at least one --learn set");
  const auto rule = rule_or(o, m.rule);
  const auto g = generate(ps, rule);
  World w = parse_world(ps, need_world(o.at));
  Table t{{"world", "believed", "learned", "inclusion", "preservation"}, {true, true, false, false, false}, {}};
  auto settled = [&](const World& v) {
    if (!g.exact.at(v.evidence))
      throw UndecidedAtDepth("beliefs given '" + ps.evidence_family()[v.evidence].name +
                             "' are not settled at this truncation depth; raise NORMALITY_DEPTH");
  };
  settled(w);
  t.add({world_name(ps, w), state_names(ps, project_states(doxastic_accessible(g.structure, w))), "", "", ""});
  for (const auto& text : o.learn) {
    auto p = parse_state_set(ps, text);
    auto report = revision_report(g.structure, w, p);
    settled(report.after);
    w = report.after;
    t.add({world_name(ps, w), state_names(ps, report.post_belief), text, yes_no(report.agm_inclusion_holds),
           yes_no(report.agm_preservation_holds)});
  }
  return t;
}

inline Table check(const BuiltModel& m, const Options& o, bool& all_pass) {
  Table t{{"check", "result", "detail"}, {}, {}};
  all_pass = true;
  auto row = [&](const std::string& name, bool ok, const std::string& detail) {
    t.add({name, ok ? "pass" : "fail", detail});
    all_pass = all_pass && ok;
  };
  if (m.kind == BuiltModel::Kind::Density) {
    validate(m.density->density(0));
    row("density", true, "integrates to 1");
    return t;
  }
  if (!m.structure) {
    row("model", true, "builds");
    return t;
  }
  const auto& ps = *m.structure;
  const auto rule = rule_or(o, m.rule);
  auto g = generate(ps, rule);
  // NormalityStructure rejects axiom violations on construction.
  row("axioms", true, "preorder, well-founded >>, 5a, 5b");
  std::vector<std::string> open;
  for (EvidenceIndex e = 0; e < ps.evidence_family().size(); ++e)
    if (!g.exact[e]) open.push_back(ps.evidence_family()[e].name);
  row("decided", open.empty(), open.empty() ? "every evidence set" : "unsettled: " + join(open, ","));
  if (open.empty()) {
    auto th = check_threshold(ps, g.structure);
    row("threshold", th.holds,
        th.holds ? "P(R_b(w)|E) >= " + to_string(ps.threshold())
                 : world_name(ps, *th.witness) + " has " + to_string(th.witness_mass));
  }
  return t;
}

inline Table worlds(const BuiltModel& m) {
  const auto& ps = finite(m, "worlds");
  Table t{{"world", "likeliness", "typicality", "believed"}, {}, {}};
  for (const auto& w : ps.worlds())
    t.add({world_name(ps, w), to_string(likeliness(ps, w)), to_string(typicality(ps, w)), ""});
  auto g = generate(ps, m.rule);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto w = ps.worlds()[i];
    if (!g.exact[w.evidence]) {
      t.rows[i][3] = "undecided";
      continue;
    }
    auto rb = doxastic_accessible(g.structure, w);
    // Undefeated within its own evidence: it is a belief world for its cell.
    t.rows[i][3] = yes_no(std::find(rb.begin(), rb.end(), w) != rb.end());
  }
  return t;
}

inline Format parse_format(const std::string& s) {
  if (s == "text") return Format::Text;
  if (s == "tsv") return Format::Tsv;
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ModelError("unknown format '" + s + "'");
}

inline std::vector<Rational> thresholds(const std::vector<std::string>& texts, std::vector<Rational> fallback) {
  if (texts.empty()) return fallback;
  std::vector<Rational> out;
  for (const auto& s : texts) {
    auto r = parse_rational(s);
    if (!r || *r <= 0 || *r > 1) throw ModelError("threshold '" + s + "' is not a rational in (0, 1]");
    out.push_back(*r);
  }
  return out;
}

inline Rational threshold(const std::string& text, Rational fallback) {
  return text.empty() ? fallback : thresholds({text}, {}).front();
}

/// Runs one command line. Output goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge and belief from probability: normality structures"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "tsv", "csv", "json"}));

  Options o;
  auto model_command = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("model", o.model, "Model document ('-' for stdin)")->required();
    sub->add_option("--rule", o.rule, "sufficiency or sufficiency-plus (overrides the document)");
    return sub;
  };
  auto* believe_cmd = model_command("believe", "Doxastically accessible states at a world");
  believe_cmd->add_option("--at", o.at, "World as state@evidence");
  believe_cmd->add_option("--since", o.since, "Decay models: evidence (since, inf)");
  auto* know_cmd = model_command("know", "Epistemically accessible states at a world");
  know_cmd->add_option("--at", o.at, "World as state@evidence (density models: the true value)");
  know_cmd->add_option("--variant", o.variant, "stalnaker or williamson");
  auto* discover_cmd = model_command("discover", "Beliefs after learning one set after another");
  discover_cmd->add_option("--at", o.at, "Starting world as state@evidence")->required();
  discover_cmd->add_option("--learn", o.learn, "A set such as {2, 3, ...}; repeat to chain")->required();
  auto* check_cmd = model_command("check", "Validate axioms, truncation and the threshold condition");
  auto* worlds_cmd = model_command("worlds", "Likeliness, typicality and belief status of every world");
  auto* render_cmd = app.add_subcommand("render", "Print a model document in canonical form");
  render_cmd->add_option("model", o.model, "Model document ('-' for stdin)")->required();

  auto* scenario = app.add_subcommand("scenario", "Built-in scenarios");
  scenario->require_subcommand(1);
  std::string query = "believe", t_text, variant_text;

  // flipping
  unsigned tails_seen = 0, heads_on = 0, depth = scenarios::default_depth();
  auto* flipping = scenario->add_subcommand("flipping", "Flip a fair coin until heads");
  flipping->add_option("--tails-seen", tails_seen, "Tails seen so far");
  flipping->add_option("--heads-on", heads_on, "Flip that actually lands heads (default: the next)");
  flipping->add_option("--depth", depth, "Truncation depth")->check(CLI::Range(8u, scenarios::max_flipping_depth()));
  flipping->add_option("--t", t_text, "Threshold (default .99)");
  flipping->add_option("--variant", variant_text, "stalnaker or williamson");
  flipping->add_option("query", query, "believe, know or typicality")
      ->check(CLI::IsMember({"believe", "know", "typicality"}));

  // heading
  unsigned flips = 100;
  auto* heading = scenario->add_subcommand("heading", "One hundred flips of a possibly double-headed coin");
  heading->add_option("--flips", flips, "Flips observed")->check(CLI::Range(1u, 2000u));
  heading->add_option("--t", t_text, "Threshold (default .9999999)");

  // racing
  std::vector<std::string> t_list;
  std::string racing_question, reading = "max-simultaneous";
  scenarios::RacingOptions racing_options;
  auto* racing = scenario->add_subcommand("racing", "Ten coins racing for heads");
  racing->add_option("--question", racing_question, "exact, shape, total-tails, until-over or end-together");
  racing->add_option("--t", t_list, "Threshold(s) (default .75 and .95)");
  racing->add_option("--reading", reading, "Reading of end-together")
      ->check(CLI::IsMember({"max-simultaneous", "final-together", "first-flip"}));
  racing->add_option("--coins", racing_options.coins, "Number of coins")->check(CLI::Range(1u, 64u));
  racing->add_option("--depth", racing_options.depth, "Per-coin truncation")->check(CLI::Range(4u, 4096u));

  // lottery
  scenarios::LotteryOptions lottery_options;
  std::string rule_text;
  auto* lottery = scenario->add_subcommand("lottery", "A lottery in which Alice holds one ticket fewer");
  lottery->add_option("--entrants", lottery_options.entrants, "Entrants besides Alice")->check(CLI::Range(1u, 100000u));
  lottery->add_option("--tickets", lottery_options.tickets_each, "Tickets per entrant")->check(CLI::Range(2u, 1000000u));
  lottery->add_option("--t", t_text, "Threshold (default .99)");
  lottery->add_option("--rule", rule_text, "sufficiency or sufficiency-plus (default: both)");

  // weighing
  double mu = 0, sigma = 1, at_value = std::numeric_limits<double>::quiet_NaN();
  auto* weighing = scenario->add_subcommand("weighing", "A scale reading with Gaussian error");
  weighing->add_option("--mu", mu, "Reading");
  weighing->add_option("--sigma", sigma, "Standard deviation");
  weighing->add_option("--t", t_text, "Threshold (default: mass within two standard deviations)");
  weighing->add_option("--at", at_value, "True value (for know)");
  weighing->add_option("--variant", variant_text, "stalnaker or williamson");
  weighing->add_option("query", query, "believe or know")->check(CLI::IsMember({"believe", "know"}));

  // clock
  double apparent = 0;
  auto* clock = scenario->add_subcommand("clock", "An unmarked clock glimpsed with noisy vision");
  clock->add_option("--sigma", sigma, "Perceptual noise (radians)");
  clock->add_option("--apparent", apparent, "Apparent orientation (radians)");
  clock->add_option("--t", t_text, "Threshold (default .95)");
  clock->add_option("query", query, "believe or before")->check(CLI::IsMember({"believe", "before"}));

  // decay
  std::string measuring = "log", decay_question = "from-now";
  double since = 0;
  auto* decay = scenario->add_subcommand("decay", "When will a radioactive atom decay");
  decay->add_option("--measuring", measuring, "index or log")->check(CLI::IsMember({"index", "log"}));
  decay->add_option("--question", decay_question, "from-now or from-creation")
      ->check(CLI::IsMember({"from-now", "from-creation"}));
  decay->add_option("--t", t_text, "Threshold (default .95)");
  decay->add_option("--since", since, "Evidence: not decayed after this many years");
  decay->add_option("query", query, "believe, contrast or curves")
      ->check(CLI::IsMember({"believe", "contrast", "curves"}));

  auto* table = app.add_subcommand("table", "Reproduce a results table");
  table->require_subcommand(1);
  auto* table_racing = table->add_subcommand("racing", "Beliefs about ten coins racing for heads");
  table_racing->add_option("--t", t_list, "Threshold(s) (default .75 and .95)");
  table_racing->add_option("--reading", reading, "Reading of end-together")
      ->check(CLI::IsMember({"max-simultaneous", "final-together", "first-flip"}));
  table_racing->add_option("--coins", racing_options.coins, "Number of coins")->check(CLI::Range(1u, 64u));
  table_racing->add_option("--depth", racing_options.depth, "Per-coin truncation")->check(CLI::Range(4u, 4096u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kParseError;
  }

  try {
    o.format = parse_format(format);
    auto emit = [&](const Table& t) {
      print(t, o.format, out);
      return kOk;
    };
    auto with_model = [&](auto&& body) -> int {
      auto loaded = load(o.model, err);
      if (!loaded.model) return loaded.status;
      return body(*loaded.model);
    };

    if (believe_cmd->parsed()) return with_model([&](const BuiltModel& m) { return emit(believe(m, o)); });
    if (know_cmd->parsed()) return with_model([&](const BuiltModel& m) { return emit(know(m, o)); });
    if (discover_cmd->parsed()) return with_model([&](const BuiltModel& m) { return emit(discover_steps(m, o)); });
    if (worlds_cmd->parsed()) return with_model([&](const BuiltModel& m) { return emit(worlds(m)); });
    if (check_cmd->parsed())
      return with_model([&](const BuiltModel& m) {
        bool pass = true;
        emit(check(m, o, pass));
        return pass ? kOk : kModelError;
      });
    if (render_cmd->parsed()) {
      std::string text;
      try {
        text = read_input(o.model);
      } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kParseError;
      }
      auto parsed = parse_model(text);
      for (const auto& d : parsed.diagnostics) err << d.format(o.model) << '\n';
      if (!parsed.ok()) return parsed.has_syntax_errors() ? kParseError : kModelError;
      out << render_model(*parsed.document);
      return kOk;
    }

    if (flipping->parsed()) {
      scenarios::FlippingOptions fo;
      fo.depth = depth;
      fo.threshold = threshold(t_text, fo.threshold);
      if (tails_seen + 1 > depth) throw ModelError("tails seen must be below the truncation depth");
      auto ps = scenarios::build_flipping(fo);
      const unsigned n = heads_on ? heads_on : tails_seen + 1;
      if (n <= tails_seen || n > depth) throw ModelError("heads must land after the tails seen, within the depth");
      auto w = scenarios::flipping_world(ps, n, tails_seen);
      if (query == "typicality")
        return emit(Table{{"world", "likeliness", "typicality"},
                          {},
                          {{world_name(ps, w), to_string(likeliness(ps, w)), to_string(typicality(ps, w))}}});
      BuiltModel m;
      m.kind = BuiltModel::Kind::Geometric;
      m.structure.emplace(ps);
      Options fo_opts = o;
      fo_opts.at = world_name(ps, w);
      fo_opts.variant = variant_text;
      return emit(query == "know" ? know(m, fo_opts) : believe(m, fo_opts));
    }
    if (heading->parsed()) {
      auto r = scenarios::heading_checks(flips, threshold(t_text, scenarios::heading_threshold()));
      Table t{{"quantity", "value"}, {}, {}};
      t.add({"c accessible from d before (stalnaker)", yes_no(r.c_accessible_before[0])});
      t.add({"c accessible from d before (williamson)", yes_no(r.c_accessible_before[1])});
      t.add({"c accessible from d after (stalnaker)", yes_no(r.c_accessible_after[0])});
      t.add({"c accessible from d after (williamson)", yes_no(r.c_accessible_after[1])});
      t.add({"1 - tau(c)/tau(d) before", to_string(r.ratio_before)});
      t.add({"1 - tau(c)/tau(d) after", to_string(r.ratio_after)});
      t.add({"believed after", r.believed_after});
      return emit(t);
    }
    if (racing->parsed() || table_racing->parsed()) {
      racing_options.reading = *parse_reading(reading);
      auto ts = thresholds(t_list, {Rational(3, 4), Rational(19, 20)});
      if (table_racing->parsed() || racing_question.empty()) {
        auto rows = scenarios::racing_table(ts, racing_options);
        if (o.format == Format::Text) {
          out << scenarios::racing_table_tsv(rows);
          return kOk;
        }
        return emit(racing_rows(rows));
      }
      auto q = parse_racing_question(racing_question);
      if (!q) throw ModelError("unknown racing question '" + racing_question + "'");
      std::vector<scenarios::RacingRow> rows;
      for (const auto& t : ts) rows.push_back({*q, t, scenarios::racing_summary(*q, t, racing_options)});
      return emit(racing_rows(rows));
    }
    if (lottery->parsed()) {
      lottery_options.threshold = threshold(t_text, lottery_options.threshold);
      lottery_options.alice_tickets = lottery_options.tickets_each - 1;
      auto ps = scenarios::build_lottery(lottery_options);
      Table t{{"rule", "believes alice loses", "knows alice loses (stalnaker)", "knows alice loses (williamson)"}, {}, {}};
      for (auto rule : {SufficiencyRule::Sufficiency, SufficiencyRule::SufficiencyPlus}) {
        if (!rule_text.empty() && parse_rule(rule_text) != rule) continue;
        auto r = scenarios::lottery_report(ps, rule);
        t.add({to_string(rule), yes_no(r.alice_believed_to_lose), yes_no(r.knows_alice_loses[0]),
               yes_no(r.knows_alice_loses[1])});
      }
      if (t.rows.empty()) throw ModelError("unknown rule '" + rule_text + "'");
      return emit(t);
    }
    if (weighing->parsed()) {
      const double t = t_text.empty() ? scenarios::two_sigma_threshold() : to_double(threshold(t_text, 1));
      auto ds = scenarios::build_weighing(mu, sigma, t);
      BuiltModel m;
      m.kind = BuiltModel::Kind::Density;
      m.density.emplace(ds);
      Options wo = o;
      if (query == "know") {
        if (std::isnan(at_value)) throw ModelError("know needs the true value --at");
        wo.at = real(at_value);
        wo.variant = variant_text;
        return emit(know(m, wo));
      }
      return emit(believe(m, wo));
    }
    if (clock->parsed()) {
      const double t = t_text.empty() ? 0.95 : to_double(threshold(t_text, 1));
      auto ds = scenarios::build_clock(sigma, apparent, t);
      auto r = doxastic_region(ds, query == "before" ? 0 : 1);
      Table out_table{{"region", "mass", "centre", "half-width"}, {true, false, false, false}, {}};
      if (query == "before") {
        out_table.add({region_text(r), real(r.mass), "", ""});
      } else {
        auto arc = scenarios::region_arc(r);
        out_table.add({region_text(r), real(r.mass), real(arc.centre), real(arc.half_width)});
      }
      return emit(out_table);
    }
    if (decay->parsed()) {
      const double t = t_text.empty() ? 0.95 : to_double(threshold(t_text, 1));
      if (query == "curves") {
        out << decay_curves_csv(-4, 6, 201);
        return kOk;
      }
      if (query == "contrast") {
        auto c = dedicto_contrast(t, since > 0 ? since : 1.0);
        Table ct{{"quantity", "value"}, {}, {}};
        ct.add({"from-now, at creation", interval_text(c.dese_at_creation)});
        ct.add({"from-creation, at creation", interval_text(c.dedicto_at_creation)});
        ct.add({"from-now, after " + real(c.later), interval_text(c.dese_later)});
        ct.add({"from-creation, after " + real(c.later), interval_text(c.dedicto_later)});
        ct.add({"P(decays in first year), at creation", real(c.first_year_at_creation)});
        ct.add({"P(decays in first year), after " + real(c.later), real(c.first_year_later)});
        ct.add({"P(decays in next year), at creation", real(c.next_year_at_creation)});
        ct.add({"P(decays in next year), after " + real(c.later), real(c.next_year_later)});
        return emit(ct);
      }
      BuiltModel m;
      m.kind = BuiltModel::Kind::Decay;
      m.decay = DecayModel{parse_measuring(measuring),
                           decay_question == "from-creation" ? DecayQuestion::DeDicto : DecayQuestion::DeSe, t};
      m.decay->validate();
      Options dopts = o;
      dopts.since = since;
      return emit(believe(m, dopts));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kModelError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kModelError;
  }
  return kParseError;
}

}  // namespace normality::cli
