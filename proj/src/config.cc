#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "fbdsde/cli.h"
#include "fbdsde/error.h"

namespace fbdsde {

namespace {

struct Token {
  std::string_view text;
  int column = 1;  // 1-based
};

[[noreturn]] void ParseError(int line, int column, const std::string& what) {
  throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + what);
}

Token Trim(std::string_view s, int column) {
  std::size_t begin = 0;
  while (begin < s.size() && (s[begin] == ' ' || s[begin] == '\t')) ++begin;
  std::size_t end = s.size();
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' ||
                         s[end - 1] == '\r')) {
    --end;
  }
  return {s.substr(begin, end - begin), column + static_cast<int>(begin)};
}

double ParseNumber(const Token& tok, int line) {
  double value = 0.0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  if (!tok.text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (tok.text.empty() || ec != std::errc() || ptr != last) {
    ParseError(line, tok.column,
               "expected a number, got '" + std::string(tok.text) + "'");
  }
  return value;
}

std::uint64_t ParseUnsigned(const Token& tok, int line) {
  std::uint64_t value = 0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (tok.text.empty() || ec != std::errc() || ptr != last) {
    ParseError(line, tok.column,
               "expected a nonnegative integer, got '" + std::string(tok.text) +
                   "'");
  }
  return value;
}

std::vector<Token> SplitCommas(const Token& inner) {
  std::vector<Token> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= inner.text.size(); ++i) {
    if (i == inner.text.size() || inner.text[i] == ',') {
      parts.push_back(Trim(inner.text.substr(start, i - start),
                           inner.column + static_cast<int>(start)));
      start = i + 1;
    }
  }
  return parts;
}

CoefficientFn ParseCoefficient(const Token& value, int line) {
  if (value.text.empty() || value.text.front() != '{') {
    return CoefficientFn::Constant(ParseNumber(value, line));
  }
  if (value.text.back() != '}') {
    ParseError(line, value.column + static_cast<int>(value.text.size()),
               "missing closing '}'");
  }
  const Token inner{value.text.substr(1, value.text.size() - 2),
                    value.column + 1};
  if (inner.text.find_first_of("{}") != std::string_view::npos) {
    ParseError(line, inner.column + static_cast<int>(inner.text.find_first_of("{}")),
               "nested braces");
  }
  const std::vector<Token> parts = SplitCommas(inner);
  const Token& kind = parts.front();
  if (parts.size() < 2) {
    ParseError(line, kind.column, "coefficient needs data after the kind");
  }
  try {
    if (kind.text == "constant") {
      if (parts.size() != 2) {
        ParseError(line, parts[2].column, "constant takes one value");
      }
      return CoefficientFn::Constant(ParseNumber(parts[1], line));
    }
    if (kind.text == "polynomial") {
      std::vector<double> c;
      for (std::size_t i = 1; i < parts.size(); ++i) {
        c.push_back(ParseNumber(parts[i], line));
      }
      return CoefficientFn::Polynomial(std::move(c));
    }
    if (kind.text == "piecewise") {
      std::vector<std::pair<double, double>> steps;
      for (std::size_t i = 1; i < parts.size(); ++i) {
        const std::size_t colon = parts[i].text.find(':');
        if (colon == std::string_view::npos) {
          ParseError(line, parts[i].column, "piecewise entries are time:value");
        }
        const Token t = Trim(parts[i].text.substr(0, colon), parts[i].column);
        const Token v = Trim(parts[i].text.substr(colon + 1),
                             parts[i].column + static_cast<int>(colon) + 1);
        steps.emplace_back(ParseNumber(t, line), ParseNumber(v, line));
      }
      return CoefficientFn::Piecewise(std::move(steps));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    ParseError(line, kind.column, e.what());
  }
  ParseError(line, kind.column,
             "unknown coefficient kind '" + std::string(kind.text) + "'");
}

const std::vector<std::string>& DynamicKeys() {
  static const std::vector<std::string> keys = {
      "a0", "a1", "a2", "a3", "a4", "b0", "c0", "c1", "c2", "c3", "d0"};
  return keys;
}

CoefficientFn GameDynamics::*DynamicMember(const std::string& key) {
  static const std::map<std::string, CoefficientFn GameDynamics::*> members = {
      {"a0", &GameDynamics::a0}, {"a1", &GameDynamics::a1},
      {"a2", &GameDynamics::a2}, {"a3", &GameDynamics::a3},
      {"a4", &GameDynamics::a4}, {"b0", &GameDynamics::b0},
      {"c0", &GameDynamics::c0}, {"c1", &GameDynamics::c1},
      {"c2", &GameDynamics::c2}, {"c3", &GameDynamics::c3},
      {"d0", &GameDynamics::d0}};
  return members.at(key);
}

struct Entry {
  Token value;
  int line = 0;
  int key_column = 0;
};

std::string FormatDouble(double v) {
  // Shortest text that reads back to the same double.
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string FormatCoefficient(const CoefficientFn& fn) {
  std::string s;
  switch (fn.kind()) {
    case CoefficientFn::Kind::kConstant:
      return "{constant, " + FormatDouble(fn(0.0)) + "}";
    case CoefficientFn::Kind::kPolynomial:
      s = "{polynomial";
      for (double c : fn.coefficients()) s += ", " + FormatDouble(c);
      return s + "}";
    case CoefficientFn::Kind::kPiecewiseConstant:
      s = "{piecewise";
      for (const auto& [t, v] : fn.steps()) {
        s += ", " + FormatDouble(t) + ":" + FormatDouble(v);
      }
      return s + "}";
  }
  return s;
}

void WriteDynamics(std::ostringstream& out, const GameDynamics& d) {
  out << "horizon = " << FormatDouble(d.horizon) << '\n'
      << "info = "
      << (d.info == InfoStructure::kWFiltration ? "w-filtration" : "full")
      << '\n'
      << "M = " << FormatDouble(d.M) << '\n'
      << "kappa0 = " << FormatDouble(d.terminal.kappa0) << '\n'
      << "kappa1 = " << FormatDouble(d.terminal.kappa1) << '\n';
  for (const auto& key : DynamicKeys()) {
    out << key << " = " << FormatCoefficient(d.*DynamicMember(key)) << '\n';
  }
}

}  // namespace

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ParsedConfig ParseConfig(std::string_view text) {
  std::map<std::string, Entry> entries;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const Token whole = Trim(line, 1);
    if (whole.text.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      ParseError(line_no, whole.column, "expected 'key = value'");
    }
    const Token key = Trim(line.substr(0, eq), 1);
    const Token value = Trim(line.substr(eq + 1), static_cast<int>(eq) + 2);
    if (key.text.empty()) ParseError(line_no, whole.column, "missing key");
    if (value.text.empty()) {
      ParseError(line_no, static_cast<int>(eq) + 2,
                 "missing value for '" + std::string(key.text) + "'");
    }
    const std::string k(key.text);
    if (entries.count(k)) {
      throw Error(ErrorCode::kSchema, "duplicate field '" + k + "' on line " +
                                          std::to_string(line_no));
    }
    entries[k] = {value, line_no, key.column};
  }

  std::set<std::string> used;
  auto take = [&](const std::string& key) -> const Entry* {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };
  auto require = [&](const std::string& key) -> const Entry& {
    const Entry* e = take(key);
    if (!e) throw Error(ErrorCode::kSchema, "missing field '" + key + "'");
    return *e;
  };

  bool zero_sum = false;
  if (const Entry* e = take("type")) {
    if (e->value.text == "zero-sum") {
      zero_sum = true;
    } else if (e->value.text != "nonzero-sum") {
      throw Error(ErrorCode::kSchema,
                  "field 'type' must be nonzero-sum or zero-sum");
    }
  }

  GameDynamics dyn;
  {
    const Entry& h = require("horizon");
    dyn.horizon = ParseNumber(h.value, h.line);
    const Entry& m = require("M");
    dyn.M = ParseNumber(m.value, m.line);
  }
  if (const Entry* e = take("info")) {
    if (e->value.text == "w-filtration") {
      dyn.info = InfoStructure::kWFiltration;
    } else if (e->value.text == "full") {
      dyn.info = InfoStructure::kFull;
    } else {
      throw Error(ErrorCode::kSchema, "field 'info' must be w-filtration or full");
    }
  }
  if (const Entry* e = take("kappa0")) {
    dyn.terminal.kappa0 = ParseNumber(e->value, e->line);
  }
  if (const Entry* e = take("kappa1")) {
    dyn.terminal.kappa1 = ParseNumber(e->value, e->line);
  }
  for (const auto& key : DynamicKeys()) {
    if (const Entry* e = take(key)) {
      dyn.*DynamicMember(key) = ParseCoefficient(e->value, e->line);
    }
  }

  ParsedConfig parsed;
  if (zero_sum) {
    ZeroSumSpec spec;
    static_cast<GameDynamics&>(spec) = dyn;
    for (int k = 1; k <= 6; ++k) {
      if (const Entry* e = take("l" + std::to_string(k))) {
        spec.l[k - 1] = ParseCoefficient(e->value, e->line);
      }
    }
    const Entry& r1 = require("r1");
    spec.r1 = ParseCoefficient(r1.value, r1.line);
    const Entry& r2 = require("r2");
    spec.r2 = ParseCoefficient(r2.value, r2.line);
    parsed.spec = spec;
  } else {
    LqGameSpec spec;
    static_cast<GameDynamics&>(spec) = dyn;
    for (int i = 1; i <= 2; ++i) {
      for (int k = 1; k <= 7; ++k) {
        const std::string key = "e" + std::to_string(i) + std::to_string(k);
        const Entry* e = k == 7 ? &require(key) : take(key);
        if (e) spec.weight(i, k) = ParseCoefficient(e->value, e->line);
      }
    }
    parsed.spec = spec;
  }

  RunConfig& cfg = parsed.config;
  if (const Entry* e = take("depth")) {
    cfg.steps = static_cast<int>(ParseUnsigned(e->value, e->line));
  }
  if (const Entry* e = take("paths")) {
    cfg.paths = static_cast<int>(ParseUnsigned(e->value, e->line));
  }
  if (const Entry* e = take("seed")) cfg.seed = ParseUnsigned(e->value, e->line);
  if (const Entry* e = take("tol")) cfg.tol = ParseNumber(e->value, e->line);

  for (const auto& [key, entry] : entries) {
    if (!used.count(key)) {
      throw Error(ErrorCode::kSchema, "unknown field '" + key + "' on line " +
                                          std::to_string(entry.line));
    }
  }
  return parsed;
}

std::string SerializeSpec(const GameSpec& spec) {
  std::ostringstream out;
  if (const auto* lq = std::get_if<LqGameSpec>(&spec)) {
    out << "type = nonzero-sum\n";
    WriteDynamics(out, *lq);
    for (int i = 1; i <= 2; ++i) {
      for (int k = 1; k <= 7; ++k) {
        out << 'e' << i << k << " = " << FormatCoefficient(lq->weight(i, k))
            << '\n';
      }
    }
  } else {
    const auto& zs = std::get<ZeroSumSpec>(spec);
    out << "type = zero-sum\n";
    WriteDynamics(out, zs);
    for (int k = 1; k <= 6; ++k) {
      out << 'l' << k << " = " << FormatCoefficient(zs.l[k - 1]) << '\n';
    }
    out << "r1 = " << FormatCoefficient(zs.r1) << '\n'
        << "r2 = " << FormatCoefficient(zs.r2) << '\n';
  }
  return out.str();
}

}  // namespace fbdsde
