#include "matnet/lp.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace matnet::lp {

namespace {

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Writes "c1 v1 + c2 v2 - c3 v3", folding lines at ~72 columns.
void write_expr(std::ostringstream& os, const Expr& e, const std::string& indent) {
  int col = 0;
  bool first = true;
  for (const Term& t : e.terms) {
    std::string piece;
    if (first) {
      piece = (t.coef < 0 ? "- " : "");
    } else {
      piece = (t.coef < 0 ? " - " : " + ");
    }
    const double mag = std::abs(t.coef);
    if (mag != 1.0) piece += format_number(mag) + " ";
    piece += t.var;
    if (col > 0 && col + static_cast<int>(piece.size()) > 72) {
      os << "\n" << indent;
      col = static_cast<int>(indent.size());
      if (!first && piece[0] == ' ') piece = piece.substr(1);
    }
    os << piece;
    col += static_cast<int>(piece.size());
    first = false;
  }
  if (first) os << "0 zero_dummy";  // empty expression guard
}

struct Tokenizer {
  std::vector<std::string> tokens;
  std::size_t pos = 0;

  explicit Tokenizer(const std::string& text) {
    std::string cur;
    bool in_comment = false;
    auto flush = [&] {
      if (!cur.empty()) {
        tokens.push_back(cur);
        cur.clear();
      }
    };
    for (char c : text) {
      if (in_comment) {
        if (c == '\n') in_comment = false;
        continue;
      }
      if (c == '\\') {
        in_comment = true;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        flush();
      } else if (c == '+' || c == '-' || c == ':') {
        flush();
        tokens.push_back(std::string(1, c));
      } else if (c == '<' || c == '>' || c == '=') {
        flush();
        if (!tokens.empty() && (tokens.back() == "<" || tokens.back() == ">") && c == '=') {
          // fold "<=" into the previous sense token
        } else {
          tokens.push_back(std::string(1, c));
        }
      } else {
        cur += c;
      }
    }
    flush();
  }

  bool done() const { return pos >= tokens.size(); }
  const std::string& peek() const { return tokens[pos]; }
  std::string next() { return tokens[pos++]; }
};

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool keyword_at(const Tokenizer& tk, std::size_t i, std::string word) {
  if (i >= tk.tokens.size()) return false;
  std::string t = tk.tokens[i];
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return t == word;
}

// Section keywords that terminate an expression.
bool at_section(const Tokenizer& tk) {
  const std::size_t i = tk.pos;
  return keyword_at(tk, i, "subject") || keyword_at(tk, i, "st") || keyword_at(tk, i, "bounds") ||
         keyword_at(tk, i, "binaries") || keyword_at(tk, i, "binary") ||
         keyword_at(tk, i, "generals") || keyword_at(tk, i, "general") ||
         keyword_at(tk, i, "end") || keyword_at(tk, i, "minimize") || keyword_at(tk, i, "maximize");
}

// Parses "coef var + coef var ..." until a sense token or section.
Expr parse_expr(Tokenizer& tk) {
  Expr e;
  double sign = 1;
  std::optional<double> pending_coef;
  while (!tk.done() && !at_section(tk)) {
    const std::string& t = tk.peek();
    if (t == "<" || t == ">" || t == "=") break;
    tk.next();
    if (t == "+") continue;
    if (t == "-") {
      sign = -sign;
      continue;
    }
    if (is_number(t)) {
      pending_coef = sign * std::strtod(t.c_str(), nullptr);
      sign = 1;
      continue;
    }
    const double coef = pending_coef.value_or(sign);
    e.add(coef, t);
    pending_coef.reset();
    sign = 1;
  }
  return e;
}

}  // namespace

void Model::add_constraint(const std::string& cname, Expr lhs, char sense, double rhs) {
  constraints.push_back({cname, std::move(lhs), sense, rhs});
}

void Model::set_bounds(const std::string& var, double lo, double hi) { bounds[var] = {lo, hi}; }

std::string Model::to_lp_text() const {
  std::ostringstream os;
  if (!name.empty()) os << "\\ " << name << "\n";
  os << (maximize ? "Maximize" : "Minimize") << "\n obj: ";
  write_expr(os, objective, "      ");
  os << "\nSubject To\n";
  for (const Constraint& c : constraints) {
    os << " " << c.name << ": ";
    write_expr(os, c.lhs, "      ");
    os << (c.sense == '<' ? " <= " : c.sense == '>' ? " >= " : " = ");
    os << format_number(c.rhs) << "\n";
  }
  if (!bounds.empty()) {
    os << "Bounds\n";
    for (const auto& [var, b] : bounds)
      os << " " << format_number(b.lo) << " <= " << var << " <= " << format_number(b.hi) << "\n";
  }
  if (!binaries.empty()) {
    os << "Binaries\n";
    int col = 0;
    for (const auto& v : binaries) {
      if (col + static_cast<int>(v.size()) > 72) {
        os << "\n";
        col = 0;
      }
      os << " " << v;
      col += static_cast<int>(v.size()) + 1;
    }
    os << "\n";
  }
  if (!generals.empty()) {
    os << "Generals\n";
    for (const auto& v : generals) os << " " << v;
    os << "\n";
  }
  os << "End\n";
  return os.str();
}

Model Model::parse(const std::string& text) {
  Model m;
  Tokenizer tk(text);
  enum Section { None, Objective, Constraints, InBounds, InBinaries, InGenerals } sec = None;
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };

  while (!tk.done()) {
    const std::string kw = lower(tk.peek());
    if (kw == "minimize" || kw == "maximize") {
      m.maximize = kw == "maximize";
      tk.next();
      sec = Objective;
      // optional "obj:" label
      if (!tk.done() && tk.pos + 1 < tk.tokens.size() && tk.tokens[tk.pos + 1] == ":") {
        tk.next();
        tk.next();
      }
      m.objective = parse_expr(tk);
      continue;
    }
    if (kw == "subject") {
      tk.next();
      if (!tk.done() && lower(tk.peek()) == "to") tk.next();
      sec = Constraints;
      continue;
    }
    if (kw == "st") {
      tk.next();
      sec = Constraints;
      continue;
    }
    if (kw == "bounds") {
      tk.next();
      sec = InBounds;
      continue;
    }
    if (kw == "binaries" || kw == "binary") {
      tk.next();
      sec = InBinaries;
      continue;
    }
    if (kw == "generals" || kw == "general") {
      tk.next();
      sec = InGenerals;
      continue;
    }
    if (kw == "end") break;

    switch (sec) {
      case Constraints: {
        std::string cname;
        if (tk.pos + 1 < tk.tokens.size() && tk.tokens[tk.pos + 1] == ":") {
          cname = tk.next();
          tk.next();  // ':'
        }
        Constraint c;
        c.name = cname;
        c.lhs = parse_expr(tk);
        if (tk.done()) throw std::invalid_argument("lp parse: constraint missing sense");
        const std::string sense = tk.next();
        c.sense = sense == "<" ? '<' : sense == ">" ? '>' : '=';
        double rhs_sign = 1;
        while (!tk.done() && (tk.peek() == "+" || tk.peek() == "-"))
          if (tk.next() == "-") rhs_sign = -rhs_sign;
        if (tk.done() || !is_number(tk.peek()))
          throw std::invalid_argument("lp parse: constraint missing rhs");
        c.rhs = rhs_sign * std::strtod(tk.next().c_str(), nullptr);
        m.constraints.push_back(std::move(c));
        break;
      }
      case InBounds: {
        // form: lo <= var <= hi
        if (!is_number(tk.peek())) throw std::invalid_argument("lp parse: bad bounds line");
        const double lo = std::strtod(tk.next().c_str(), nullptr);
        if (tk.next() != "<") throw std::invalid_argument("lp parse: bad bounds line");
        const std::string var = tk.next();
        if (tk.next() != "<") throw std::invalid_argument("lp parse: bad bounds line");
        const double hi = std::strtod(tk.next().c_str(), nullptr);
        m.bounds[var] = {lo, hi};
        break;
      }
      case InBinaries:
        m.binaries.push_back(tk.next());
        break;
      case InGenerals:
        m.generals.push_back(tk.next());
        break;
      default:
        throw std::invalid_argument("lp parse: unexpected token " + tk.peek());
    }
  }
  return m;
}

std::vector<std::string> Model::variables() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto visit = [&](const std::string& v) {
    if (seen.insert(v).second) out.push_back(v);
  };
  for (const Term& t : objective.terms) visit(t.var);
  for (const Constraint& c : constraints)
    for (const Term& t : c.lhs.terms) visit(t.var);
  for (const auto& [v, b] : bounds) visit(v);
  for (const auto& v : binaries) visit(v);
  for (const auto& v : generals) visit(v);
  return out;
}

int Model::count_vars_with_prefix(const std::string& prefix) const {
  int count = 0;
  for (const auto& v : variables())
    if (v.rfind(prefix, 0) == 0) ++count;
  return count;
}

namespace {
double lookup(const std::map<std::string, double>& a, const std::string& var) {
  auto it = a.find(var);
  return it == a.end() ? 0.0 : it->second;
}
}  // namespace

std::optional<std::string> Model::check_feasible(const std::map<std::string, double>& assignment,
                                                 double tol) const {
  for (const auto& v : binaries) {
    const double x = lookup(assignment, v);
    if (std::abs(x) > tol && std::abs(x - 1) > tol)
      return "binary " + v + " = " + std::to_string(x);
  }
  for (const auto& v : generals) {
    const double x = lookup(assignment, v);
    if (std::abs(x - std::round(x)) > tol) return "general " + v + " = " + std::to_string(x);
  }
  for (const auto& [v, b] : bounds) {
    const double x = lookup(assignment, v);
    if (x < b.lo - tol || x > b.hi + tol)
      return "bound " + v + " = " + std::to_string(x) + " outside [" + std::to_string(b.lo) +
             "," + std::to_string(b.hi) + "]";
  }
  for (const Constraint& c : constraints) {
    double lhs = 0;
    for (const Term& t : c.lhs.terms) lhs += t.coef * lookup(assignment, t.var);
    const bool ok = c.sense == '<'   ? lhs <= c.rhs + tol
                    : c.sense == '>' ? lhs >= c.rhs - tol
                                     : std::abs(lhs - c.rhs) <= tol;
    if (!ok)
      return "constraint " + c.name + ": lhs=" + std::to_string(lhs) + " sense " + c.sense +
             " rhs=" + std::to_string(c.rhs);
  }
  return std::nullopt;
}

double Model::objective_value(const std::map<std::string, double>& assignment) const {
  double v = 0;
  for (const Term& t : objective.terms) v += t.coef * lookup(assignment, t.var);
  return v;
}

}  // namespace matnet::lp
