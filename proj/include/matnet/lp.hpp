#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace matnet::lp {

struct Term {
  double coef = 0;
  std::string var;
};

struct Expr {
  std::vector<Term> terms;
  void add(double coef, const std::string& var) { terms.push_back({coef, var}); }
};

struct Constraint {
  std::string name;
  Expr lhs;
  char sense = '<';  // '<' means <=, '>' means >=, '=' equality
  double rhs = 0;
};

struct Bounds {
  double lo = 0;
  double hi = 1e30;  // treated as +inf
};

// Minimal LP-format model: enough to write the exported MIPs and to
// parse them back for feasibility checking in tests. Intentionally not
// a general LP reader; it accepts the dialect this project emits.
struct Model {
  std::string name;
  bool maximize = false;
  Expr objective;
  std::vector<Constraint> constraints;
  std::map<std::string, Bounds> bounds;
  std::vector<std::string> binaries;
  std::vector<std::string> generals;

  void add_constraint(const std::string& cname, Expr lhs, char sense, double rhs);
  void set_bounds(const std::string& var, double lo, double hi);

  std::string to_lp_text() const;
  static Model parse(const std::string& text);

  // All distinct variable names in first-appearance order.
  std::vector<std::string> variables() const;
  // Count variables whose name starts with the prefix.
  int count_vars_with_prefix(const std::string& prefix) const;

  // Checks one assignment (missing vars default to 0) against every
  // constraint, bound and integrality mark. Returns the first
  // violation description, or nullopt when feasible.
  std::optional<std::string> check_feasible(const std::map<std::string, double>& assignment,
                                            double tol = 1e-6) const;
  double objective_value(const std::map<std::string, double>& assignment) const;
};

}  // namespace matnet::lp
