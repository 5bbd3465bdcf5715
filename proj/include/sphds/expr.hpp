#pragma once

#include <memory>
#include <string>

#include "sphds/types.hpp"

#include "json.hpp"

namespace sphds {

/// Variable layout for compiled expressions. Slots are ordered
/// [x0..x_{n1-1} | z0..z_{n2-1} | v0..v_{nv-1} | s]; an expression only
/// sees the blocks its context declares.
struct VarLayout {
  int n1 = 0;
  int n2 = 0;
  int nv = 0;
  bool has_s = false;

  int total() const { return n1 + n2 + nv + (has_s ? 1 : 0); }
  /// Slot index of a named variable ("x0", "z3", "v1", "s"), or -1.
  int slot(const std::string& name) const;
};

/// Compiled scalar expression over a fixed variable layout.
///
/// Node vocabulary (JSON): const, var, poly (multivariate monomials),
/// poly1 (univariate polynomial of a subexpression), sum, max, min,
/// norm_of (Euclidean norm of a vector of subexpressions), abs.
/// Every node supports exact evaluation and a Clarke-style subgradient
/// bundle: smooth nodes return a single gradient, max/min return all
/// active branches at ties, norms at the origin return the +/- unit
/// selections.
class Expr {
 public:
  virtual ~Expr() = default;
  virtual double value(const double* vars) const = 0;
  /// Subgradient selections with respect to every slot of the layout.
  virtual std::vector<Vector> gradients(const double* vars, int n_slots) const = 0;
  /// The JSON this expression was compiled from.
  const nlohmann::json& source() const { return source_; }

 protected:
  friend std::shared_ptr<const Expr> compile_expr(const nlohmann::json&, const VarLayout&);
  nlohmann::json source_;
};

using ExprPtr = std::shared_ptr<const Expr>;

/// Compiles a JSON expression against a layout. Throws std::invalid_argument
/// on unknown nodes or variables.
ExprPtr compile_expr(const nlohmann::json& spec, const VarLayout& layout);

double eval_expr(const Expr& e, const Vector& vars);
std::vector<Vector> expr_gradients(const Expr& e, const Vector& vars);

}  // namespace sphds
