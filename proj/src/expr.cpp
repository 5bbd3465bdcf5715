#include "sphds/expr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sphds {

namespace {

constexpr std::size_t kMaxSelections = 32;

Vector zeros(int n) { return Vector(static_cast<std::size_t>(n), 0.0); }

void cap_selections(std::vector<Vector>& sels) {
  if (sels.size() > kMaxSelections) sels.resize(kMaxSelections);
}

// Cartesian sum of two selection sets with de-duplication.
std::vector<Vector> combine_sum(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  std::vector<Vector> out;
  for (const auto& ga : a)
    for (const auto& gb : b) {
      Vector g = ga;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gb[i];
      if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
    }
  cap_selections(out);
  return out;
}

std::vector<Vector> scale_all(std::vector<Vector> sels, double c) {
  for (auto& g : sels)
    for (auto& v : g) v *= c;
  return sels;
}

class ConstExpr final : public Expr {
 public:
  explicit ConstExpr(double c) : c_(c) {}
  double value(const double*) const override { return c_; }
  std::vector<Vector> gradients(const double*, int n) const override { return {zeros(n)}; }

 private:
  double c_;
};

class VarExpr final : public Expr {
 public:
  explicit VarExpr(int slot) : slot_(slot) {}
  double value(const double* vars) const override { return vars[slot_]; }
  std::vector<Vector> gradients(const double*, int n) const override {
    Vector g = zeros(n);
    g[static_cast<std::size_t>(slot_)] = 1.0;
    return {g};
  }

 private:
  int slot_;
};

struct Monomial {
  double coef = 0.0;
  std::vector<std::pair<int, int>> powers;  // (slot, exponent > 0)
};

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

class PolyExpr final : public Expr {
 public:
  explicit PolyExpr(std::vector<Monomial> terms) : terms_(std::move(terms)) {}

  double value(const double* vars) const override {
    double s = 0.0;
    for (const auto& t : terms_) {
      double m = t.coef;
      for (auto [slot, p] : t.powers) m *= ipow(vars[slot], p);
      s += m;
    }
    return s;
  }

  std::vector<Vector> gradients(const double* vars, int n) const override {
    Vector g = zeros(n);
    for (const auto& t : terms_) {
      for (std::size_t k = 0; k < t.powers.size(); ++k) {
        auto [slot, p] = t.powers[k];
        double m = t.coef * static_cast<double>(p) * ipow(vars[slot], p - 1);
        for (std::size_t o = 0; o < t.powers.size(); ++o) {
          if (o == k) continue;
          m *= ipow(vars[t.powers[o].first], t.powers[o].second);
        }
        g[static_cast<std::size_t>(slot)] += m;
      }
    }
    return {g};
  }

 private:
  std::vector<Monomial> terms_;
};

// Univariate polynomial of a subexpression; chain rule for gradients.
class Poly1Expr final : public Expr {
 public:
  Poly1Expr(ExprPtr arg, Vector coeffs) : arg_(std::move(arg)), coeffs_(std::move(coeffs)) {}

  double value(const double* vars) const override {
    double u = arg_->value(vars);
    double s = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) s = s * u + coeffs_[k];
    return s;
  }

  std::vector<Vector> gradients(const double* vars, int n) const override {
    double u = arg_->value(vars);
    double d = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;)
      d = d * u + coeffs_[k] * static_cast<double>(k);
    return scale_all(arg_->gradients(vars, n), d);
  }

 private:
  ExprPtr arg_;
  Vector coeffs_;
};

class SumExpr final : public Expr {
 public:
  explicit SumExpr(std::vector<ExprPtr> args) : args_(std::move(args)) {}

  double value(const double* vars) const override {
    double s = 0.0;
    for (const auto& a : args_) s += a->value(vars);
    return s;
  }

  std::vector<Vector> gradients(const double* vars, int n) const override {
    std::vector<Vector> acc = {zeros(n)};
    for (const auto& a : args_) acc = combine_sum(acc, a->gradients(vars, n));
    return acc;
  }

 private:
  std::vector<ExprPtr> args_;
};

class MinMaxExpr final : public Expr {
 public:
  MinMaxExpr(std::vector<ExprPtr> args, bool is_max) : args_(std::move(args)), is_max_(is_max) {}

  double value(const double* vars) const override {
    double best = args_.front()->value(vars);
    for (std::size_t i = 1; i < args_.size(); ++i) {
      double v = args_[i]->value(vars);
      best = is_max_ ? std::max(best, v) : std::min(best, v);
    }
    return best;
  }

  std::vector<Vector> gradients(const double* vars, int n) const override {
    double best = value(vars);
    std::vector<Vector> out;
    for (const auto& a : args_) {
      if (a->value(vars) == best) {
        for (auto& g : a->gradients(vars, n))
          if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(std::move(g));
      }
    }
    cap_selections(out);
    return out;
  }

 private:
  std::vector<ExprPtr> args_;
  bool is_max_;
};

// Euclidean norm of a vector of subexpressions. Away from the kink the
// gradient is (1/r) sum_k e_k grad(e_k); at r = 0 the bundle holds the
// +/- selections of each component gradient.
class NormExpr final : public Expr {
 public:
  explicit NormExpr(std::vector<ExprPtr> comps) : comps_(std::move(comps)) {}

  double value(const double* vars) const override {
    double s = 0.0;
    for (const auto& c : comps_) {
      double v = c->value(vars);
      s += v * v;
    }
    return std::sqrt(s);
  }

  std::vector<Vector> gradients(const double* vars, int n) const override {
    double r = value(vars);
    if (r > 0.0) {
      std::vector<Vector> acc = {zeros(n)};
      for (const auto& c : comps_) {
        double v = c->value(vars);
        acc = combine_sum(acc, scale_all(c->gradients(vars, n), v / r));
      }
      return acc;
    }
    std::vector<Vector> out;
    for (const auto& c : comps_) {
      for (const auto& g : c->gradients(vars, n)) {
        Vector plus = g, minus = g;
        for (auto& v : minus) v = -v;
        if (std::find(out.begin(), out.end(), plus) == out.end()) out.push_back(std::move(plus));
        if (std::find(out.begin(), out.end(), minus) == out.end()) out.push_back(std::move(minus));
      }
    }
    cap_selections(out);
    return out;
  }

 private:
  std::vector<ExprPtr> comps_;
};

std::vector<ExprPtr> compile_list(const nlohmann::json& arr, const VarLayout& layout) {
  if (!arr.is_array() || arr.empty())
    throw std::invalid_argument("expression list must be a nonempty array");
  std::vector<ExprPtr> out;
  for (const auto& e : arr) out.push_back(compile_expr(e, layout));
  return out;
}

}  // namespace

int VarLayout::slot(const std::string& name) const {
  if (name == "s") return has_s ? n1 + n2 + nv : -1;
  if (name.size() < 2) return -1;
  char block = name[0];
  int idx = -1;
  try {
    idx = std::stoi(name.substr(1));
  } catch (...) {
    return -1;
  }
  if (idx < 0) return -1;
  if (block == 'x' && idx < n1) return idx;
  if (block == 'z' && idx < n2) return n1 + idx;
  if (block == 'v' && idx < nv) return n1 + n2 + idx;
  return -1;
}

ExprPtr compile_expr(const nlohmann::json& spec, const VarLayout& layout) {
  std::shared_ptr<Expr> node;
  if (spec.is_number()) {
    node = std::make_shared<ConstExpr>(spec.get<double>());
  } else if (spec.contains("const")) {
    node = std::make_shared<ConstExpr>(spec.at("const").get<double>());
  } else if (spec.contains("var")) {
    const auto name = spec.at("var").get<std::string>();
    int slot = layout.slot(name);
    if (slot < 0) throw std::invalid_argument("unknown variable '" + name + "' in expression");
    node = std::make_shared<VarExpr>(slot);
  } else if (spec.contains("poly")) {
    std::vector<Monomial> terms;
    for (const auto& t : spec.at("poly")) {
      Monomial m;
      m.coef = t.at("c").get<double>();
      if (t.contains("m")) {
        for (const auto& [name, pw] : t.at("m").items()) {
          int slot = layout.slot(name);
          if (slot < 0) throw std::invalid_argument("unknown variable '" + name + "' in poly");
          int p = pw.get<int>();
          if (p < 1) throw std::invalid_argument("poly exponents must be >= 1");
          m.powers.emplace_back(slot, p);
        }
        std::sort(m.powers.begin(), m.powers.end());
      }
      terms.push_back(std::move(m));
    }
    node = std::make_shared<PolyExpr>(std::move(terms));
  } else if (spec.contains("poly1")) {
    const auto& p = spec.at("poly1");
    node = std::make_shared<Poly1Expr>(compile_expr(p.at("arg"), layout),
                                       p.at("coeffs").get<Vector>());
  } else if (spec.contains("sum")) {
    node = std::make_shared<SumExpr>(compile_list(spec.at("sum"), layout));
  } else if (spec.contains("max")) {
    node = std::make_shared<MinMaxExpr>(compile_list(spec.at("max"), layout), true);
  } else if (spec.contains("min")) {
    node = std::make_shared<MinMaxExpr>(compile_list(spec.at("min"), layout), false);
  } else if (spec.contains("norm_of")) {
    node = std::make_shared<NormExpr>(compile_list(spec.at("norm_of"), layout));
  } else if (spec.contains("abs")) {
    std::vector<ExprPtr> one = {compile_expr(spec.at("abs"), layout)};
    node = std::make_shared<NormExpr>(std::move(one));
  } else {
    throw std::invalid_argument("unrecognized expression node: " + spec.dump());
  }
  node->source_ = spec;
  return node;
}

double eval_expr(const Expr& e, const Vector& vars) { return e.value(vars.data()); }

std::vector<Vector> expr_gradients(const Expr& e, const Vector& vars) {
  return e.gradients(vars.data(), static_cast<int>(vars.size()));
}

}  // namespace sphds
