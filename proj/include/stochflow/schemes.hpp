// One-step flow maps for the Neumann, Magnus, uniformly accurate
// Magnus and additive-noise Runge-Kutta 3/2 schemes, path integration
// by flow composition, and the per-step evaluation/quadrature effort
// models.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochflow/integrals.hpp"
#include "stochflow/matrix.hpp"
#include "stochflow/shuffle.hpp"
#include "stochflow/system.hpp"
#include "stochflow/wiener.hpp"
#include "stochflow/word.hpp"

namespace stochflow {

enum class SchemeFamily { neumann, magnus, magnus_ua, rk32 };

struct Scheme {
  SchemeFamily family = SchemeFamily::neumann;
  double order = 0.5;  // global strong order M
  // Include the h^2/12 double-commutator correction terms recommended
  // for the order-1 Magnus scheme on non-commuting systems.
  bool correction = false;
  // Replace the exactly-known J_{ii} a_i^2 terms of the order-1/2
  // Neumann scheme by their expectations (h/2) a_i^2.
  bool jii_expectation = false;
  std::string label;
};

inline Scheme parse_scheme(const std::string& label) {
  Scheme s;
  s.label = label;
  if (label == "neumann-05") { s.family = SchemeFamily::neumann; s.order = 0.5; }
  else if (label == "neumann-1") { s.family = SchemeFamily::neumann; s.order = 1.0; }
  else if (label == "neumann-15") { s.family = SchemeFamily::neumann; s.order = 1.5; }
  else if (label == "magnus-05") { s.family = SchemeFamily::magnus; s.order = 0.5; }
  else if (label == "magnus-1") { s.family = SchemeFamily::magnus; s.order = 1.0; }
  else if (label == "magnus-15") { s.family = SchemeFamily::magnus; s.order = 1.5; }
  else if (label == "magnus-ua-1") { s.family = SchemeFamily::magnus_ua; s.order = 1.0; }
  else if (label == "magnus-ua-15") { s.family = SchemeFamily::magnus_ua; s.order = 1.5; }
  else if (label == "rk32-additive") { s.family = SchemeFamily::rk32; s.order = 1.5; }
  else throw std::invalid_argument("unknown scheme: " + label);
  return s;
}

inline std::vector<std::string> scheme_labels() {
  return {"neumann-05", "neumann-1",    "neumann-15",
          "magnus-05",  "magnus-1",     "magnus-15",
          "magnus-ua-1", "magnus-ua-15", "rk32-additive"};
}

/// One additive term of a scheme: a scalar built from table entries
/// (a polynomial in J values) or a deterministic c * h^k coefficient,
/// times a fixed matrix.
struct SchemeTerm {
  JExpr expr;           // used when deterministic == false
  double det_coeff = 0.0;
  int det_power = 0;    // value = det_coeff * h^det_power
  bool deterministic = false;
  Matrix coeff;
};

struct FlowStep {
  Matrix map;
  FlopTally effort;
};

/// Group of integrals sharing one quadrature loop in the effort model:
/// `count` sums with exponent taken from the representative word's
/// shuffle classification.
struct QuadGroup {
  Word representative;
  int count = 1;
};

/// Compiled form of (scheme, system): term list with precomputed
/// matrix coefficients, required-word lists and effort constants.
class CompiledScheme {
 public:
  CompiledScheme(const Scheme& scheme, const LinearSDESystem& sys)
      : scheme_(scheme), sys_(sys) {
    if (scheme.family == SchemeFamily::rk32)
      throw std::invalid_argument("rk32-additive applies to Riccati problems; use Rk32Integrator");
    if (scheme.family == SchemeFamily::magnus_ua && !sys.commuting_diffusion)
      throw std::invalid_argument(
          "magnus-ua schemes require commuting diffusion vector fields");
    build_terms();
    // Drop terms whose matrix coefficient vanishes for this system and
    // collect the words the integral table must provide.
    std::vector<SchemeTerm> kept;
    for (auto& t : terms_) {
      if (t.coeff.is_zero(0.0)) continue;
      if (!t.deterministic)
        for (const auto& [m, c] : t.expr)
          for (const Word& w : m)
            if (expectation_set_.count(w))
              expectation_words_.insert(w);
            else
              value_words_.insert(w);
      kept.push_back(std::move(t));
    }
    terms_ = std::move(kept);
  }

  const Scheme& scheme() const { return scheme_; }
  const LinearSDESystem& system() const { return sys_; }

  std::vector<Word> required_value_words() const {
    return {value_words_.begin(), value_words_.end()};
  }
  std::vector<Word> required_expectation_words() const {
    return {expectation_words_.begin(), expectation_words_.end()};
  }

  /// Number of retained (nonzero) term matrices.
  int n_terms() const { return static_cast<int>(terms_.size()); }

  /// Matrix-combination flops per step: c_M p^2 with c_M = 2 n - 1
  /// (n scaled matrix additions into the accumulator).
  std::uint64_t c_M() const { return terms_.empty() ? 0 : 2 * terms_.size() - 1; }

  /// Exponential cost per step (nominal 6 p^3 for Magnus families).
  std::uint64_t c_E() const {
    if (scheme_.family == SchemeFamily::neumann) return 0;
    const std::uint64_t p = static_cast<std::uint64_t>(sys_.p);
    return 6 * p * p * p;
  }

  std::uint64_t eval_flops_per_step() const {
    const std::uint64_t p = static_cast<std::uint64_t>(sys_.p);
    return c_M() * p * p + c_E();
  }

  /// Quadrature loop groups (deduplicated: one loop per Levy pair, per
  /// (i,i,j) ordered pair, per (i,0), two double loops per distinct
  /// triple).
  std::vector<QuadGroup> quad_groups() const {
    std::vector<QuadGroup> out;
    std::set<Word> seen;
    for (const Word& w : value_words_) {
      const WordStats st = word_stats(w);
      if (st.constant || w.size() == 1) continue;  // exact, no loop
      Word canon = w;
      if (w.size() == 2) {
        // One loop serves the pair (ij, ji) / (i0, 0i).
        canon = w;
        Word rev{w[1], w[0]};
        if (rev < canon) canon = rev;
      } else if (w.size() == 3 && distinct_letters(w) == 3) {
        std::sort(canon.begin(), canon.end());
      } else if (w.size() == 3 && distinct_letters(w) == 2) {
        // Single-sum family: one loop per generator word; reductions of
        // the remaining arrangements reuse it. Canonical generator puts
        // the repeated letter first (i i j / i i 0 pattern).
        int rep = -1, single = -1;
        std::map<int, int> counts;
        for (int c : w) ++counts[c];
        for (auto& [letter, cnt] : counts) (cnt == 2 ? rep : single) = letter;
        canon = {rep, rep, single};
      }
      if (!seen.insert(canon).second) continue;
      QuadGroup g;
      g.representative = canon;
      g.count = (canon.size() == 3 && distinct_letters(canon) == 3) ? 2 : 1;
      out.push_back(g);
    }
    return out;
  }

  /// Modeled quadrature operations for one step at lattice size Q per
  /// group (Q chosen per word by q_for_word).
  std::uint64_t quad_ops_per_step(double h) const {
    std::uint64_t total = 0;
    for (const QuadGroup& g : quad_groups()) {
      const std::int64_t Q = q_for_word(g.representative, h, scheme_.order);
      total += static_cast<std::uint64_t>(g.count) * quad_cost(g.representative, Q);
    }
    return total;
  }

  /// Largest per-word lattice size the scheme needs at stepsize h.
  std::int64_t required_Q(double h) const {
    std::int64_t q = 1;
    for (const Word& w : value_words_) {
      const WordStats st = word_stats(w);
      if (st.constant || w.size() == 1) continue;
      q = std::max(q, q_for_word(w, h, scheme_.order));
    }
    return q;
  }

  /// Assembles the one-step flow map from a populated integral table.
  FlowStep step(const IntegralTable& table, FlopTally* tally = nullptr) const {
    for (const Word& w : value_words_)
      if (!table.has(w))
        throw std::invalid_argument("integral table missing word " + word_str(w) +
                                    " required by " + scheme_.label);
    for (const Word& w : expectation_words_)
      if (!table.has(w))
        throw std::invalid_argument("integral table missing word " + word_str(w) +
                                    " required by " + scheme_.label);
    const double h = table.h;
    Matrix S(sys_.p, sys_.p);
    auto lookup = [&](const Word& w) { return table.at(w); };
    for (const SchemeTerm& t : terms_) {
      const double v = t.deterministic
                           ? t.det_coeff * std::pow(h, t.det_power)
                           : expr_eval(t.expr, lookup);
      if (v != 0.0) S += v * t.coeff;
    }
    FlowStep out;
    if (scheme_.family == SchemeFamily::neumann) {
      out.map = Matrix::identity(sys_.p) + S;
      if (tally) tally->add("eval_flops", eval_flops_per_step());
    } else {
      FlopTally dummy;
      out.map = expm(S, &dummy);
      if (tally) tally->add("eval_flops", eval_flops_per_step());
    }
    if (tally) tally->add("quad_ops", quad_ops_per_step(h));
    if (!out.map.is_finite())
      throw std::runtime_error("non-finite flow map in scheme " + scheme_.label);
    return out;
  }

 private:
  void add_word_term(const Word& w, const Matrix& coeff, bool expectation_only) {
    SchemeTerm t;
    t.expr = expr_from_word(w);
    t.coeff = coeff;
    terms_.push_back(std::move(t));
    if (expectation_only) expectation_set_.insert(w);
  }
  void add_expr_term(const JExpr& e, const Matrix& coeff) {
    SchemeTerm t;
    t.expr = e;
    t.coeff = coeff;
    terms_.push_back(std::move(t));
  }
  void add_det_term(double c, int power, const Matrix& coeff) {
    SchemeTerm t;
    t.deterministic = true;
    t.det_coeff = c;
    t.det_power = power;
    t.coeff = coeff;
    terms_.push_back(std::move(t));
  }

  // Matrix coefficient of a word: letters left-to-right in time order
  // multiply as a_{w_l} ... a_{w_1} (latest letter leftmost).
  Matrix word_matrix(const Word& w) const {
    Matrix m = Matrix::identity(sys_.p);
    for (auto it = w.rbegin(); it != w.rend(); ++it) m = m * sys_.a[*it];
    return m;
  }

  void build_terms() {
    const int d = sys_.d;
    const auto& a = sys_.a;
    const double M = scheme_.order;
    const bool neumann = scheme_.family == SchemeFamily::neumann;

    if (scheme_.family == SchemeFamily::magnus_ua) {
      // Definition of the uniformly accurate integrators.
      add_word_term(Word{0}, a[0], false);
      for (int i = 1; i <= d; ++i) {
        add_word_term(Word{i}, a[i], false);
        add_det_term(1.0 / 12.0, 2, commutator(a[i], commutator(a[i], a[0])));
        if (M >= 1.5) {
          JExpr e = expr_from_word(Word{i, 0}, Rational(1, 2));
          e = expr_sum(e, expr_from_word(Word{0, i}, Rational(-1, 2)));
          add_expr_term(e, commutator(a[0], a[i]));
        }
      }
      return;
    }

    // Order 1/2 layer.
    add_word_term(Word{0}, a[0], false);
    for (int i = 1; i <= d; ++i) add_word_term(Word{i}, a[i], false);
    if (neumann) {
      for (int i = 1; i <= d; ++i) {
        if (scheme_.jii_expectation)
          add_det_term(0.5, 1, a[i] * a[i]);
        else
          add_word_term(Word{i, i}, a[i] * a[i], false);
      }
    }

    if (M >= 1.0) {
      if (neumann) {
        for (int i = 1; i <= d; ++i)
          for (int j = 1; j <= d; ++j)
            if (i != j) add_word_term(Word{i, j}, word_matrix({i, j}), false);
      } else {
        for (int i = 1; i <= d; ++i)
          for (int j = i + 1; j <= d; ++j) {
            JExpr e = expr_from_word(Word{j, i}, Rational(1, 2));
            e = expr_sum(e, expr_from_word(Word{i, j}, Rational(-1, 2)));
            add_expr_term(e, commutator(a[i], a[j]));
          }
        if (scheme_.correction) {
          // Recommended h^2/12 compensation of the higher-order Magnus
          // remainder cross terms on non-commuting systems.
          for (int i = 1; i <= d; ++i)
            for (int j = i + 1; j <= d; ++j) {
              const Matrix corr =
                  a[i] * commutator(a[j], commutator(a[j], a[i])) +
                  a[j] * commutator(a[i], commutator(a[i], a[j]));
              add_det_term(1.0 / 12.0, 2, corr);
            }
        }
      }
    }

    if (M >= 1.5) {
      if (neumann) {
        for (int i = 1; i <= d; ++i) {
          add_word_term(Word{i, 0}, a[0] * a[i], false);
          add_word_term(Word{0, i}, a[i] * a[0], false);
        }
        for (int i = 1; i <= d; ++i)
          for (int j = 1; j <= d; ++j)
            for (int k = 1; k <= d; ++k)
              add_word_term(Word{k, j, i}, word_matrix({k, j, i}), false);
        // Order-2 terms with nonzero expectation, taken in expectation.
        add_word_term(Word{0, 0}, a[0] * a[0], true);
        for (int i = 1; i <= d; ++i) {
          add_word_term(Word{0, i, i}, a[i] * a[i] * a[0], true);
          add_word_term(Word{i, i, 0}, a[0] * a[i] * a[i], true);
        }
        for (int i = 1; i <= d; ++i)
          for (int j = 1; j <= d; ++j)
            add_word_term(Word{i, i, j, j}, a[j] * a[j] * a[i] * a[i], true);
      } else {
        for (int i = 1; i <= d; ++i) {
          JExpr e = expr_from_word(Word{i, 0}, Rational(1, 2));
          e = expr_sum(e, expr_from_word(Word{0, i}, Rational(-1, 2)));
          add_expr_term(e, commutator(a[0], a[i]));
        }
        for (int i = 1; i <= d; ++i)
          for (int j = 1; j <= d; ++j) {
            if (i == j) continue;
            JExpr e = expr_from_word(Word{i, i, j});
            JExpr prod;
            expr_add(prod, make_monomial({Word{i}, Word{i, j}}), Rational(-1, 2));
            expr_add(prod, make_monomial({Word{i}, Word{i}, Word{j}}), Rational(1, 12));
            e = expr_sum(e, prod);
            add_expr_term(e, commutator(a[i], commutator(a[i], a[j])));
          }
        for (int i = 1; i <= d; ++i)
          for (int j = i + 1; j <= d; ++j)
            for (int k = j + 1; k <= d; ++k) {
              JExpr e1 = expr_from_word(Word{i, j, k});
              expr_add(e1, make_monomial({Word{j}, Word{k, i}}), Rational(1, 2));
              expr_add(e1, make_monomial({Word{k}, Word{i, j}}), Rational(1, 2));
              expr_add(e1, make_monomial({Word{i}, Word{j}, Word{k}}), Rational(-2, 3));
              add_expr_term(e1, commutator(a[i], commutator(a[j], a[k])));
              JExpr e2 = expr_from_word(Word{j, i, k});
              expr_add(e2, make_monomial({Word{i}, Word{k, j}}), Rational(1, 2));
              expr_add(e2, make_monomial({Word{k}, Word{j, i}}), Rational(1, 2));
              expr_add(e2, make_monomial({Word{i}, Word{j}, Word{k}}), Rational(-2, 3));
              add_expr_term(e2, commutator(a[j], commutator(a[i], a[k])));
            }
        for (int i = 1; i <= d; ++i) {
          JExpr e = expr_from_word(Word{i, i, 0});
          expr_add(e, make_monomial({Word{i}, Word{i, 0}}), Rational(-1, 2));
          expr_add(e, make_monomial({Word{i}, Word{i}, Word{0}}), Rational(1, 12));
          add_expr_term(e, commutator(a[i], commutator(a[i], a[0])));
        }
      }
    }
  }

  Scheme scheme_;
  LinearSDESystem sys_;
  std::vector<SchemeTerm> terms_;
  std::set<Word> value_words_;
  std::set<Word> expectation_words_;
  std::set<Word> expectation_set_;
};

/// Convenience wrappers mirroring the documented per-step effort
/// constants.
inline std::uint64_t eval_flops(const std::string& scheme_label,
                                const LinearSDESystem& sys) {
  return CompiledScheme(parse_scheme(scheme_label), sys).eval_flops_per_step();
}

struct IntegrationResult {
  std::vector<std::vector<double>> trajectory;  // columns flattened, t_0..t_N
  FlopTally effort;
};

/// Composes flow maps across the grid: state_{n+1} = map_n * state_n.
/// The state is a p x m matrix (m = 1 for vector initial data).
inline Matrix integrate_state(const CompiledScheme& cs, const WienerGrid& grid,
                              Matrix state, FlopTally* tally = nullptr,
                              IntegralMode mode = IntegralMode::linear_path,
                              std::vector<Matrix>* trajectory = nullptr) {
  if (grid.d != cs.system().d)
    throw std::invalid_argument("integrate: grid and system driving dimensions differ");
  TableBuilder builder(cs.required_value_words(), cs.required_expectation_words(), mode);
  if (trajectory) trajectory->push_back(state);
  IntegralTable table;  // keys fixed across steps; values updated in place
  for (std::int64_t n = 0; n < grid.N; ++n) {
    const StepSlice slice = StepSlice::from_grid(grid, n);
    builder.update(table, slice, n);
    const FlowStep fs = cs.step(table, tally);
    state = fs.map * state;
    if (!state.is_finite())
      throw std::runtime_error("integrate: non-finite state at step " + std::to_string(n));
    if (trajectory) trajectory->push_back(state);
  }
  return state;
}

inline IntegrationResult integrate(const Scheme& scheme, const LinearSDESystem& sys,
                                   const WienerGrid& grid,
                                   const std::vector<double>& y0,
                                   IntegralMode mode = IntegralMode::linear_path) {
  if (static_cast<int>(y0.size()) != sys.p)
    throw std::invalid_argument("integrate: initial state dimension mismatch");
  CompiledScheme cs(scheme, sys);
  Matrix state(sys.p, 1);
  for (int i = 0; i < sys.p; ++i) state(i, 0) = y0[i];
  std::vector<Matrix> traj;
  IntegrationResult out;
  integrate_state(cs, grid, state, &out.effort, mode, &traj);
  for (const Matrix& m : traj) {
    std::vector<double> col(sys.p);
    for (int i = 0; i < sys.p; ++i) col[i] = m(i, 0);
    out.trajectory.push_back(std::move(col));
  }
  return out;
}

/// One step of the additive-noise Runge-Kutta order-3/2 scheme applied
/// directly to the Riccati equation: J[i-1] and J10[i-1] carry J_i and
/// J_{i0} for the step.
inline Matrix rk32_step(const RiccatiProblem& r, const Matrix& S, double h,
                        const std::vector<double>& J,
                        const std::vector<double>& J10) {
  const double sqh = std::sqrt(h);
  const Matrix fS = r.f(S);
  Matrix next = S + h * fS;
  Matrix corr = Matrix::zeros(r.p, r.p);
  Matrix grad = Matrix::zeros(r.p, r.p);
  for (int j = 1; j <= r.d; ++j) {
    next += J[j - 1] * r.D[j];
    const Matrix base = S + (h / 2.0) * fS;
    const Matrix fp = r.f(base + sqh * r.D[j]);
    const Matrix fm = r.f(base - sqh * r.D[j]);
    corr += (h / 4.0) * (fp + fm - 2.0 * fS);
    grad += (1.0 / (2.0 * sqh)) * J10[j - 1] * (fp - fm);
  }
  return next + corr + grad;
}

/// Integrates the Riccati problem with the RK 3/2 scheme over the grid
/// (J_{i0} conditioned on the lattice increments).
inline Matrix integrate_rk32(const RiccatiProblem& r, const WienerGrid& grid,
                             FlopTally* tally = nullptr,
                             IntegralMode mode = IntegralMode::linear_path) {
  if (grid.d != r.d)
    throw std::invalid_argument("integrate_rk32: driving dimension mismatch");
  std::vector<Word> words;
  for (int i = 1; i <= r.d; ++i) words.push_back(Word{i, 0});
  TableBuilder builder(words, {}, mode);
  Matrix S = r.u0;
  const std::uint64_t p3 = static_cast<std::uint64_t>(r.p) * r.p * r.p;
  const std::uint64_t p2 = static_cast<std::uint64_t>(r.p) * r.p;
  for (std::int64_t n = 0; n < grid.N; ++n) {
    const StepSlice slice = StepSlice::from_grid(grid, n);
    const IntegralTable table = builder.build(slice, n);
    std::vector<double> J(r.d), J10(r.d);
    for (int i = 1; i <= r.d; ++i) {
      J[i - 1] = slice.step_increment(i);
      J10[i - 1] = table.at(Word{i, 0});
    }
    S = rk32_step(r, S, slice.h(), J, J10);
    if (!S.is_finite())
      throw std::runtime_error("integrate_rk32: non-finite state at step " +
                               std::to_string(n));
    if (tally) {
      tally->add("eval_flops", 20 * p3 + 54 * p2);
      std::uint64_t q = 0;
      for (int i = 1; i <= r.d; ++i)
        q += quad_cost(Word{i, 0}, q_for_word(Word{i, 0}, slice.h(), 1.5));
      tally->add("quad_ops", q);
    }
  }
  return S;
}

}  // namespace stochflow
