#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace msos {

/// Exponent vector of a monomial x^a = x_1^{a_1} ... x_n^{a_n}.
struct Monomial {
    std::vector<int> exponents;

    int degree() const;
    static Monomial constant(int n);
    static Monomial unit_var(int n, int var);
    Monomial times(const Monomial& other) const;
};

bool operator==(const Monomial& a, const Monomial& b);

/// Strict total order: by total degree, then x_1-major within a degree class,
/// so monomial_basis(2, 2) comes out as 1, x1, x2, x1^2, x1*x2, x2^2.
bool graded_lex_less(const Monomial& a, const Monomial& b);

struct GradedLexLess {
    bool operator()(const Monomial& a, const Monomial& b) const { return graded_lex_less(a, b); }
};

struct Point {
    std::vector<double> coords;
};

/// Sparse multivariate polynomial with double coefficients.
/// Zero coefficients are never stored; the zero polynomial has degree 0.
class Polynomial {
  public:
    using TermMap = std::map<Monomial, double, GradedLexLess>;

    explicit Polynomial(int n);
    static Polynomial constant(int n, double c);
    static Polynomial variable(int n, int var);
    static Polynomial from_terms(int n, const std::vector<std::pair<std::vector<int>, double>>& terms);

    int var_count() const { return n_; }
    int degree() const;
    bool is_zero() const { return terms_.empty(); }
    const TermMap& terms() const { return terms_; }

    double coefficient(const Monomial& m) const;
    void add_term(const Monomial& m, double c);

    double evaluate(const Point& x) const;
    Polynomial multiply(const Polynomial& q) const;
    /// *this + a*q
    Polynomial add_scaled(double a, const Polynomial& q) const;
    Polynomial negate() const;

    double max_abs_coefficient() const;
    std::string to_string() const;

  private:
    int n_ = 0;
    TermMap terms_;
};

std::int64_t binomial(int n, int k);

/// All monomials in n variables of total degree <= d, in graded lex order.
/// Length is C(n+d, n).
std::vector<Monomial> monomial_basis(int n, int d);

double monomial_value(const Monomial& m, const Point& x);

}  // namespace msos
