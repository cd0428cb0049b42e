#include "msos/poly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace msos {

int Monomial::degree() const {
    return std::accumulate(exponents.begin(), exponents.end(), 0);
}

Monomial Monomial::constant(int n) {
    return Monomial{std::vector<int>(n, 0)};
}

Monomial Monomial::unit_var(int n, int var) {
    Monomial m{std::vector<int>(n, 0)};
    m.exponents.at(var) = 1;
    return m;
}

Monomial Monomial::times(const Monomial& other) const {
    if (exponents.size() != other.exponents.size())
        throw std::invalid_argument("monomial dimension mismatch");
    Monomial r = *this;
    for (std::size_t i = 0; i < r.exponents.size(); ++i) r.exponents[i] += other.exponents[i];
    return r;
}

bool operator==(const Monomial& a, const Monomial& b) {
    return a.exponents == b.exponents;
}

bool graded_lex_less(const Monomial& a, const Monomial& b) {
    const int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    // Within a degree class x1^2 precedes x1*x2 precedes x2^2: compare
    // exponent vectors lexicographically, larger vector first.
    return std::lexicographical_compare(b.exponents.begin(), b.exponents.end(),
                                        a.exponents.begin(), a.exponents.end());
}

Polynomial::Polynomial(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("polynomial needs at least one variable");
}

Polynomial Polynomial::constant(int n, double c) {
    Polynomial p(n);
    p.add_term(Monomial::constant(n), c);
    return p;
}

Polynomial Polynomial::variable(int n, int var) {
    Polynomial p(n);
    p.add_term(Monomial::unit_var(n, var), 1.0);
    return p;
}

Polynomial Polynomial::from_terms(int n, const std::vector<std::pair<std::vector<int>, double>>& terms) {
    Polynomial p(n);
    for (const auto& [exp, coef] : terms) {
        if (static_cast<int>(exp.size()) != n) throw std::invalid_argument("exponent length mismatch");
        p.add_term(Monomial{exp}, coef);
    }
    return p;
}

int Polynomial::degree() const {
    if (terms_.empty()) return 0;
    // Graded order: the last stored monomial has maximal total degree.
    return terms_.rbegin()->first.degree();
}

double Polynomial::coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double c) {
    if (static_cast<int>(m.exponents.size()) != n_)
        throw std::invalid_argument("monomial dimension mismatch");
    for (int e : m.exponents)
        if (e < 0) throw std::invalid_argument("negative exponent");
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        if (c != 0.0) terms_.emplace(m, c);
    } else {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

double monomial_value(const Monomial& m, const Point& x) {
    if (m.exponents.size() != x.coords.size())
        throw std::invalid_argument("point dimension mismatch");
    double v = 1.0;
    for (std::size_t i = 0; i < m.exponents.size(); ++i) {
        const double xi = x.coords[i];
        for (int k = 0; k < m.exponents[i]; ++k) v *= xi;
    }
    return v;
}

double Polynomial::evaluate(const Point& x) const {
    if (static_cast<int>(x.coords.size()) != n_)
        throw std::invalid_argument("point dimension mismatch");
    double v = 0.0;
    for (const auto& [m, c] : terms_) v += c * monomial_value(m, x);
    return v;
}

Polynomial Polynomial::multiply(const Polynomial& q) const {
    if (q.n_ != n_) throw std::invalid_argument("polynomial dimension mismatch");
    Polynomial r(n_);
    for (const auto& [ma, ca] : terms_)
        for (const auto& [mb, cb] : q.terms_) r.add_term(ma.times(mb), ca * cb);
    return r;
}

Polynomial Polynomial::add_scaled(double a, const Polynomial& q) const {
    if (q.n_ != n_) throw std::invalid_argument("polynomial dimension mismatch");
    Polynomial r = *this;
    for (const auto& [m, c] : q.terms_) r.add_term(m, a * c);
    return r;
}

Polynomial Polynomial::negate() const {
    Polynomial r(n_);
    for (const auto& [m, c] : terms_) r.add_term(m, -c);
    return r;
}

double Polynomial::max_abs_coefficient() const {
    double v = 0.0;
    for (const auto& [m, c] : terms_) v = std::max(v, std::abs(c));
    return v;
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        if (!first) os << (c >= 0 ? " + " : " - ");
        else if (c < 0) os << "-";
        os << std::abs(c);
        for (std::size_t i = 0; i < m.exponents.size(); ++i) {
            if (m.exponents[i] == 0) continue;
            os << "*x" << (i + 1);
            if (m.exponents[i] > 1) os << "^" << m.exponents[i];
        }
        first = false;
    }
    return os.str();
}

std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

namespace {

void enumerate_degree(int n, int var, int remaining, std::vector<int>& exp,
                      std::vector<Monomial>& out) {
    if (var == n - 1) {
        exp[var] = remaining;
        out.push_back(Monomial{exp});
        exp[var] = 0;
        return;
    }
    // Largest exponent on the earliest variable first matches graded lex.
    for (int e = remaining; e >= 0; --e) {
        exp[var] = e;
        enumerate_degree(n, var + 1, remaining - e, exp, out);
    }
    exp[var] = 0;
}

}  // namespace

std::vector<Monomial> monomial_basis(int n, int d) {
    if (n < 1 || d < 0) throw std::invalid_argument("monomial_basis: bad parameters");
    std::vector<Monomial> out;
    out.reserve(static_cast<std::size_t>(binomial(n + d, n)));
    std::vector<int> exp(n, 0);
    for (int deg = 0; deg <= d; ++deg) enumerate_degree(n, 0, deg, exp, out);
    return out;
}

}  // namespace msos
