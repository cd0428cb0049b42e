#include "msos/json_io.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace msos {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string json_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

namespace {

Polynomial polynomial_from(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("terms"))
        throw std::invalid_argument("polynomial JSON needs \"n\" and \"terms\"");
    const int n = j.at("n").get<int>();
    Polynomial p(n);
    for (const auto& t : j.at("terms")) {
        const auto exp = t.at("exp").get<std::vector<int>>();
        if (static_cast<int>(exp.size()) != n)
            throw std::invalid_argument("exponent length mismatch in polynomial JSON");
        p.add_term(Monomial{exp}, t.at("coef").get<double>());
    }
    return p;
}

}  // namespace

Polynomial parse_polynomial_json(const std::string& text) {
    return polynomial_from(nlohmann::json::parse(text));
}

std::string polynomial_to_json(const Polynomial& p) {
    std::ostringstream os;
    os << "{\"n\": " << p.var_count() << ", \"terms\": [";
    bool first = true;
    for (const auto& [m, coef] : p.terms()) {
        if (!first) os << ", ";
        first = false;
        os << "{\"exp\": [";
        for (std::size_t i = 0; i < m.exponents.size(); ++i) {
            if (i) os << ", ";
            os << m.exponents[i];
        }
        os << "], \"coef\": " << fmt_double(coef) << "}";
    }
    os << "]}";
    return os.str();
}

Pop parse_pop_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object() || !j.contains("n") || !j.contains("constraints"))
        throw std::invalid_argument("pop JSON needs \"n\" and \"constraints\"");
    Pop pop;
    pop.n = j.at("n").get<int>();
    if (j.contains("name")) pop.name = j.at("name").get<std::string>();
    for (const auto& c : j.at("constraints")) {
        PopConstraint pc{polynomial_from(c.at("poly")), ConstraintSense::ge};
        const std::string sense = c.at("sense").get<std::string>();
        if (sense == "ge")
            pc.sense = ConstraintSense::ge;
        else if (sense == "eq")
            pc.sense = ConstraintSense::eq;
        else
            throw std::invalid_argument("constraint sense must be \"ge\" or \"eq\"");
        if (pc.poly.var_count() != pop.n)
            throw std::invalid_argument("constraint variable count mismatch");
        pop.constraints.push_back(std::move(pc));
    }
    return pop;
}

std::string pop_to_json(const Pop& pop) {
    std::ostringstream os;
    os << "{\"n\": " << pop.n << ", \"constraints\": [";
    for (std::size_t i = 0; i < pop.constraints.size(); ++i) {
        if (i) os << ", ";
        os << "{\"poly\": " << polynomial_to_json(pop.constraints[i].poly) << ", \"sense\": \""
           << (pop.constraints[i].sense == ConstraintSense::ge ? "ge" : "eq") << "\"}";
    }
    os << "]";
    if (!pop.name.empty()) os << ", \"name\": \"" << json_escape(pop.name) << "\"";
    os << "}";
    return os.str();
}

}  // namespace msos
