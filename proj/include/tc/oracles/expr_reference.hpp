#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tc::oracles {

using Rational = boost::multiprecision::cpp_rational;

// Recursive descent: + - < * / < ** (right associative). Accepts the ASCII
// operators and the typographic minus, times and division signs.
class ReferenceEvaluator {
public:
    explicit ReferenceEvaluator(std::string_view s) : s_(s) {}

    Rational run() {
        Rational v = sum();
        skip();
        if (i_ != s_.size()) fail("unexpected character");
        return v;
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument(what + " at position " + std::to_string(i_));
    }
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool eat(std::string_view tok) {
        skip();
        if (s_.substr(i_, tok.size()) == tok) {
            i_ += tok.size();
            return true;
        }
        return false;
    }
    bool eat_minus() { return eat("-") || eat("\xE2\x88\x92"); }
    bool eat_times() {
        skip();
        if (s_.substr(i_, 2) == "**") return false;
        return eat("*") || eat("\xC3\x97");
    }
    bool eat_div() { return eat("/") || eat("\xC3\xB7"); }

    Rational sum() {
        Rational v = product();
        for (;;) {
            if (eat("+")) v += product();
            else if (eat_minus()) v -= product();
            else return v;
        }
    }
    Rational product() {
        Rational v = power();
        for (;;) {
            if (eat_times()) v *= power();
            else if (eat_div()) {
                Rational d = power();
                if (d == 0) fail("division by zero");
                v /= d;
            } else return v;
        }
    }
    Rational power() {
        Rational b = atom();
        if (!eat("**")) return b;
        Rational e = power();
        if (denominator(e) != 1 || e < 0 || e > 64) fail("exponent must be an integer in [0, 64]");
        auto k = static_cast<unsigned>(numerator(e));
        Rational r = 1;
        for (unsigned j = 0; j < k; ++j) r *= b;
        return r;
    }
    Rational atom() {
        if (eat("(")) {
            Rational v = sum();
            if (!eat(")")) fail("expected ')'");
            return v;
        }
        skip();
        std::size_t start = i_;
        boost::multiprecision::cpp_int num = 0, den = 1;
        bool dot = false;
        while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || (s_[i_] == '.' && !dot))) {
            if (s_[i_] == '.') dot = true;
            else {
                num = num * 10 + (s_[i_] - '0');
                if (dot) den *= 10;
            }
            ++i_;
        }
        if (i_ == start) fail("expected a number");
        return Rational(num, den);
    }
};

inline Rational eval_reference(std::string_view expr) { return ReferenceEvaluator(expr).run(); }

// Random well-formed expression: integers 1..20 with an occasional 0, all five
// operators, nesting up to `depth`. Exponents are small literals.
template <class Rng>
std::string random_expression(Rng& rng, int depth) {
    auto pick = [&](std::uint64_t k) { return static_cast<std::size_t>(rng() % k); };
    if (depth <= 0 || pick(4) == 0) return std::to_string(pick(500) == 0 ? 0 : 1 + pick(20));
    std::size_t terms = 2 + pick(3);
    static const char* ops[] = {"+", "-", "*", "/", "\xE2\x88\x92", "\xC3\x97", "\xC3\xB7"};
    std::string s;
    for (std::size_t i = 0; i < terms; ++i) {
        if (i) s += ops[pick(7)];
        std::string sub = random_expression(rng, depth - 1);
        if (pick(3) == 0) sub = "(" + sub + ")";
        if (pick(8) == 0) sub = "(" + sub + ")**" + std::to_string(pick(4));
        s += sub;
    }
    return s;
}

}  // namespace tc::oracles
