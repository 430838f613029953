#include "lasco/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lasco {

namespace {

// Largest double magnitude that still identifies an exact integer.
constexpr double kExactLimit = 9007199254740992.0;  // 2^53

}  // namespace

Number::Number(double v) : int_(false), i_(0), d_(v) {
    if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) <= kExactLimit) {
        int_ = true;
        i_ = static_cast<std::int64_t>(v);
        d_ = 0;
    }
}

bool Number::operator==(const Number& o) const {
    if (int_ && o.int_) return i_ == o.i_;
    return as_double() == o.as_double();
}

bool Number::operator<(const Number& o) const {
    if (int_ && o.int_) return i_ < o.i_;
    return as_double() < o.as_double();
}

Number Number::operator+(const Number& o) const {
    if (int_ && o.int_) {
        std::int64_t r;
        if (!__builtin_add_overflow(i_, o.i_, &r)) return Number(r);
    }
    return Number(as_double() + o.as_double());
}

Number Number::operator-(const Number& o) const {
    if (int_ && o.int_) {
        std::int64_t r;
        if (!__builtin_sub_overflow(i_, o.i_, &r)) return Number(r);
    }
    return Number(as_double() - o.as_double());
}

Number Number::operator*(const Number& o) const {
    if (int_ && o.int_) {
        std::int64_t r;
        if (!__builtin_mul_overflow(i_, o.i_, &r)) return Number(r);
    }
    return Number(as_double() * o.as_double());
}

std::optional<Number> Number::div(const Number& o) const {
    if (int_ && o.int_) {
        if (o.i_ == 0) return std::nullopt;
        if (i_ % o.i_ == 0 && !(i_ == std::numeric_limits<std::int64_t>::min() && o.i_ == -1))
            return Number(i_ / o.i_);
        return Number(static_cast<double>(i_) / static_cast<double>(o.i_));
    }
    if (o.as_double() == 0.0) return std::nullopt;
    return Number(as_double() / o.as_double());
}

std::optional<Number> Number::mod(const Number& o) const {
    if (int_ && o.int_) {
        if (o.i_ == 0) return std::nullopt;
        if (i_ == std::numeric_limits<std::int64_t>::min() && o.i_ == -1) return Number(0);
        return Number(i_ % o.i_);
    }
    if (o.as_double() == 0.0) return std::nullopt;
    return Number(std::fmod(as_double(), o.as_double()));
}

std::string Number::str() const {
    if (int_) return std::to_string(i_);
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d_);
    std::string s(buf, p);
    // The literal grammar has no exponent form; fall back to plain
    // fixed-point when the shortest representation would need one.
    if (s.find('e') != std::string::npos || s.find('E') != std::string::npos) {
        std::snprintf(buf, sizeof(buf), "%.17f", d_);
        s = buf;
        while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
    }
    if (s.find('.') == std::string::npos) s += ".0";
    return s;
}

namespace {

int scalar_rank(const Scalar& s) { return static_cast<int>(s.index()); }

}  // namespace

bool ScalarLess::operator()(const Scalar& a, const Scalar& b) const {
    if (scalar_rank(a) != scalar_rank(b)) return scalar_rank(a) < scalar_rank(b);
    if (std::holds_alternative<bool>(a)) return std::get<bool>(a) < std::get<bool>(b);
    if (std::holds_alternative<Number>(a)) return std::get<Number>(a) < std::get<Number>(b);
    return std::get<std::string>(a) < std::get<std::string>(b);
}

Scalar Value::as_scalar() const {
    if (is_bool()) return Scalar(as_bool());
    if (is_number()) return Scalar(as_number());
    return Scalar(as_string());
}

Value Value::from_scalar(const Scalar& s) {
    if (std::holds_alternative<bool>(s)) return Value(std::get<bool>(s));
    if (std::holds_alternative<Number>(s)) return Value(std::get<Number>(s));
    return Value(std::get<std::string>(s));
}

bool Value::operator==(const Value& o) const {
    if (v_.index() != o.v_.index()) return false;
    if (is_bool()) return as_bool() == o.as_bool();
    if (is_number()) return as_number() == o.as_number();
    if (is_string()) return as_string() == o.as_string();
    const auto& a = as_set();
    const auto& b = o.as_set();
    if (a.size() != b.size()) return false;
    ScalarLess less;
    auto it = b.begin();
    for (const auto& s : a) {
        if (less(s, *it) || less(*it, s)) return false;
        ++it;
    }
    return true;
}

bool Value::canonical_less(const Value& o) const {
    if (v_.index() != o.v_.index()) return v_.index() < o.v_.index();
    if (is_bool()) return as_bool() < o.as_bool();
    if (is_number()) return as_number() < o.as_number();
    if (is_string()) return as_string() < o.as_string();
    ScalarLess less;
    const auto& a = as_set();
    const auto& b = o.as_set();
    auto ai = a.begin(), bi = b.begin();
    for (; ai != a.end() && bi != b.end(); ++ai, ++bi) {
        if (less(*ai, *bi)) return true;
        if (less(*bi, *ai)) return false;
    }
    return a.size() < b.size();
}

std::string quote_string(const std::string& s) { return "\"" + s + "\""; }

std::string Value::str() const {
    if (is_bool()) return as_bool() ? "True" : "False";
    if (is_number()) return as_number().str();
    if (is_string()) return quote_string(as_string());
    std::ostringstream out;
    out << "{";
    bool first = true;
    for (const auto& s : as_set()) {
        if (!first) out << ",";
        first = false;
        out << Value::from_scalar(s).str();
    }
    out << "}";
    return out.str();
}

bool consistent(const VarBindings& a, const VarBindings& b) {
    const VarBindings& small = a.size() <= b.size() ? a : b;
    const VarBindings& big = a.size() <= b.size() ? b : a;
    for (const auto& [k, v] : small) {
        auto it = big.find(k);
        if (it != big.end() && !(it->second == v)) return false;
    }
    return true;
}

VarBindings map_combine(const VarBindings& a, const VarBindings& b) {
    VarBindings r = a;
    r.insert(b.begin(), b.end());
    return r;
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

}  // namespace lasco
