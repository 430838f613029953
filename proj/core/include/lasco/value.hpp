#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>

namespace lasco {

/// Numeric attribute value. Integers are kept exact; a double that holds an
/// integral value collapses to the integer form so that 1 and 1.0 compare,
/// hash, and render identically.
class Number {
public:
    Number() : int_(true), i_(0), d_(0) {}
    Number(std::int64_t v) : int_(true), i_(v), d_(0) {}
    Number(int v) : Number(static_cast<std::int64_t>(v)) {}
    Number(double v);

    bool is_int() const { return int_; }
    std::int64_t as_int() const { return i_; }
    double as_double() const { return int_ ? static_cast<double>(i_) : d_; }

    bool operator==(const Number& o) const;
    bool operator<(const Number& o) const;
    bool operator<=(const Number& o) const { return *this < o || *this == o; }

    Number operator+(const Number& o) const;
    Number operator-(const Number& o) const;
    Number operator*(const Number& o) const;
    // Division and modulo can fail (zero divisor); callers treat failure
    // like any other runtime type error.
    std::optional<Number> div(const Number& o) const;
    std::optional<Number> mod(const Number& o) const;

    std::string str() const;

private:
    bool int_;
    std::int64_t i_;
    double d_;
};

/// A scalar: string, number, or boolean.
using Scalar = std::variant<bool, Number, std::string>;

struct ScalarLess {
    bool operator()(const Scalar& a, const Scalar& b) const;
};

using ScalarSet = std::set<Scalar, ScalarLess>;

/// An attribute value: a scalar or a duplicate-free unordered set of scalars.
class Value {
public:
    Value() : v_(false) {}
    Value(bool b) : v_(b) {}
    Value(Number n) : v_(n) {}
    Value(std::int64_t n) : v_(Number(n)) {}
    Value(int n) : v_(Number(n)) {}
    Value(double n) : v_(Number(n)) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(ScalarSet s) : v_(std::move(s)) {}

    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_number() const { return std::holds_alternative<Number>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_set() const { return std::holds_alternative<ScalarSet>(v_); }
    bool is_scalar() const { return !is_set(); }

    bool as_bool() const { return std::get<bool>(v_); }
    const Number& as_number() const { return std::get<Number>(v_); }
    const std::string& as_string() const { return std::get<std::string>(v_); }
    const ScalarSet& as_set() const { return std::get<ScalarSet>(v_); }

    Scalar as_scalar() const;
    static Value from_scalar(const Scalar& s);

    /// Cross-type-safe equality: values of different kinds are unequal,
    /// numbers compare numerically, sets compare as member sets.
    bool operator==(const Value& o) const;
    bool operator!=(const Value& o) const { return !(*this == o); }

    /// Total order used for canonical output and map keys (kind rank first,
    /// then within-kind order). Not the policy-language `<` operator.
    bool canonical_less(const Value& o) const;

    /// Renders the value in predicate/LSH literal syntax.
    std::string str() const;

private:
    std::variant<bool, Number, std::string, ScalarSet> v_;
};

/// Attribute name -> value, for one object snapshot or event.
using AttrSet = std::map<std::string, Value>;

/// Variable name -> bound value.
using VarBindings = std::map<std::string, Value>;

/// True when the maps agree on every shared key.
bool consistent(const VarBindings& a, const VarBindings& b);

/// Left-biased union of two maps (operands expected consistent).
VarBindings map_combine(const VarBindings& a, const VarBindings& b);

bool valid_name(const std::string& s);

std::string quote_string(const std::string& s);

}  // namespace lasco
