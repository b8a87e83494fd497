#pragma once

// Infix expression language for field definitions.
//
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | power
//   power  := atom ("^" factor)?
//   atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//
// so ^ binds tighter than unary minus, which binds tighter than * and /;
// ^ is right-associative. Identifiers resolve to chart coordinates, declared
// parameters, the constants pi and e, or the unary functions below.

#include <projcalc/error.hpp>
#include <projcalc/jet.hpp>

#include <bit>
#include <charconv>
#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace projcalc {

enum class Op { Number, Constant, Coordinate, Parameter, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class Func { Sin, Cos, Tan, Atan, Exp, Log, Sqrt, Sinh, Cosh, Abs };

struct Node;
using Expression = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Number;
    double number = 0.0;  // Number, Constant
    std::string name;     // Constant, Coordinate, Parameter, Call
    int index = -1;       // Coordinate, Parameter
    Func func = Func::Sin;
    Expression lhs;       // unary operand or left operand
    Expression rhs;
};

namespace detail {

struct FuncInfo {
    std::string_view name;
    Func func;
};

inline constexpr std::array<FuncInfo, 10> kFunctions{{{"sin", Func::Sin},
                                                       {"cos", Func::Cos},
                                                       {"tan", Func::Tan},
                                                       {"atan", Func::Atan},
                                                       {"exp", Func::Exp},
                                                       {"log", Func::Log},
                                                       {"sqrt", Func::Sqrt},
                                                       {"sinh", Func::Sinh},
                                                       {"cosh", Func::Cosh},
                                                       {"abs", Func::Abs}}};

inline std::optional<Func> lookup_function(std::string_view name)
{
    for (const auto& f : kFunctions)
        if (f.name == name) return f.func;
    return std::nullopt;
}

inline std::optional<double> lookup_constant(std::string_view name)
{
    if (name == "pi") return std::numbers::pi;
    if (name == "e") return std::numbers::e;
    return std::nullopt;
}

inline Expression make(Node n) { return std::make_shared<const Node>(std::move(n)); }

} // namespace detail

/// True if `name` is a function or constant name and so cannot be declared.
inline bool is_reserved_name(std::string_view name)
{
    return detail::lookup_function(name).has_value() || detail::lookup_constant(name).has_value();
}

inline bool is_identifier(std::string_view s)
{
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline Expression number(double v)
{
    Node n;
    n.op = Op::Number;
    n.number = v;
    return detail::make(std::move(n));
}

inline Expression coordinate(std::string name, int index)
{
    Node n;
    n.op = Op::Coordinate;
    n.name = std::move(name);
    n.index = index;
    return detail::make(std::move(n));
}

inline Expression unary(Op op, Expression operand)
{
    Node n;
    n.op = op;
    n.lhs = std::move(operand);
    return detail::make(std::move(n));
}

inline Expression binary(Op op, Expression lhs, Expression rhs)
{
    Node n;
    n.op = op;
    n.lhs = std::move(lhs);
    n.rhs = std::move(rhs);
    return detail::make(std::move(n));
}

inline Expression call(Func f, Expression arg)
{
    Node n;
    n.op = Op::Call;
    n.func = f;
    for (const auto& info : detail::kFunctions)
        if (info.func == f) n.name = std::string(info.name);
    n.lhs = std::move(arg);
    return detail::make(std::move(n));
}

inline Expression operator+(Expression a, Expression b) { return binary(Op::Add, std::move(a), std::move(b)); }
inline Expression operator-(Expression a, Expression b) { return binary(Op::Sub, std::move(a), std::move(b)); }
inline Expression operator*(Expression a, Expression b) { return binary(Op::Mul, std::move(a), std::move(b)); }
inline Expression operator/(Expression a, Expression b) { return binary(Op::Div, std::move(a), std::move(b)); }
inline Expression operator-(Expression a) { return unary(Op::Neg, std::move(a)); }
inline Expression pow(Expression a, Expression b) { return binary(Op::Pow, std::move(a), std::move(b)); }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
    Parser(std::string_view src, std::span<const std::string> coords, std::span<const std::string> params)
        : src_(src), coords_(coords), params_(params)
    {}

    Expression parse()
    {
        Expression e = expr();
        skip_space();
        if (pos_ != src_.size()) fail(ParseError::Kind::Syntax, "unexpected '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg, std::optional<std::size_t> at = {})
    {
        throw ParseError(kind, at.value_or(pos_), msg);
    }

    void skip_space()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expression expr()
    {
        Expression e = term();
        for (;;) {
            if (accept('+')) e = binary(Op::Add, e, term());
            else if (accept('-')) e = binary(Op::Sub, e, term());
            else return e;
        }
    }

    Expression term()
    {
        Expression e = factor();
        for (;;) {
            if (accept('*')) e = binary(Op::Mul, e, factor());
            else if (accept('/')) e = binary(Op::Div, e, factor());
            else return e;
        }
    }

    Expression factor()
    {
        if (accept('-')) return unary(Op::Neg, factor());
        return power();
    }

    Expression power()
    {
        Expression base = atom();
        if (accept('^')) return binary(Op::Pow, base, factor());
        return base;
    }

    Expression atom()
    {
        skip_space();
        if (pos_ >= src_.size()) fail(ParseError::Kind::Syntax, "unexpected end of input");
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number_literal();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (accept('(')) {
            Expression e = expr();
            if (!accept(')')) fail(ParseError::Kind::Syntax, "expected ')'");
            return e;
        }
        fail(ParseError::Kind::Syntax, "unexpected '" + std::string(1, c) + "'");
    }

    Expression number_literal()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, ++n;
            return n;
        };
        std::size_t count = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            count += digits();
        }
        if (count == 0) fail(ParseError::Kind::Syntax, "malformed number", start);
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save; // not an exponent; leave 'e' for the caller
        }
        double v = 0.0;
        const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != src_.data() + pos_)
            fail(ParseError::Kind::Syntax, "malformed number", start);
        return number(v);
    }

    Expression identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        skip_space();
        const bool has_call = pos_ < src_.size() && src_[pos_] == '(';

        if (auto f = lookup_function(name)) {
            if (!has_call) fail(ParseError::Kind::Arity, "function '" + name + "' needs one argument", start);
            ++pos_;
            Expression arg = expr();
            skip_space();
            if (pos_ < src_.size() && src_[pos_] == ',')
                fail(ParseError::Kind::Arity, "function '" + name + "' takes one argument", start);
            if (!accept(')')) fail(ParseError::Kind::Syntax, "expected ')'");
            return call(*f, arg);
        }

        Expression leaf;
        for (std::size_t i = 0; i < coords_.size() && !leaf; ++i)
            if (coords_[i] == name) leaf = coordinate(name, static_cast<int>(i));
        for (std::size_t i = 0; i < params_.size() && !leaf; ++i)
            if (params_[i] == name) {
                Node n;
                n.op = Op::Parameter;
                n.name = name;
                n.index = static_cast<int>(i);
                leaf = make(std::move(n));
            }
        if (!leaf)
            if (auto c = lookup_constant(name)) {
                Node n;
                n.op = Op::Constant;
                n.name = name;
                n.number = *c;
                leaf = make(std::move(n));
            }
        if (!leaf) fail(ParseError::Kind::UnknownIdentifier, "unknown identifier '" + name + "'", start);
        if (has_call) fail(ParseError::Kind::Arity, "'" + name + "' is not a function", start);
        return leaf;
    }

    std::string_view src_;
    std::span<const std::string> coords_;
    std::span<const std::string> params_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Expression parse_expression(std::string_view source, std::span<const std::string> coords,
                                   std::span<const std::string> params = {})
{
    if (coords.empty()) throw Error("parse_expression: no coordinates declared");
    std::set<std::string> seen;
    auto declare = [&](const std::string& n) {
        if (!is_identifier(n)) throw Error("invalid identifier '" + n + "'");
        if (is_reserved_name(n)) throw Error("'" + n + "' is reserved");
        if (!seen.insert(n).second) throw Error("duplicate declaration of '" + n + "'");
    };
    for (const auto& c : coords) declare(c);
    for (const auto& p : params) declare(p);
    return detail::Parser(source, coords, params).parse();
}

// ---------------------------------------------------------------------------
// Printing and structure
// ---------------------------------------------------------------------------

namespace detail {

// Binding strength of the production that yields a node: expr < term < factor < power < atom.
inline int precedence(const Node& n)
{
    switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
    }
}

inline std::string format_number(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void print_to(const Node& n, std::string& out);

inline void print_child(const Node& child, int min_prec, std::string& out)
{
    if (precedence(child) < min_prec) {
        out += '(';
        print_to(child, out);
        out += ')';
    } else {
        print_to(child, out);
    }
}

inline void print_to(const Node& n, std::string& out)
{
    switch (n.op) {
    case Op::Number:
        // negative literals only come from builders; keep them atomic
        if (std::signbit(n.number)) out += "(" + format_number(n.number) + ")";
        else out += format_number(n.number);
        return;
    case Op::Constant:
    case Op::Coordinate:
    case Op::Parameter: out += n.name; return;
    case Op::Call:
        out += n.name;
        out += '(';
        print_to(*n.lhs, out);
        out += ')';
        return;
    case Op::Neg:
        out += '-';
        print_child(*n.lhs, 3, out);
        return;
    case Op::Pow:
        print_child(*n.lhs, 5, out);
        out += '^';
        print_child(*n.rhs, 3, out);
        return;
    case Op::Add:
    case Op::Sub:
        print_child(*n.lhs, 1, out);
        out += n.op == Op::Add ? " + " : " - ";
        print_child(*n.rhs, 2, out);
        return;
    case Op::Mul:
    case Op::Div:
        print_child(*n.lhs, 2, out);
        out += n.op == Op::Mul ? "*" : "/";
        print_child(*n.rhs, 3, out);
        return;
    }
}

} // namespace detail

/// Source text that parses back to a structurally identical tree.
inline std::string print(const Expression& e)
{
    std::string out;
    detail::print_to(*e, out);
    return out;
}

inline bool structurally_equal(const Expression& a, const Expression& b)
{
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->op != b->op) return false;
    switch (a->op) {
    case Op::Number: return std::bit_cast<std::uint64_t>(a->number) == std::bit_cast<std::uint64_t>(b->number);
    case Op::Constant: return a->name == b->name;
    case Op::Coordinate:
    case Op::Parameter: return a->name == b->name && a->index == b->index;
    case Op::Call: return a->func == b->func && structurally_equal(a->lhs, b->lhs);
    case Op::Neg: return structurally_equal(a->lhs, b->lhs);
    default: return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
    }
}

/// Indices of the coordinates an expression references.
inline std::set<int> free_coordinates(const Expression& e)
{
    std::set<int> out;
    auto walk = [&](auto&& self, const Node& n) -> void {
        if (n.op == Op::Coordinate) out.insert(n.index);
        if (n.lhs) self(self, *n.lhs);
        if (n.rhs) self(self, *n.rhs);
    };
    walk(walk, *e);
    return out;
}

/// Replace coordinate i by replacements[i].
inline Expression substitute(const Expression& e, std::span<const Expression> replacements)
{
    switch (e->op) {
    case Op::Coordinate: return replacements[static_cast<std::size_t>(e->index)];
    case Op::Number:
    case Op::Constant:
    case Op::Parameter: return e;
    default: {
        Node n = *e;
        n.lhs = substitute(e->lhs, replacements);
        if (e->rhs) n.rhs = substitute(e->rhs, replacements);
        return detail::make(std::move(n));
    }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline Jet apply_function(Func f, const Jet& u)
{
    switch (f) {
    case Func::Sin: return sin(u);
    case Func::Cos: return cos(u);
    case Func::Tan: return tan(u);
    case Func::Atan: return atan(u);
    case Func::Exp: return exp(u);
    case Func::Log: return log(u);
    case Func::Sqrt: return sqrt(u);
    case Func::Sinh: return sinh(u);
    case Func::Cosh: return cosh(u);
    case Func::Abs: return abs(u);
    }
    return u;
}

inline Jet eval_node(const Node& n, std::span<const Jet> coords, std::span<const double> params)
{
    const Jet& proto = coords.front();
    switch (n.op) {
    case Op::Number:
    case Op::Constant: return Jet::constant(proto.nvars(), proto.order(), n.number);
    case Op::Coordinate: return coords[static_cast<std::size_t>(n.index)];
    case Op::Parameter: return Jet::constant(proto.nvars(), proto.order(), params[static_cast<std::size_t>(n.index)]);
    case Op::Neg: return -eval_node(*n.lhs, coords, params);
    case Op::Add: return eval_node(*n.lhs, coords, params) + eval_node(*n.rhs, coords, params);
    case Op::Sub: return eval_node(*n.lhs, coords, params) - eval_node(*n.rhs, coords, params);
    case Op::Mul: return eval_node(*n.lhs, coords, params) * eval_node(*n.rhs, coords, params);
    default: break;
    }
    // the remaining nodes can fail on their domain; name the subexpression
    try {
        switch (n.op) {
        case Op::Div: {
            Jet den = eval_node(*n.rhs, coords, params);
            if (den.value() == 0.0) throw DomainError("division by zero");
            return eval_node(*n.lhs, coords, params) / den;
        }
        case Op::Pow: {
            Jet base = eval_node(*n.lhs, coords, params);
            if (n.rhs->op == Op::Number || n.rhs->op == Op::Constant) return pow(base, n.rhs->number);
            return pow(base, eval_node(*n.rhs, coords, params));
        }
        case Op::Call: return apply_function(n.func, eval_node(*n.lhs, coords, params));
        default: throw Error("unreachable expression node");
        }
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        if (msg.find(" in '") != std::string::npos) throw;
        std::string text;
        print_to(n, text);
        throw DomainError(msg + " in '" + text + "'");
    }
}

} // namespace detail

/// Evaluate with the given jets substituted for the coordinates.
inline Jet evaluate(const Expression& e, std::span<const Jet> coords, std::span<const double> params = {})
{
    return detail::eval_node(*e, coords, params);
}

/// Seed jets x_i = point_i + dx_i.
inline std::vector<Jet> coordinate_jets(std::span<const double> point, int order)
{
    std::vector<Jet> out;
    const int n = static_cast<int>(point.size());
    out.reserve(point.size());
    for (int i = 0; i < n; ++i) out.push_back(Jet::variable(n, order, i, point[static_cast<std::size_t>(i)]));
    return out;
}

} // namespace projcalc
