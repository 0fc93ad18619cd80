#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mollifier.hpp"

namespace sf {

// Tiny complex arithmetic expressions, compiled to a postfix program.
// Grammar (see README):
//   expr    = term , { ("+" | "-") , term } ;
//   term    = unary , { ("*" | "/") , unary } ;
//   unary   = [ "+" | "-" ] , power ;
//   power   = primary , [ "^" , unary ] ;
//   primary = number | "i" | "pi" | variable
//           | func , "(" , expr , ")" | "(" , expr , ")" ;
//   func    = "abs" | "sqrt" | "sin" | "cos" | "exp" | "bump" | "step" ;
class Expression {
public:
    using value = std::complex<double>;

    Expression() = default;
    Expression(const std::string& src, std::vector<std::string> vars)
        : src_(src), vars_(std::move(vars)) {
        pos_ = 0;
        parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    }

    const std::string& source() const { return src_; }
    const std::vector<std::string>& variables() const { return vars_; }

    value operator()(const double* args) const {
        value stack[64];
        int sp = 0;
        for (const auto& op : prog_) {
            switch (op.code) {
            case Op::constant: stack[sp++] = op.c; break;
            case Op::variable: stack[sp++] = args[op.var]; break;
            case Op::add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::div: --sp; stack[sp - 1] /= stack[sp]; break;
            case Op::pow: --sp; stack[sp - 1] = power(stack[sp - 1], stack[sp]); break;
            case Op::neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::abs: stack[sp - 1] = std::abs(stack[sp - 1]); break;
            case Op::sqrt: stack[sp - 1] = csqrt(stack[sp - 1]); break;
            case Op::sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
            case Op::cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
            case Op::exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
            case Op::bump: stack[sp - 1] = bump(stack[sp - 1].real()); break;
            case Op::step: stack[sp - 1] = smooth_step(stack[sp - 1].real()); break;
            }
        }
        return stack[0];
    }

    value operator()(std::initializer_list<double> args) const {
        std::vector<double> a(args);
        if (a.size() != vars_.size()) throw ParseError("wrong number of arguments for '" + src_ + "'");
        return (*this)(a.data());
    }

private:
    struct Op {
        enum Code { constant, variable, add, sub, mul, div, pow, neg, abs, sqrt, sin, cos, exp, bump, step } code;
        value c{};
        int var = 0;
    };

    static value csqrt(value z) {
        // keep real arithmetic exact on the real axis
        if (z.imag() == 0.0 && z.real() >= 0) return std::sqrt(z.real());
        return std::sqrt(z);
    }

    static value power(value b, value e) {
        if (e.imag() == 0.0) {
            double r = e.real();
            if (r == std::round(r) && std::abs(r) <= 64) {
                int k = int(r);
                value acc = 1.0, base = b;
                unsigned m = unsigned(k < 0 ? -k : k);
                while (m) {
                    if (m & 1u) acc *= base;
                    base *= base;
                    m >>= 1u;
                }
                return k < 0 ? 1.0 / acc : acc;
            }
            if (b.imag() == 0.0 && b.real() >= 0) return std::pow(b.real(), r);
        }
        return std::pow(b, e);
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("in expression '" + src_ + "' at " + std::to_string(pos_) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void emit(typename Op::Code c) {
        Op op;
        op.code = c;
        prog_.push_back(op);
        depth_check();
    }
    void depth_check() {
        int d = 0, m = 0;
        for (const auto& op : prog_) {
            if (op.code == Op::constant || op.code == Op::variable) ++d;
            else if (op.code <= Op::pow && op.code >= Op::add) --d;
            m = std::max(m, d);
        }
        if (m > 60) fail("expression too deeply nested");
    }

    void parse_expr() {
        parse_term();
        for (;;) {
            if (accept('+')) { parse_term(); emit(Op::add); }
            else if (accept('-')) { parse_term(); emit(Op::sub); }
            else break;
        }
    }
    void parse_term() {
        parse_unary();
        for (;;) {
            if (accept('*')) { parse_unary(); emit(Op::mul); }
            else if (accept('/')) { parse_unary(); emit(Op::div); }
            else break;
        }
    }
    void parse_unary() {
        if (accept('-')) { parse_unary(); emit(Op::neg); return; }
        if (accept('+')) { parse_unary(); return; }
        parse_power();
    }
    void parse_power() {
        parse_primary();
        if (accept('^')) {
            parse_unary();
            emit(Op::pow);
        }
    }
    void parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        char c = src_[pos_];
        if (accept('(')) {
            parse_expr();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = src_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += std::size_t(end - begin);
            Op op;
            op.code = Op::constant;
            op.c = v;
            prog_.push_back(op);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t s = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            std::string id = src_.substr(s, pos_ - s);
            for (std::size_t k = 0; k < vars_.size(); ++k)
                if (vars_[k] == id) {
                    Op op;
                    op.code = Op::variable;
                    op.var = int(k);
                    prog_.push_back(op);
                    return;
                }
            if (id == "i" || id == "pi") {
                Op op;
                op.code = Op::constant;
                op.c = id == "i" ? value(0, 1) : value(std::numbers::pi, 0);
                prog_.push_back(op);
                return;
            }
            static const std::pair<const char*, typename Op::Code> funcs[] = {
                {"abs", Op::abs}, {"sqrt", Op::sqrt}, {"sin", Op::sin},
                {"cos", Op::cos}, {"exp", Op::exp},   {"bump", Op::bump}, {"step", Op::step}};
            for (const auto& f : funcs)
                if (id == f.first) {
                    if (!accept('(')) fail("expected '(' after " + id);
                    parse_expr();
                    if (!accept(')')) fail("expected ')'");
                    emit(f.second);
                    return;
                }
            fail("unknown identifier '" + id + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string src_;
    std::vector<std::string> vars_;
    std::vector<Op> prog_;
    std::size_t pos_ = 0;
};

} // namespace sf
