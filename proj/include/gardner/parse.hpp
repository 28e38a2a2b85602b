// Infix expression grammar and canonical pretty-printer. render() emits the
// same grammar that parse() accepts, and the round trip is the identity on
// normalized trees.
//
// Grammar (EBNF, whitespace ignored between tokens):
//
//   expr     = term , { ( "+" | "-" ) , term } ;
//   term     = factor , { ( "*" | "/" ) , factor } ;
//   factor   = "-" , factor | power ;
//   power    = primary , [ "^" , factor ] ;              (* right associative *)
//   primary  = number | call | ident | "(" , expr , ")" ;
//   call     = ( "exp" | "log" | "sqrt" ) , "(" , expr , ")"
//            | "Int" , "(" , expr , "," , ident , ")" ;
//   number   = digits , [ "." , digits ] , [ ( "e" | "E" ) , [ "+" | "-" ] , digits ] ;
//   ident    = letter , { letter | digit } , [ "_" , ( suffix | "{" suffix "}" ) ] ;
//   suffix   = { "t" | "x" } ;
//
// Identifiers resolve against the symbol table: independent variables t, x;
// jet coordinates u, v with derivative suffixes (u_x, u_xxx, u_{txx}); the
// coefficient functions A, B, C, Q, H, L, p, q, alpha, beta, gamma, tau, r
// (with t/x derivative suffixes where the dependence allows); and declared
// named constants. Integers and ratios of integers stay exact.
#pragma once

#include "gardner/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace gardner {

struct ParseError : Error {
    size_t pos;
    ParseError(const std::string& msg, size_t p)
        : Error(msg + " (at position " + std::to_string(p) + ")"), pos(p) {}
};

namespace detail {

class Parser {
  public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr run() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

  private:
    std::string_view src_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace((unsigned char)src_[pos_])) ++pos_;
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }
    bool eat(char c) {
        if (peek() == c) { ++pos_; return true; }
        return false;
    }
    void expect(char c) {
        if (!eat(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    Expr parse_expr() {
        std::vector<Expr> terms;
        terms.push_back(parse_term());
        while (true) {
            if (eat('+')) terms.push_back(parse_term());
            else if (eat('-')) terms.push_back(-parse_term());
            else break;
        }
        return make_sum(std::move(terms));
    }

    Expr parse_term() {
        std::vector<Expr> fs;
        fs.push_back(parse_factor());
        while (true) {
            if (eat('*')) fs.push_back(parse_factor());
            else if (eat('/')) fs.push_back(make_pow(parse_factor(), rational(-1)));
            else break;
        }
        return make_prod(std::move(fs));
    }

    Expr parse_factor() {
        if (eat('-')) return -parse_factor();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (eat('^')) return make_pow(base, parse_factor());
        return base;
    }

    Expr parse_primary() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit((unsigned char)c)) return parse_number();
        if (std::isalpha((unsigned char)c)) return parse_ident();
        throw ParseError("expected expression", pos_);
    }

    Expr parse_number() {
        size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) ++pos_;
        bool is_real = false;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            is_real = true;
            ++pos_;
            while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) {
                is_real = true;
                while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) ++pos_;
            } else {
                pos_ = save; // 'e' belongs to a following identifier, not this number
            }
        }
        std::string text(src_.substr(start, pos_ - start));
        if (!is_real) {
            long long v = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec == std::errc() && p == text.data() + text.size()) return rational(v);
            return real_const(std::strtod(text.c_str(), nullptr));
        }
        return real_const(std::strtod(text.c_str(), nullptr));
    }

    Expr parse_ident() {
        size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_' ||
                src_[pos_] == '{' || src_[pos_] == '}'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        // u_{txx} form
        std::string flat;
        for (char ch : name)
            if (ch != '{' && ch != '}') flat += ch;

        if (flat == "exp" || flat == "log" || flat == "sqrt") {
            expect('(');
            Expr a = parse_expr();
            expect(')');
            if (flat == "exp") return make_exp(a);
            if (flat == "log") return make_log(a);
            return make_pow(a, rational(1, 2));
        }
        if (flat == "Int") {
            expect('(');
            Expr a = parse_expr();
            expect(',');
            skip_ws();
            size_t vs = pos_;
            while (pos_ < src_.size() && (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
                ++pos_;
            std::string var(src_.substr(vs, pos_ - vs));
            expect(')');
            auto s = symtab().lookup(var);
            if (!s) throw ParseError("unknown integration variable '" + var + "'", vs);
            return make_integral(a, *s);
        }

        auto s = resolve(flat);
        if (!s) {
            std::string msg = "unknown symbol '" + flat + "'; declared symbols: ";
            auto names = symtab().declared_names();
            for (size_t i = 0; i < names.size(); ++i) {
                if (i) msg += ", ";
                msg += names[i];
                if (i > 40) { msg += ", ..."; break; }
            }
            throw ParseError(msg, start);
        }
        return sym(*s);
    }

    // Canonicalizes jet / coefficient-derivative suffixes (u_xt -> u_tx).
    static std::optional<Symbol> resolve(const std::string& flat) {
        auto& tab = symtab();
        auto us = flat.find('_');
        if (us == std::string::npos) return tab.lookup(flat);
        std::string base = flat.substr(0, us);
        std::string suf = flat.substr(us + 1);
        int dt = 0, dx = 0;
        bool deriv_suffix = !suf.empty();
        for (char ch : suf) {
            if (ch == 't') ++dt;
            else if (ch == 'x') ++dx;
            else { deriv_suffix = false; break; }
        }
        if (deriv_suffix && (base == "u" || base == "v")) {
            if (dt > kMaxJetT || dt + dx > kMaxJetOrder)
                throw JetOrderError("jet order exceeds supported range: " + flat);
            return tab.jet(base == "u" ? 0 : 1, dt, dx);
        }
        if (deriv_suffix) {
            auto b = tab.lookup(base);
            if (b && b->kind() == SymKind::Coefficient) {
                const auto& rec = tab.rec(*b);
                if (dt > 0 && !rec.dep_t) return std::nullopt;
                if (dx > 0 && !rec.dep_x) return std::nullopt;
                return tab.coeff_deriv(*b, dt, dx);
            }
        }
        return tab.lookup(flat);
    }
};

// ---------------------------------------------------------------------------
// Rendering

inline std::string fmt_double(double v) {
    char buf[40];
    // shortest representation that round-trips
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

enum class Ctx { Term, Factor, ExpoOrBase };

inline void render_impl(const Expr& e, std::string& out, Ctx ctx);

inline bool is_atom(const Expr& e) {
    switch (e.op()) {
        case Op::Sym:
        case Op::Exp:
        case Op::Log:
        case Op::Integral:
            return true;
        case Op::Rational:
            return e.node().rat.is_integer() && e.node().rat.num >= 0;
        case Op::Real:
            return e.numeric_value() >= 0;
        default:
            return false;
    }
}

// Splits off a leading numeric sign for sum rendering ("a - b").
inline bool term_negative(const Expr& t) {
    if (t.op() == Op::Rational) return t.node().rat.num < 0;
    if (t.op() == Op::Real) return t.numeric_value() < 0;
    if (t.op() == Op::Prod && t.kids().front().is_numeric())
        return term_negative(t.kids().front());
    return false;
}

inline Expr term_negate(const Expr& t) { return -t; }

inline void render_impl(const Expr& e, std::string& out, Ctx ctx) {
    switch (e.op()) {
        case Op::Rational: {
            const Rat& r = e.node().rat;
            bool needs_paren = (r.num < 0 || !r.is_integer()) && ctx == Ctx::ExpoOrBase;
            if (needs_paren) out += '(';
            if (r.num < 0 && ctx != Ctx::ExpoOrBase && ctx != Ctx::Term) {
                // handled by caller in sums; inline minus elsewhere
            }
            out += std::to_string(r.num);
            if (!r.is_integer()) {
                out += '/';
                out += std::to_string(r.den);
            }
            if (needs_paren) out += ')';
            break;
        }
        case Op::Real: {
            bool needs_paren = e.numeric_value() < 0 && ctx == Ctx::ExpoOrBase;
            if (needs_paren) out += '(';
            out += fmt_double(e.numeric_value());
            if (needs_paren) out += ')';
            break;
        }
        case Op::Sym:
            out += e.node().sym.name();
            break;
        case Op::Sum: {
            bool needs_paren = ctx != Ctx::Term;
            if (needs_paren) out += '(';
            bool first = true;
            for (const auto& t : e.kids()) {
                if (!first && term_negative(t)) {
                    out += " - ";
                    render_impl(term_negate(t), out, Ctx::Factor);
                } else {
                    if (!first) out += " + ";
                    render_impl(t, out, Ctx::Factor);
                }
                first = false;
            }
            if (needs_paren) out += ')';
            break;
        }
        case Op::Prod: {
            bool needs_paren = ctx == Ctx::ExpoOrBase;
            if (needs_paren) out += '(';
            const auto& ks = e.kids();
            size_t start = 0;
            if (ks.front().is_numeric()) {
                Expr c = ks.front();
                bool neg = term_negative(c);
                Expr mag = neg ? -c : c;
                if (neg) out += '-';
                if (!mag.is_one() || ks.size() == 1) {
                    render_impl(mag, out, Ctx::Factor);
                    if (ks.size() > 1) out += '*';
                }
                start = 1;
            }
            for (size_t i = start; i < ks.size(); ++i) {
                if (i > start) out += '*';
                Ctx kctx = ks[i].op() == Op::Sum ? Ctx::ExpoOrBase : Ctx::Factor;
                render_impl(ks[i], out, kctx);
            }
            if (needs_paren) out += ')';
            break;
        }
        case Op::Pow: {
            const Expr& b = e.kids()[0];
            const Expr& x = e.kids()[1];
            if (is_atom(b)) render_impl(b, out, Ctx::Factor);
            else {
                out += '(';
                render_impl(b, out, Ctx::Term);
                out += ')';
            }
            out += '^';
            if (is_atom(x)) render_impl(x, out, Ctx::Factor);
            else {
                out += '(';
                render_impl(x, out, Ctx::Term);
                out += ')';
            }
            break;
        }
        case Op::Exp:
            out += "exp(";
            render_impl(e.kids()[0], out, Ctx::Term);
            out += ')';
            break;
        case Op::Log:
            out += "log(";
            render_impl(e.kids()[0], out, Ctx::Term);
            out += ')';
            break;
        case Op::Integral:
            out += "Int(";
            render_impl(e.kids()[0], out, Ctx::Term);
            out += ", ";
            out += e.node().sym.name();
            out += ')';
            break;
    }
}

} // namespace detail

inline Expr parse(std::string_view source) { return detail::Parser(source).run(); }

inline std::string render(const Expr& e) {
    std::string out;
    detail::render_impl(e, out, detail::Ctx::Term);
    return out;
}

} // namespace gardner
