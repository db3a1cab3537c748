#include "leakscope/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>
#include <vector>

#include "leakscope/checks.hpp"

namespace leakscope::lang {
namespace {

enum class Tok {
    End, Ident, Number,
    Assign,    // :=
    Tilde, Semi, Comma, Colon, Eq,  // = (param defaults)
    LParen, RParen, LBrace, RBrace,
    Plus, Minus, Star, Slash, Caret,
    EqEq, Lt, Gt, Le, Ge, Bang, AndAnd, OrOr,
    DotDot,
};

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    SourceLoc loc;
};

struct Annotation {
    std::string role;  // "secret" or "output"
    std::string name;
    SourceLoc loc;
};

class Lexer {
public:
    Lexer(const std::string& src, std::vector<Annotation>& annots)
        : src_(src), annots_(annots) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            Token t = next();
            out.push_back(t);
            if (t.kind == Tok::End) break;
        }
        return out;
    }

private:
    const std::string& src_;
    std::vector<Annotation>& annots_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;

    char peek(size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, SourceLoc{line_, col_});
    }

    void skip_trivia() {
        for (;;) {
            while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(peek())))
                advance();
            if (peek() == '/' && peek(1) == '/') {
                advance();
                advance();
                if (peek() == '@') {
                    advance();
                    read_annotation();
                } else {
                    while (pos_ < src_.size() && peek() != '\n') advance();
                }
                continue;
            }
            break;
        }
    }

    void read_annotation() {
        SourceLoc at{line_, col_};
        std::string rest;
        while (pos_ < src_.size() && peek() != '\n') rest += advance();
        std::istringstream is(rest);
        Annotation a;
        a.loc = at;
        if (!(is >> a.role >> a.name) || (a.role != "secret" && a.role != "output"))
            throw ParseError("malformed annotation '//@" + rest + "'", at);
        std::string extra;
        if (is >> extra) throw ParseError("trailing text in annotation '//@" + rest + "'", at);
        annots_.push_back(std::move(a));
    }

    Token next() {
        skip_trivia();
        SourceLoc at{line_, col_};
        if (pos_ >= src_.size()) return {Tok::End, "", 0.0, at};
        char c = peek();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string id;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
                id += advance();
            return {Tok::Ident, id, 0.0, at};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            std::string num;
            while (std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
            if (peek() == '.' && peek(1) != '.') {  // keep ".." for ranges
                num += advance();
                while (std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
            }
            if (peek() == 'e' || peek() == 'E') {
                num += advance();
                if (peek() == '+' || peek() == '-') num += advance();
                if (!std::isdigit(static_cast<unsigned char>(peek())))
                    fail("malformed exponent in number literal");
                while (std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
            }
            return {Tok::Number, num, std::strtod(num.c_str(), nullptr), at};
        }
        advance();
        switch (c) {
            case ':':
                if (peek() == '=') { advance(); return {Tok::Assign, ":=", 0.0, at}; }
                return {Tok::Colon, ":", 0.0, at};
            case '~': return {Tok::Tilde, "~", 0.0, at};
            case ';': return {Tok::Semi, ";", 0.0, at};
            case ',': return {Tok::Comma, ",", 0.0, at};
            case '(': return {Tok::LParen, "(", 0.0, at};
            case ')': return {Tok::RParen, ")", 0.0, at};
            case '{': return {Tok::LBrace, "{", 0.0, at};
            case '}': return {Tok::RBrace, "}", 0.0, at};
            case '+': return {Tok::Plus, "+", 0.0, at};
            case '-': return {Tok::Minus, "-", 0.0, at};
            case '*': return {Tok::Star, "*", 0.0, at};
            case '/': return {Tok::Slash, "/", 0.0, at};
            case '^': return {Tok::Caret, "^", 0.0, at};
            case '!': return {Tok::Bang, "!", 0.0, at};
            case '=':
                if (peek() == '=') { advance(); return {Tok::EqEq, "==", 0.0, at}; }
                return {Tok::Eq, "=", 0.0, at};
            case '<':
                if (peek() == '=') { advance(); return {Tok::Le, "<=", 0.0, at}; }
                return {Tok::Lt, "<", 0.0, at};
            case '>':
                if (peek() == '=') { advance(); return {Tok::Ge, ">=", 0.0, at}; }
                return {Tok::Gt, ">", 0.0, at};
            case '&':
                if (peek() == '&') { advance(); return {Tok::AndAnd, "&&", 0.0, at}; }
                fail("expected '&&'");
            case '|':
                if (peek() == '|') { advance(); return {Tok::OrOr, "||", 0.0, at}; }
                fail("expected '||'");
            case '.':
                if (peek() == '.') { advance(); return {Tok::DotDot, "..", 0.0, at}; }
                fail("unexpected '.'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

class Parser {
public:
    explicit Parser(const std::string& source) {
        Lexer lex(source, annots_);
        toks_ = lex.run();
    }

    Program run() {
        Program prog;
        std::vector<StmtPtr> stmts;
        while (cur().kind != Tok::End) {
            if (cur().kind == Tok::Ident && cur().text == "param") {
                prog.params.push_back(parse_param_decl());
            } else {
                stmts.push_back(parse_stmt());
            }
        }
        prog.body = Stmt::skip();
        if (!stmts.empty()) {
            prog.body = stmts.back();
            for (size_t i = stmts.size() - 1; i-- > 0;)
                prog.body = Stmt::seq(stmts[i], prog.body);
        }
        for (const auto& a : annots_) {
            auto& dst = a.role == "secret" ? prog.secret_vars : prog.output_vars;
            dst.push_back(a.name);
        }
        validate(prog);
        return prog;
    }

private:
    std::vector<Token> toks_;
    std::vector<Annotation> annots_;
    size_t idx_ = 0;
    std::set<std::string> param_names_;

    const Token& cur() const { return toks_[idx_]; }
    const Token& peek(size_t ahead = 1) const {
        size_t i = idx_ + ahead;
        return toks_[i < toks_.size() ? i : toks_.size() - 1];
    }

    Token take() { return toks_[idx_ < toks_.size() - 1 ? idx_++ : idx_]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, cur().loc);
    }

    Token expect(Tok k, const char* what) {
        if (cur().kind != k) fail(std::string("expected ") + what + ", got '" + cur().text + "'");
        return take();
    }

    bool accept(Tok k) {
        if (cur().kind == k) {
            take();
            return true;
        }
        return false;
    }

    bool at_keyword(const char* kw) const {
        return cur().kind == Tok::Ident && cur().text == kw;
    }

    // ---- parameter declarations -------------------------------------------

    ParamDecl parse_param_decl() {
        ParamDecl d;
        d.loc = cur().loc;
        take();  // "param"
        d.name = expect(Tok::Ident, "parameter name").text;
        if (param_names_.count(d.name))
            throw ParseError("duplicate parameter '" + d.name + "'", d.loc);
        param_names_.insert(d.name);
        if (accept(Tok::Eq)) d.default_value = parse_param_expr();
        expect(Tok::Semi, "';'");
        return d;
    }

    ParamExprPtr pe_node(ParamExpr::Kind k, ParamExprPtr a = nullptr, ParamExprPtr b = nullptr) {
        auto e = std::make_shared<ParamExpr>();
        e->kind = k;
        e->lhs = std::move(a);
        e->rhs = std::move(b);
        return e;
    }

    ParamExprPtr parse_param_expr() { return parse_param_add(); }

    ParamExprPtr parse_param_add() {
        auto e = parse_param_mul();
        for (;;) {
            if (accept(Tok::Plus))
                e = pe_node(ParamExpr::Kind::Add, e, parse_param_mul());
            else if (accept(Tok::Minus))
                e = pe_node(ParamExpr::Kind::Sub, e, parse_param_mul());
            else
                return e;
        }
    }

    ParamExprPtr parse_param_mul() {
        auto e = parse_param_unary();
        for (;;) {
            if (accept(Tok::Star))
                e = pe_node(ParamExpr::Kind::Mul, e, parse_param_unary());
            else if (accept(Tok::Slash))
                e = pe_node(ParamExpr::Kind::Div, e, parse_param_unary());
            else
                return e;
        }
    }

    ParamExprPtr parse_param_unary() {
        if (accept(Tok::Minus)) return pe_node(ParamExpr::Kind::Neg, parse_param_unary());
        return parse_param_pow();
    }

    ParamExprPtr parse_param_pow() {
        auto base = parse_param_primary();
        if (accept(Tok::Caret))
            return pe_node(ParamExpr::Kind::Pow, base, parse_param_unary());  // right-assoc
        return base;
    }

    ParamExprPtr parse_param_primary() {
        if (cur().kind == Tok::Number) {
            auto e = pe_node(ParamExpr::Kind::Number);
            const_cast<ParamExpr&>(*e).number = take().number;
            return e;
        }
        if (accept(Tok::LParen)) {
            auto e = parse_param_expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        if (cur().kind == Tok::Ident) {
            std::string name = cur().text;
            if ((name == "exp" || name == "ln") && peek().kind == Tok::LParen) {
                take();
                take();
                auto arg = parse_param_expr();
                expect(Tok::RParen, "')'");
                return pe_node(name == "exp" ? ParamExpr::Kind::Exp : ParamExpr::Kind::Ln, arg);
            }
            if (!param_names_.count(name))
                fail("parameter default may only reference earlier parameters; '" + name +
                     "' is not one");
            take();
            auto e = pe_node(ParamExpr::Kind::Ref);
            const_cast<ParamExpr&>(*e).name = name;
            return e;
        }
        fail("expected parameter expression");
    }

    // ---- statements ---------------------------------------------------------

    StmtPtr parse_block() {
        expect(Tok::LBrace, "'{'");
        std::vector<StmtPtr> stmts;
        while (cur().kind != Tok::RBrace && cur().kind != Tok::End)
            stmts.push_back(parse_stmt());
        expect(Tok::RBrace, "'}'");
        StmtPtr body = Stmt::skip();
        if (!stmts.empty()) {
            body = stmts.back();
            for (size_t i = stmts.size() - 1; i-- > 0;) body = Stmt::seq(stmts[i], body);
        }
        return body;
    }

    StmtPtr parse_stmt() {
        SourceLoc at = cur().loc;
        if (at_keyword("skip")) {
            take();
            expect(Tok::Semi, "';'");
            return Stmt::skip();
        }
        if (at_keyword("observe")) {
            take();
            expect(Tok::LParen, "'('");
            auto p = parse_pred();
            expect(Tok::RParen, "')'");
            expect(Tok::Semi, "';'");
            return Stmt::observe(p, at);
        }
        if (at_keyword("if")) {
            take();
            expect(Tok::LParen, "'('");
            auto g = parse_pred();
            expect(Tok::RParen, "')'");
            auto then_b = parse_block();
            StmtPtr else_b = Stmt::skip();
            if (at_keyword("else")) {
                take();
                else_b = parse_block();
            }
            return Stmt::branch(g, then_b, else_b, at);
        }
        if (at_keyword("for")) {
            take();
            std::string counter = expect(Tok::Ident, "loop counter").text;
            if (!at_keyword("in")) fail("expected 'in'");
            take();
            Token lo = expect(Tok::Number, "loop start");
            if (lo.number != 1.0) throw ParseError("for-loops must start at 1", lo.loc);
            expect(Tok::DotDot, "'..'");
            Token hi = expect(Tok::Number, "loop bound");
            double bound = hi.number;
            if (bound < 1.0 || bound != static_cast<int>(bound))
                throw ParseError("loop bound must be a positive integer constant", hi.loc);
            auto body = parse_block();
            return Stmt::loop(counter, static_cast<int>(bound), body, at);
        }
        if (cur().kind == Tok::Ident) {
            std::string name = take().text;
            if (param_names_.count(name))
                throw ParseError("cannot assign to parameter '" + name + "'", at);
            if (accept(Tok::Assign)) {
                auto e = parse_expr();
                expect(Tok::Semi, "';'");
                return Stmt::assign(name, e, at);
            }
            if (accept(Tok::Tilde)) {
                auto d = parse_dist();
                expect(Tok::Semi, "';'");
                return Stmt::sample(name, d, at);
            }
            fail("expected ':=' or '~' after '" + name + "'");
        }
        fail("expected statement");
    }

    // ---- distributions ------------------------------------------------------

    std::shared_ptr<const Dist> parse_dist() {
        SourceLoc at = cur().loc;
        std::string name = expect(Tok::Ident, "distribution name").text;
        expect(Tok::LParen, "'('");
        auto d = std::make_shared<Dist>();
        d->loc = at;
        if (name == "bernoulli") {
            d->kind = Dist::Kind::Bernoulli;
            d->p = parse_expr();
        } else if (name == "categorical") {
            d->kind = Dist::Kind::Categorical;
            do {
                double sign = accept(Tok::Minus) ? -1.0 : 1.0;
                Token v = expect(Tok::Number, "support value");
                double value = sign * v.number;
                expect(Tok::Colon, "':'");
                d->support.emplace_back(value, parse_expr());
            } while (accept(Tok::Comma));
        } else if (name == "gauss") {
            d->kind = Dist::Kind::Gauss;
            d->mean = parse_expr();
            expect(Tok::Comma, "','");
            d->variance = parse_expr();
        } else if (name == "gm") {
            d->kind = Dist::Kind::GmLit;
            do {
                Dist::GmComp c;
                c.weight = parse_expr();
                expect(Tok::Colon, "':'");
                c.mean = parse_expr();
                expect(Tok::Comma, "','");
                c.variance = parse_expr();
                d->gm.push_back(std::move(c));
            } while (accept(Tok::Comma));
        } else {
            throw ParseError("unknown distribution '" + name + "'", at);
        }
        expect(Tok::RParen, "')'");
        return d;
    }

    // ---- expressions ----------------------------------------------------------

    ExprPtr parse_expr() { return parse_add(); }

    ExprPtr parse_add() {
        auto e = parse_mul();
        for (;;) {
            if (accept(Tok::Plus))
                e = Expr::binary(Expr::Kind::Add, e, parse_mul());
            else if (accept(Tok::Minus))
                e = Expr::binary(Expr::Kind::Sub, e, parse_mul());
            else
                return e;
        }
    }

    ExprPtr parse_mul() {
        auto e = parse_unary();
        while (accept(Tok::Star)) e = Expr::binary(Expr::Kind::Mul, e, parse_unary());
        return e;
    }

    ExprPtr parse_unary() {
        if (accept(Tok::Minus))
            return Expr::binary(Expr::Kind::Sub, Expr::num(0.0), parse_unary());
        return parse_primary();
    }

    ExprPtr parse_primary() {
        if (cur().kind == Tok::Number) return Expr::num(take().number);
        if (accept(Tok::LParen)) {
            auto e = parse_expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        if (cur().kind == Tok::Ident) {
            std::string name = take().text;
            return param_names_.count(name) ? Expr::param(name) : Expr::var(name);
        }
        fail("expected expression");
    }

    // ---- predicates ------------------------------------------------------------

    PredPtr parse_pred() { return parse_pred_or(); }

    PredPtr parse_pred_or() {
        auto p = parse_pred_and();
        while (accept(Tok::OrOr)) p = Pred::disj(p, parse_pred_and());
        return p;
    }

    PredPtr parse_pred_and() {
        auto p = parse_pred_unary();
        while (accept(Tok::AndAnd)) p = Pred::conj(p, parse_pred_unary());
        return p;
    }

    PredPtr parse_pred_unary() {
        if (accept(Tok::Bang)) return Pred::negate(parse_pred_unary());
        return parse_pred_atom();
    }

    static std::optional<Pred::CmpOp> cmp_op(Tok k) {
        switch (k) {
            case Tok::EqEq: return Pred::CmpOp::Eq;
            case Tok::Lt: return Pred::CmpOp::Lt;
            case Tok::Gt: return Pred::CmpOp::Gt;
            case Tok::Le: return Pred::CmpOp::Le;
            case Tok::Ge: return Pred::CmpOp::Ge;
            default: return std::nullopt;
        }
    }

    PredPtr parse_pred_atom() {
        // Try `expr cmp expr` with backtracking; "(" may open either an
        // expression or a parenthesized predicate.
        size_t save = idx_;
        try {
            auto lhs = parse_expr();
            if (auto op = cmp_op(cur().kind)) {
                take();
                return Pred::cmp(*op, lhs, parse_expr());
            }
            if (lhs->kind == Expr::Kind::VarRef)  // bare boolean: b means b == 1
                return Pred::cmp(Pred::CmpOp::Eq, lhs, Expr::num(1.0));
            if (idx_ != save) idx_ = save;  // fall through to predicate forms
        } catch (const ParseError&) {
            idx_ = save;
        }
        if (accept(Tok::LParen)) {
            auto p = parse_pred();
            expect(Tok::RParen, "')'");
            return p;
        }
        fail("expected predicate");
    }

    // ---- validation ------------------------------------------------------------

    void check_expr_defined(const Expr& e, const std::set<std::string>& defined,
                            SourceLoc loc) const {
        switch (e.kind) {
            case Expr::Kind::Number:
            case Expr::Kind::ParamRef:
                return;
            case Expr::Kind::VarRef:
                if (!defined.count(e.name))
                    throw ParseError("variable '" + e.name + "' used before definition", loc);
                return;
            default:
                check_expr_defined(*e.lhs, defined, loc);
                check_expr_defined(*e.rhs, defined, loc);
        }
    }

    void check_pred_defined(const Pred& p, const std::set<std::string>& defined,
                            SourceLoc loc) const {
        switch (p.kind) {
            case Pred::Kind::Cmp:
                check_expr_defined(*p.lhs, defined, loc);
                check_expr_defined(*p.rhs, defined, loc);
                return;
            case Pred::Kind::Not:
                check_pred_defined(*p.a, defined, loc);
                return;
            default:
                check_pred_defined(*p.a, defined, loc);
                check_pred_defined(*p.b, defined, loc);
        }
    }

    void check_dist_defined(const Dist& d, const std::set<std::string>& defined) const {
        switch (d.kind) {
            case Dist::Kind::Bernoulli:
                check_expr_defined(*d.p, defined, d.loc);
                return;
            case Dist::Kind::Categorical:
                for (const auto& [_, pe] : d.support) check_expr_defined(*pe, defined, d.loc);
                return;
            case Dist::Kind::Gauss:
                check_expr_defined(*d.mean, defined, d.loc);
                check_expr_defined(*d.variance, defined, d.loc);
                return;
            case Dist::Kind::GmLit:
                for (const auto& c : d.gm) {
                    check_expr_defined(*c.weight, defined, d.loc);
                    check_expr_defined(*c.mean, defined, d.loc);
                    check_expr_defined(*c.variance, defined, d.loc);
                }
                return;
        }
    }

    void check_stmt_defined(const StmtPtr& s, std::set<std::string>& defined) const {
        if (!s) return;
        switch (s->kind) {
            case Stmt::Kind::Skip:
                return;
            case Stmt::Kind::Seq:
                check_stmt_defined(s->first, defined);
                check_stmt_defined(s->second, defined);
                return;
            case Stmt::Kind::Assign:
                check_expr_defined(*s->expr, defined, s->loc);
                defined.insert(s->var);
                return;
            case Stmt::Kind::Sample:
                check_dist_defined(*s->dist, defined);
                defined.insert(s->var);
                return;
            case Stmt::Kind::Observe:
                check_pred_defined(*s->pred, defined, s->loc);
                return;
            case Stmt::Kind::If: {
                check_pred_defined(*s->pred, defined, s->loc);
                auto then_defs = defined;
                check_stmt_defined(s->first, then_defs);
                auto else_defs = defined;
                check_stmt_defined(s->second, else_defs);
                // A variable is definitely defined after If only if both arms define it.
                for (const auto& v : then_defs)
                    if (else_defs.count(v)) defined.insert(v);
                return;
            }
            case Stmt::Kind::For:
                throw ParseError("internal: For survived unrolling", s->loc);
        }
    }

    void validate(const Program& prog) const {
        auto unrolled = unroll_stmt(prog.body);
        std::set<std::string> defined;
        check_stmt_defined(unrolled, defined);
        auto require_defined = [&](const std::string& v, const char* role) {
            if (!defined.count(v))
                throw ParseError(std::string("annotated ") + role + " variable '" + v +
                                     "' is never assigned",
                                 SourceLoc{0, 0});
        };
        for (const auto& v : prog.secret_vars) require_defined(v, "secret");
        for (const auto& v : prog.output_vars) require_defined(v, "output");
    }
};

}  // namespace

Program parse(const std::string& source) { return Parser(source).run(); }

}  // namespace leakscope::lang
