#include "adaptrace/parse.hpp"

#include <cctype>
#include <sstream>

namespace adaptrace {

ParseError::ParseError(SourcePos p, std::string msg, std::vector<std::string> exp)
    : std::runtime_error("parse error at " + std::to_string(p.line) + ":" +
                         std::to_string(p.col) + ": " + msg),
      pos(p),
      message(std::move(msg)),
      expected(std::move(exp)) {}

namespace {

enum class Tok {
    End,
    Ident,      // lowercase-start identifier or quoted atom
    UpIdent,    // uppercase-start identifier
    Int,
    Underscore,
    LBrack,     // [
    RBrack,     // ]
    LBlockNec,  // [|
    RBlockNec,  // |]
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Bang,
    Query,
    Amp,
    Plus,
    Minus,
    Underscore2,  // _{  (adaptation release list opener handled via Underscore+LBrace)
    Eq,
    Neq,
    Lt,
    Gt,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;   // Ident/UpIdent payload
    long long num = 0;  // Int payload
    bool quoted = false;
    SourcePos pos;
};

class Lexer {
  public:
    explicit Lexer(std::string src) : src_(std::move(src)) { advance(); }

    const Token& peek() const { return tok_; }

    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        skip_ws();
        tok_ = Token{};
        tok_.pos = pos_;
        if (i_ >= src_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        char c = src_[i_];
        if (c == '\'') {  // quoted atom
            take();
            std::string s;
            while (i_ < src_.size() && src_[i_] != '\'') s.push_back(take());
            if (i_ >= src_.size()) throw ParseError(tok_.pos, "unterminated quoted atom");
            take();
            tok_.kind = Tok::Ident;
            tok_.text = std::move(s);
            tok_.quoted = true;
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            long long n = 0;
            while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_])))
                n = n * 10 + (take() - '0');
            tok_.kind = Tok::Int;
            tok_.num = n;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::string s;
            while (i_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_'))
                s.push_back(take());
            tok_.kind = std::isupper(static_cast<unsigned char>(s[0])) ? Tok::UpIdent : Tok::Ident;
            tok_.text = std::move(s);
            return;
        }
        switch (c) {
            case '_': take(); tok_.kind = Tok::Underscore; return;
            case '[':
                take();
                if (i_ < src_.size() && src_[i_] == '|') {
                    take();
                    tok_.kind = Tok::LBlockNec;
                } else {
                    tok_.kind = Tok::LBrack;
                }
                return;
            case '|':
                take();
                if (i_ < src_.size() && src_[i_] == ']') {
                    take();
                    tok_.kind = Tok::RBlockNec;
                    return;
                }
                throw ParseError(tok_.pos, "stray '|'");
            case ']': take(); tok_.kind = Tok::RBrack; return;
            case '{': take(); tok_.kind = Tok::LBrace; return;
            case '}': take(); tok_.kind = Tok::RBrace; return;
            case '(': take(); tok_.kind = Tok::LParen; return;
            case ')': take(); tok_.kind = Tok::RParen; return;
            case ',': take(); tok_.kind = Tok::Comma; return;
            case '.': take(); tok_.kind = Tok::Dot; return;
            case ':': take(); tok_.kind = Tok::Colon; return;
            case '!':
                take();
                if (i_ < src_.size() && src_[i_] == '=') {
                    take();
                    tok_.kind = Tok::Neq;
                } else {
                    tok_.kind = Tok::Bang;
                }
                return;
            case '?': take(); tok_.kind = Tok::Query; return;
            case '&': take(); tok_.kind = Tok::Amp; return;
            case '+': take(); tok_.kind = Tok::Plus; return;
            case '-': take(); tok_.kind = Tok::Minus; return;
            case '=':
                take();
                if (i_ < src_.size() && src_[i_] == '=') take();
                tok_.kind = Tok::Eq;
                return;
            case '<': take(); tok_.kind = Tok::Lt; return;
            case '>': take(); tok_.kind = Tok::Gt; return;
            case '/':
                take();
                if (i_ < src_.size() && src_[i_] == '=') {
                    take();
                    tok_.kind = Tok::Neq;
                    return;
                }
                throw ParseError(tok_.pos, "stray '/'");
            default:
                throw ParseError(pos_, std::string("unexpected character '") + c + "'");
        }
    }

    void skip_ws() {
        while (i_ < src_.size()) {
            char c = src_[i_];
            if (c == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') take();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                take();
            } else {
                break;
            }
        }
    }

    char take() {
        char c = src_[i_++];
        if (c == '\n') {
            pos_.line++;
            pos_.col = 1;
        } else {
            pos_.col++;
        }
        return c;
    }

    std::string src_;
    size_t i_ = 0;
    SourcePos pos_;
    Token tok_;
};

std::optional<VType> annot_from_name(const std::string& s) {
    if (s == "dat") return VType::Dat;
    if (s == "upid") return VType::Upid;
    if (s == "lpid") return VType::Lpid;
    return std::nullopt;
}

class Parser {
  public:
    Parser(std::string src, std::set<std::string> pids)
        : lex_(std::move(src)), pids_(std::move(pids)) {}

    FPtr formula_eof() {
        FPtr f = formula();
        expect(Tok::End, "end of input");
        return f;
    }

  private:
    [[noreturn]] void fail(const std::string& msg, std::vector<std::string> exp = {}) {
        throw ParseError(lex_.peek().pos, msg, std::move(exp));
    }

    Token expect(Tok k, const std::string& what) {
        if (lex_.peek().kind != k) fail("expected " + what, {what});
        return lex_.next();
    }

    bool accept(Tok k) {
        if (lex_.peek().kind == k) {
            lex_.next();
            return true;
        }
        return false;
    }

    bool peek_ident(const char* kw) const {
        const Token& t = lex_.peek();
        return t.kind == Tok::Ident && !t.quoted && t.text == kw;
    }

    bool accept_ident(const char* kw) {
        if (peek_ident(kw)) {
            lex_.next();
            return true;
        }
        return false;
    }

    // -- formulas ------------------------------------------------------------

    FPtr formula() {
        FPtr left = formula_prefix();
        if (accept(Tok::Amp)) {
            FPtr right = formula();
            return f_and(std::move(left), std::move(right));
        }
        return left;
    }

    FPtr formula_prefix() {
        const Token& t = lex_.peek();
        switch (t.kind) {
            case Tok::LParen: {
                lex_.next();
                FPtr inner = formula();
                expect(Tok::RParen, ")");
                return inner;
            }
            case Tok::LBrack: {  // core or async necessity
                lex_.next();
                Pattern p = pattern();
                expect(Tok::RBrack, "]");
                if (accept_ident("a")) {
                    expect(Tok::Comma, ",");
                    RefList rl = reflist();
                    FPtr body = formula_prefix_tail();
                    return f_nec(NecMode::Async, std::move(p), std::move(rl), std::move(body));
                }
                FPtr body = formula_prefix_tail();
                return f_nec(NecMode::Core, std::move(p), {}, std::move(body));
            }
            case Tok::LBlockNec: {
                lex_.next();
                Pattern p = pattern();
                expect(Tok::RBlockNec, "|]");
                RefList rl = reflist();
                FPtr body = formula_prefix_tail();
                return f_nec(NecMode::Blocking, std::move(p), std::move(rl), std::move(body));
            }
            case Tok::UpIdent: {
                Token v = lex_.next();
                return f_fvar(v.text);
            }
            case Tok::Ident: {
                if (t.quoted) fail("quoted atom is not a formula");
                if (t.text == "tt") {
                    lex_.next();
                    return f_tru();
                }
                if (t.text == "ff") {
                    lex_.next();
                    return f_fls();
                }
                if (t.text == "sff") {
                    lex_.next();
                    return f_sync_fls();
                }
                if (t.text == "max") {
                    lex_.next();
                    Token v = expect(Tok::UpIdent, "fixpoint variable");
                    expect(Tok::Dot, ".");
                    FPtr body = formula();
                    return f_max(v.text, std::move(body));
                }
                if (t.text == "if") {
                    lex_.next();
                    BoolExpr c = bool_expr();
                    if (!accept_ident("then")) fail("expected 'then'", {"then"});
                    FPtr thenf = formula_prefix();
                    FPtr elsef = f_tru();
                    if (accept_ident("else")) elsef = formula_prefix();
                    return f_if(std::move(c), std::move(thenf), std::move(elsef));
                }
                if (t.text == "block" || t.text == "release" || t.text == "clr")
                    fail("'" + t.text + "' is runtime-only syntax and cannot appear in scripts");
                if (t.text == "adaptA") {
                    lex_.next();
                    auto [al, rl] = adapt_lists();
                    FPtr body = formula_prefix_tail();
                    return f_adapt_async(std::move(al), std::move(rl), std::move(body));
                }
                if (auto k = sync_kind(t.text)) {
                    lex_.next();
                    auto [al, rl] = adapt_lists();
                    FPtr body = formula_prefix_tail();
                    return f_adapt_sync(*k, std::move(al), std::move(rl), std::move(body));
                }
                fail("expected a formula",
                     {"tt", "ff", "sff", "max", "if", "[", "[|", "adaptation", "("});
            }
            default:
                fail("expected a formula",
                     {"tt", "ff", "sff", "max", "if", "[", "[|", "adaptation", "("});
        }
    }

    // Continuation of a prefix construct: a following formula.
    FPtr formula_prefix_tail() { return formula_prefix(); }

    static std::optional<AdaptKind> sync_kind(const std::string& s) {
        if (s == "kill") return AdaptKind::Kill;
        if (s == "restart") return AdaptKind::Restart;
        if (s == "purge") return AdaptKind::Purge;
        if (s == "slink") return AdaptKind::SLink;
        if (s == "sunlink") return AdaptKind::SUnlink;
        return std::nullopt;
    }

    std::pair<RefList, RefList> adapt_lists() {
        expect(Tok::LParen, "(");
        RefList al;
        if (lex_.peek().kind != Tok::RParen) {
            al.push_back(ref());
            while (accept(Tok::Comma)) al.push_back(ref());
        }
        expect(Tok::RParen, ")");
        expect(Tok::Underscore, "_{...} release list");
        RefList rl = reflist();
        return {std::move(al), std::move(rl)};
    }

    RefList reflist() {
        expect(Tok::LBrace, "{");
        RefList rl;
        if (lex_.peek().kind != Tok::RBrace) {
            rl.push_back(ref());
            while (accept(Tok::Comma)) rl.push_back(ref());
        }
        expect(Tok::RBrace, "}");
        return rl;
    }

    Ref ref() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::UpIdent) {
            Token v = lex_.next();
            if (!bound_.count(v.text)) bound_.insert(v.text);  // tolerated forward use
            return Ref::variable(v.text);
        }
        if (t.kind == Tok::Ident) {
            Token v = lex_.next();
            if (!v.quoted && bound_.count(v.text)) return Ref::variable(v.text);
            if (!v.quoted && pids_.count(v.text)) return Ref::pid(v.text);
            if (v.quoted) return Ref::value(Value::atom(v.text));
            fail("'" + v.text + "' in an actor list is neither a declared pid nor a bound variable");
        }
        fail("expected an actor reference");
    }

    // -- patterns --------------------------------------------------------------

    Pattern pattern() {
        if (lex_.peek().kind == Tok::Underscore) {
            // Lone `_` as a whole-action wildcard is internal-only; as a
            // subject it must be followed by an action operator.
            Token u = lex_.next();
            Pattern p = pattern_with_subject(Term::wildcard(), u.pos);
            return p;
        }
        Term subj = term();
        return pattern_with_subject(std::move(subj), lex_.peek().pos);
    }

    Pattern pattern_with_subject(Term subj, SourcePos at) {
        if (accept(Tok::Bang)) {
            Term target = term();
            expect(Tok::Dot, ".");
            Term payload = term();
            return Pattern::send(std::move(subj), std::move(target), std::move(payload));
        }
        if (accept(Tok::Query)) {
            Term payload = term();
            return Pattern::recv(std::move(subj), std::move(payload));
        }
        if (accept_ident("call")) {
            Term payload = term();
            return Pattern::call(std::move(subj), std::move(payload));
        }
        if (accept_ident("ret")) {
            Term payload = term();
            return Pattern::ret(std::move(subj), std::move(payload));
        }
        throw ParseError(at, "expected an action operator after the subject",
                         {"!", "?", "call", "ret"});
    }

    // term := simple_term (('+'|'-') simple_term)*
    Term term() {
        Term t = simple_term();
        while (true) {
            if (accept(Tok::Plus))
                t = Term::arith(ArithOp::Add, std::move(t), simple_term());
            else if (accept(Tok::Minus))
                t = Term::arith(ArithOp::Sub, std::move(t), simple_term());
            else
                break;
        }
        return t;
    }

    Term simple_term() {
        const Token& t = lex_.peek();
        switch (t.kind) {
            case Tok::Underscore: lex_.next(); return Term::wildcard();
            case Tok::Int: {
                Token n = lex_.next();
                return Term::value(Value::integer(n.num));
            }
            case Tok::Minus: {
                lex_.next();
                Token n = expect(Tok::Int, "integer");
                return Term::value(Value::integer(-n.num));
            }
            case Tok::LBrace: {
                lex_.next();
                std::vector<Term> xs;
                if (lex_.peek().kind != Tok::RBrace) {
                    xs.push_back(term());
                    while (accept(Tok::Comma)) xs.push_back(term());
                }
                expect(Tok::RBrace, "}");
                return Term::tuple(std::move(xs));
            }
            case Tok::LBrack: {
                lex_.next();
                std::vector<Term> xs;
                if (lex_.peek().kind != Tok::RBrack) {
                    xs.push_back(term());
                    while (accept(Tok::Comma)) xs.push_back(term());
                }
                expect(Tok::RBrack, "]");
                return Term::list(std::move(xs));
            }
            case Tok::UpIdent: {
                Token v = lex_.next();
                auto annot = maybe_annot(v);
                bool fresh = bound_.insert(v.text).second;
                return Term::variable(v.text, annot, fresh || annot.has_value());
            }
            case Tok::Ident: {
                Token v = lex_.next();
                if (v.quoted) return Term::value(Value::atom(v.text));
                auto annot = maybe_annot(v);
                if (annot) {
                    if (pids_.count(v.text))
                        throw ParseError(v.pos, "declared pid '" + v.text +
                                                    "' cannot carry a binder annotation");
                    bool fresh = bound_.insert(v.text).second;
                    (void)fresh;
                    return Term::variable(v.text, annot, true);
                }
                if (bound_.count(v.text)) return Term::variable(v.text, std::nullopt, false);
                if (pids_.count(v.text)) return Term::value(Value::pid(v.text));
                return Term::value(Value::atom(v.text));
            }
            default:
                fail("expected a term");
        }
    }

    std::optional<VType> maybe_annot(const Token& ident) {
        if (lex_.peek().kind != Tok::Colon) return std::nullopt;
        lex_.next();
        Token a = expect(Tok::Ident, "type annotation (dat|upid|lpid)");
        auto t = annot_from_name(a.text);
        if (!t)
            throw ParseError(a.pos, "unknown type annotation '" + a.text + "'",
                             {"dat", "upid", "lpid"});
        (void)ident;
        return t;
    }

    // -- boolean conditions -------------------------------------------------------

    BoolExpr bool_expr() {
        BoolExpr l = bool_term();
        while (true) {
            if (accept_ident("and"))
                l = BoolExpr::conj(std::move(l), bool_term());
            else if (accept_ident("or"))
                l = BoolExpr::disj(std::move(l), bool_term());
            else
                return l;
        }
    }

    BoolExpr bool_term() {
        if (accept_ident("not")) {
            expect(Tok::LParen, "(");
            BoolExpr inner = bool_expr();
            expect(Tok::RParen, ")");
            return BoolExpr::negate(std::move(inner));
        }
        if (peek_ident("true")) {
            lex_.next();
            return BoolExpr::literal(true);
        }
        if (peek_ident("false")) {
            lex_.next();
            return BoolExpr::literal(false);
        }
        if (lex_.peek().kind == Tok::LParen) {
            lex_.next();
            BoolExpr inner = bool_expr();
            expect(Tok::RParen, ")");
            return inner;
        }
        // Either a predicate call `name(arg, ...)` or a comparison.
        if (lex_.peek().kind == Tok::Ident && !lex_.peek().quoted) {
            Token name = lex_.peek();
            if (!bound_.count(name.text) && !pids_.count(name.text)) {
                lex_.next();
                if (lex_.peek().kind == Tok::LParen) {
                    lex_.next();
                    std::vector<Term> args;
                    if (lex_.peek().kind != Tok::RParen) {
                        args.push_back(term());
                        while (accept(Tok::Comma)) args.push_back(term());
                    }
                    expect(Tok::RParen, ")");
                    return BoolExpr::predicate(name.text, std::move(args));
                }
                // Plain atom on the left of a comparison.
                Term lhs = comparison_tail_lhs(Term::value(Value::atom(name.text)));
                return comparison(std::move(lhs));
            }
        }
        Term lhs = term();
        return comparison(std::move(lhs));
    }

    Term comparison_tail_lhs(Term atom_lhs) {
        Term t = std::move(atom_lhs);
        while (true) {
            if (accept(Tok::Plus))
                t = Term::arith(ArithOp::Add, std::move(t), simple_term());
            else if (accept(Tok::Minus))
                t = Term::arith(ArithOp::Sub, std::move(t), simple_term());
            else
                break;
        }
        return t;
    }

    BoolExpr comparison(Term lhs) {
        CmpOp op;
        switch (lex_.peek().kind) {
            case Tok::Eq: op = CmpOp::Eq; break;
            case Tok::Neq: op = CmpOp::Ne; break;
            case Tok::Lt: op = CmpOp::Lt; break;
            case Tok::Gt: op = CmpOp::Gt; break;
            default: fail("expected a comparison operator", {"=", "!=", "<", ">"});
        }
        lex_.next();
        Term rhs = term();
        return BoolExpr::cmp(op, std::move(lhs), std::move(rhs));
    }

    Lexer lex_;
    std::set<std::string> pids_;
    std::set<std::string> bound_;  // term variables in scope (flat; binders are unique-ified later)
};

// Header: lines `pids: a, b, c` / `types: i:lpid, j:upid` before the formula.
void parse_header(const std::string& src, size_t& offset, Script& out) {
    std::istringstream is(src);
    std::string line;
    size_t consumed = 0;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string trimmed = line;
        size_t h = trimmed.find('#');
        if (h != std::string::npos) trimmed = trimmed.substr(0, h);
        size_t b = trimmed.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            consumed += line.size() + 1;
            continue;
        }
        trimmed = trimmed.substr(b);
        auto starts = [&](const char* kw) { return trimmed.rfind(kw, 0) == 0; };
        if (starts("pids:")) {
            std::istringstream ls(trimmed.substr(5));
            std::string name;
            while (std::getline(ls, name, ',')) {
                std::string n;
                for (char c : name)
                    if (!std::isspace(static_cast<unsigned char>(c))) n.push_back(c);
                if (n.empty()) continue;
                out.pids.insert(n);
            }
            consumed += line.size() + 1;
            continue;
        }
        if (starts("types:")) {
            std::istringstream ls(trimmed.substr(6));
            std::string entry;
            while (std::getline(ls, entry, ',')) {
                std::string n;
                for (char c : entry)
                    if (!std::isspace(static_cast<unsigned char>(c))) n.push_back(c);
                if (n.empty()) continue;
                size_t colon = n.find(':');
                if (colon == std::string::npos)
                    throw ParseError({lineno, 1}, "types entry '" + n + "' needs name:type");
                std::string name = n.substr(0, colon);
                auto t = annot_from_name(n.substr(colon + 1));
                if (!t)
                    throw ParseError({lineno, 1},
                                     "unknown type '" + n.substr(colon + 1) + "' in types header",
                                     {"dat", "upid", "lpid"});
                out.types[name] = *t;
                out.pids.insert(name);
            }
            consumed += line.size() + 1;
            continue;
        }
        break;  // first non-header line: the formula starts here
    }
    offset = consumed;
}

}  // namespace

Script parse_script(const std::string& source) {
    Script script;
    size_t offset = 0;
    parse_header(source, offset, script);
    std::string body = source.substr(std::min(offset, source.size()));
    // Preserve positions: pad with blank lines for the consumed header part.
    std::string pad;
    for (size_t i = 0; i < offset; ++i)
        if (source[i] == '\n') pad.push_back('\n');
    Parser p(pad + body, script.pids);
    script.formula = p.formula_eof();
    return script;
}

FPtr parse_formula(const std::string& source, const std::set<std::string>& pids) {
    Parser p(source, pids);
    return p.formula_eof();
}

std::vector<Action> parse_trace(const std::string& text, const std::set<std::string>& pids) {
    std::vector<Action> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        std::string subj;
        if (!(ls >> subj)) throw ParseError({lineno, 1}, "trace event needs a subject pid");
        std::string rest;
        std::getline(ls, rest);

        std::set<std::string> all_pids = pids;
        all_pids.insert(subj);

        // Reuse the pattern parser on a reconstructed necessity.
        std::string pat_src;
        if (kw == "send") {
            std::istringstream rs(rest);
            std::string target;
            if (!(rs >> target)) throw ParseError({lineno, 1}, "send needs a target pid");
            all_pids.insert(target);
            std::string payload;
            std::getline(rs, payload);
            pat_src = subj + " ! " + target + " . " + payload;
        } else if (kw == "recv") {
            pat_src = subj + " ? " + rest;
        } else if (kw == "call") {
            pat_src = subj + " call " + rest;
        } else if (kw == "ret") {
            pat_src = subj + " ret " + rest;
        } else {
            throw ParseError({lineno, 1}, "unknown trace event kind '" + kw + "'",
                             {"send", "recv", "call", "ret"});
        }
        Parser p("[" + pat_src + "] tt", all_pids);
        FPtr f = p.formula_eof();
        Action a = f->pat;
        if (!a.is_closed())
            throw ParseError({lineno, 1}, "trace event is not a closed action: " + line);
        out.push_back(std::move(a));
    }
    return out;
}

std::string format_error(const ParseError& e) {
    std::ostringstream os;
    os << e.pos.line << ":" << e.pos.col << ": " << e.message;
    if (!e.expected.empty()) {
        os << " (expected ";
        for (size_t i = 0; i < e.expected.size(); ++i) {
            if (i) os << ", ";
            os << e.expected[i];
        }
        os << ")";
    }
    return os.str();
}

}  // namespace adaptrace
