#include "jagq/query_lang.hpp"

#include <cctype>
#include <limits>
#include <charconv>
#include <map>
#include <optional>
#include <unordered_map>

#include "jagq/errors.hpp"

namespace jagq {

namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
    Tok type = Tok::End;
    std::string text;
    std::size_t offset = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            Token t;
            t.offset = pos_;
            if (pos_ == src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t start = pos_;
                while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
                t.type = Tok::Ident;
                t.text = src_.substr(start, pos_ - start);
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                t.type = Tok::Number;
                t.text = number();
            } else if (c == '"') {
                t.type = Tok::String;
                t.text = string();
            } else {
                t.type = Tok::Punct;
                static constexpr std::string_view two[] = {"=>", "|>", "&&", "||", "<=", ">=", "==", "!="};
                for (auto p : two) {
                    if (src_.substr(pos_, 2) == p) t.text = p;
                }
                if (t.text.empty()) {
                    if (std::string_view("(),.<>+-*/").find(c) == std::string_view::npos) {
                        error(pos_, std::string("unexpected character '") + c + "'");
                    }
                    t.text = std::string(1, c);
                }
                pos_ += t.text.size();
            }
            out.push_back(std::move(t));
        }
    }

    [[noreturn]] void error(std::size_t offset, const std::string& msg) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < offset && i < src_.size(); ++i) {
            if (src_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        fail(ErrorCode::SyntaxError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
    }

private:
    std::string number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            if (pos_ == src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                error(pos_, "digits expected after '.'");
            }
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ == src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                error(pos_, "digits expected in exponent");
            }
            digits();
        }
        return std::string(src_.substr(start, pos_ - start));
    }

    std::string string() {
        const std::size_t start = pos_++;
        std::string out;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
            out.push_back(src_[pos_++]);
        }
        if (pos_ == src_.size()) error(start, "unterminated string");
        ++pos_;
        return out;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

class Parser {
public:
    Parser(std::string_view text, Session& s) : lex_(text), toks_(lex_.run()), s_(s) {}

    Expr query() {
        Expr e = expr();
        if (peek().type != Tok::End) error("unexpected '" + peek().text + "' after the query");
        return e;
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    bool at(std::string_view punct) const { return peek().type == Tok::Punct && peek().text == punct; }
    [[noreturn]] void error(const std::string& msg) const { lex_.error(peek().offset, msg); }

    void expect(std::string_view punct) {
        if (!at(punct)) error("expected '" + std::string(punct) + "'");
        ++pos_;
    }

    std::string ident() {
        if (peek().type != Tok::Ident) error("expected a name");
        return toks_[pos_++].text;
    }

    std::string str() {
        if (peek().type != Tok::String) error("expected a string");
        return toks_[pos_++].text;
    }

    Expr expr() { return binary_level(1); }

    static std::optional<std::pair<BinaryOp, int>> binop(const Token& t) {
        if (t.type != Tok::Punct) return std::nullopt;
        static const std::map<std::string, std::pair<BinaryOp, int>, std::less<>> ops = {
            {"||", {BinaryOp::Or, 1}}, {"&&", {BinaryOp::And, 2}}, {"==", {BinaryOp::Eq, 3}},
            {"!=", {BinaryOp::Ne, 3}}, {"<", {BinaryOp::Lt, 3}},   {">", {BinaryOp::Gt, 3}},
            {"<=", {BinaryOp::Le, 3}}, {">=", {BinaryOp::Ge, 3}},  {"+", {BinaryOp::Add, 4}},
            {"-", {BinaryOp::Sub, 4}}, {"*", {BinaryOp::Mul, 5}},  {"/", {BinaryOp::Div, 5}},
        };
        auto it = ops.find(t.text);
        if (it == ops.end()) return std::nullopt;
        return it->second;
    }

    Expr binary_level(int level) {
        if (level > 5) return unary();
        Expr lhs = binary_level(level + 1);
        for (;;) {
            auto op = binop(peek());
            if (!op || op->second != level) return lhs;
            ++pos_;
            Expr rhs = binary_level(level + 1);
            lhs = s_.binary(op->first, lhs, rhs);
            if (level == 3) {
                auto next = binop(peek());
                if (next && next->second == 3) error("comparisons cannot be chained");
                return lhs;
            }
        }
    }

    Expr unary() {
        if (at("-")) {
            const Token& next = peek(1);
            if (next.type == Tok::Number || (next.type == Tok::Ident && (next.text == "inf" || next.text == "nan"))) {
                ++pos_;
                const std::string text = "-" + toks_[pos_++].text;
                return postfix(literal(text));
            }
            ++pos_;
            return s_.unary(UnaryOp::Neg, unary());
        }
        return postfix(primary());
    }

    Expr literal(const std::string& text) {
        const bool negative = text.front() == '-';
        const std::string_view body = std::string_view(text).substr(negative ? 1 : 0);
        if (body == "inf") return s_.constant(negative ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity());
        if (body == "nan") {
            const double n = std::numeric_limits<double>::quiet_NaN();
            return s_.constant(negative ? -n : n);
        }
        const char* first = text.data();
        const char* last = text.data() + text.size();
        if (text.find_first_of(".eE") == std::string::npos) {
            std::int64_t v = 0;
            auto r = std::from_chars(first, last, v);
            if (r.ec != std::errc() || r.ptr != last) error("integer literal out of range: " + text);
            return s_.constant(v);
        }
        double v = 0;
        auto r = std::from_chars(first, last, v);
        if (r.ec != std::errc() || r.ptr != last) error("bad number: " + text);
        return s_.constant(v);
    }

    Expr postfix(Expr e) {
        for (;;) {
            if (at(".")) {
                ++pos_;
                e = e[ident()];
            } else if (at("|>")) {
                ++pos_;
                e = stage(e);
            } else {
                return e;
            }
        }
    }

    Expr with_lambda(const std::function<Expr(const std::function<Expr(Expr)>&)>& apply) {
        const std::string name = ident();
        expect("=>");
        Expr out = apply([&](Expr p) {
            scope_.emplace_back(name, p);
            Expr body = expr();
            scope_.pop_back();
            return body;
        });
        return out;
    }

    Expr stage(const Expr& seq) {
        const std::size_t where = pos_;
        const std::string name = ident();
        expect("(");
        Expr out = seq;
        if (name == "Get") {
            out = seq[str()];
        } else if (name == "Where") {
            out = with_lambda([&](const auto& fn) { return seq.filter(fn); });
        } else if (name == "Select") {
            out = with_lambda([&](const auto& fn) { return seq.map(fn); });
        } else if (name == "SelectMany") {
            out = with_lambda([&](const auto& fn) { return seq.map(fn); }).flatten();
        } else {
            static const std::map<std::string, ReduceOp, std::less<>> reducers = {
                {"Count", ReduceOp::Count}, {"First", ReduceOp::First}, {"Sum", ReduceOp::Sum}, {"Min", ReduceOp::Min},
                {"Max", ReduceOp::Max},     {"Any", ReduceOp::Any},     {"All", ReduceOp::All},
            };
            auto it = reducers.find(name);
            if (it == reducers.end()) {
                pos_ = where;
                error("unknown stage '" + name + "'");
            }
            out = seq.aggregate(it->second);
        }
        expect(")");
        return out;
    }

    std::vector<Expr> args() {
        std::vector<Expr> out;
        expect("(");
        if (!at(")")) {
            out.push_back(expr());
            while (at(",")) {
                ++pos_;
                out.push_back(expr());
            }
        }
        expect(")");
        return out;
    }

    Expr primary() {
        const Token& t = peek();
        if (t.type == Tok::Number) {
            ++pos_;
            return literal(t.text);
        }
        if (at("(")) {
            ++pos_;
            Expr e = expr();
            expect(")");
            return e;
        }
        if (t.type != Tok::Ident) error(t.type == Tok::End ? "unexpected end of query" : "unexpected '" + t.text + "'");
        const std::size_t where = pos_;
        const std::string name = toks_[pos_++].text;
        if (name == "true" || name == "false") return s_.constant(name == "true");
        if (name == "inf" || name == "nan") return literal(name);
        if (!at("(")) {
            for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
                if (it->first == name) return it->second;
            }
            pos_ = where;
            error("unknown name '" + name + "'");
        }
        if (name == "From") {
            expect("(");
            std::string ds = str();
            expect(")");
            return s_.source(std::move(ds));
        }
        static const std::map<std::string, UnaryOp, std::less<>> unaries = {
            {"Abs", UnaryOp::Abs}, {"Sqrt", UnaryOp::Sqrt}, {"Sin", UnaryOp::Sin}, {"Cos", UnaryOp::Cos}};
        auto arity = [&](const std::vector<Expr>& a, std::size_t n) {
            if (a.size() != n) {
                pos_ = where;
                error(name + " takes " + std::to_string(n) + " arguments");
            }
        };
        if (auto u = unaries.find(name); u != unaries.end()) {
            auto a = args();
            arity(a, 1);
            return s_.unary(u->second, a[0]);
        }
        if (name == "Atan2") {
            auto a = args();
            arity(a, 2);
            return s_.binary(BinaryOp::Atan2, a[0], a[1]);
        }
        if (name == "Mask") {
            auto a = args();
            arity(a, 2);
            return s_.filter(a[0], a[1]);
        }
        if (name == "Broadcast") {
            expect("(");
            Expr value = expr();
            expect(",");
            Expr frame = expr();
            expect(",");
            if (peek().type != Tok::Number || peek().text.find_first_of(".eE") != std::string::npos) {
                error("Broadcast depth must be a non-negative integer");
            }
            const std::string digits = toks_[pos_++].text;
            std::uint32_t shared = 0;
            auto r = std::from_chars(digits.data(), digits.data() + digits.size(), shared);
            if (r.ec != std::errc()) error("Broadcast depth out of range");
            expect(")");
            return s_.broadcast(value, frame, shared);
        }
        if (s_.find_function(name) == nullptr) {
            fail(ErrorCode::UnknownFunction, "unknown function '" + name + "' at offset " + std::to_string(t.offset));
        }
        return s_.call(name, args());
    }

    Lexer lex_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    Session& s_;
    std::vector<std::pair<std::string, Expr>> scope_;
};

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
}

constexpr int kPostfix = 7;
constexpr int kUnary = 6;

int precedence(BinaryOp op) {
    switch (op) {
        case BinaryOp::Or: return 1;
        case BinaryOp::And: return 2;
        case BinaryOp::Add:
        case BinaryOp::Sub: return 4;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 5;
        default: return 3;
    }
}

std::string_view symbol(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Gt: return ">";
        case BinaryOp::Le: return "<=";
        case BinaryOp::Ge: return ">=";
        case BinaryOp::Eq: return "==";
        case BinaryOp::Ne: return "!=";
        case BinaryOp::And: return "&&";
        case BinaryOp::Or: return "||";
        case BinaryOp::Atan2: break;
    }
    return "";
}

std::string_view unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Abs: return "Abs";
        case UnaryOp::Sqrt: return "Sqrt";
        case UnaryOp::Sin: return "Sin";
        case UnaryOp::Cos: return "Cos";
        case UnaryOp::Neg: break;
    }
    return "";
}

std::string_view stage_name(ReduceOp op) {
    switch (op) {
        case ReduceOp::Count: return "Count";
        case ReduceOp::First: return "First";
        case ReduceOp::Sum: return "Sum";
        case ReduceOp::Min: return "Min";
        case ReduceOp::Max: return "Max";
        case ReduceOp::Any: return "Any";
        case ReduceOp::All: return "All";
        case ReduceOp::Flatten: break;
    }
    return "";
}

struct Text {
    std::string s;
    int prec = kPostfix;
};

std::string paren(const Text& t, bool need) { return need ? "(" + t.s + ")" : t.s; }

/// Per-record expression over one collection pipeline, written in p0.
struct View {
    enum class Form { Record, Leaf, Other } form = Form::Other;
    std::string chain;
    Text expr;
};

class Translator {
public:
    explicit Translator(const Dag& dag) : dag_(dag), views_(dag.size()), texts_(dag.size()), done_(dag.size(), false) {}

    Text render(NodeId id) {
        if (!texts_[id]) texts_[id] = compute(id);
        return *texts_[id];
    }

private:
    const std::optional<View>& view(NodeId id) {
        if (!done_[id]) {
            views_[id] = compute_view(id);
            done_[id] = true;
        }
        return views_[id];
    }

    static Text binary_text(BinaryOp op, const Text& a, const Text& b) {
        if (op == BinaryOp::Atan2) return {"Atan2(" + a.s + ", " + b.s + ")", kPostfix};
        const int p = precedence(op);
        const bool left = p == 3 ? a.prec <= p : a.prec < p;
        return {paren(a, left) + " " + std::string(symbol(op)) + " " + paren(b, b.prec <= p), p};
    }

    static Text unary_text(UnaryOp op, const Text& a) {
        if (op == UnaryOp::Neg) return {"-" + paren(a, a.prec <= kUnary), kUnary};
        return {std::string(unary_name(op)) + "(" + a.s + ")", kPostfix};
    }

    Text constant(NodeId id) const {
        std::string s = format_scalar(dag_.nodes[id].constant);
        return {s, s.front() == '-' ? kUnary : kPostfix};
    }

    /// Element-wise operands: all constants or views over one chain.
    std::optional<std::pair<std::string, std::vector<Text>>> operands(const std::vector<NodeId>& children) {
        std::optional<std::string> chain;
        std::vector<Text> out;
        for (NodeId c : children) {
            if (dag_.is_constant(c)) {
                out.push_back(constant(c));
                continue;
            }
            const auto& v = view(c);
            if (!v || (chain && *chain != v->chain)) return std::nullopt;
            chain = v->chain;
            out.push_back(v->expr);
        }
        if (!chain) return std::nullopt;
        return std::make_pair(*chain, std::move(out));
    }

    std::optional<View> compute_view(NodeId id) {
        const Node& n = dag_.nodes[id];
        if (dag_.depths[id] != 1 || n.kind == NodeKind::Constant) return std::nullopt;
        switch (n.kind) {
            case NodeKind::Attribute: {
                const Node& p = dag_.nodes[n.children[0]];
                if (p.kind == NodeKind::Source) {
                    return View{View::Form::Record, render(n.children[0]).s + " |> Get(" + quote(n.name) + ")", {"p0"}};
                }
                const auto& pv = view(n.children[0]);
                if (!pv || pv->form != View::Form::Record || !is_identifier(n.name)) return std::nullopt;
                return View{View::Form::Leaf, pv->chain, {"p0." + n.name}};
            }
            case NodeKind::Filter: {
                const auto& sv = view(n.children[0]);
                if (!sv || sv->form == View::Form::Other) return std::nullopt;
                auto ops = operands({n.children[0], n.children[1]});
                if (!ops) return std::nullopt;
                return View{sv->form, sv->chain + " |> Where(p0 => " + ops->second[1].s + ")", sv->expr};
            }
            case NodeKind::Binary: {
                auto ops = operands(n.children);
                if (!ops) return std::nullopt;
                return View{View::Form::Other, ops->first, binary_text(n.binary, ops->second[0], ops->second[1])};
            }
            case NodeKind::Unary: {
                auto ops = operands(n.children);
                if (!ops) return std::nullopt;
                return View{View::Form::Other, ops->first, unary_text(n.unary, ops->second[0])};
            }
            case NodeKind::Call: {
                auto ops = operands(n.children);
                if (!ops) return std::nullopt;
                std::string s = n.name + "(";
                for (std::size_t i = 0; i < ops->second.size(); ++i) s += (i ? ", " : "") + ops->second[i].s;
                return View{View::Form::Other, ops->first, {s + ")"}};
            }
            case NodeKind::Broadcast: {
                const NodeId value = n.children[0];
                if (n.shared != 0 || dag_.is_constant(value) || dag_.depths[value] != 0) return std::nullopt;
                const auto& fv = view(n.children[1]);
                if (!fv || fv->form != View::Form::Record) return std::nullopt;
                return View{View::Form::Other, fv->chain, render(value)};
            }
            default: return std::nullopt;
        }
    }

    Text compute(NodeId id) {
        const Node& n = dag_.nodes[id];
        if (n.kind == NodeKind::Constant) return constant(id);
        if (const auto& v = view(id)) {
            if (v->form == View::Form::Record) return {v->chain};
            return {v->chain + " |> Select(p0 => " + v->expr.s + ")"};
        }
        auto arg = [&](std::size_t i) { return render(n.children[i]); };
        switch (n.kind) {
            case NodeKind::Source: return {"From(" + quote(n.name) + ")"};
            case NodeKind::Attribute: {
                const Text p = arg(0);
                return {paren(p, p.prec < kPostfix) + " |> Get(" + quote(n.name) + ")"};
            }
            case NodeKind::Binary: return binary_text(n.binary, arg(0), arg(1));
            case NodeKind::Unary: return unary_text(n.unary, arg(0));
            case NodeKind::Call: {
                std::string s = n.name + "(";
                for (std::size_t i = 0; i < n.children.size(); ++i) s += (i ? ", " : "") + arg(i).s;
                return {s + ")"};
            }
            case NodeKind::Filter: return {"Mask(" + arg(0).s + ", " + arg(1).s + ")"};
            case NodeKind::Aggregate: {
                const Text x = arg(0);
                const std::string stage = n.reduce == ReduceOp::Flatten ? "SelectMany(p0 => p0)"
                                                                        : std::string(stage_name(n.reduce)) + "()";
                return {paren(x, x.prec < kPostfix) + " |> " + stage};
            }
            case NodeKind::Broadcast:
                return {"Broadcast(" + arg(0).s + ", " + arg(1).s + ", " + std::to_string(n.shared) + ")"};
            default: break;
        }
        fail(ErrorCode::UnsupportedNode, std::string(to_string(n.kind)) + " has no query-language form");
    }

    const Dag& dag_;
    std::vector<std::optional<View>> views_;
    std::vector<std::optional<Text>> texts_;
    std::vector<bool> done_;
};

}  // namespace

Expr parse_query(std::string_view text, Session& session) { return Parser(text, session).query(); }

bool remote_capable(const Dag& dag, NodeId node, bool cross_reference) {
    const Node& n = dag.nodes.at(node);
    switch (n.kind) {
        case NodeKind::Map:
        case NodeKind::Param: return false;
        case NodeKind::Filter: return cross_reference || dag.records[n.children[0]];
        case NodeKind::Broadcast: return cross_reference || dag.is_constant(n.children[0]);
        default: return true;
    }
}

std::string translate(const Dag& dag, NodeId root, bool cross_reference) {
    std::vector<bool> seen(dag.size(), false);
    std::vector<NodeId> stack{root};
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        if (seen[id]) continue;
        seen[id] = true;
        if (!remote_capable(dag, id, cross_reference)) {
            fail(ErrorCode::UnsupportedNode, "n" + std::to_string(id) + " " + node_label(dag, id) +
                                                 " needs cross-collection references, which are switched off");
        }
        for (NodeId c : dag.nodes[id].children) stack.push_back(c);
    }
    return Translator(dag).render(root).s;
}

}  // namespace jagq
