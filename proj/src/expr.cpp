#include "jagq/expr.hpp"

#include <algorithm>

namespace jagq {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::KindMismatch: return "KindMismatch";
        case ErrorCode::EmptySequence: return "EmptySequence";
        case ErrorCode::InvalidArray: return "InvalidArray";
        case ErrorCode::UnboundParameter: return "UnboundParameter";
        case ErrorCode::ForeignParameter: return "ForeignParameter";
        case ErrorCode::AliasCycle: return "AliasCycle";
        case ErrorCode::DuplicateAlias: return "DuplicateAlias";
        case ErrorCode::UndeclaredFunction: return "UndeclaredFunction";
        case ErrorCode::Redeclaration: return "Redeclaration";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::TypeError: return "TypeError";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnknownFunction: return "UnknownFunction";
        case ErrorCode::UnknownDataset: return "UnknownDataset";
        case ErrorCode::UnsupportedNode: return "UnsupportedNode";
        case ErrorCode::NoBackend: return "NoBackend";
        case ErrorCode::MissingBinding: return "MissingBinding";
        case ErrorCode::MissingImplementation: return "MissingImplementation";
        case ErrorCode::WireFormat: return "WireFormat";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Source: return "Source";
        case NodeKind::Attribute: return "Attribute";
        case NodeKind::Binary: return "Binary";
        case NodeKind::Unary: return "Unary";
        case NodeKind::Filter: return "Filter";
        case NodeKind::Map: return "Map";
        case NodeKind::Aggregate: return "Aggregate";
        case NodeKind::Call: return "Call";
        case NodeKind::Constant: return "Const";
        case NodeKind::Param: return "Param";
        case NodeKind::Broadcast: return "Broadcast";
    }
    return "?";
}

Expr Expr::attr(std::string_view name) const { return session_->attr(*this, name); }
Expr Expr::filter(const Expr& mask) const { return session_->filter(*this, mask); }
Expr Expr::filter(const std::function<Expr(Expr)>& pred) const {
    return session_->filter(*this, pred);
}
Expr Expr::map(const std::function<Expr(Expr)>& body) const { return session_->map(*this, body); }
Expr Expr::aggregate(ReduceOp op) const { return session_->aggregate(op, *this); }
void Expr::define(std::string name, std::function<Expr(Expr)> body) const {
    session_->define_alias(*this, std::move(name), std::move(body));
}

Session::Session() = default;

NodeId Session::add(Node node) {
    for (NodeId c : node.children) {
        if (c >= nodes_.size()) {
            fail(ErrorCode::Internal, "child created after parent");
        }
    }
    nodes_.push_back(std::move(node));
    free_cache_.emplace_back();
    origin_cache_.emplace_back();
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Session::check_same_session(const Expr& e) const {
    if (&e.session() != this) {
        fail(ErrorCode::ForeignParameter, "expression belongs to a different session");
    }
}

Expr Session::source(std::string dataset) {
    Node n;
    n.kind = NodeKind::Source;
    n.name = std::move(dataset);
    return wrap(add(std::move(n)));
}

Expr Session::constant(Scalar value) {
    Node n;
    n.kind = NodeKind::Constant;
    n.constant = value;
    return wrap(add(std::move(n)));
}

Expr Session::attr(const Expr& parent, std::string_view name) {
    check_same_session(parent);
    const AliasKey key{origin(parent.id()), std::string(name)};
    if (auto it = aliases_.find(key); it != aliases_.end()) {
        if (std::find(resolving_.begin(), resolving_.end(), key) != resolving_.end()) {
            fail(ErrorCode::AliasCycle, "alias '" + key.name + "' on '" + key.origin +
                                            "' refers to itself");
        }
        resolving_.push_back(key);
        struct Pop {
            std::vector<AliasKey>& v;
            ~Pop() { v.pop_back(); }
        } pop{resolving_};
        // Copy: the body may define further aliases and invalidate `it`.
        auto body = it->second;
        return map(parent, body);
    }
    Node n;
    n.kind = NodeKind::Attribute;
    n.children = {parent.id()};
    n.name = std::string(name);
    return wrap(add(std::move(n)));
}

Expr Session::binary(BinaryOp op, const Expr& a, const Expr& b) {
    check_same_session(a);
    check_same_session(b);
    Node n;
    n.kind = NodeKind::Binary;
    n.binary = op;
    n.children = {a.id(), b.id()};
    return wrap(add(std::move(n)));
}

Expr Session::unary(UnaryOp op, const Expr& a) {
    check_same_session(a);
    Node n;
    n.kind = NodeKind::Unary;
    n.unary = op;
    n.children = {a.id()};
    return wrap(add(std::move(n)));
}

Expr Session::filter(const Expr& seq, const Expr& mask) {
    check_same_session(seq);
    check_same_session(mask);
    Node n;
    n.kind = NodeKind::Filter;
    n.children = {seq.id(), mask.id()};
    return wrap(add(std::move(n)));
}

ParamId Session::open_binder(NodeId domain) {
    const ParamId p = next_param_++;
    param_domain_[p] = domain;
    open_params_.push_back(p);
    return p;
}

void Session::close_binder(ParamId p) {
    if (open_params_.empty() || open_params_.back() != p) {
        fail(ErrorCode::Internal, "binder stack corrupted");
    }
    open_params_.pop_back();
}

void Session::check_scope(NodeId body, ParamId own) const {
    for (ParamId p : free_params(body)) {
        if (p == own) {
            continue;
        }
        if (std::find(open_params_.begin(), open_params_.end(), p) == open_params_.end()) {
            fail(ErrorCode::ForeignParameter,
                 "lambda body references parameter p" + std::to_string(p) +
                     " that is not bound by an enclosing map or filter");
        }
    }
}

Expr Session::filter(const Expr& seq, const std::function<Expr(Expr)>& pred) {
    check_same_session(seq);
    const ParamId p = open_binder(seq.id());
    Node pn;
    pn.kind = NodeKind::Param;
    pn.param = p;
    const NodeId pid = add(std::move(pn));
    std::optional<Expr> body;
    try {
        body = pred(wrap(pid));
    } catch (...) {
        close_binder(p);
        throw;
    }
    close_binder(p);
    check_same_session(*body);
    check_scope(body->id(), p);
    Node n;
    n.kind = NodeKind::Filter;
    n.children = {seq.id(), body->id()};
    n.param = p;
    return wrap(add(std::move(n)));
}

Expr Session::map(const Expr& seq, const std::function<Expr(Expr)>& fn) {
    check_same_session(seq);
    const ParamId p = open_binder(seq.id());
    Node pn;
    pn.kind = NodeKind::Param;
    pn.param = p;
    const NodeId pid = add(std::move(pn));
    std::optional<Expr> body;
    try {
        body = fn(wrap(pid));
    } catch (...) {
        close_binder(p);
        throw;
    }
    close_binder(p);
    check_same_session(*body);
    check_scope(body->id(), p);
    Node n;
    n.kind = NodeKind::Map;
    n.children = {seq.id(), body->id()};
    n.param = p;
    return wrap(add(std::move(n)));
}

Expr Session::aggregate(ReduceOp op, const Expr& seq) {
    check_same_session(seq);
    Node n;
    n.kind = NodeKind::Aggregate;
    n.reduce = op;
    n.children = {seq.id()};
    return wrap(add(std::move(n)));
}

Expr Session::call(std::string_view name, const std::vector<Expr>& args) {
    const FunctionDecl* decl = find_function(name);
    if (decl == nullptr) {
        fail(ErrorCode::UndeclaredFunction,
             "function '" + std::string(name) + "' must be declared before use");
    }
    if (decl->params.size() != args.size()) {
        fail(ErrorCode::UndeclaredFunction,
             "function '" + std::string(name) + "' takes " + std::to_string(decl->params.size()) +
                 " arguments, got " + std::to_string(args.size()));
    }
    Node n;
    n.kind = NodeKind::Call;
    n.name = std::string(name);
    for (const Expr& a : args) {
        check_same_session(a);
        n.children.push_back(a.id());
    }
    return wrap(add(std::move(n)));
}

Expr Session::broadcast(const Expr& value, const Expr& frame, std::uint32_t shared) {
    check_same_session(value);
    check_same_session(frame);
    Node n;
    n.kind = NodeKind::Broadcast;
    n.children = {value.id(), frame.id()};
    n.shared = shared;
    return wrap(add(std::move(n)));
}

void Session::declare_function(std::string name, std::vector<ElementKind> params, ElementKind ret) {
    FunctionDecl decl{name, std::move(params), ret};
    if (auto it = functions_.find(name); it != functions_.end()) {
        if (it->second == decl) {
            return;
        }
        fail(ErrorCode::Redeclaration, "function '" + name + "' redeclared with a different signature");
    }
    functions_.emplace(std::move(name), std::move(decl));
}

const FunctionDecl* Session::find_function(std::string_view name) const {
    auto it = functions_.find(name);
    return it == functions_.end() ? nullptr : &it->second;
}

void Session::define_alias(const Expr& anchor, std::string name, std::function<Expr(Expr)> body) {
    check_same_session(anchor);
    AliasKey key{origin(anchor.id()), std::move(name)};
    if (aliases_.contains(key)) {
        fail(ErrorCode::DuplicateAlias,
             "alias '" + key.name + "' already defined on '" + key.origin + "'");
    }
    aliases_.emplace(std::move(key), std::move(body));
}

const std::vector<ParamId>& Session::free_params(NodeId id) const {
    auto& slot = free_cache_.at(id);
    if (slot) {
        return *slot;
    }
    const Node& n = nodes_[id];
    std::vector<ParamId> out;
    if (n.kind == NodeKind::Param) {
        out.push_back(n.param);
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        for (ParamId p : free_params(n.children[i])) {
            // The body of a lambda (child 1) binds the node's own parameter.
            if (n.param != kNoParam && n.kind != NodeKind::Param && i == 1 && p == n.param) {
                continue;
            }
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    slot = std::move(out);
    return *slot;
}

const std::string& Session::origin(NodeId id) const {
    auto& slot = origin_cache_.at(id);
    if (slot) {
        return *slot;
    }
    const Node& n = nodes_[id];
    std::string o = "derived";
    switch (n.kind) {
        case NodeKind::Source: o = ""; break;
        case NodeKind::Attribute:
            if (origin(n.children[0]).empty()) {
                o = n.name;
            }
            break;
        case NodeKind::Filter: o = origin(n.children[0]); break;
        case NodeKind::Map: o = origin(n.children[1]); break;
        case NodeKind::Param: o = origin(param_domain_.at(n.param)); break;
        case NodeKind::Aggregate:
            if (n.reduce == ReduceOp::First || n.reduce == ReduceOp::Flatten) {
                o = origin(n.children[0]);
            }
            break;
        case NodeKind::Broadcast: o = origin(n.children[0]); break;
        default: break;
    }
    slot = std::move(o);
    return *slot;
}

}  // namespace jagq
