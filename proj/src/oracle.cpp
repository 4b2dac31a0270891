#include "jagq/oracle.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "jagq/errors.hpp"
#include "json.hpp"

namespace jagq::oracle {

using nlohmann::json;
using Tag = Value::Tag;

Value Value::of(const Scalar& s) {
    Value v;
    if (const auto* d = std::get_if<double>(&s)) {
        v.tag = Tag::Float;
        v.f = *d;
    } else if (const auto* i = std::get_if<std::int64_t>(&s)) {
        v.tag = Tag::Int;
        v.i = *i;
    } else {
        v.tag = Tag::Bool;
        v.b = std::get<bool>(s);
    }
    return v;
}

Value Value::list(std::vector<Value> items) {
    Value v;
    v.tag = Tag::List;
    v.items = std::move(items);
    return v;
}

std::vector<Event> read_events(std::string_view jsonl, const LeafKinds& kinds) {
    std::vector<Event> events;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json j = json::parse(line);
        Event ev;
        for (const auto& [cname, leaves] : kinds) {
            auto& recs = ev.collections[cname];
            if (!j.contains(cname)) continue;
            for (const json& r : j.at(cname)) {
                Record rec;
                for (const auto& [lname, kind] : leaves) {
                    if (!r.contains(lname)) {
                        fail(ErrorCode::SchemaError, "oracle: line " + std::to_string(line_no) + " lacks " + cname +
                                                         "." + lname);
                    }
                    const json& v = r.at(lname);
                    switch (kind) {
                        case ElementKind::Float: rec.leaves[lname] = v.get<double>(); break;
                        case ElementKind::Int: rec.leaves[lname] = v.get<std::int64_t>(); break;
                        case ElementKind::Bool: rec.leaves[lname] = v.get<bool>(); break;
                    }
                }
                recs.push_back(std::move(rec));
            }
        }
        events.push_back(std::move(ev));
    }
    return events;
}

std::vector<Event> load_events(const std::filesystem::path& path, const LeafKinds& kinds) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "oracle: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return read_events(ss.str(), kinds);
}

std::map<std::string, Function, std::less<>> builtin_functions() {
    std::map<std::string, Function, std::less<>> fns;
    fns["DeltaR"] = [](const std::vector<double>& a) {
        const double twopi = 2.0 * std::numbers::pi;
        double dphi = std::fmod(a[1] - a[3], twopi);
        if (dphi > std::numbers::pi) dphi -= twopi;
        if (dphi <= -std::numbers::pi) dphi += twopi;
        const double deta = a[0] - a[2];
        return std::sqrt(deta * deta + dphi * dphi);
    };
    return fns;
}

namespace {

struct NodeType {
    Type t;
    std::string collection;  ///< record nodes: the collection ("" = event)
};

bool is_compare(BinaryOp op) {
    return op == BinaryOp::Lt || op == BinaryOp::Gt || op == BinaryOp::Le || op == BinaryOp::Ge ||
           op == BinaryOp::Eq || op == BinaryOp::Ne;
}

class Typer {
public:
    Typer(const Session& s, const LeafKinds& kinds) : s_(s), kinds_(kinds), memo_(s.size()) {}

    const NodeType& of(NodeId id) {
        if (!memo_[id]) memo_[id] = compute(id);
        return *memo_[id];
    }

    /// Kind problems are reported only after every shape has been checked.
    void finish() const {
        if (kind_error_) fail(kind_error_->first, kind_error_->second);
    }

private:
    void kind_error(const std::string& msg, ErrorCode code = ErrorCode::TypeError) {
        if (!kind_error_) kind_error_ = {code, msg};
    }

    static std::uint32_t combine_depth(const std::vector<std::uint32_t>& ds, const char* what) {
        std::uint32_t top = 0;
        for (auto d : ds) top = std::max(top, d);
        for (auto d : ds) {
            if (d != 0 && d != top) {
                fail(ErrorCode::ShapeMismatch, std::string("oracle: ") + what + " operands nest differently");
            }
        }
        return top;
    }

    NodeType value_operand(NodeId c) {
        NodeType t = of(c);
        if (t.t.record) kind_error("oracle: collection used as a value");
        return t;
    }

    NodeType compute(NodeId id) {
        const Node& n = s_.node(id);
        NodeType out;
        switch (n.kind) {
            case NodeKind::Source:
                out.t.record = true;
                return out;
            case NodeKind::Constant:
                out.t.kind = kind_of(n.constant);
                return out;
            case NodeKind::Param: {
                const NodeType& dom = of(s_.param_domain(n.param));
                out = dom;
                out.t.depth = 0;
                return out;
            }
            case NodeKind::Attribute: {
                const NodeType p = of(n.children[0]);
                out.t.depth = p.t.depth;
                if (p.t.record && p.collection.empty() && s_.node(n.children[0]).kind == NodeKind::Source) {
                    out.t.depth = 1;
                    out.t.record = true;
                    out.collection = n.name;
                    if (!kinds_.contains(n.name)) kind_error("oracle: unknown collection " + n.name, ErrorCode::SchemaError);
                    return out;
                }
                if (!p.t.record || p.collection.empty()) {
                    kind_error("oracle: leaf of a non-collection");
                    return out;
                }
                auto c = kinds_.find(p.collection);
                if (c != kinds_.end()) {
                    auto l = c->second.find(n.name);
                    if (l == c->second.end()) {
                        kind_error("oracle: unknown leaf " + n.name, ErrorCode::SchemaError);
                    } else {
                        out.t.kind = l->second;
                    }
                }
                return out;
            }
            case NodeKind::Binary: {
                const NodeType a = value_operand(n.children[0]);
                const NodeType b = value_operand(n.children[1]);
                out.t.depth = combine_depth({a.t.depth, b.t.depth}, "binary");
                const ElementKind ka = a.t.kind, kb = b.t.kind;
                const bool ba = ka == ElementKind::Bool, bb = kb == ElementKind::Bool;
                const BinaryOp op = n.binary;
                if (op == BinaryOp::And || op == BinaryOp::Or) {
                    if (!(ba && bb)) kind_error("oracle: logical op on non-bool");
                    out.t.kind = ElementKind::Bool;
                } else if (op == BinaryOp::Eq || op == BinaryOp::Ne) {
                    if (ba != bb) kind_error("oracle: equality between bool and number");
                    out.t.kind = ElementKind::Bool;
                } else if (ba || bb) {
                    kind_error("oracle: arithmetic or ordering on bool");
                    out.t.kind = ElementKind::Float;
                } else if (is_compare(op)) {
                    out.t.kind = ElementKind::Bool;
                } else if (op == BinaryOp::Div || op == BinaryOp::Atan2) {
                    out.t.kind = ElementKind::Float;
                } else {
                    out.t.kind = (ka == ElementKind::Int && kb == ElementKind::Int) ? ElementKind::Int : ElementKind::Float;
                }
                return out;
            }
            case NodeKind::Unary: {
                const NodeType a = value_operand(n.children[0]);
                if (a.t.kind == ElementKind::Bool) kind_error("oracle: math on bool");
                out.t.depth = a.t.depth;
                return out;
            }
            case NodeKind::Call: {
                const FunctionDecl* decl = s_.find_function(n.name);
                if (!decl) fail(ErrorCode::UndeclaredFunction, "oracle: undeclared " + n.name);
                std::vector<std::uint32_t> ds;
                bool any_list = false;
                for (std::size_t i = 0; i < n.children.size(); ++i) {
                    const NodeType a = value_operand(n.children[i]);
                    ds.push_back(a.t.depth);
                    any_list = any_list || s_.node(n.children[i]).kind != NodeKind::Constant;
                    const ElementKind want = decl->params[i];
                    const bool ok = want == ElementKind::Float ? a.t.kind != ElementKind::Bool : a.t.kind == want;
                    if (!ok) kind_error("oracle: argument kind mismatch in " + n.name);
                }
                out.t.depth = combine_depth(ds, "call");
                out.t.kind = decl->ret;
                return out;
            }
            case NodeKind::Filter: {
                const NodeType seq = of(n.children[0]);
                if (seq.t.depth == 0) fail(ErrorCode::ShapeMismatch, "oracle: filter of a single element");
                const NodeType mask = of(n.children[1]);
                if (n.param == kNoParam) {
                    if (mask.t.depth != 0 && mask.t.depth != seq.t.depth) {
                        fail(ErrorCode::ShapeMismatch, "oracle: mask nests differently from its sequence");
                    }
                } else if (mask.t.depth != 0) {
                    fail(ErrorCode::ShapeMismatch, "oracle: predicate yields a list per element");
                }
                if (mask.t.record || mask.t.kind != ElementKind::Bool) kind_error("oracle: predicate is not bool");
                return seq;
            }
            case NodeKind::Map: {
                const NodeType seq = of(n.children[0]);
                out = of(n.children[1]);
                out.t.depth += seq.t.depth;
                return out;
            }
            case NodeKind::Aggregate: {
                const NodeType seq = of(n.children[0]);
                const std::uint32_t need = n.reduce == ReduceOp::Flatten ? 2 : 1;
                if (seq.t.depth < need) fail(ErrorCode::ShapeMismatch, "oracle: reduction of a single element");
                out = seq;
                out.t.depth = seq.t.depth - 1;
                switch (n.reduce) {
                    case ReduceOp::Count:
                        out.t = Type{seq.t.depth - 1, ElementKind::Int, false};
                        out.collection.clear();
                        break;
                    case ReduceOp::First:
                    case ReduceOp::Flatten: break;
                    case ReduceOp::Sum:
                    case ReduceOp::Min:
                    case ReduceOp::Max:
                        if (seq.t.record || seq.t.kind == ElementKind::Bool) kind_error("oracle: numeric reduction of non-numbers");
                        out.t.record = false;
                        break;
                    case ReduceOp::Any:
                    case ReduceOp::All:
                        if (seq.t.record || seq.t.kind != ElementKind::Bool) kind_error("oracle: any/all of non-bool");
                        out.t = Type{seq.t.depth - 1, ElementKind::Bool, false};
                        break;
                }
                return out;
            }
            case NodeKind::Broadcast: {
                const NodeType v = of(n.children[0]);
                const NodeType t = of(n.children[1]);
                if (s_.node(n.children[1]).kind == NodeKind::Constant) {
                    fail(ErrorCode::ShapeMismatch, "oracle: broadcast into a constant");
                }
                out = v;
                if (s_.node(n.children[0]).kind == NodeKind::Constant) {
                    out.t.depth = t.t.depth;
                } else {
                    if (n.shared > v.t.depth || n.shared > t.t.depth) {
                        fail(ErrorCode::ShapeMismatch, "oracle: broadcast shares more levels than exist");
                    }
                    out.t.depth = t.t.depth + v.t.depth - n.shared;
                }
                return out;
            }
        }
        fail(ErrorCode::Internal, "oracle: unknown node");
    }

    const Session& s_;
    const LeafKinds& kinds_;
    std::vector<std::optional<NodeType>> memo_;
    std::optional<std::pair<ErrorCode, std::string>> kind_error_;
};

double num(const Value& v) {
    switch (v.tag) {
        case Tag::Float: return v.f;
        case Tag::Int: return static_cast<double>(v.i);
        case Tag::Bool: return v.b ? 1.0 : 0.0;
        default: fail(ErrorCode::Internal, "oracle: not a number");
    }
}

Value scalar_binary(BinaryOp op, const Value& a, const Value& b) {
    Value r;
    if (op == BinaryOp::And || op == BinaryOp::Or) {
        r.tag = Tag::Bool;
        r.b = op == BinaryOp::And ? (a.b && b.b) : (a.b || b.b);
        return r;
    }
    if (is_compare(op)) {
        r.tag = Tag::Bool;
        int cmp = 0;
        if (a.tag == Tag::Bool || (a.tag == Tag::Int && b.tag == Tag::Int)) {
            const std::int64_t x = a.tag == Tag::Bool ? a.b : a.i;
            const std::int64_t y = b.tag == Tag::Bool ? b.b : b.i;
            cmp = (x > y) - (x < y);
        } else {
            const double x = num(a), y = num(b);
            switch (op) {
                case BinaryOp::Lt: r.b = x < y; break;
                case BinaryOp::Gt: r.b = x > y; break;
                case BinaryOp::Le: r.b = x <= y; break;
                case BinaryOp::Ge: r.b = x >= y; break;
                case BinaryOp::Eq: r.b = x == y; break;
                default: r.b = x != y; break;
            }
            return r;
        }
        switch (op) {
            case BinaryOp::Lt: r.b = cmp < 0; break;
            case BinaryOp::Gt: r.b = cmp > 0; break;
            case BinaryOp::Le: r.b = cmp <= 0; break;
            case BinaryOp::Ge: r.b = cmp >= 0; break;
            case BinaryOp::Eq: r.b = cmp == 0; break;
            default: r.b = cmp != 0; break;
        }
        return r;
    }
    if (a.tag == Tag::Int && b.tag == Tag::Int && op != BinaryOp::Div && op != BinaryOp::Atan2) {
        const auto x = static_cast<std::uint64_t>(a.i), y = static_cast<std::uint64_t>(b.i);
        r.tag = Tag::Int;
        r.i = static_cast<std::int64_t>(op == BinaryOp::Add ? x + y : op == BinaryOp::Sub ? x - y : x * y);
        return r;
    }
    const double x = num(a), y = num(b);
    r.tag = Tag::Float;
    switch (op) {
        case BinaryOp::Add: r.f = x + y; break;
        case BinaryOp::Sub: r.f = x - y; break;
        case BinaryOp::Mul: r.f = x * y; break;
        case BinaryOp::Div: r.f = x / y; break;
        default: r.f = std::atan2(x, y); break;
    }
    return r;
}

Value scalar_unary(UnaryOp op, const Value& a) {
    const double x = num(a);
    Value r;
    r.tag = Tag::Float;
    switch (op) {
        case UnaryOp::Neg: r.f = -x; break;
        case UnaryOp::Abs: r.f = std::fabs(x); break;
        case UnaryOp::Sqrt: r.f = std::sqrt(x); break;
        case UnaryOp::Sin: r.f = std::sin(x); break;
        case UnaryOp::Cos: r.f = std::cos(x); break;
    }
    return r;
}

/// Applies `fn` to aligned leaves of values whose static depths are `ds`;
/// depth-0 arguments are repeated against the lists of the others.
template <typename F>
Value zip(const std::vector<const Value*>& args, const std::vector<std::uint32_t>& ds, const F& fn) {
    std::uint32_t top = 0;
    for (auto d : ds) top = std::max(top, d);
    if (top == 0) {
        std::vector<const Value*> leaves(args);
        return fn(leaves);
    }
    std::optional<std::size_t> len;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (ds[k] == 0) continue;
        if (len && *len != args[k]->items.size()) {
            fail(ErrorCode::ShapeMismatch, "oracle: lists of different lengths combined");
        }
        len = args[k]->items.size();
    }
    std::vector<Value> out;
    for (std::size_t i = 0; i < *len; ++i) {
        std::vector<const Value*> sub;
        std::vector<std::uint32_t> sd;
        for (std::size_t k = 0; k < args.size(); ++k) {
            sub.push_back(ds[k] == 0 ? args[k] : &args[k]->items[i]);
            sd.push_back(ds[k] == 0 ? 0 : ds[k] - 1);
        }
        out.push_back(zip(sub, sd, fn));
    }
    return Value::list(std::move(out));
}

class Interp {
public:
    Interp(const Session& s, Typer& typer, const Event& ev, std::size_t index,
           const std::map<std::string, Function, std::less<>>& fns)
        : s_(s), typer_(typer), ev_(ev), index_(index), fns_(fns) {}

    /// Every parameter-free node denotes one value per event and is computed
    /// for every event, whether or not an enclosing lambda ever reaches it.
    void prime(NodeId root) {
        std::vector<char> seen(s_.size(), 0);
        auto visit = [&](auto&& self, NodeId id) -> void {
            if (seen[id]) return;
            seen[id] = 1;
            for (NodeId c : s_.node(id).children) self(self, c);
            if (s_.free_params(id).empty()) eval(id);
        };
        visit(visit, root);
    }

    Value eval(NodeId id) {
        const bool closed = s_.free_params(id).empty();
        if (closed) {
            if (auto it = closed_.find(id); it != closed_.end()) return it->second;
        }
        Value v = compute(id);
        if (closed) closed_.emplace(id, v);
        return v;
    }

private:
    std::uint32_t depth(NodeId id) { return typer_.of(id).t.depth; }

    Value attr(const Value& v, std::uint32_t d, const std::string& name) {
        if (d > 0) {
            std::vector<Value> out;
            for (const Value& x : v.items) out.push_back(attr(x, d - 1, name));
            return Value::list(std::move(out));
        }
        if (v.tag != Tag::Record) fail(ErrorCode::TypeError, "oracle: leaf of a non-record");
        if (v.collection.empty()) {
            std::vector<Value> out;
            auto it = ev_.collections.find(name);
            const std::size_t n = it == ev_.collections.end() ? 0 : it->second.size();
            for (std::size_t i = 0; i < n; ++i) {
                Value r;
                r.tag = Tag::Record;
                r.collection = name;
                r.index = i;
                out.push_back(std::move(r));
            }
            return Value::list(std::move(out));
        }
        const Record& rec = ev_.collections.at(v.collection).at(v.index);
        auto it = rec.leaves.find(name);
        if (it == rec.leaves.end()) fail(ErrorCode::SchemaError, "oracle: no leaf " + name);
        return Value::of(it->second);
    }

    Value filter_mask(const Value& seq, std::uint32_t ds, const Value& mask, std::uint32_t dm) {
        if (ds > 1) {
            std::vector<Value> out;
            if (dm != 0 && mask.items.size() != seq.items.size()) {
                fail(ErrorCode::ShapeMismatch, "oracle: mask length differs");
            }
            for (std::size_t i = 0; i < seq.items.size(); ++i) {
                out.push_back(filter_mask(seq.items[i], ds - 1, dm == 0 ? mask : mask.items[i], dm == 0 ? 0 : dm - 1));
            }
            return Value::list(std::move(out));
        }
        std::vector<Value> kept;
        if (dm != 0 && mask.items.size() != seq.items.size()) {
            fail(ErrorCode::ShapeMismatch, "oracle: mask length differs");
        }
        for (std::size_t i = 0; i < seq.items.size(); ++i) {
            const Value& m = dm == 0 ? mask : mask.items[i];
            if (m.b) kept.push_back(seq.items[i]);
        }
        return Value::list(std::move(kept));
    }

    Value with_param(ParamId p, const Value& x, NodeId body) {
        auto saved = env_.find(p) == env_.end() ? std::nullopt : std::optional<Value>(env_.at(p));
        env_[p] = x;
        Value r = eval(body);
        if (saved) env_[p] = *saved; else env_.erase(p);
        return r;
    }

    Value filter_lambda(const Value& seq, std::uint32_t ds, const Node& n) {
        std::vector<Value> out;
        for (const Value& x : seq.items) {
            if (ds > 1) {
                out.push_back(filter_lambda(x, ds - 1, n));
            } else if (with_param(n.param, x, n.children[1]).b) {
                out.push_back(x);
            }
        }
        return Value::list(std::move(out));
    }

    Value map_lambda(const Value& seq, std::uint32_t ds, const Node& n) {
        if (ds == 0) return with_param(n.param, seq, n.children[1]);
        std::vector<Value> out;
        for (const Value& x : seq.items) out.push_back(map_lambda(x, ds - 1, n));
        return Value::list(std::move(out));
    }

    Value reduce(const Value& v, std::uint32_t d, ReduceOp op, const Type& result) {
        if (op == ReduceOp::Flatten ? d > 2 : d > 1) {
            std::vector<Value> out;
            for (const Value& x : v.items) out.push_back(reduce(x, d - 1, op, result));
            return Value::list(std::move(out));
        }
        const auto& xs = v.items;
        Value r;
        switch (op) {
            case ReduceOp::Count:
                r.tag = Tag::Int;
                r.i = static_cast<std::int64_t>(xs.size());
                return r;
            case ReduceOp::First:
                if (xs.empty()) fail(ErrorCode::EmptySequence, "oracle: First of an empty list in event " + std::to_string(index_));
                return xs.front();
            case ReduceOp::Flatten: {
                std::vector<Value> out;
                for (const Value& x : xs) out.insert(out.end(), x.items.begin(), x.items.end());
                return Value::list(std::move(out));
            }
            case ReduceOp::Any:
            case ReduceOp::All: {
                r.tag = Tag::Bool;
                r.b = op == ReduceOp::All;
                for (const Value& x : xs) r.b = op == ReduceOp::All ? (r.b && x.b) : (r.b || x.b);
                return r;
            }
            case ReduceOp::Sum:
                if (result.kind == ElementKind::Int) {
                    std::uint64_t acc = 0;
                    for (const Value& x : xs) acc += static_cast<std::uint64_t>(x.i);
                    r.tag = Tag::Int;
                    r.i = static_cast<std::int64_t>(acc);
                } else {
                    r.tag = Tag::Float;
                    r.f = 0.0;
                    for (const Value& x : xs) r.f += x.f;
                }
                return r;
            case ReduceOp::Min:
            case ReduceOp::Max: {
                if (xs.empty()) {
                    fail(ErrorCode::EmptySequence, std::string("oracle: ") + (op == ReduceOp::Min ? "Min" : "Max") +
                                                       " of an empty list in event " + std::to_string(index_));
                }
                r = xs.front();
                for (std::size_t k = 1; k < xs.size(); ++k) {
                    const bool better = r.tag == Tag::Int ? (op == ReduceOp::Min ? xs[k].i < r.i : xs[k].i > r.i)
                                                          : (op == ReduceOp::Min ? xs[k].f < r.f : xs[k].f > r.f);
                    if (better) r = xs[k];
                }
                return r;
            }
        }
        fail(ErrorCode::Internal, "oracle: bad reduction");
    }

    Value fill(const Value& frame, std::uint32_t dt, const Value& v) {
        if (dt == 0) return v;
        std::vector<Value> out;
        for (const Value& x : frame.items) out.push_back(fill(x, dt - 1, v));
        return Value::list(std::move(out));
    }

    Value bcast(const Value& v, const Value& t, std::uint32_t dt, std::uint32_t shared) {
        if (shared == 0) return fill(t, dt, v);
        if (v.items.size() != t.items.size()) fail(ErrorCode::ShapeMismatch, "oracle: broadcast levels differ");
        std::vector<Value> out;
        for (std::size_t i = 0; i < t.items.size(); ++i) out.push_back(bcast(v.items[i], t.items[i], dt - 1, shared - 1));
        return Value::list(std::move(out));
    }

    Value compute(NodeId id) {
        const Node& n = s_.node(id);
        switch (n.kind) {
            case NodeKind::Source: {
                Value r;
                r.tag = Tag::Record;
                return r;
            }
            case NodeKind::Constant: return Value::of(n.constant);
            case NodeKind::Param: {
                auto it = env_.find(n.param);
                if (it == env_.end()) fail(ErrorCode::UnboundParameter, "oracle: unbound parameter");
                return it->second;
            }
            case NodeKind::Attribute: return attr(eval(n.children[0]), depth(n.children[0]), n.name);
            case NodeKind::Binary: {
                const Value a = eval(n.children[0]), b = eval(n.children[1]);
                return zip({&a, &b}, {depth(n.children[0]), depth(n.children[1])},
                           [&](const std::vector<const Value*>& x) { return scalar_binary(n.binary, *x[0], *x[1]); });
            }
            case NodeKind::Unary: {
                const Value a = eval(n.children[0]);
                return zip({&a}, {depth(n.children[0])},
                           [&](const std::vector<const Value*>& x) { return scalar_unary(n.unary, *x[0]); });
            }
            case NodeKind::Call: {
                auto f = fns_.find(n.name);
                if (f == fns_.end()) fail(ErrorCode::MissingImplementation, "oracle: no implementation of " + n.name);
                std::vector<Value> vals;
                std::vector<std::uint32_t> ds;
                for (NodeId c : n.children) {
                    vals.push_back(eval(c));
                    ds.push_back(depth(c));
                }
                std::vector<const Value*> ptrs;
                for (const Value& v : vals) ptrs.push_back(&v);
                return zip(ptrs, ds, [&](const std::vector<const Value*>& x) {
                    std::vector<double> args;
                    for (const Value* v : x) args.push_back(num(*v));
                    Value r;
                    r.tag = Tag::Float;
                    r.f = f->second(args);
                    return r;
                });
            }
            case NodeKind::Filter: {
                const Value seq = eval(n.children[0]);
                if (n.param == kNoParam) {
                    return filter_mask(seq, depth(n.children[0]), eval(n.children[1]), depth(n.children[1]));
                }
                return filter_lambda(seq, depth(n.children[0]), n);
            }
            case NodeKind::Map: return map_lambda(eval(n.children[0]), depth(n.children[0]), n);
            case NodeKind::Aggregate:
                return reduce(eval(n.children[0]), depth(n.children[0]), n.reduce, typer_.of(id).t);
            case NodeKind::Broadcast: {
                const Value v = eval(n.children[0]);
                const Value t = eval(n.children[1]);
                if (s_.node(n.children[0]).kind == NodeKind::Constant) return fill(t, depth(n.children[1]), v);
                return bcast(v, t, depth(n.children[1]), n.shared);
            }
        }
        fail(ErrorCode::Internal, "oracle: unknown node");
    }

    const Session& s_;
    Typer& typer_;
    const Event& ev_;
    std::size_t index_;
    const std::map<std::string, Function, std::less<>>& fns_;
    std::unordered_map<ParamId, Value> env_;
    std::unordered_map<NodeId, Value> closed_;
};

}  // namespace

Type type_of(const Session& session, const Expr& root, const LeafKinds& kinds) {
    Typer typer(session, kinds);
    const Type t = typer.of(root.id()).t;
    typer.finish();
    return t;
}

std::vector<Value> evaluate(const Session& session, const Expr& root, const std::vector<Event>& events,
                            const LeafKinds& kinds, const std::map<std::string, Function, std::less<>>& functions) {
    if (!session.free_params(root.id()).empty()) {
        fail(ErrorCode::UnboundParameter, "oracle: root uses a lambda parameter outside its lambda");
    }
    Typer typer(session, kinds);
    const NodeType& t = typer.of(root.id());
    typer.finish();
    if (t.t.record) fail(ErrorCode::TypeError, "oracle: result is a collection");
    std::vector<Value> out;
    out.reserve(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        Interp interp(session, typer, events[e], e, functions);
        interp.prime(root.id());
        out.push_back(interp.eval(root.id()));
    }
    return out;
}

std::vector<std::int64_t> histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
    std::vector<std::int64_t> counts(bins, 0);
    std::vector<double> edges(bins + 1);
    const double step = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) edges[i] = lo + static_cast<double>(i) * step;
    edges[bins] = hi;
    for (double x : values) {
        if (!(x >= lo && x <= hi)) continue;
        // last edge <= x, searched linearly from the top
        std::size_t b = bins - 1;
        while (b > 0 && x < edges[b]) --b;
        ++counts[b];
    }
    return counts;
}

std::vector<double> flatten(const std::vector<Value>& per_event) {
    std::vector<double> out;
    std::function<void(const Value&)> walk = [&](const Value& v) {
        if (v.tag == Tag::List) {
            for (const Value& x : v.items) walk(x);
        } else if (v.tag == Tag::Record) {
            out.push_back(static_cast<double>(v.index));
        } else {
            out.push_back(num(v));
        }
    };
    for (const Value& v : per_event) walk(v);
    return out;
}

}  // namespace jagq::oracle
