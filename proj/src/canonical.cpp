#include "jagq/canonical.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <functional>
#include <map>
#include <unordered_map>

#include "jagq/hashing.hpp"

namespace jagq {

namespace {

void compute_meta(const std::vector<Node>& nodes, NodeId id, std::vector<std::uint32_t>& depth,
                  std::vector<bool>& record) {
    const Node& n = nodes[id];
    auto d = [&](std::size_t i) { return depth[n.children[i]]; };
    auto r = [&](std::size_t i) { return static_cast<bool>(record[n.children[i]]); };
    auto is_const = [&](std::size_t i) { return nodes[n.children[i]].kind == NodeKind::Constant; };
    std::uint32_t dep = 0;
    bool rec = false;
    switch (n.kind) {
        case NodeKind::Source: rec = true; break;
        case NodeKind::Attribute:
            if (nodes[n.children[0]].kind == NodeKind::Source) {
                dep = 1;
                rec = true;
            } else {
                dep = d(0);
            }
            break;
        case NodeKind::Binary:
        case NodeKind::Call:
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (!is_const(i)) dep = std::max(dep, d(i));
            }
            break;
        case NodeKind::Unary: dep = d(0); break;
        case NodeKind::Filter:
            dep = d(0);
            rec = r(0);
            break;
        case NodeKind::Aggregate:
            dep = d(0) > 0 ? d(0) - 1 : 0;
            rec = (n.reduce == ReduceOp::First || n.reduce == ReduceOp::Flatten) && r(0);
            break;
        case NodeKind::Broadcast:
            if (is_const(0)) {
                dep = d(1);
            } else {
                dep = d(1) + d(0) - std::min<std::uint32_t>(n.shared, d(0));
                rec = r(0);
            }
            break;
        case NodeKind::Constant:
        case NodeKind::Map:
        case NodeKind::Param: break;
    }
    depth[id] = dep;
    record[id] = rec;
}

std::string node_key(const Node& n) {
    std::string key;
    key.push_back(static_cast<char>(n.kind));
    key.push_back(static_cast<char>(n.binary));
    key.push_back(static_cast<char>(n.unary));
    key.push_back(static_cast<char>(n.reduce));
    key += std::to_string(n.shared);
    key.push_back('|');
    key += std::to_string(n.name.size());
    key.push_back(':');
    key += n.name;
    if (n.kind == NodeKind::Constant) {
        key.push_back(static_cast<char>('0' + n.constant.index()));
        key += std::visit(
            [](auto v) {
                if constexpr (std::is_same_v<decltype(v), double>) {
                    return std::to_string(std::bit_cast<std::uint64_t>(v));
                } else {
                    return std::to_string(static_cast<std::int64_t>(v));
                }
            },
            n.constant);
    }
    for (NodeId c : n.children) {
        key.push_back(',');
        key += std::to_string(c);
    }
    return key;
}

struct Frame {
    std::optional<NodeId> node;
    std::uint32_t depth = 0;
};

struct Binding {
    NodeId value;
    std::uint32_t depth;
};

std::optional<NodeId> first_source(const Session& session);

class Lifter {
public:
    explicit Lifter(const Session& session) : s_(session) {}

    NodeId lift(NodeId n, const Frame& f) {
        if (s_.free_params(n).empty()) {
            NodeId c;
            if (auto it = closed_.find(n); it != closed_.end()) {
                c = it->second;
            } else {
                c = lift_structural(n, Frame{});
                closed_.emplace(n, c);
            }
            if (is_const(c) || f.depth == 0) {
                return c;
            }
            return broadcast(c, *f.node, 0);
        }
        return lift_structural(n, f);
    }

    bool is_const(NodeId id) const { return nodes_[id].kind == NodeKind::Constant; }

    /// Repeats a constant root once per event of the session's dataset.
    NodeId per_event(NodeId c, std::optional<NodeId> source) {
        if (!source) {
            fail(ErrorCode::ShapeMismatch, "a constant value cannot be materialized without a dataset");
        }
        return broadcast(c, lift(*source, {}), 0);
    }
    std::uint32_t depth(NodeId id) const { return depth_[id]; }

    Dag finish(const std::vector<NodeId>& roots) {
        Dag dag;
        std::unordered_map<NodeId, NodeId> remap;
        std::function<NodeId(NodeId)> visit = [&](NodeId id) -> NodeId {
            if (auto it = remap.find(id); it != remap.end()) {
                return it->second;
            }
            Node n = nodes_[id];
            for (NodeId& c : n.children) {
                c = visit(c);
            }
            const auto out = static_cast<NodeId>(dag.nodes.size());
            dag.nodes.push_back(std::move(n));
            remap.emplace(id, out);
            return out;
        };
        for (NodeId r : roots) {
            dag.roots.push_back(visit(r));
        }
        annotate(dag);
        return dag;
    }

private:
    NodeId intern(Node n) {
        std::string key = node_key(n);
        if (auto it = index_.find(key); it != index_.end()) {
            return it->second;
        }
        const auto id = static_cast<NodeId>(nodes_.size());
        nodes_.push_back(std::move(n));
        depth_.push_back(0);
        record_.push_back(false);
        compute_meta(nodes_, id, depth_, record_);
        index_.emplace(std::move(key), id);
        return id;
    }

    NodeId constant(const Scalar& v) {
        Node n;
        n.kind = NodeKind::Constant;
        n.constant = v;
        return intern(std::move(n));
    }

    NodeId broadcast(NodeId value, NodeId frame, std::uint32_t shared) {
        if (is_const(frame)) {
            fail(ErrorCode::ShapeMismatch, "cannot broadcast into a constant");
        }
        if (!is_const(value)) {
            if (shared > depth(value) || shared > depth(frame)) {
                fail(ErrorCode::ShapeMismatch, "broadcast shared depth " + std::to_string(shared) +
                                                   " exceeds operand depth");
            }
            if (depth(frame) == shared) {
                return value;
            }
        } else {
            shared = 0;
        }
        Node n;
        n.kind = NodeKind::Broadcast;
        n.children = {value, frame};
        n.shared = shared;
        return intern(std::move(n));
    }

    NodeId attribute(NodeId parent, const std::string& name) {
        const Node p = nodes_[parent];
        auto plain = [&]() {
            Node n;
            n.kind = NodeKind::Attribute;
            n.children = {parent};
            n.name = name;
            return intern(std::move(n));
        };
        if (is_const(parent) || !record_[parent] || p.kind == NodeKind::Source ||
            p.kind == NodeKind::Attribute) {
            return plain();
        }
        switch (p.kind) {
            case NodeKind::Filter: {
                Node n;
                n.kind = NodeKind::Filter;
                n.children = {attribute(p.children[0], name), p.children[1]};
                return intern(std::move(n));
            }
            case NodeKind::Broadcast: {
                const NodeId frame = p.children[1];
                const std::uint32_t shared = p.shared;
                return broadcast(attribute(p.children[0], name), frame, shared);
            }
            case NodeKind::Aggregate: {
                Node n;
                n.kind = NodeKind::Aggregate;
                n.reduce = p.reduce;
                n.children = {attribute(p.children[0], name)};
                return intern(std::move(n));
            }
            default: return plain();
        }
    }

    /// Brings array operands of one elementwise operation onto a common
    /// structure: operands at frame depth are broadcast into the deepest one.
    std::vector<NodeId> harmonize(std::vector<NodeId> args, std::uint32_t frame_depth,
                                  std::string_view what) {
        std::optional<NodeId> widest;
        for (NodeId a : args) {
            if (!is_const(a) && (!widest || depth(a) > depth(*widest))) {
                widest = a;
            }
        }
        if (!widest) {
            return args;
        }
        for (NodeId& a : args) {
            if (is_const(a) || depth(a) == depth(*widest)) {
                continue;
            }
            if (depth(a) == frame_depth) {
                a = broadcast(a, *widest, frame_depth);
            } else {
                fail(ErrorCode::ShapeMismatch,
                     std::string(what) + " operands have incompatible nesting (depth " +
                         std::to_string(depth(a)) + " vs " + std::to_string(depth(*widest)) + ")");
            }
        }
        return args;
    }

    NodeId binary(BinaryOp op, NodeId a, NodeId b, std::uint32_t frame_depth) {
        if (is_const(a) && is_const(b)) {
            return constant(apply_binary(op, nodes_[a].constant, nodes_[b].constant));
        }
        auto args = harmonize({a, b}, frame_depth, to_string(op));
        Node n;
        n.kind = NodeKind::Binary;
        n.binary = op;
        n.children = std::move(args);
        return intern(std::move(n));
    }

    NodeId filter(NodeId seq, NodeId mask, std::uint32_t frame_depth) {
        if (is_const(seq) || depth(seq) <= frame_depth) {
            fail(ErrorCode::ShapeMismatch, "filter applied to a single element, not a sequence");
        }
        if (is_const(mask)) {
            const Scalar& c = nodes_[mask].constant;
            if (kind_of(c) != ElementKind::Bool) {
                fail(ErrorCode::TypeError, "filter predicate is not bool");
            }
            if (std::get<bool>(c)) {
                return seq;
            }
        } else if (depth(mask) != depth(seq)) {
            if (depth(mask) == frame_depth) {
                mask = broadcast(mask, seq, frame_depth);
            } else {
                fail(ErrorCode::ShapeMismatch, "filter mask nesting differs from the sequence");
            }
        }
        Node n;
        n.kind = NodeKind::Filter;
        n.children = {seq, mask};
        return intern(std::move(n));
    }

    class Bind {
    public:
        Bind(std::unordered_map<ParamId, Binding>& env, ParamId p, Binding b)
            : env_(env), p_(p) {
            if (auto it = env_.find(p); it != env_.end()) {
                saved_ = it->second;
            }
            env_.insert_or_assign(p, b);
        }
        ~Bind() {
            if (saved_) {
                env_.insert_or_assign(p_, *saved_);
            } else {
                env_.erase(p_);
            }
        }
        Bind(const Bind&) = delete;
        Bind& operator=(const Bind&) = delete;

    private:
        std::unordered_map<ParamId, Binding>& env_;
        ParamId p_;
        std::optional<Binding> saved_;
    };

    NodeId lift_structural(NodeId id, const Frame& f) {
        const Node& n = s_.node(id);
        switch (n.kind) {
            case NodeKind::Source: {
                Node out;
                out.kind = NodeKind::Source;
                out.name = n.name;
                return intern(std::move(out));
            }
            case NodeKind::Constant: return constant(n.constant);
            case NodeKind::Param: {
                auto it = env_.find(n.param);
                if (it == env_.end()) {
                    fail(ErrorCode::UnboundParameter,
                         "parameter p" + std::to_string(n.param) + " is used outside its lambda");
                }
                const Binding b = it->second;
                if (is_const(b.value) || b.depth == f.depth) {
                    return b.value;
                }
                if (b.depth > f.depth) {
                    fail(ErrorCode::Internal, "parameter bound deeper than current frame");
                }
                return broadcast(b.value, *f.node, b.depth);
            }
            case NodeKind::Attribute: return attribute(lift(n.children[0], f), n.name);
            case NodeKind::Binary:
                return binary(n.binary, lift(n.children[0], f), lift(n.children[1], f), f.depth);
            case NodeKind::Unary: {
                const NodeId c = lift(n.children[0], f);
                if (is_const(c)) {
                    return constant(apply_unary(n.unary, nodes_[c].constant));
                }
                Node out;
                out.kind = NodeKind::Unary;
                out.unary = n.unary;
                out.children = {c};
                return intern(std::move(out));
            }
            case NodeKind::Call: {
                std::vector<NodeId> args;
                for (NodeId c : n.children) {
                    args.push_back(lift(c, f));
                }
                bool any_array = false;
                for (NodeId a : args) {
                    any_array = any_array || !is_const(a);
                }
                if (!any_array) {
                    // Backend functions cannot be folded here; give the call one row per event instead.
                    args[0] = per_event(args[0], first_source(s_));
                }
                Node out;
                out.kind = NodeKind::Call;
                out.name = n.name;
                out.children = harmonize(std::move(args), f.depth, n.name);
                return intern(std::move(out));
            }
            case NodeKind::Filter: {
                const NodeId seq = lift(n.children[0], f);
                if (n.param == kNoParam) {
                    return filter(seq, lift(n.children[1], f), f.depth);
                }
                if (is_const(seq) || depth(seq) <= f.depth) {
                    fail(ErrorCode::ShapeMismatch,
                         "filter applied to a single element, not a sequence");
                }
                const Frame inner{seq, depth(seq)};
                Bind bind(env_, n.param, Binding{seq, depth(seq)});
                return filter(seq, lift(n.children[1], inner), f.depth);
            }
            case NodeKind::Map: {
                const NodeId seq = lift(n.children[0], f);
                if (is_const(seq) || depth(seq) == f.depth) {
                    Bind bind(env_, n.param, Binding{seq, f.depth});
                    const NodeId r = lift(n.children[1], f);
                    if (is_const(r) && !is_const(seq)) {
                        return broadcast(r, seq, 0);
                    }
                    return r;
                }
                const Frame inner{seq, depth(seq)};
                Bind bind(env_, n.param, Binding{seq, depth(seq)});
                const NodeId r = lift(n.children[1], inner);
                return is_const(r) ? broadcast(r, seq, 0) : r;
            }
            case NodeKind::Aggregate: {
                const NodeId seq = lift(n.children[0], f);
                const std::uint32_t need = n.reduce == ReduceOp::Flatten ? 2 : 1;
                if (is_const(seq) || depth(seq) < f.depth + need) {
                    fail(ErrorCode::ShapeMismatch,
                         std::string(to_string(n.reduce)) + " applied to a single element");
                }
                Node out;
                out.kind = NodeKind::Aggregate;
                out.reduce = n.reduce;
                out.children = {seq};
                return intern(std::move(out));
            }
            case NodeKind::Broadcast: {
                const NodeId value = lift(n.children[0], f);
                const NodeId frame = lift(n.children[1], f);
                if (is_const(frame)) {
                    fail(ErrorCode::ShapeMismatch, "broadcast frame is a constant");
                }
                return broadcast(value, frame, n.shared);
            }
        }
        fail(ErrorCode::Internal, "unknown node kind");
    }

    const Session& s_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> depth_;
    std::vector<bool> record_;
    std::unordered_map<std::string, NodeId> index_;
    std::unordered_map<ParamId, Binding> env_;
    std::unordered_map<NodeId, NodeId> closed_;
};

}  // namespace

void annotate(Dag& dag) {
    dag.depths.assign(dag.nodes.size(), 0);
    dag.records.assign(dag.nodes.size(), false);
    for (NodeId i = 0; i < dag.nodes.size(); ++i) {
        compute_meta(dag.nodes, i, dag.depths, dag.records);
    }
}

namespace {

std::optional<NodeId> first_source(const Session& session) {
    for (NodeId i = 0; i < session.size(); ++i) {
        if (session.node(i).kind == NodeKind::Source) {
            return i;
        }
    }
    return std::nullopt;
}

}  // namespace

Dag canonicalize(const Session& session, const std::vector<Expr>& roots) {
    Lifter lifter(session);
    std::vector<NodeId> lifted;
    for (const Expr& r : roots) {
        if (&r.session() != &session) {
            fail(ErrorCode::ForeignParameter, "root belongs to a different session");
        }
        NodeId id = lifter.lift(r.id(), {});
        if (lifter.is_const(id)) {
            id = lifter.per_event(id, first_source(session));
        }
        lifted.push_back(id);
    }
    Dag dag = lifter.finish(lifted);
    std::map<std::string, FunctionDecl> used;
    for (const Node& n : dag.nodes) {
        if (n.kind == NodeKind::Call) {
            used.emplace(n.name, *session.find_function(n.name));
        }
    }
    for (auto& [name, decl] : used) {
        dag.functions.push_back(decl);
    }
    return dag;
}

const FunctionDecl* Dag::find_function(std::string_view name) const {
    for (const FunctionDecl& f : functions) {
        if (f.name == name) {
            return &f;
        }
    }
    return nullptr;
}

Dag subdag(const Dag& dag, NodeId root) {
    Dag out;
    std::unordered_map<NodeId, NodeId> remap;
    std::function<NodeId(NodeId)> visit = [&](NodeId id) -> NodeId {
        if (auto it = remap.find(id); it != remap.end()) {
            return it->second;
        }
        Node n = dag.nodes.at(id);
        for (NodeId& c : n.children) {
            c = visit(c);
        }
        const auto nid = static_cast<NodeId>(out.nodes.size());
        out.nodes.push_back(std::move(n));
        remap.emplace(id, nid);
        return nid;
    };
    out.roots.push_back(visit(root));
    for (const FunctionDecl& f : dag.functions) {
        for (const Node& n : out.nodes) {
            if (n.kind == NodeKind::Call && n.name == f.name) {
                out.functions.push_back(f);
                break;
            }
        }
    }
    annotate(out);
    return out;
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out.push_back('\\');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_scalar(const Scalar& value) {
    if (const auto* b = std::get_if<bool>(&value)) {
        return *b ? "true" : "false";
    }
    if (const auto* i = std::get_if<std::int64_t>(&value)) {
        return std::to_string(*i);
    }
    const double d = std::get<double>(value);
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), d);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string node_label(const Dag& dag, NodeId id) {
    const Node& n = dag.nodes.at(id);
    auto ref = [](NodeId c) { return "n" + std::to_string(c); };
    std::string out;
    switch (n.kind) {
        case NodeKind::Source: return "Source(" + quote(n.name) + ")";
        case NodeKind::Attribute: return "Attribute(" + ref(n.children[0]) + ", " + quote(n.name) + ")";
        case NodeKind::Constant: return "Const(" + format_scalar(n.constant) + ")";
        case NodeKind::Binary: out = std::string(to_string(n.binary)) + "("; break;
        case NodeKind::Unary: out = std::string(to_string(n.unary)) + "("; break;
        case NodeKind::Aggregate: out = std::string(to_string(n.reduce)) + "("; break;
        case NodeKind::Call: out = "Call(" + quote(n.name) + ", "; break;
        default: out = std::string(to_string(n.kind)) + "("; break;
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        out += (i ? ", " : "") + ref(n.children[i]);
    }
    if (n.kind == NodeKind::Broadcast) {
        out += ", " + std::to_string(n.shared);
    }
    return out + ")";
}

std::string Dag::text() const {
    std::string out;
    for (NodeId i = 0; i < nodes.size(); ++i) {
        out += "n" + std::to_string(i) + " = " + node_label(*this, i) + "\n";
    }
    out += "roots:";
    for (NodeId r : roots) {
        out += " n" + std::to_string(r);
    }
    out += "\n";
    return out;
}

std::string Dag::digest() const { return sha256_hex(text()); }

}  // namespace jagq
