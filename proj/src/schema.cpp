#include "jagq/schema.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "jagq/errors.hpp"

namespace jagq {

std::optional<ElementKind> CollectionSchema::leaf(std::string_view name) const {
    for (const auto& [leaf_name, kind] : leaves) {
        if (leaf_name == name) {
            return kind;
        }
    }
    return std::nullopt;
}

namespace {

class SchemaLexer {
public:
    explicit SchemaLexer(std::string_view text) : text_(text) {}

    /// Next token: an identifier or a single punctuation character; empty at end.
    std::string next() {
        skip();
        if (pos_ >= text_.size()) {
            return {};
        }
        const char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            return std::string(text_.substr(start, pos_ - start));
        }
        ++pos_;
        return std::string(1, c);
    }

    std::string expect_ident(std::string_view what) {
        std::string t = next();
        if (t.empty() || !(std::isalpha(static_cast<unsigned char>(t[0])) || t[0] == '_')) {
            error("expected " + std::string(what) + ", found '" + t + "'");
        }
        return t;
    }

    void expect(std::string_view punct) {
        std::string t = next();
        if (t != punct) {
            error("expected '" + std::string(punct) + "', found '" + t + "'");
        }
    }

    std::string peek() {
        const std::size_t save = pos_;
        const std::size_t save_line = line_;
        std::string t = next();
        pos_ = save;
        line_ = save_line;
        return t;
    }

    [[noreturn]] void error(const std::string& msg) const {
        fail(ErrorCode::SchemaError, "schema line " + std::to_string(line_) + ": " + msg);
    }

private:
    void skip() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

ElementKind parse_kind(SchemaLexer& lex) {
    const std::string k = lex.expect_ident("a kind");
    if (k == "float") return ElementKind::Float;
    if (k == "int") return ElementKind::Int;
    if (k == "bool") return ElementKind::Bool;
    lex.error("unknown kind '" + k + "' (expected float, int or bool)");
}

}  // namespace

DatasetSchema DatasetSchema::parse(std::string_view text) {
    DatasetSchema schema;
    SchemaLexer lex(text);
    while (!lex.peek().empty()) {
        if (lex.expect_ident("'collection'") != "collection") {
            lex.error("expected 'collection'");
        }
        CollectionSchema c;
        c.name = lex.expect_ident("a collection name");
        lex.expect("{");
        while (lex.peek() != "}") {
            std::string leaf = lex.expect_ident("a leaf name");
            lex.expect(":");
            const ElementKind kind = parse_kind(lex);
            if (c.leaf(leaf)) {
                lex.error("leaf '" + leaf + "' declared twice in " + c.name);
            }
            c.leaves.emplace_back(std::move(leaf), kind);
            const std::string sep = lex.peek();
            if (sep == ";") {
                lex.next();
            } else if (sep != "}") {
                lex.error("expected ';' or '}' after leaf");
            }
        }
        lex.expect("}");
        if (schema.find(c.name)) {
            lex.error("collection '" + c.name + "' declared twice");
        }
        schema.add(std::move(c));
    }
    return schema;
}

DatasetSchema DatasetSchema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open schema file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void DatasetSchema::add(CollectionSchema collection) {
    std::string name = collection.name;
    collections_.insert_or_assign(std::move(name), std::move(collection));
}

const CollectionSchema* DatasetSchema::find(std::string_view name) const {
    auto it = collections_.find(name);
    return it == collections_.end() ? nullptr : &it->second;
}

namespace {

[[noreturn]] void type_error(const Dag& dag, NodeId id, const std::string& msg) {
    fail(ErrorCode::TypeError, "n" + std::to_string(id) + " " + node_label(dag, id) + ": " + msg);
}

bool accepts(ElementKind param, ElementKind arg) {
    if (param == ElementKind::Float) {
        return arg != ElementKind::Bool;
    }
    return param == arg;
}

}  // namespace

Inference infer(const Dag& dag, const DatasetSchema& schema, bool strict, bool record_roots) {
    Inference out;
    out.shapes.resize(dag.size());
    auto& shapes = out.shapes;
    auto unknown = [&](NodeId id, const std::string& msg) {
        if (strict) {
            fail(ErrorCode::SchemaError, msg);
        }
        out.warnings.push_back(msg + "; assuming float values");
        (void)id;
    };
    auto value_kind = [&](NodeId id, NodeId child) {
        const DataShape& c = shapes[child];
        if (c.record) {
            type_error(dag, id, "operand n" + std::to_string(child) + " is a collection, not a value");
        }
        return c.kind;
    };

    for (NodeId id = 0; id < dag.size(); ++id) {
        const Node& n = dag.nodes[id];
        DataShape s;
        s.depth = dag.depths[id];
        try {
            switch (n.kind) {
                case NodeKind::Source:
                    s.record = true;
                    s.origin = "";
                    break;
                case NodeKind::Constant:
                    s.kind = kind_of(n.constant);
                    s.scalar = true;
                    break;
                case NodeKind::Attribute: {
                    const Node& parent = dag.nodes[n.children[0]];
                    const DataShape& ps = shapes[n.children[0]];
                    if (parent.kind == NodeKind::Source) {
                        s.record = true;
                        s.origin = n.name;
                        if (!schema.find(n.name)) {
                            unknown(id, "unknown collection '" + n.name + "'");
                        }
                        break;
                    }
                    if (!ps.record || ps.origin.empty()) {
                        type_error(dag, id, "leaf '" + n.name + "' requested from a value, not a collection");
                    }
                    s.origin = ps.origin;
                    const CollectionSchema* c = schema.find(ps.origin);
                    std::optional<ElementKind> k = c ? c->leaf(n.name) : std::nullopt;
                    if (k) {
                        s.kind = *k;
                    } else {
                        if (c) {
                            unknown(id, "unknown leaf '" + n.name + "' in collection '" + ps.origin + "'");
                        }
                        s.kind = ElementKind::Float;
                    }
                    break;
                }
                case NodeKind::Binary:
                    s.kind = binary_result_kind(n.binary, value_kind(id, n.children[0]),
                                                value_kind(id, n.children[1]));
                    break;
                case NodeKind::Unary: s.kind = unary_result_kind(n.unary, value_kind(id, n.children[0])); break;
                case NodeKind::Call: {
                    const FunctionDecl* decl = dag.find_function(n.name);
                    if (!decl) {
                        fail(ErrorCode::UndeclaredFunction, "function '" + n.name + "' is not declared");
                    }
                    if (decl->params.size() != n.children.size()) {
                        type_error(dag, id, "wrong number of arguments");
                    }
                    for (std::size_t i = 0; i < n.children.size(); ++i) {
                        const ElementKind k = value_kind(id, n.children[i]);
                        if (!accepts(decl->params[i], k)) {
                            type_error(dag, id, "argument " + std::to_string(i + 1) + " is " +
                                                    std::string(to_string(k)) + ", expected " +
                                                    std::string(to_string(decl->params[i])));
                        }
                    }
                    s.kind = decl->ret;
                    break;
                }
                case NodeKind::Filter: {
                    const DataShape& seq = shapes[n.children[0]];
                    const DataShape& mask = shapes[n.children[1]];
                    if (mask.record || mask.kind != ElementKind::Bool) {
                        type_error(dag, id, "filter predicate is not bool");
                    }
                    s.kind = seq.kind;
                    s.record = seq.record;
                    s.origin = seq.origin;
                    break;
                }
                case NodeKind::Aggregate: {
                    const DataShape& seq = shapes[n.children[0]];
                    if (seq.depth == 0) {
                        type_error(dag, id, std::string(to_string(n.reduce)) + " of a per-event value");
                    }
                    if (seq.record) {
                        if (n.reduce == ReduceOp::First || n.reduce == ReduceOp::Flatten) {
                            s.record = true;
                            s.origin = seq.origin;
                        } else if (n.reduce == ReduceOp::Count) {
                            s.kind = ElementKind::Int;
                        } else {
                            type_error(dag, id, std::string(to_string(n.reduce)) + " of a collection");
                        }
                    } else {
                        s.kind = reduce_result_kind(n.reduce, seq.kind);
                        if (n.reduce == ReduceOp::First || n.reduce == ReduceOp::Flatten) {
                            s.origin = seq.origin;
                        }
                    }
                    break;
                }
                case NodeKind::Broadcast: {
                    const DataShape& v = shapes[n.children[0]];
                    s.kind = v.kind;
                    s.record = v.record;
                    s.origin = v.origin;
                    break;
                }
                case NodeKind::Map:
                case NodeKind::Param: type_error(dag, id, "node kind not allowed in a canonical DAG");
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::KindMismatch) {
                type_error(dag, id, e.what());
            }
            throw;
        }
        shapes[id] = std::move(s);
    }
    for (NodeId r : dag.roots) {
        if (shapes[r].record && !record_roots) {
            type_error(dag, r, "result is a collection; select a leaf to materialize it");
        }
    }
    return out;
}

}  // namespace jagq
