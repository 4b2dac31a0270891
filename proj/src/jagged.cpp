#include "jagq/jagged.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

namespace jagq {

namespace {

std::atomic<std::uint64_t> g_kernel_invocations{0};

void count_kernel() { g_kernel_invocations.fetch_add(1, std::memory_order_relaxed); }

bool offsets_equal(const std::shared_ptr<const Offsets>& a,
                   const std::shared_ptr<const Offsets>& b) {
    return a == b || *a == *b;
}

template <typename F>
decltype(auto) visit_values(const JaggedArray::Values& v, F&& f) {
    return std::visit(std::forward<F>(f), v);
}

/// Level-0 event index owning element `index` of level `level` (level 0
/// elements are events).
std::size_t event_of(const JaggedArray& a, std::size_t level, std::size_t index) {
    std::size_t idx = index;
    for (std::size_t l = level; l > 0; --l) {
        const Offsets& off = a.offsets(l - 1);
        auto it = std::upper_bound(off.begin(), off.end(), static_cast<std::int64_t>(idx));
        idx = static_cast<std::size_t>(std::distance(off.begin(), it) - 1);
    }
    return idx;
}

/// Number of elements at a given level of `a`: events at level 0.
std::size_t count_at(const JaggedArray& a, std::size_t level) {
    if (level == 0) {
        return a.n_events();
    }
    return static_cast<std::size_t>(a.offsets(level - 1).back());
}

JaggedArray::Values gather_values(const JaggedArray::Values& values,
                                  const std::vector<std::int64_t>& idx) {
    return visit_values(values, [&](const auto& vec) -> JaggedArray::Values {
        using V = std::decay_t<decltype(vec)>;
        V out;
        out.reserve(idx.size());
        for (std::int64_t i : idx) {
            out.push_back(vec[static_cast<std::size_t>(i)]);
        }
        return out;
    });
}

JaggedArray::Values filled(ElementKind kind, const Scalar& s, std::size_t n) {
    switch (kind) {
        case ElementKind::Float:
            return std::vector<double>(n, std::get<double>(s));
        case ElementKind::Int:
            return std::vector<std::int64_t>(n, std::get<std::int64_t>(s));
        case ElementKind::Bool:
            return std::vector<std::uint8_t>(n, std::get<bool>(s) ? 1 : 0);
    }
    fail(ErrorCode::Internal, "bad element kind");
}

struct Operand {
    ElementKind kind;
    std::span<const double> f;
    std::span<const std::int64_t> i;
    std::span<const std::uint8_t> b;
    std::optional<Scalar> scalar;

    double d(std::size_t k) const {
        if (scalar) {
            return std::visit([](auto v) { return static_cast<double>(v); }, *scalar);
        }
        switch (kind) {
            case ElementKind::Float: return f[k];
            case ElementKind::Int: return static_cast<double>(i[k]);
            case ElementKind::Bool: return b[k] ? 1.0 : 0.0;
        }
        return 0.0;
    }
    std::int64_t n(std::size_t k) const {
        return scalar ? std::get<std::int64_t>(*scalar) : i[k];
    }
    bool t(std::size_t k) const { return scalar ? std::get<bool>(*scalar) : b[k] != 0; }
};

Operand operand_of(const JaggedArray& a) {
    Operand o{a.kind(), {}, {}, {}, std::nullopt};
    switch (a.kind()) {
        case ElementKind::Float: o.f = a.floats(); break;
        case ElementKind::Int: o.i = a.ints(); break;
        case ElementKind::Bool: o.b = a.bools(); break;
    }
    return o;
}

Operand operand_of(const Scalar& s) { return Operand{kind_of(s), {}, {}, {}, s}; }

JaggedArray::Values binary_values(BinaryOp op, const Operand& a, const Operand& b,
                                  std::size_t n) {
    const ElementKind rk = binary_result_kind(op, a.kind, b.kind);
    if (rk == ElementKind::Int) {
        std::vector<std::int64_t> out(n);
        for (std::size_t k = 0; k < n; ++k) {
            auto x = static_cast<std::uint64_t>(a.n(k));
            auto y = static_cast<std::uint64_t>(b.n(k));
            std::uint64_t r = 0;
            switch (op) {
                case BinaryOp::Add: r = x + y; break;
                case BinaryOp::Sub: r = x - y; break;
                case BinaryOp::Mul: r = x * y; break;
                default: fail(ErrorCode::Internal, "non-integer op in Int path");
            }
            out[k] = static_cast<std::int64_t>(r);
        }
        return out;
    }
    if (rk == ElementKind::Float) {
        std::vector<double> out(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double x = a.d(k);
            const double y = b.d(k);
            double r = 0.0;
            switch (op) {
                case BinaryOp::Add: r = x + y; break;
                case BinaryOp::Sub: r = x - y; break;
                case BinaryOp::Mul: r = x * y; break;
                case BinaryOp::Div: r = x / y; break;
                case BinaryOp::Atan2: r = std::atan2(x, y); break;
                default: fail(ErrorCode::Internal, "non-float op in Float path");
            }
            out[k] = r;
        }
        return out;
    }
    std::vector<std::uint8_t> out(n);
    if (is_logical(op)) {
        for (std::size_t k = 0; k < n; ++k) {
            out[k] = op == BinaryOp::And ? (a.t(k) && b.t(k)) : (a.t(k) || b.t(k));
        }
        return out;
    }
    const bool both_bool = a.kind == ElementKind::Bool;
    const bool both_int = a.kind == ElementKind::Int && b.kind == ElementKind::Int;
    for (std::size_t k = 0; k < n; ++k) {
        int cmp = 0;
        if (both_bool) {
            cmp = static_cast<int>(a.t(k)) - static_cast<int>(b.t(k));
        } else if (both_int) {
            const auto x = a.n(k);
            const auto y = b.n(k);
            cmp = x < y ? -1 : (x > y ? 1 : 0);
        } else {
            const double x = a.d(k);
            const double y = b.d(k);
            switch (op) {
                case BinaryOp::Lt: out[k] = x < y; break;
                case BinaryOp::Gt: out[k] = x > y; break;
                case BinaryOp::Le: out[k] = x <= y; break;
                case BinaryOp::Ge: out[k] = x >= y; break;
                case BinaryOp::Eq: out[k] = x == y; break;
                case BinaryOp::Ne: out[k] = x != y; break;
                default: fail(ErrorCode::Internal, "bad comparison");
            }
            continue;
        }
        switch (op) {
            case BinaryOp::Lt: out[k] = cmp < 0; break;
            case BinaryOp::Gt: out[k] = cmp > 0; break;
            case BinaryOp::Le: out[k] = cmp <= 0; break;
            case BinaryOp::Ge: out[k] = cmp >= 0; break;
            case BinaryOp::Eq: out[k] = cmp == 0; break;
            case BinaryOp::Ne: out[k] = cmp != 0; break;
            default: fail(ErrorCode::Internal, "bad comparison");
        }
    }
    return out;
}

}  // namespace

ElementKind binary_result_kind(BinaryOp op, ElementKind a, ElementKind b) {
    const bool abool = a == ElementKind::Bool;
    const bool bbool = b == ElementKind::Bool;
    auto mismatch = [&]() -> ElementKind {
        fail(ErrorCode::KindMismatch, std::string(to_string(op)) + " on " +
                                          std::string(to_string(a)) + " and " +
                                          std::string(to_string(b)));
    };
    if (is_logical(op)) {
        return abool && bbool ? ElementKind::Bool : mismatch();
    }
    if (op == BinaryOp::Eq || op == BinaryOp::Ne) {
        return abool == bbool ? ElementKind::Bool : mismatch();
    }
    if (abool || bbool) {
        return mismatch();
    }
    if (is_comparison(op)) {
        return ElementKind::Bool;
    }
    if (op == BinaryOp::Div || op == BinaryOp::Atan2) {
        return ElementKind::Float;
    }
    return a == ElementKind::Int && b == ElementKind::Int ? ElementKind::Int
                                                          : ElementKind::Float;
}

ElementKind unary_result_kind(UnaryOp op, ElementKind a) {
    if (a == ElementKind::Bool) {
        fail(ErrorCode::KindMismatch, std::string(to_string(op)) + " on bool");
    }
    return ElementKind::Float;
}

ElementKind reduce_result_kind(ReduceOp op, ElementKind a) {
    switch (op) {
        case ReduceOp::Count: return ElementKind::Int;
        case ReduceOp::First:
        case ReduceOp::Flatten: return a;
        case ReduceOp::Sum:
        case ReduceOp::Min:
        case ReduceOp::Max:
            if (a == ElementKind::Bool) {
                fail(ErrorCode::KindMismatch, std::string(to_string(op)) + " on bool");
            }
            return a;
        case ReduceOp::Any:
        case ReduceOp::All:
            if (a != ElementKind::Bool) {
                fail(ErrorCode::KindMismatch, std::string(to_string(op)) + " requires bool");
            }
            return ElementKind::Bool;
    }
    fail(ErrorCode::Internal, "bad reduce op");
}

Scalar apply_binary(BinaryOp op, const Scalar& a, const Scalar& b) {
    auto vals = binary_values(op, operand_of(a), operand_of(b), 1);
    return std::visit([](const auto& v) -> Scalar {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<T, std::uint8_t>) {
            return v[0] != 0;
        } else {
            return v[0];
        }
    }, vals);
}

Scalar apply_unary(UnaryOp op, const Scalar& a) {
    unary_result_kind(op, kind_of(a));
    const double x = std::visit([](auto v) { return static_cast<double>(v); }, a);
    switch (op) {
        case UnaryOp::Neg: return -x;
        case UnaryOp::Abs: return std::fabs(x);
        case UnaryOp::Sqrt: return std::sqrt(x);
        case UnaryOp::Sin: return std::sin(x);
        case UnaryOp::Cos: return std::cos(x);
    }
    fail(ErrorCode::Internal, "bad unary op");
}

std::uint64_t kernel_invocations() {
    return g_kernel_invocations.load(std::memory_order_relaxed);
}

JaggedArray::JaggedArray() : JaggedArray(std::vector<Offsets>{}, std::vector<double>{}) {}

JaggedArray::JaggedArray(std::vector<Offsets> levels, Values values) {
    levels_.reserve(levels.size());
    for (auto& l : levels) {
        levels_.push_back(std::make_shared<const Offsets>(std::move(l)));
    }
    values_ = std::make_shared<const Values>(std::move(values));
    validate();
}

JaggedArray::JaggedArray(std::vector<std::shared_ptr<const Offsets>> levels,
                         std::shared_ptr<const Values> values)
    : levels_(std::move(levels)), values_(std::move(values)) {
    validate();
}

void JaggedArray::validate() const {
    if (!values_) {
        fail(ErrorCode::InvalidArray, "missing value buffer");
    }
    for (std::size_t l = 0; l < levels_.size(); ++l) {
        const Offsets& off = *levels_[l];
        if (off.empty() || off.front() != 0) {
            fail(ErrorCode::InvalidArray,
                 "offset level " + std::to_string(l) + " must start with 0");
        }
        for (std::size_t k = 1; k < off.size(); ++k) {
            if (off[k] < off[k - 1]) {
                fail(ErrorCode::InvalidArray,
                     "offset level " + std::to_string(l) + " decreases at " + std::to_string(k));
            }
        }
        const std::size_t next = l + 1 < levels_.size() ? levels_[l + 1]->size() - 1 : size();
        if (static_cast<std::size_t>(off.back()) != next) {
            fail(ErrorCode::InvalidArray, "offset level " + std::to_string(l) +
                                              " ends at " + std::to_string(off.back()) +
                                              ", next level has " + std::to_string(next));
        }
    }
}

JaggedArray JaggedArray::from_floats(const std::vector<std::vector<double>>& rows) {
    Offsets off{0};
    std::vector<double> vals;
    for (const auto& r : rows) {
        vals.insert(vals.end(), r.begin(), r.end());
        off.push_back(static_cast<std::int64_t>(vals.size()));
    }
    return JaggedArray({std::move(off)}, std::move(vals));
}

JaggedArray JaggedArray::from_ints(const std::vector<std::vector<std::int64_t>>& rows) {
    Offsets off{0};
    std::vector<std::int64_t> vals;
    for (const auto& r : rows) {
        vals.insert(vals.end(), r.begin(), r.end());
        off.push_back(static_cast<std::int64_t>(vals.size()));
    }
    return JaggedArray({std::move(off)}, std::move(vals));
}

JaggedArray JaggedArray::from_bools(const std::vector<std::vector<bool>>& rows) {
    Offsets off{0};
    std::vector<std::uint8_t> vals;
    for (const auto& r : rows) {
        for (bool b : r) {
            vals.push_back(b ? 1 : 0);
        }
        off.push_back(static_cast<std::int64_t>(vals.size()));
    }
    return JaggedArray({std::move(off)}, std::move(vals));
}

JaggedArray JaggedArray::flat(Values values) {
    return JaggedArray(std::vector<Offsets>{}, std::move(values));
}

std::size_t JaggedArray::n_events() const {
    return levels_.empty() ? size() : levels_.front()->size() - 1;
}

std::size_t JaggedArray::size() const {
    return visit_values(*values_, [](const auto& v) { return v.size(); });
}

ElementKind JaggedArray::kind() const { return static_cast<ElementKind>(values_->index()); }

std::span<const double> JaggedArray::floats() const {
    if (kind() != ElementKind::Float) {
        fail(ErrorCode::KindMismatch, "array is not float");
    }
    return std::get<std::vector<double>>(*values_);
}

std::span<const std::int64_t> JaggedArray::ints() const {
    if (kind() != ElementKind::Int) {
        fail(ErrorCode::KindMismatch, "array is not int");
    }
    return std::get<std::vector<std::int64_t>>(*values_);
}

std::span<const std::uint8_t> JaggedArray::bools() const {
    if (kind() != ElementKind::Bool) {
        fail(ErrorCode::KindMismatch, "array is not bool");
    }
    return std::get<std::vector<std::uint8_t>>(*values_);
}

double JaggedArray::as_double(std::size_t i) const {
    return visit_values(*values_, [&](const auto& v) { return static_cast<double>(v.at(i)); });
}

bool JaggedArray::same_structure(const JaggedArray& other) const {
    if (depth() != other.depth() || n_events() != other.n_events()) {
        return false;
    }
    for (std::size_t l = 0; l < depth(); ++l) {
        if (!offsets_equal(levels_[l], other.levels_[l])) {
            return false;
        }
    }
    return true;
}

bool JaggedArray::operator==(const JaggedArray& other) const {
    if (!same_structure(other) || kind() != other.kind() || size() != other.size()) {
        return false;
    }
    if (kind() == ElementKind::Float) {
        auto a = floats();
        auto b = other.floats();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) {
                return false;
            }
        }
        return true;
    }
    return *values_ == *other.values_;
}

JaggedArray elementwise_binary(BinaryOp op, const JaggedArray& a, const JaggedArray& b) {
    count_kernel();
    if (!a.same_structure(b)) {
        fail(ErrorCode::ShapeMismatch, std::string(to_string(op)) +
                                           " operands have different structure (depth " +
                                           std::to_string(a.depth()) + " vs " +
                                           std::to_string(b.depth()) + ")");
    }
    auto vals = binary_values(op, operand_of(a), operand_of(b), a.size());
    return JaggedArray(a.shared_levels(), std::make_shared<const JaggedArray::Values>(std::move(vals)));
}

JaggedArray elementwise_binary(BinaryOp op, const JaggedArray& a, const Scalar& b) {
    count_kernel();
    auto vals = binary_values(op, operand_of(a), operand_of(b), a.size());
    return JaggedArray(a.shared_levels(), std::make_shared<const JaggedArray::Values>(std::move(vals)));
}

JaggedArray elementwise_binary(BinaryOp op, const Scalar& a, const JaggedArray& b) {
    count_kernel();
    auto vals = binary_values(op, operand_of(a), operand_of(b), b.size());
    return JaggedArray(b.shared_levels(), std::make_shared<const JaggedArray::Values>(std::move(vals)));
}

JaggedArray elementwise_unary(UnaryOp op, const JaggedArray& a) {
    count_kernel();
    unary_result_kind(op, a.kind());
    const Operand o = operand_of(a);
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double x = o.d(k);
        switch (op) {
            case UnaryOp::Neg: out[k] = -x; break;
            case UnaryOp::Abs: out[k] = std::fabs(x); break;
            case UnaryOp::Sqrt: out[k] = std::sqrt(x); break;
            case UnaryOp::Sin: out[k] = std::sin(x); break;
            case UnaryOp::Cos: out[k] = std::cos(x); break;
        }
    }
    return JaggedArray(a.shared_levels(), std::make_shared<const JaggedArray::Values>(std::move(out)));
}

JaggedArray elementwise_call(const ScalarFunction& fn,
                             const std::vector<std::variant<JaggedArray, Scalar>>& args) {
    count_kernel();
    const JaggedArray* shape = nullptr;
    std::vector<Operand> ops;
    ops.reserve(args.size());
    for (const auto& arg : args) {
        if (const auto* arr = std::get_if<JaggedArray>(&arg)) {
            if (shape == nullptr) {
                shape = arr;
            } else if (!shape->same_structure(*arr)) {
                fail(ErrorCode::ShapeMismatch, "function arguments have different structure");
            }
            ops.push_back(operand_of(*arr));
        } else {
            ops.push_back(operand_of(std::get<Scalar>(arg)));
        }
        if (ops.back().kind == ElementKind::Bool) {
            fail(ErrorCode::KindMismatch, "function argument is bool");
        }
    }
    if (shape == nullptr) {
        fail(ErrorCode::ShapeMismatch, "function call needs at least one array argument");
    }
    std::vector<double> out(shape->size());
    std::vector<double> buf(ops.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (std::size_t j = 0; j < ops.size(); ++j) {
            buf[j] = ops[j].d(k);
        }
        out[k] = fn(buf);
    }
    return JaggedArray(shape->shared_levels(),
                       std::make_shared<const JaggedArray::Values>(std::move(out)));
}

JaggedArray mask_innermost(const JaggedArray& a, const JaggedArray& mask) {
    count_kernel();
    if (a.depth() == 0) {
        fail(ErrorCode::ShapeMismatch, "mask requires an array of depth >= 1");
    }
    if (mask.kind() != ElementKind::Bool) {
        fail(ErrorCode::KindMismatch, "mask must be bool");
    }
    if (!a.same_structure(mask)) {
        fail(ErrorCode::ShapeMismatch, "mask structure differs from masked array");
    }
    auto m = mask.bools();
    const Offsets& inner = a.offsets(a.depth() - 1);
    Offsets new_inner;
    new_inner.reserve(inner.size());
    new_inner.push_back(0);
    std::vector<std::int64_t> keep;
    for (std::size_t i = 0; i + 1 < inner.size(); ++i) {
        for (auto k = inner[i]; k < inner[i + 1]; ++k) {
            if (m[static_cast<std::size_t>(k)]) {
                keep.push_back(k);
            }
        }
        new_inner.push_back(static_cast<std::int64_t>(keep.size()));
    }
    auto levels = a.shared_levels();
    levels.back() = std::make_shared<const Offsets>(std::move(new_inner));
    return JaggedArray(std::move(levels), std::make_shared<const JaggedArray::Values>(
                                              gather_values(a.values(), keep)));
}

JaggedArray reduce_innermost(ReduceOp op, const JaggedArray& a) {
    if (op == ReduceOp::Flatten) {
        return flatten_innermost(a);
    }
    count_kernel();
    if (a.depth() == 0) {
        fail(ErrorCode::ShapeMismatch, std::string(to_string(op)) + " requires depth >= 1");
    }
    const ElementKind rk = reduce_result_kind(op, a.kind());
    const std::size_t level = a.depth() - 1;
    const Offsets& inner = a.offsets(level);
    const std::size_t lists = inner.size() - 1;
    auto empty_error = [&](std::size_t i) {
        fail(ErrorCode::EmptySequence, std::string(to_string(op)) +
                                           " on empty list in event " +
                                           std::to_string(event_of(a, level, i)));
    };

    JaggedArray::Values out;
    if (op == ReduceOp::Count) {
        std::vector<std::int64_t> v(lists);
        for (std::size_t i = 0; i < lists; ++i) {
            v[i] = inner[i + 1] - inner[i];
        }
        out = std::move(v);
    } else if (op == ReduceOp::Any || op == ReduceOp::All) {
        auto b = a.bools();
        std::vector<std::uint8_t> v(lists);
        for (std::size_t i = 0; i < lists; ++i) {
            bool acc = op == ReduceOp::All;
            for (auto k = inner[i]; k < inner[i + 1]; ++k) {
                if (op == ReduceOp::Any) {
                    acc = acc || b[static_cast<std::size_t>(k)];
                } else {
                    acc = acc && b[static_cast<std::size_t>(k)];
                }
            }
            v[i] = acc;
        }
        out = std::move(v);
    } else {
        out = visit_values(a.values(), [&](const auto& vec) -> JaggedArray::Values {
            using V = std::decay_t<decltype(vec)>;
            using T = typename V::value_type;
            V v(lists);
            for (std::size_t i = 0; i < lists; ++i) {
                const auto b = static_cast<std::size_t>(inner[i]);
                const auto e = static_cast<std::size_t>(inner[i + 1]);
                if (op == ReduceOp::Sum) {
                    if constexpr (std::is_same_v<T, std::int64_t>) {
                        std::uint64_t acc = 0;
                        for (std::size_t k = b; k < e; ++k) {
                            acc += static_cast<std::uint64_t>(vec[k]);
                        }
                        v[i] = static_cast<T>(acc);
                    } else {
                        T acc{};
                        for (std::size_t k = b; k < e; ++k) {
                            acc += vec[k];
                        }
                        v[i] = acc;
                    }
                    continue;
                }
                if (b == e) {
                    empty_error(i);
                }
                T acc = vec[b];
                if (op == ReduceOp::Min) {
                    for (std::size_t k = b + 1; k < e; ++k) {
                        if (vec[k] < acc) acc = vec[k];
                    }
                } else if (op == ReduceOp::Max) {
                    for (std::size_t k = b + 1; k < e; ++k) {
                        if (vec[k] > acc) acc = vec[k];
                    }
                }
                v[i] = acc;
            }
            return v;
        });
    }
    (void)rk;
    auto levels = a.shared_levels();
    levels.pop_back();
    return JaggedArray(std::move(levels), std::make_shared<const JaggedArray::Values>(std::move(out)));
}

JaggedArray flatten_innermost(const JaggedArray& a) {
    count_kernel();
    if (a.depth() < 2) {
        fail(ErrorCode::ShapeMismatch, "flatten requires depth >= 2");
    }
    const std::size_t d = a.depth();
    const Offsets& outer = a.offsets(d - 2);
    const Offsets& inner = a.offsets(d - 1);
    Offsets merged(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) {
        merged[i] = inner[static_cast<std::size_t>(outer[i])];
    }
    auto levels = a.shared_levels();
    levels.pop_back();
    levels.back() = std::make_shared<const Offsets>(std::move(merged));
    return JaggedArray(std::move(levels), a.shared_values());
}

NestedShape cross_nest(const JaggedArray& outer, const JaggedArray& inner) {
    count_kernel();
    if (outer.depth() != 1 || inner.depth() != 1) {
        fail(ErrorCode::ShapeMismatch, "cross_nest requires depth-1 operands");
    }
    if (outer.n_events() != inner.n_events()) {
        fail(ErrorCode::ShapeMismatch, "cross_nest event counts differ");
    }
    const Offsets& o = outer.offsets(0);
    const Offsets& n = inner.offsets(0);
    Offsets level1{0};
    for (std::size_t e = 0; e + 1 < o.size(); ++e) {
        const std::int64_t len = n[e + 1] - n[e];
        for (auto k = o[e]; k < o[e + 1]; ++k) {
            level1.push_back(level1.back() + len);
        }
    }
    return NestedShape{{o, std::move(level1)}};
}

JaggedArray broadcast_subtrees(const JaggedArray& value, const JaggedArray& frame,
                               std::size_t shared) {
    count_kernel();
    if (shared > value.depth() || shared > frame.depth()) {
        fail(ErrorCode::ShapeMismatch, "broadcast shared depth exceeds operand depth");
    }
    if (value.n_events() != frame.n_events()) {
        fail(ErrorCode::ShapeMismatch, "broadcast event counts differ");
    }
    for (std::size_t l = 0; l < shared; ++l) {
        if (!offsets_equal(value.shared_offsets(l), frame.shared_offsets(l))) {
            fail(ErrorCode::ShapeMismatch, "broadcast operands disagree at level " + std::to_string(l));
        }
    }
    // Ancestor (at level `shared`) of every element at each frame level.
    std::vector<std::int64_t> anc(count_at(frame, shared));
    std::iota(anc.begin(), anc.end(), std::int64_t{0});
    for (std::size_t l = shared; l < frame.depth(); ++l) {
        const Offsets& off = frame.offsets(l);
        std::vector<std::int64_t> next;
        next.reserve(static_cast<std::size_t>(off.back()));
        for (std::size_t i = 0; i + 1 < off.size(); ++i) {
            next.insert(next.end(), static_cast<std::size_t>(off[i + 1] - off[i]), anc[i]);
        }
        anc = std::move(next);
    }
    auto levels = frame.shared_levels();
    std::vector<std::int64_t> cur = std::move(anc);
    for (std::size_t l = shared; l < value.depth(); ++l) {
        const Offsets& off = value.offsets(l);
        Offsets new_off{0};
        new_off.reserve(cur.size() + 1);
        std::vector<std::int64_t> next;
        for (std::int64_t i : cur) {
            const auto b = off[static_cast<std::size_t>(i)];
            const auto e = off[static_cast<std::size_t>(i) + 1];
            new_off.push_back(new_off.back() + (e - b));
            for (auto k = b; k < e; ++k) {
                next.push_back(k);
            }
        }
        levels.push_back(std::make_shared<const Offsets>(std::move(new_off)));
        cur = std::move(next);
    }
    return JaggedArray(std::move(levels), std::make_shared<const JaggedArray::Values>(
                                              gather_values(value.values(), cur)));
}

JaggedArray fill_like(const JaggedArray& frame, const Scalar& value) {
    count_kernel();
    return JaggedArray(frame.shared_levels(), std::make_shared<const JaggedArray::Values>(
                                                  filled(kind_of(value), value, frame.size())));
}

std::vector<double> flatten_to_doubles(const JaggedArray& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.as_double(i);
    }
    return out;
}

}  // namespace jagq
