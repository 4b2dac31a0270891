#include "jagq/jagged.hpp"

namespace jagq {

std::string_view to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::Float: return "float";
        case ElementKind::Int: return "int";
        case ElementKind::Bool: return "bool";
    }
    return "?";
}

ElementKind kind_of(const Scalar& s) {
    switch (s.index()) {
        case 0: return ElementKind::Float;
        case 1: return ElementKind::Int;
        default: return ElementKind::Bool;
    }
}

std::string_view to_string(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "Add";
        case BinaryOp::Sub: return "Sub";
        case BinaryOp::Mul: return "Mul";
        case BinaryOp::Div: return "Div";
        case BinaryOp::Lt: return "Lt";
        case BinaryOp::Gt: return "Gt";
        case BinaryOp::Le: return "Le";
        case BinaryOp::Ge: return "Ge";
        case BinaryOp::Eq: return "Eq";
        case BinaryOp::Ne: return "Ne";
        case BinaryOp::And: return "And";
        case BinaryOp::Or: return "Or";
        case BinaryOp::Atan2: return "Atan2";
    }
    return "?";
}

std::string_view to_string(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "Neg";
        case UnaryOp::Abs: return "Abs";
        case UnaryOp::Sqrt: return "Sqrt";
        case UnaryOp::Sin: return "Sin";
        case UnaryOp::Cos: return "Cos";
    }
    return "?";
}

std::string_view to_string(ReduceOp op) {
    switch (op) {
        case ReduceOp::Count: return "Count";
        case ReduceOp::First: return "First";
        case ReduceOp::Sum: return "Sum";
        case ReduceOp::Min: return "Min";
        case ReduceOp::Max: return "Max";
        case ReduceOp::Any: return "Any";
        case ReduceOp::All: return "All";
        case ReduceOp::Flatten: return "Flatten";
    }
    return "?";
}

bool is_comparison(BinaryOp op) {
    switch (op) {
        case BinaryOp::Lt:
        case BinaryOp::Gt:
        case BinaryOp::Le:
        case BinaryOp::Ge:
        case BinaryOp::Eq:
        case BinaryOp::Ne: return true;
        default: return false;
    }
}

bool is_logical(BinaryOp op) { return op == BinaryOp::And || op == BinaryOp::Or; }

}  // namespace jagq
