#include "jagq/functions.hpp"

#include <cmath>
#include <numbers>

#include "jagq/errors.hpp"

namespace jagq {

double wrap_phi(double dphi) {
    double d = std::remainder(dphi, 2.0 * std::numbers::pi);
    if (d <= -std::numbers::pi) {
        d += 2.0 * std::numbers::pi;
    }
    return d;
}

double delta_r(double eta1, double phi1, double eta2, double phi2) {
    const double deta = eta1 - eta2;
    const double dphi = wrap_phi(phi1 - phi2);
    return std::sqrt(deta * deta + dphi * dphi);
}

FunctionRegistry FunctionRegistry::with_builtins() {
    FunctionRegistry r;
    r.add(FunctionDecl{"DeltaR", std::vector<ElementKind>(4, ElementKind::Float), ElementKind::Float},
          [](std::span<const double> a) { return delta_r(a[0], a[1], a[2], a[3]); });
    return r;
}

void FunctionRegistry::add(FunctionDecl decl, ScalarFunction fn) {
    if (decl.ret != ElementKind::Float) {
        fail(ErrorCode::MissingImplementation, "function '" + decl.name + "': only float results are supported");
    }
    if (auto it = entries_.find(decl.name); it != entries_.end() && !(it->second.decl == decl)) {
        fail(ErrorCode::Redeclaration, "function '" + decl.name + "' registered with two signatures");
    }
    std::string name = decl.name;
    entries_.insert_or_assign(std::move(name), Entry{std::move(decl), std::move(fn)});
}

const FunctionRegistry::Entry* FunctionRegistry::find(std::string_view name) const {
    auto it = entries_.find(name);
    return it == entries_.end() ? nullptr : &it->second;
}

void FunctionRegistry::declare_all(Session& session) const {
    for (const auto& [name, e] : entries_) {
        session.declare_function(e.decl.name, e.decl.params, e.decl.ret);
    }
}

}  // namespace jagq
