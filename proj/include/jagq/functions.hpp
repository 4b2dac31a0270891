#pragma once

#include <map>
#include <string>

#include "jagq/expr.hpp"
#include "jagq/jagged.hpp"

namespace jagq {

/// Wraps an azimuthal difference into (-pi, pi].
double wrap_phi(double dphi);

/// Angular separation sqrt(deta^2 + dphi^2) with dphi wrapped.
double delta_r(double eta1, double phi1, double eta2, double phi2);

/// Backend function implementations available to the columnar evaluator.
class FunctionRegistry {
public:
    struct Entry {
        FunctionDecl decl;
        ScalarFunction fn;
    };

    /// Registry holding DeltaR(eta1, phi1, eta2, phi2).
    static FunctionRegistry with_builtins();

    void add(FunctionDecl decl, ScalarFunction fn);
    const Entry* find(std::string_view name) const;
    /// Declares every registered function in `session`.
    void declare_all(Session& session) const;
    const std::map<std::string, Entry, std::less<>>& entries() const { return entries_; }

private:
    std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace jagq
