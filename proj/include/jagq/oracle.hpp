#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "jagq/expr.hpp"

/// Brute-force reference evaluator. It walks the recorded expression (lambdas
/// and all) once per event with plain loops over records, and shares no
/// evaluation code with the columnar engine.
namespace jagq::oracle {

struct Record {
    std::map<std::string, Scalar, std::less<>> leaves;
};

struct Event {
    std::map<std::string, std::vector<Record>, std::less<>> collections;
};

/// Leaf kinds per collection; float leaves written as JSON integers are
/// widened, everything else must match exactly.
using LeafKinds = std::map<std::string, std::map<std::string, ElementKind, std::less<>>, std::less<>>;

std::vector<Event> read_events(std::string_view jsonl, const LeafKinds& kinds);
std::vector<Event> load_events(const std::filesystem::path& path, const LeafKinds& kinds);

/// One per-event result: a scalar, a reference to a record, or a list.
struct Value {
    enum class Tag { Float, Int, Bool, Record, List } tag = Tag::Float;
    double f = 0;
    std::int64_t i = 0;
    bool b = false;
    std::string collection;  ///< Record: collection name ("" for the event)
    std::size_t index = 0;   ///< Record: position within the collection
    std::vector<Value> items;

    static Value of(const Scalar& s);
    static Value list(std::vector<Value> items);
};

using Function = std::function<double(const std::vector<double>&)>;

/// Functions the oracle knows how to compute: its own DeltaR.
std::map<std::string, Function, std::less<>> builtin_functions();

/// Static type of a recorded node relative to its innermost enclosing lambda.
struct Type {
    std::uint32_t depth = 0;
    ElementKind kind = ElementKind::Float;
    bool record = false;
};

/// Evaluates `root` for every event. Errors use the engine's codes.
std::vector<Value> evaluate(const Session& session, const Expr& root, const std::vector<Event>& events,
                            const LeafKinds& kinds,
                            const std::map<std::string, Function, std::less<>>& functions = builtin_functions());

Type type_of(const Session& session, const Expr& root, const LeafKinds& kinds);

/// numpy-style fixed-width histogram: `bins` equal bins over [lo, hi], the
/// last one closed; values outside are ignored.
std::vector<std::int64_t> histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi);

/// All leaf values of a nested result in depth-first order.
std::vector<double> flatten(const std::vector<Value>& per_event);

}  // namespace jagq::oracle
