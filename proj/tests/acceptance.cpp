// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <tuple>
#include <variant>

#include "bridge.hpp"
#include "jagq/canonical.hpp"
#include "jagq/dataset.hpp"
#include "jagq/exec_remote.hpp"
#include "jagq/oracle.hpp"
#include "jagq/output.hpp"
#include "jagq/planner.hpp"
#include "jagq/query_lang.hpp"

using namespace jagq;
using jagq::testing::mismatch;
using jagq::testing::TempDir;

namespace {

// Pinned tolerances.
constexpr double kRelTol = 1e-12;
constexpr double kSelectionSeconds = 5.0;
constexpr double kPropertySeconds = 60.0;
constexpr std::size_t kPropertyExpressions = 100;
constexpr std::size_t kPropertyEvents = 200;
constexpr int kMaxExprDepth = 5;

const char* kDataset = "localds://mc15_13TeV.zee";

class Failure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

void require_agree(const JaggedArray& a, const JaggedArray& b, const std::string& what) {
    if (auto why = mismatch(a, b, kRelTol)) throw Failure(what + ": " + *why);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// A generated dataset on disk plus everything needed to run against it.
struct Fixture {
    Fixture(std::uint64_t seed, std::size_t n_events) : sample(generate(seed, n_events)) {
        write_file(dir.path() / "zee.jsonl", sample.events);
        write_file(dir.path() / "physics.schema", generated_schema_text());
        write_labels(dir.path() / "zee.labels", sample.labels);
        registry = DatasetRegistry::parse(std::string("[") + kDataset +
                                              "]\nevents = \"zee.jsonl\"\nschema = \"physics.schema\"\n",
                                          dir.path());
        schema = DatasetSchema::load(dir.path() / "physics.schema");
        table = ingest(dir.path() / "zee.jsonl", schema);
        kinds = jagq::testing::leaf_kinds(schema);
        events = oracle::load_events(dir.path() / "zee.jsonl", kinds);
    }

    TempDir dir;
    GeneratedSample sample;
    DatasetRegistry registry;
    DatasetSchema schema;
    EventTable table;
    oracle::LeafKinds kinds;
    std::vector<oracle::Event> events;
    FunctionRegistry functions = FunctionRegistry::with_builtins();
};

using Outcome = std::variant<std::vector<JaggedArray>, ErrorCode>;

template <typename F>
Outcome capture(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return e.code();
    }
}

std::vector<BackendCapability> split_backends(bool cross_reference, const FunctionRegistry& fns) {
    return {remote_capability(cross_reference, fns), local_capability(false, fns)};
}

std::vector<JaggedArray> run_all_local(const Fixture& fx, const Dag& dag) {
    const Plan plan = cut_boundaries(dag, assign(dag, {local_capability(true, fx.functions)}));
    LocalStepExecutor local(fx.functions, &fx.table);
    return execute(dag, plan, {{"local", &local}}).roots;
}

std::vector<JaggedArray> run_split(const Fixture& fx, const Dag& dag, RemoteService& service, bool cross_reference) {
    const Plan plan = cut_boundaries(dag, assign(dag, split_backends(cross_reference, fx.functions)));
    RemoteStepExecutor remote(RemoteClient(service), cross_reference);
    LocalStepExecutor local(fx.functions, nullptr);
    return execute(dag, plan, {{"remote", &remote}, {"local", &local}}).roots;
}

std::vector<JaggedArray> run_oracle(const Fixture& fx, const Session& s, const std::vector<Expr>& roots) {
    std::vector<JaggedArray> out;
    for (const Expr& r : roots) {
        out.push_back(jagq::testing::to_jagged(oracle::evaluate(s, r, fx.events, fx.kinds),
                                               oracle::type_of(s, r, fx.kinds)));
    }
    return out;
}

std::string describe(const Outcome& o) {
    if (const auto* code = std::get_if<ErrorCode>(&o)) return std::string(to_string(*code));
    return "values";
}

void require_same(const Outcome& got, const Outcome& want, const std::string& what) {
    if (got.index() != want.index()) throw Failure(what + ": " + describe(got) + " vs " + describe(want));
    if (const auto* code = std::get_if<ErrorCode>(&got)) {
        require(*code == std::get<ErrorCode>(want), what + ": " + describe(got) + " vs " + describe(want));
        return;
    }
    const auto& a = std::get<0>(got);
    const auto& b = std::get<0>(want);
    require(a.size() == b.size(), what + ": root count");
    for (std::size_t i = 0; i < a.size(); ++i) require_agree(a[i], b[i], what);
}

Expr electron_selection(Session& s) {
    auto eles = s.source(kDataset)["Electrons"];
    return eles[(eles["pt"] > 50000.0) & (abs(eles["eta"]) < 1.5)]["pt"] / 1000.0;
}

// ---------------------------------------------------------------------------

std::string criterion_selection(const Fixture& fx) {
    const auto t0 = std::chrono::steady_clock::now();
    Session s;
    const Expr root = electron_selection(s);
    const Dag dag = canonicalize(s, root);
    RemoteService service(fx.registry, fx.functions, {});
    const JaggedArray local = run_all_local(fx, dag).at(0);
    const JaggedArray split = run_split(fx, dag, service, false).at(0);
    const JaggedArray ref = run_oracle(fx, s, {root}).at(0);

    require(local.offsets(0) == ref.offsets(0) && split.offsets(0) == ref.offsets(0), "selections differ");
    require_agree(local, ref, "all-local vs oracle");
    require_agree(split, ref, "split vs oracle");

    std::vector<oracle::Value> per_event = oracle::evaluate(s, root, fx.events, fx.kinds);
    const auto want = oracle::histogram(oracle::flatten(per_event), 50, 0.0, 100.0);
    const Histogram got_local = histogram(flat_values(local), 50, 0.0, 100.0);
    const Histogram got_split = histogram(flat_values(split), 50, 0.0, 100.0);
    require(got_local.counts == want && got_split.counts == want, "histogram counts differ from oracle binning");
    const std::string csv = histogram_csv(got_split);
    require(std::count(csv.begin(), csv.end(), '\n') == 51, "CSV is not header + 50 rows");

    const double secs = seconds_since(t0);
    require(secs < kSelectionSeconds, "took " + std::to_string(secs) + " s");
    std::int64_t total = 0;
    for (auto c : want) total += c;
    std::ostringstream msg;
    msg << ref.size() << " selected electrons in " << fx.table.n_events() << " events, " << total
        << " in histogram, " << secs << " s";
    return msg.str();
}

std::string criterion_association(const Fixture& fx) {
    Session s;
    fx.functions.declare_all(s);
    auto ev = s.source(kDataset);
    auto eles = ev["Electrons"];
    auto truth = ev["TruthParticles"];
    eles.define("ptgev", [](Expr e) { return e["pt"] / 1000.0; });
    truth.define("ptgev", [](Expr t) { return t["pt"] / 1000.0; });
    auto truth_e = truth.filter([](Expr t) { return (t["pdgId"] == 11) | (t["pdgId"] == -11); });
    eles.define("all", [&](Expr e) {
        return truth_e.filter(
            [&](Expr t) { return s.call("DeltaR", {e["eta"], e["phi"], t["eta"], t["phi"]}) < 0.1; });
    });
    eles.define("has_match", [](Expr e) { return e["all"].count() > 0; });
    eles.define("mc", [](Expr e) { return e["all"]["ptgev"].first(); });

    auto good = eles.filter([](Expr e) { return (e["ptgev"] > 20.0) & (abs(e["eta"]) < 1.4); });
    auto matched = good.filter([](Expr e) { return e["has_match"]; });
    const Expr reco = matched["ptgev"];
    const Expr mc = matched["mc"];
    const Expr resolution = mc - reco;
    const std::vector<Expr> roots{reco, mc, resolution};

    const Dag dag = canonicalize(s, roots);
    RemoteService service(fx.registry, fx.functions, {});
    const auto local = run_all_local(fx, dag);
    const auto split = run_split(fx, dag, service, false);
    const auto ref = run_oracle(fx, s, roots);

    using Pair = std::tuple<std::size_t, double, double>;
    auto pairs = [](const JaggedArray& r, const JaggedArray& t) {
        std::vector<Pair> out;
        for (std::size_t e = 0; e < r.n_events(); ++e) {
            for (auto k = r.offsets(0)[e]; k < r.offsets(0)[e + 1]; ++k) {
                const auto u = static_cast<std::size_t>(k);
                out.emplace_back(e, r.floats()[u], t.floats()[u]);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto engine_pairs = pairs(local[0], local[1]);
    require(engine_pairs == pairs(split[0], split[1]), "split pairs differ from all-local");
    require(engine_pairs == pairs(ref[0], ref[1]), "pairs differ from oracle");

    const JaggedArray eta = run_all_local(fx, canonicalize(s, eles["eta"])).at(0);
    std::vector<Pair> labelled;
    for (const MatchLabel& l : read_labels(fx.dir.path() / "zee.labels")) {
        const double e_eta = eta.floats()[static_cast<std::size_t>(eta.offsets(0)[l.event]) + l.reco];
        const double ptgev = l.reco_pt / 1000.0;
        if (ptgev > 20.0 && std::fabs(e_eta) < 1.4) labelled.emplace_back(l.event, ptgev, l.truth_pt / 1000.0);
    }
    std::sort(labelled.begin(), labelled.end());
    require(engine_pairs == labelled, "pairs differ from the generator's labels");

    require_agree(local[2], ref[2], "all-local resolution vs oracle");
    require_agree(split[2], ref[2], "split resolution vs oracle");
    double sum = 0;
    for (double r : local[2].floats()) sum += r;
    std::ostringstream msg;
    msg << engine_pairs.size() << " matched pairs, mean resolution "
        << (engine_pairs.empty() ? 0.0 : sum / static_cast<double>(engine_pairs.size())) << " GeV";
    return msg.str();
}

std::string criterion_split(const Fixture& fx) {
    Session s;
    const Dag dag = canonicalize(s, electron_selection(s));
    const Plan off = cut_boundaries(dag, assign(dag, split_backends(false, fx.functions)));
    const std::string golden =
        std::string("step 0 backend=remote inputs=[] outputs=[n2,n9]\n") +
        "  n0 Source(\"" + kDataset + "\")\n"
        "  n1 Attribute(n0, \"Electrons\")\n"
        "  n2 Attribute(n1, \"pt\")\n"
        "  n3 Const(50000.0)\n"
        "  n4 Gt(n2, n3)\n"
        "  n5 Attribute(n1, \"eta\")\n"
        "  n6 Abs(n5)\n"
        "  n7 Const(1.5)\n"
        "  n8 Lt(n6, n7)\n"
        "  n9 And(n4, n8)\n"
        "step 1 backend=local inputs=[n2,n9] outputs=[n12]\n"
        "  n10 Filter(n2, n9)\n"
        "  n11 Const(1000.0)\n"
        "  n12 Div(n10, n11)\n"
        "boundaries:\n"
        "  n2 -> n10 remote->local\n"
        "  n9 -> n10 remote->local\n";
    const std::string got = dump(dag, off);
    require(got == golden, "plan dump differs:\n" + got);

    const Plan on = cut_boundaries(dag, assign(dag, split_backends(true, fx.functions)));
    require(on.steps.size() == 1 && on.boundaries.empty(), "flag on still splits");
    for (const auto& b : on.assignment) require(b == "remote", "flag on left a node local");
    return "flag off: leaves and conjunction remote, mask and divide local; flag on: " +
           std::to_string(dag.size()) + " nodes remote";
}

std::string criterion_cache(const Fixture& fx) {
    Session s;
    const Dag dag = canonicalize(s, electron_selection(s));
    const Plan plan = cut_boundaries(dag, assign(dag, split_backends(false, fx.functions)));
    TempDir cache;
    RemoteService service(fx.registry, fx.functions, cache.path());

    auto frames = [&] {
        std::vector<std::string> out;
        for (NodeId id : plan.steps.at(0).outputs) {
            const Dag part = subdag(dag, id);
            out.push_back(RemoteClient(service).submit_frame(kDataset, translate(part, part.roots[0], false)));
        }
        return out;
    };
    const auto first = frames();
    const std::uint64_t after_first = service.evaluations();
    const auto second = frames();
    const std::uint64_t second_run = service.evaluations() - after_first;
    require(after_first == first.size(), "first run evaluated " + std::to_string(after_first) + " queries");
    require(second_run == 0, "second run evaluated " + std::to_string(second_run) + " queries");
    require(first == second, "cached frames are not byte-identical");

    // And the full planner path hits the cache too.
    RemoteStepExecutor remote(RemoteClient(service), false);
    LocalStepExecutor local(fx.functions, nullptr);
    execute(dag, plan, {{"remote", &remote}, {"local", &local}});
    require(service.evaluations() == after_first, "planner run missed the cache");

    Session t;
    auto eles = t.source(kDataset)["Electrons"];
    const Dag changed = canonicalize(t, eles[(eles["pt"] > 50001.0) & (abs(eles["eta"]) < 1.5)]["pt"] / 1000.0);
    const std::string a = translate(dag, dag.roots[0]), b = translate(changed, changed.roots[0]);
    require(RemoteService::cache_key(kDataset, a) != RemoteService::cache_key(kDataset, b),
            "changing a constant kept the key");
    return std::to_string(first.size()) + " queries, second run: 0 evaluations, " +
           std::to_string(service.cache_hits()) + " hits, frames identical";
}

std::string criterion_alias(const Fixture& fx) {
    Session a, b;
    auto ja = a.source(kDataset)["Jets"];
    ja.define("ptgev", [](Expr j) { return j["pt"] / 1000.0; });
    const Expr ra = ja[ja["ptgev"] > 30.0]["ptgev"];
    auto jb = b.source(kDataset)["Jets"];
    const Expr rb = jb[jb["pt"] / 1000.0 > 30.0]["pt"] / 1000.0;

    const Dag da = canonicalize(a, ra), db = canonicalize(b, rb);
    require(da.text() == db.text(), "canonical forms differ");
    require(da.digest() == db.digest(), "digests differ");
    const JaggedArray va = run_all_local(fx, da).at(0), vb = run_all_local(fx, db).at(0);
    require(va == vb, "values differ");
    require_agree(va, run_oracle(fx, a, {ra}).at(0), "alias form vs oracle");
    require_agree(vb, run_oracle(fx, b, {rb}).at(0), "inline form vs oracle");
    return "canonical DAGs equal (" + da.digest().substr(0, 12) + "), " + std::to_string(va.size()) + " jet values equal";
}

// ---------------------------------------------------------------------------

/// Random well-typed expressions over the generated collections.
class RandomExpr {
public:
    enum class K { F, I, B };

    RandomExpr(Session& s, std::uint64_t seed) : s_(s), rng_(seed) {}

    Expr root() {
        // Constant-only roots still need a dataset to give them one value per event.
        s_.source(kDataset);
        const K k = kind();
        if (coin()) return scalar(kMaxExprDepth - 1, k);
        const int c = collection();
        return elem(c, col(c), false, kMaxExprDepth - 1, k);
    }

private:
    struct Coll {
        const char* name;
        const char* int_leaf;
        const char* bool_leaf;
    };
    static constexpr Coll kColls[3] = {
        {"Electrons", nullptr, nullptr}, {"Jets", nullptr, "isGood"}, {"TruthParticles", "pdgId", nullptr}};

    int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
    bool coin() { return pick(2) == 0; }
    K kind() { return static_cast<K>(pick(3)); }
    int collection() { return pick(3); }
    Expr col(int c) { return s_.source(kDataset)[kColls[c].name]; }
    const char* float_leaf() {
        static constexpr const char* leaves[] = {"pt", "eta", "phi"};
        return leaves[pick(3)];
    }

    Expr constant(K k) {
        switch (k) {
            case K::F: return s_.constant(std::uniform_real_distribution<double>(-3.0, 3.0)(rng_));
            case K::I: return s_.constant(static_cast<std::int64_t>(pick(7) - 3));
            case K::B: return s_.constant(coin());
        }
        return s_.constant(0.0);
    }

    /// Threshold comparison on a float leaf; cuts land inside each leaf's range.
    Expr cut(Expr base) {
        const char* leaf = float_leaf();
        const double v = std::string(leaf) == "pt" ? 10000.0 * (1 + pick(6)) : 0.5 * (pick(7) - 3);
        return coin() ? base[leaf] > v : base[leaf] < v;
    }

    Expr leafish(int c, Expr base, bool is_param, K k) {
        switch (k) {
            case K::F: return base[float_leaf()];
            case K::I:
                if (kColls[c].int_leaf) return base[kColls[c].int_leaf];
                return cross(c, base, is_param, 0, K::I);
            case K::B:
                if (kColls[c].bool_leaf && coin()) return base[kColls[c].bool_leaf];
                return cut(base);
        }
        return base[float_leaf()];
    }

    /// Per-element count or pt sum of another collection's nearby objects.
    Expr cross(int c, Expr base, bool is_param, int budget, K k) {
        const int d = collection();
        const double radius = 0.2 + 0.4 * pick(4);
        auto body = [this, d, radius, budget, k](Expr x) {
            auto near = col(d).filter([&](Expr y) {
                Expr close = s_.call("DeltaR", {x["eta"], x["phi"], y["eta"], y["phi"]}) < radius;
                if (budget > 0 && coin()) close = close & cut(y);
                return close;
            });
            return k == K::I ? near.count() : near["pt"].sum();
        };
        if (is_param) return body(base);
        (void)c;
        return base.map(body);
    }

    Expr elem(int c, Expr base, bool is_param, int budget, K k) {
        if (budget <= 0) return leafish(c, base, is_param, k);
        auto sub = [&](K kk) { return elem(c, base, is_param, budget - 1, kk); };
        switch (pick(8)) {
            case 0: return leafish(c, base, is_param, k);
            case 1:
                if (k == K::F) {
                    static constexpr BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div};
                    return s_.binary(ops[pick(4)], sub(K::F), sub(K::F));
                }
                if (k == K::I) {
                    static constexpr BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul};
                    return s_.binary(ops[pick(3)], sub(K::I), sub(K::I));
                }
                if (coin()) return s_.binary(coin() ? BinaryOp::And : BinaryOp::Or, sub(K::B), sub(K::B));
                return compare(sub(K::F), sub(K::F));
            case 2: {
                // captured event-level value, replicated over the elements
                if (k == K::B) return compare(sub(K::F), scalar(budget - 2, K::F));
                const BinaryOp op = pick(2) ? BinaryOp::Add : BinaryOp::Mul;
                return coin() ? s_.binary(op, sub(k), scalar(budget - 2, k)) : s_.binary(op, scalar(budget - 2, k), sub(k));
            }
            case 3:
                if (k == K::F) return unary(sub(K::F));
                if (k == K::I) return coin() ? -sub(K::I) : abs(sub(K::I));
                return leafish(c, base, is_param, k);
            case 4:
                if (k != K::F) return leafish(c, base, is_param, k);
                return s_.call("DeltaR", {sub(K::F), sub(K::F), scalar(budget - 2, K::F), sub(K::F)});
            case 5:
                if (is_param) return sub(k);
                return base.map([&, c, budget, k](Expr x) { return elem(c, x, true, budget - 1, k); });
            case 6:
                if (k == K::B) return cross(c, base, is_param, budget - 1, K::I) > static_cast<std::int64_t>(pick(2));
                return cross(c, base, is_param, budget - 1, k);
            default:
                if (k != K::F) return leafish(c, base, is_param, k);
                return atan2(sub(K::F), sub(K::F));
        }
    }

    Expr compare(const Expr& a, const Expr& b) {
        static constexpr BinaryOp ops[] = {BinaryOp::Lt, BinaryOp::Gt, BinaryOp::Le,
                                           BinaryOp::Ge, BinaryOp::Eq, BinaryOp::Ne};
        return s_.binary(ops[pick(6)], a, b);
    }

    Expr unary(const Expr& a) {
        switch (pick(5)) {
            case 0: return -a;
            case 1: return abs(a);
            case 2: return sqrt(abs(a));
            case 3: return sin(a);
            default: return cos(a);
        }
    }

    /// Element sequence of kind `k` over collection `c`, possibly filtered.
    Expr sequence(int c, int budget, K k) {
        switch (budget <= 0 ? 0 : pick(4)) {
            case 0: return elem(c, col(c), false, budget - 1, k);
            case 1: {
                Expr seq = elem(c, col(c), false, budget - 1, k);
                return seq.filter(elem(c, col(c), false, budget - 1, K::B));
            }
            case 2: {
                auto kept = col(c).filter([&](Expr x) { return elem(c, x, true, budget - 1, K::B); });
                return kept.map([&](Expr x) { return elem(c, x, true, budget - 1, k); });
            }
            default: {
                if (k != K::F) return elem(c, col(c), false, budget - 1, k);
                const double v = 0.5 * (pick(5) - 2);
                return col(c)["eta"].filter([v](Expr x) { return x > v; });
            }
        }
    }

    Expr scalar(int budget, K k) {
        if (budget <= 0) {
            const int c = collection();
            if (k == K::I) return col(c).count();
            if (k == K::F && coin()) return col(c)[float_leaf()].sum();
            return constant(k);
        }
        const int c = collection();
        switch (pick(6)) {
            case 0: return constant(k);
            case 1:
                if (k == K::I) return coin() ? sequence(c, budget - 1, kind()).count()
                                             : col(c).filter([&](Expr x) { return elem(c, x, true, budget - 1, K::B); }).count();
                if (k == K::F) return sequence(c, budget - 1, K::F).sum();
                return coin() ? sequence(c, budget - 1, K::B).any() : sequence(c, budget - 1, K::B).all();
            case 2:
                if (k == K::F) return s_.binary(coin() ? BinaryOp::Sub : BinaryOp::Div, scalar(budget - 1, K::F), scalar(budget - 1, K::F));
                if (k == K::I) return scalar(budget - 1, K::I) + scalar(budget - 1, K::I);
                return compare(scalar(budget - 1, K::F), scalar(budget - 1, K::F));
            case 3:
                if (k == K::F) return unary(scalar(budget - 1, K::F));
                if (k == K::I) return -scalar(budget - 1, K::I);
                return scalar(budget - 1, K::B) | scalar(budget - 1, K::B);
            case 4: {
                // nested lists flattened back to one level
                const int d = collection();
                auto lists = col(c).map([&, d](Expr x) {
                    return col(d).filter([&](Expr y) {
                        return s_.call("DeltaR", {x["eta"], x["phi"], y["eta"], y["phi"]}) < 1.0;
                    })["pt"];
                });
                if (k == K::I) return lists.flatten().count();
                if (k == K::F) return lists.flatten().sum();
                return lists.flatten().count() > static_cast<std::int64_t>(pick(3));
            }
            default:
                if (k == K::F) return s_.call("DeltaR", {scalar(budget - 1, K::F), scalar(budget - 1, K::F),
                                                         scalar(budget - 1, K::F), scalar(budget - 1, K::F)});
                return scalar(budget - 1, k);
        }
    }

    Session& s_;
    std::mt19937_64 rng_;
};

void require_fixed_points(const Dag& dag, const FunctionRegistry& functions, std::size_t& checked) {
    for (NodeId id = 0; id < dag.size(); ++id) {
        if (dag.is_constant(id)) continue;
        const Dag sub = subdag(dag, id);
        bool capable = true;
        for (NodeId n = 0; n < sub.size(); ++n) capable = capable && remote_capable(sub, n, true);
        if (!capable) continue;
        const std::string text = translate(sub, sub.roots[0]);
        Session again;
        functions.declare_all(again);
        const Dag back = canonicalize(again, parse_query(text, again));
        require(back.text() == sub.text(), "round trip changed n" + std::to_string(id) + ": " + text);
        require(translate(back, back.roots[0]) == text, "second translation differs: " + text);
        ++checked;
    }
}

std::string criterion_properties() {
    const auto t0 = std::chrono::steady_clock::now();
    const Fixture fx(606, kPropertyEvents);
    RemoteService service(fx.registry, fx.functions, {});

    std::set<NodeKind> kinds;
    std::size_t fixed_points = 0, errors = 0, split_steps = 0;
    for (std::size_t i = 0; i < kPropertyExpressions; ++i) {
        const std::string tag = "expression " + std::to_string(i);
        Session s;
        fx.functions.declare_all(s);

        const std::uint64_t before = kernel_invocations();
        const Expr root = RandomExpr(s, 1000 + i).root();
        for (std::size_t n = 0; n < s.size(); ++n) kinds.insert(s.node(static_cast<NodeId>(n)).kind);
        const Dag dag = canonicalize(s, root);
        for (const Node& n : dag.nodes) kinds.insert(n.kind);
        const Plan plan = cut_boundaries(dag, assign(dag, split_backends(false, fx.functions)));
        split_steps += plan.steps.size();
        require_fixed_points(dag, fx.functions, fixed_points);
        require(kernel_invocations() == before, tag + ": kernels ran before materialization");

        const Outcome ref = capture([&] { return run_oracle(fx, s, {root}); });
        const Outcome local = capture([&] { return run_all_local(fx, dag); });
        const Outcome off = capture([&] { return run_split(fx, dag, service, false); });
        const Outcome on = capture([&] { return run_split(fx, dag, service, true); });
        const std::string text = "\n  " + dag.text();
        require_same(local, ref, tag + " all-local vs oracle" + text);
        require_same(off, ref, tag + " split vs oracle" + text);
        require_same(on, ref, tag + " split (cross references) vs oracle" + text);
        if (std::holds_alternative<ErrorCode>(ref)) ++errors;
    }
    const std::set<NodeKind> all = {NodeKind::Source, NodeKind::Attribute, NodeKind::Binary,   NodeKind::Unary,
                                    NodeKind::Filter, NodeKind::Map,       NodeKind::Aggregate, NodeKind::Call,
                                    NodeKind::Constant, NodeKind::Param,   NodeKind::Broadcast};
    for (NodeKind k : all) require(kinds.contains(k), std::string("no expression used ") + std::string(to_string(k)));
    const double secs = seconds_since(t0);
    require(secs < kPropertySeconds, "took " + std::to_string(secs) + " s");
    std::ostringstream msg;
    msg << kPropertyExpressions << " expressions (" << errors << " raising the same error on every route), "
        << all.size() << " node kinds, " << split_steps << " split steps, " << fixed_points
        << " round-tripped subtrees, " << secs << " s";
    return msg.str();
}

}  // namespace

int main() {
    const Fixture fx(20240, 1000);
    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
        {"1 electron selection replay", [&] { return criterion_selection(fx); }},
        {"2 truth association replay", [&] { return criterion_association(fx); }},
        {"3 planner split fidelity", [&] { return criterion_split(fx); }},
        {"4 remote cache", [&] { return criterion_cache(fx); }},
        {"5 alias through filter", [&] { return criterion_alias(fx); }},
        {"6 random expression properties", [] { return criterion_properties(); }},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        try {
            const std::string detail = check();
            std::cout << "PASS " << name << ": " << detail << '\n';
        } catch (const std::exception& e) {
            ++failed;
            std::cout << "FAIL " << name << ": " << e.what() << '\n';
        }
        std::cout.flush();
    }
    return failed == 0 ? 0 : 1;
}
