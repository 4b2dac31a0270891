#include <gtest/gtest.h>

#include "jagq/errors.hpp"
#include "jagq/schema.hpp"

using namespace jagq;

namespace {

const char* kSchema = R"(
# reconstructed objects
collection Electrons { pt: float; eta: float; phi: float }
collection Jets { pt: float; eta: float; phi: float; isGood: bool }
collection TruthParticles { pdgId: int; pt: float; eta: float; phi: float; }
)";

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

DataShape root_shape(const Session& s, const Expr& e, bool strict = true) {
    auto dag = canonicalize(s, e);
    auto inf = infer(dag, DatasetSchema::parse(kSchema), strict);
    return inf.shapes[dag.roots[0]];
}

}  // namespace

TEST(Schema, ParsesCollections) {
    auto schema = DatasetSchema::parse(kSchema);
    ASSERT_NE(schema.find("Jets"), nullptr);
    EXPECT_EQ(schema.find("Jets")->leaf("isGood"), ElementKind::Bool);
    EXPECT_EQ(schema.find("TruthParticles")->leaf("pdgId"), ElementKind::Int);
    EXPECT_EQ(schema.find("Electrons")->leaves.size(), 3u);
    EXPECT_EQ(schema.find("Muons"), nullptr);
}

TEST(Schema, RejectsMalformedText) {
    EXPECT_EQ(code_of([] { DatasetSchema::parse("collection A { pt: double }"); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { DatasetSchema::parse("collection A { pt: float; pt: int }"); }),
              ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { DatasetSchema::parse("collection A { pt float }"); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { DatasetSchema::parse("collection A {} collection A {}"); }), ErrorCode::SchemaError);
}

TEST(Schema, LeafShape) {
    Session s;
    auto shape = root_shape(s, s.source("ds")["Electrons"]["pt"]);
    EXPECT_EQ(shape.depth, 1u);
    EXPECT_EQ(shape.kind, ElementKind::Float);
    EXPECT_EQ(shape.origin, "Electrons");
}

TEST(Schema, CountDropsALevel) {
    Session s;
    auto shape = root_shape(s, s.source("ds")["Electrons"].count());
    EXPECT_EQ(shape.depth, 0u);
    EXPECT_EQ(shape.kind, ElementKind::Int);
}

TEST(Schema, NestedDeltaRIsTwoDeep) {
    Session s;
    s.declare_function("DeltaR", std::vector<ElementKind>(4, ElementKind::Float), ElementKind::Float);
    auto df = s.source("ds");
    auto jets = df["Jets"];
    auto eles = df["Electrons"];
    auto dr = jets.map([&](Expr j) {
        return eles.map([&](Expr e) { return s.call("DeltaR", {j["eta"], j["phi"], e["eta"], e["phi"]}); });
    });
    auto shape = root_shape(s, dr);
    EXPECT_EQ(shape.depth, 2u);
    EXPECT_EQ(shape.kind, ElementKind::Float);
}

TEST(Schema, KindErrors) {
    Session s;
    auto jets = s.source("ds")["Jets"];
    EXPECT_EQ(code_of([&] { root_shape(s, jets[jets["pt"]]["eta"]); }), ErrorCode::TypeError);
    EXPECT_EQ(code_of([&] { root_shape(s, jets["isGood"] + 1.0); }), ErrorCode::TypeError);
    EXPECT_EQ(code_of([&] { root_shape(s, jets); }), ErrorCode::TypeError);
    // The lifter already refuses a reduction of a per-event value...
    EXPECT_EQ(code_of([&] { root_shape(s, jets.count().count()); }), ErrorCode::ShapeMismatch);
    EXPECT_EQ(code_of([&] { root_shape(s, jets.sum()); }), ErrorCode::TypeError);
}

TEST(Schema, ReductionOfPerEventValueInHandBuiltDag) {
    // ...and inference rejects it too when handed such a DAG directly.
    Dag dag;
    Node src;
    src.kind = NodeKind::Source;
    src.name = "ds";
    Node jets;
    jets.kind = NodeKind::Attribute;
    jets.name = "Jets";
    jets.children = {0};
    Node c1;
    c1.kind = NodeKind::Aggregate;
    c1.reduce = ReduceOp::Count;
    c1.children = {1};
    Node c2 = c1;
    c2.children = {2};
    dag.nodes = {src, jets, c1, c2};
    dag.roots = {3};
    annotate(dag);
    EXPECT_EQ(code_of([&] { infer(dag, DatasetSchema::parse(kSchema), false); }), ErrorCode::TypeError);
}

TEST(Schema, StrictAndLenientUnknowns) {
    Session s;
    auto df = s.source("ds");
    EXPECT_EQ(code_of([&] { root_shape(s, df["Jets"]["mass"]); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([&] { root_shape(s, df["Muons"]["pt"]); }), ErrorCode::SchemaError);

    auto dag = canonicalize(s, df["Jets"]["mass"] * 2);
    auto inf = infer(dag, DatasetSchema::parse(kSchema), false);
    EXPECT_EQ(inf.shapes[dag.roots[0]].kind, ElementKind::Float);
    ASSERT_EQ(inf.warnings.size(), 1u);
    EXPECT_NE(inf.warnings[0].find("mass"), std::string::npos);
}

TEST(Schema, FilterKeepsLeafKind) {
    Session s;
    auto tp = s.source("ds")["TruthParticles"];
    auto shape = root_shape(s, tp[tp["pt"] > 1000.0]["pdgId"]);
    EXPECT_EQ(shape.kind, ElementKind::Int);
    EXPECT_EQ(shape.depth, 1u);
}

TEST(Schema, CallArgumentKindsChecked) {
    Session s;
    s.declare_function("Scale", {ElementKind::Float}, ElementKind::Float);
    auto jets = s.source("ds")["Jets"];
    EXPECT_EQ(code_of([&] { root_shape(s, s.call("Scale", {jets["isGood"]})); }), ErrorCode::TypeError);
    EXPECT_EQ(root_shape(s, s.call("Scale", {jets["pt"]})).kind, ElementKind::Float);
}
