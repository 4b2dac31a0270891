#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <thread>

#include "jagq/canonical.hpp"
#include "jagq/exec_local.hpp"
#include "jagq/exec_remote.hpp"
#include "jagq/query_lang.hpp"
#include "jagq/wire.hpp"
#include "support.hpp"

using namespace jagq;
using jagq::testing::error_code;
using jagq::testing::TempDir;

namespace {

const char* kElectronQuery =
    "From(\"gen\") |> Get(\"Electrons\") |> Where(p0 => p0.pt > 50000.0 && Abs(p0.eta) < 1.5) |> "
    "Select(p0 => p0.pt / 1000.0)";

JaggedArray random_array(std::mt19937_64& rng, ElementKind kind, std::size_t depth) {
    const std::size_t events = rng() % 6;
    std::vector<Offsets> levels;
    std::size_t width = events;
    for (std::size_t l = 0; l < depth; ++l) {
        Offsets o{0};
        for (std::size_t i = 0; i < width; ++i) o.push_back(o.back() + static_cast<std::int64_t>(rng() % 4));
        width = static_cast<std::size_t>(o.back());
        levels.push_back(std::move(o));
    }
    JaggedArray::Values values;
    if (kind == ElementKind::Float) {
        std::vector<double> v(width);
        for (auto& x : v) x = std::bit_cast<double>(rng());
        values = std::move(v);
    } else if (kind == ElementKind::Int) {
        std::vector<std::int64_t> v(width);
        for (auto& x : v) x = static_cast<std::int64_t>(rng());
        values = std::move(v);
    } else {
        std::vector<std::uint8_t> v(width);
        for (auto& x : v) x = rng() % 2;
        values = std::move(v);
    }
    return depth == 0 ? JaggedArray::flat(std::move(values)) : JaggedArray(std::move(levels), std::move(values));
}

TEST(Wire, ResultFramesRoundTripBitExactly) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto kind = static_cast<ElementKind>(trial % 3);
        const JaggedArray a = random_array(rng, kind, static_cast<std::size_t>(trial % 4));
        RemoteResult r{a.n_events(), {Column{"value", a}}};
        const std::string frame = encode_result(r);
        const RemoteResult back = decode_result(frame);
        ASSERT_EQ(back.columns.size(), 1u);
        EXPECT_EQ(back.events, a.n_events());
        EXPECT_EQ(back.columns[0].name, "value");
        EXPECT_TRUE(back.columns[0].data == a);
        EXPECT_EQ(encode_result(back), frame);
    }
}

TEST(Wire, LayoutOfASmallFrame) {
    RemoteResult r{2, {Column{"x", JaggedArray::from_ints({{7}, {}})}}};
    const std::string f = encode_result(r);
    // magic, columns, events, name, kind, depth, level, values
    const std::size_t expected = 4 + 8 + 8 + (8 + 1) + 1 + 8 + (8 + 3 * 8) + (8 + 8);
    ASSERT_EQ(f.size(), expected);
    EXPECT_EQ(f.substr(0, 4), "JQR1");
    EXPECT_EQ(static_cast<unsigned char>(f[4]), 1);  // one column, little-endian
    EXPECT_EQ(static_cast<unsigned char>(f[12]), 2);  // two events
    EXPECT_EQ(static_cast<unsigned char>(f[29]), 1);  // Int kind tag
}

TEST(Wire, DamagedFramesAreRejected) {
    RemoteResult r{2, {Column{"x", JaggedArray::from_floats({{1.0, 2.0}, {3.0}})}}};
    const std::string f = encode_result(r);
    for (std::size_t cut = 0; cut < f.size(); ++cut) {
        EXPECT_EQ(error_code([&] { decode_result(f.substr(0, cut)); }), ErrorCode::WireFormat) << cut;
    }
    EXPECT_EQ(error_code([&] { decode_result(f + "x"); }), ErrorCode::WireFormat);
    std::string bad = f;
    bad[0] = 'X';
    EXPECT_EQ(error_code([&] { decode_result(bad); }), ErrorCode::WireFormat);
    std::string wrong_events = f;
    wrong_events[12] = 3;
    EXPECT_EQ(error_code([&] { decode_result(wrong_events); }), ErrorCode::WireFormat);
}

TEST(Wire, RequestAndErrorFrames) {
    const QueryRequest q{"localds://x", "From(\"localds://x\") |> Get(\"E\") |> Count()"};
    const QueryRequest back = decode_request(encode_request(q));
    EXPECT_EQ(back.dataset, q.dataset);
    EXPECT_EQ(back.query, q.query);

    const std::string e = encode_error(ErrorCode::EmptySequence, "EmptySequence: First of nothing in event 3");
    ASSERT_TRUE(is_error_frame(e));
    try {
        raise_error_frame(e);
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::EmptySequence);
        EXPECT_EQ(std::string(err.what()), "EmptySequence: First of nothing in event 3");
    }
}

class Service : public ::testing::Test {
protected:
    void SetUp() override {
        sample_ = generate(5, 200);
        write_file(dir_.path() / "gen.jsonl", sample_.events);
        write_file(dir_.path() / "empty.jsonl", "");
        write_file(dir_.path() / "gen.schema", generated_schema_text());
        registry_ = DatasetRegistry::parse(
            "[gen]\nevents = \"gen.jsonl\"\nschema = \"gen.schema\"\n"
            "[gen2]\nevents = \"gen.jsonl\"\nschema = \"gen.schema\"\n"
            "[empty]\nevents = \"empty.jsonl\"\nschema = \"gen.schema\"\n",
            dir_.path());
    }

    RemoteService make(const std::filesystem::path& cache) {
        return RemoteService(registry_, FunctionRegistry::with_builtins(), cache);
    }

    TempDir dir_;
    GeneratedSample sample_;
    DatasetRegistry registry_;
};

TEST_F(Service, SecondIdenticalSubmitIsACacheHit) {
    RemoteService service = make(dir_.path() / "cache");
    RemoteClient client(service);
    const std::string first = client.submit_frame("gen", kElectronQuery);
    EXPECT_EQ(service.evaluations(), 1u);
    const std::string second = client.submit_frame("gen", kElectronQuery);
    EXPECT_EQ(service.evaluations(), 1u);
    EXPECT_EQ(service.cache_hits(), 1u);
    EXPECT_EQ(first, second);

    const std::string key = RemoteService::cache_key("gen", kElectronQuery);
    EXPECT_EQ(key.size(), 64u);
    const auto file = dir_.path() / "cache" / key.substr(0, 2) / (key + ".jqr");
    EXPECT_EQ(service.cache_file(key), file);
    EXPECT_EQ(read_file(file), first);
    const std::string meta = read_file(dir_.path() / "cache" / key.substr(0, 2) / (key + ".meta"));
    EXPECT_NE(meta.find("\"dataset\":\"gen\""), std::string::npos) << meta;

    // A fresh service over the same directory also hits.
    RemoteService later = make(dir_.path() / "cache");
    EXPECT_EQ(RemoteClient(later).submit_frame("gen", kElectronQuery), first);
    EXPECT_EQ(later.evaluations(), 0u);
}

TEST_F(Service, KeysSeparateDatasetsAndConstants) {
    EXPECT_NE(RemoteService::cache_key("gen", kElectronQuery), RemoteService::cache_key("gen2", kElectronQuery));
    std::string changed = kElectronQuery;
    changed.replace(changed.find("50000.0"), 7, "50001.0");
    EXPECT_NE(RemoteService::cache_key("gen", kElectronQuery), RemoteService::cache_key("gen", changed));
    EXPECT_EQ(RemoteService::cache_key("gen", kElectronQuery), RemoteService::cache_key("gen", kElectronQuery));
}

TEST_F(Service, ResultEqualsLocalEvaluation) {
    RemoteService service = make({});
    const RemoteResult r = RemoteClient(service).submit("gen", kElectronQuery);
    Session s;
    const Dag dag = canonicalize(s, parse_query(kElectronQuery, s));
    const EventTable table = ingest_text(sample_.events, DatasetSchema::parse(generated_schema_text()));
    EXPECT_EQ(r.events, 200u);
    EXPECT_TRUE(r.columns.at(0).data == evaluate_all(dag, table, FunctionRegistry::with_builtins()).at(0));
}

TEST_F(Service, Errors) {
    RemoteService service = make(dir_.path() / "cache");
    RemoteClient client(service);
    auto code = [&](std::string_view ds, std::string_view q) { return error_code([&] { client.submit(ds, q); }); };
    EXPECT_EQ(code("nope", "From(\"nope\") |> Get(\"Electrons\") |> Count()"), ErrorCode::UnknownDataset);
    EXPECT_EQ(code("gen", "From(\"gen2\") |> Get(\"Electrons\") |> Count()"), ErrorCode::UnknownDataset);
    EXPECT_EQ(code("gen", "From(\"gen\") |> Get(\"Electrons\") |> where(p => p.pt > 1.0)"), ErrorCode::SyntaxError);
    EXPECT_EQ(code("gen", "From(\"gen\") |> Get(\"Electrons\") |> Select(p => p.pt) |> First()"),
              ErrorCode::EmptySequence);
    EXPECT_EQ(code("gen", "From(\"gen\") |> Get(\"Muons\") |> Count()"), ErrorCode::SchemaError);
    EXPECT_EQ(code("gen", "From(\"gen\") |> Get(\"Jets\") |> Select(p => p.isGood + 1)"), ErrorCode::TypeError);
    // Only the First query got as far as running; failures are never cached.
    EXPECT_EQ(service.evaluations(), 1u);
    EXPECT_FALSE(std::filesystem::exists(dir_.path() / "cache") &&
                 !std::filesystem::is_empty(dir_.path() / "cache"));
}

TEST_F(Service, EmptyDatasetGivesZeroEvents) {
    RemoteService service = make({});
    const RemoteResult r = RemoteClient(service).submit("empty", "From(\"empty\") |> Get(\"Electrons\") |> Count()");
    EXPECT_EQ(r.events, 0u);
    EXPECT_EQ(r.columns.at(0).data.size(), 0u);
}

TEST_F(Service, CollectionResultsCarryElementIndices) {
    RemoteService service = make({});
    const RemoteResult r = RemoteClient(service).submit(
        "gen", "From(\"gen\") |> Get(\"Electrons\") |> Where(p0 => p0.pt > 50000.0)");
    EXPECT_EQ(r.columns.at(0).data.kind(), ElementKind::Int);
    EXPECT_EQ(r.columns.at(0).data.depth(), 1u);
}

TEST_F(Service, ConcurrentIdenticalMissesConvergeToOneEntry) {
    RemoteService service = make(dir_.path() / "cache");
    std::vector<std::string> frames(8);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        threads.emplace_back([&, i] { frames[i] = RemoteClient(service).submit_frame("gen", kElectronQuery); });
    }
    for (auto& t : threads) t.join();
    for (const auto& f : frames) EXPECT_EQ(f, frames[0]);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir_.path() / "cache")) {
        if (e.is_regular_file()) {
            ++files;
            EXPECT_EQ(e.path().string().find(".tmp."), std::string::npos) << e.path();
        }
    }
    EXPECT_EQ(files, 2u);  // one frame, one sidecar
    EXPECT_EQ(service.evaluations() + service.cache_hits(), frames.size());
}

TEST_F(Service, UnreadableCacheEntryIsRecomputed) {
    RemoteService service = make(dir_.path() / "cache");
    RemoteClient client(service);
    const std::string good = client.submit_frame("gen", kElectronQuery);
    write_file(service.cache_file(RemoteService::cache_key("gen", kElectronQuery)), "JQR1 garbage");
    EXPECT_EQ(client.submit_frame("gen", kElectronQuery), good);
    EXPECT_EQ(service.evaluations(), 2u);
}

}  // namespace
