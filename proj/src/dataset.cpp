#include "jagq/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "jagq/errors.hpp"
#include "jagq/functions.hpp"
#include "json.hpp"

namespace jagq {

using nlohmann::json;

EventTable::EventTable(std::size_t n_events,
                       std::map<std::string, std::shared_ptr<const Offsets>, std::less<>> offsets,
                       std::map<std::string, std::map<std::string, JaggedArray, std::less<>>, std::less<>> leaves)
    : n_events_(n_events), offsets_(std::move(offsets)), leaves_(std::move(leaves)) {}

JaggedArray EventTable::collection(std::string_view name) const {
    auto it = offsets_.find(name);
    if (it == offsets_.end()) {
        fail(ErrorCode::SchemaError, "dataset has no collection '" + std::string(name) + "'");
    }
    std::vector<std::int64_t> idx(static_cast<std::size_t>(it->second->back()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = static_cast<std::int64_t>(i);
    }
    return JaggedArray({it->second}, std::make_shared<const JaggedArray::Values>(std::move(idx)));
}

JaggedArray EventTable::leaf(std::string_view collection, std::string_view leaf) const {
    auto c = leaves_.find(collection);
    if (c == leaves_.end()) {
        fail(ErrorCode::SchemaError, "dataset has no collection '" + std::string(collection) + "'");
    }
    auto l = c->second.find(leaf);
    if (l == c->second.end()) {
        fail(ErrorCode::SchemaError,
             "collection '" + std::string(collection) + "' has no leaf '" + std::string(leaf) + "'");
    }
    return l->second;
}

namespace {

struct LeafBuilder {
    ElementKind kind;
    std::vector<double> floats;
    std::vector<std::int64_t> ints;
    std::vector<std::uint8_t> bools;
};

[[noreturn]] void line_error(ErrorCode code, std::size_t line, const std::string& msg) {
    fail(code, "event file line " + std::to_string(line) + ": " + msg);
}

}  // namespace

EventTable ingest_text(std::string_view text, const DatasetSchema& schema) {
    struct CollectionBuilder {
        const CollectionSchema* schema;
        Offsets offsets{0};
        std::vector<LeafBuilder> leaves;
    };
    std::vector<CollectionBuilder> builders;
    for (const auto& [name, c] : schema.collections()) {
        CollectionBuilder b{&c, {0}, {}};
        for (const auto& [leaf, kind] : c.leaves) {
            b.leaves.push_back(LeafBuilder{kind, {}, {}, {}});
        }
        builders.push_back(std::move(b));
    }

    std::size_t n_events = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        json event;
        try {
            event = json::parse(line);
        } catch (const json::parse_error& e) {
            line_error(ErrorCode::ParseError, line_no, e.what());
        }
        if (!event.is_object()) {
            line_error(ErrorCode::ParseError, line_no, "event is not an object");
        }
        for (CollectionBuilder& b : builders) {
            const std::string& cname = b.schema->name;
            auto it = event.find(cname);
            std::size_t count = 0;
            if (it != event.end()) {
                if (!it->is_array()) {
                    line_error(ErrorCode::SchemaError, line_no, "collection '" + cname + "' is not a list");
                }
                for (const json& rec : *it) {
                    if (!rec.is_object()) {
                        line_error(ErrorCode::SchemaError, line_no, "record in '" + cname + "' is not an object");
                    }
                    for (std::size_t li = 0; li < b.schema->leaves.size(); ++li) {
                        const std::string& lname = b.schema->leaves[li].first;
                        LeafBuilder& lb = b.leaves[li];
                        auto v = rec.find(lname);
                        const std::string field = cname + "." + lname;
                        if (v == rec.end()) {
                            line_error(ErrorCode::SchemaError, line_no, "record lacks leaf " + field);
                        }
                        switch (lb.kind) {
                            case ElementKind::Float: {
                                if (!v->is_number()) {
                                    line_error(ErrorCode::SchemaError, line_no, field + " is not a number");
                                }
                                const double d = v->get<double>();
                                if (!std::isfinite(d)) {
                                    line_error(ErrorCode::SchemaError, line_no, field + " is not finite");
                                }
                                lb.floats.push_back(d);
                                break;
                            }
                            case ElementKind::Int:
                                if (!v->is_number_integer()) {
                                    line_error(ErrorCode::SchemaError, line_no, field + " is not an integer");
                                }
                                lb.ints.push_back(v->get<std::int64_t>());
                                break;
                            case ElementKind::Bool:
                                if (!v->is_boolean()) {
                                    line_error(ErrorCode::SchemaError, line_no, field + " is not a bool");
                                }
                                lb.bools.push_back(v->get<bool>() ? 1 : 0);
                                break;
                        }
                    }
                    ++count;
                }
            }
            b.offsets.push_back(b.offsets.back() + static_cast<std::int64_t>(count));
        }
        ++n_events;
    }

    std::map<std::string, std::shared_ptr<const Offsets>, std::less<>> offsets;
    std::map<std::string, std::map<std::string, JaggedArray, std::less<>>, std::less<>> leaves;
    for (CollectionBuilder& b : builders) {
        auto off = std::make_shared<const Offsets>(std::move(b.offsets));
        auto& cols = leaves[b.schema->name];
        for (std::size_t li = 0; li < b.leaves.size(); ++li) {
            LeafBuilder& lb = b.leaves[li];
            std::shared_ptr<const JaggedArray::Values> values;
            switch (lb.kind) {
                case ElementKind::Float: values = std::make_shared<const JaggedArray::Values>(std::move(lb.floats)); break;
                case ElementKind::Int: values = std::make_shared<const JaggedArray::Values>(std::move(lb.ints)); break;
                case ElementKind::Bool: values = std::make_shared<const JaggedArray::Values>(std::move(lb.bools)); break;
            }
            cols.emplace(b.schema->leaves[li].first, JaggedArray({off}, values));
        }
        offsets.emplace(b.schema->name, std::move(off));
    }
    return EventTable(n_events, std::move(offsets), std::move(leaves));
}

EventTable ingest(const std::filesystem::path& path, const DatasetSchema& schema) {
    return ingest_text(read_file(path), schema);
}

// ---------------------------------------------------------------------------

DatasetRegistry DatasetRegistry::load(const std::filesystem::path& path) {
    return parse(read_file(path), path.parent_path());
}

DatasetRegistry DatasetRegistry::parse(std::string_view text, const std::filesystem::path& base_dir,
                                       bool check_paths) {
    DatasetRegistry reg;
    std::optional<DatasetEntry> current;
    std::size_t line_no = 0;
    auto finish = [&]() {
        if (!current) return;
        if (current->events.empty() || current->schema.empty()) {
            fail(ErrorCode::ParseError, "registry entry '" + current->id + "' needs both events and schema");
        }
        if (check_paths) {
            for (const auto* p : {&current->events, &current->schema}) {
                if (!std::filesystem::exists(*p)) {
                    fail(ErrorCode::IoError, "registry entry '" + current->id + "': " + p->string() + " does not exist");
                }
            }
        }
        if (reg.contains(current->id)) {
            fail(ErrorCode::ParseError, "dataset id '" + current->id + "' registered twice");
        }
        reg.add(std::move(*current));
        current.reset();
    };
    auto trim = [](std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return std::string_view{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto err = [&](const std::string& msg) {
            fail(ErrorCode::ParseError, "registry line " + std::to_string(line_no) + ": " + msg);
        };
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) err("malformed section header");
            finish();
            current = DatasetEntry{std::string(trim(line.substr(1, line.size() - 2))), {}, {}};
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) err("expected key = \"value\"");
        if (!current) err("key outside a [dataset] section");
        const std::string_view key = trim(line.substr(0, eq));
        std::string_view value = trim(line.substr(eq + 1));
        if (value.size() < 2 || value.front() != '"' || value.back() != '"') err("value must be quoted");
        value = value.substr(1, value.size() - 2);
        std::filesystem::path p(value);
        if (p.is_relative()) p = base_dir / p;
        if (key == "events") {
            current->events = p;
        } else if (key == "schema") {
            current->schema = p;
        } else {
            err("unknown key '" + std::string(key) + "'");
        }
    }
    finish();
    return reg;
}

void DatasetRegistry::add(DatasetEntry entry) {
    std::string id = entry.id;
    entries_.insert_or_assign(std::move(id), std::move(entry));
}

const DatasetEntry& DatasetRegistry::find(std::string_view id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        fail(ErrorCode::UnknownDataset, "dataset '" + std::string(id) + "' is not registered");
    }
    return it->second;
}

std::vector<std::string> DatasetRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, e] : entries_) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------------------

std::string_view generated_schema_text() {
    return "collection Electrons { pt: float; eta: float; phi: float }\n"
           "collection Jets { pt: float; eta: float; phi: float; isGood: bool }\n"
           "collection TruthParticles { pdgId: int; pt: float; eta: float; phi: float }\n";
}

namespace {

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}

    /// Uniform in the open interval (0, 1), built from the top 53 bits.
    double unit() { return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    double log_uniform(double lo, double hi) { return lo * std::pow(hi / lo, unit()); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)); }
    double phi() { return std::numbers::pi - 2.0 * std::numbers::pi * unit(); }

private:
    std::mt19937_64 rng_;
};

struct Particle {
    double pt, eta, phi;
    std::int64_t pdg = 0;
    std::optional<std::size_t> partner;
};

}  // namespace

GeneratedSample generate(std::uint64_t seed, std::size_t n_events) {
    Draw d(seed);
    GeneratedSample out;
    std::ostringstream events;
    static constexpr std::int64_t kOtherPdg[] = {11, -11, 22, 211, -211, 13, -13};

    for (std::size_t ev = 0; ev < n_events; ++ev) {
        std::vector<Particle> reco;
        const std::size_t n_e = d.below(5);
        for (std::size_t i = 0; i < n_e; ++i) {
            for (int attempt = 0; attempt < 100; ++attempt) {
                Particle p{d.log_uniform(5000.0, 120000.0), d.uniform(-2.5, 2.5), d.phi(), 0, {}};
                bool ok = true;
                for (const Particle& q : reco) ok = ok && delta_r(p.eta, p.phi, q.eta, q.phi) > 0.5;
                if (ok) {
                    reco.push_back(p);
                    break;
                }
            }
        }

        std::vector<Particle> truth;
        for (std::size_t i = 0; i < reco.size(); ++i) {
            if (d.unit() >= 0.8) continue;
            const double r = 0.04 * std::sqrt(d.unit());
            const double theta = 2.0 * std::numbers::pi * d.unit();
            Particle t{reco[i].pt * (1.0 + d.uniform(-0.1, 0.1)), reco[i].eta + r * std::cos(theta),
                       wrap_phi(reco[i].phi + r * std::sin(theta)), 0, {}};
            t.pdg = d.unit() < 0.5 ? 11 : -11;
            t.partner = i;
            truth.push_back(t);
        }
        const std::size_t n_other = d.below(4);
        for (std::size_t i = 0; i < n_other; ++i) {
            for (int attempt = 0; attempt < 100; ++attempt) {
                Particle t{d.log_uniform(1000.0, 100000.0), d.uniform(-2.5, 2.5), d.phi(), 0, {}};
                t.pdg = kOtherPdg[d.below(std::size(kOtherPdg))];
                bool ok = true;
                for (const Particle& q : reco) ok = ok && delta_r(t.eta, t.phi, q.eta, q.phi) > 0.2;
                if (ok) {
                    truth.push_back(t);
                    break;
                }
            }
        }
        for (std::size_t i = truth.size(); i > 1; --i) {
            std::swap(truth[i - 1], truth[d.below(i)]);
        }

        const std::size_t n_j = d.below(6);
        nlohmann::ordered_json jets = json::array();
        for (std::size_t i = 0; i < n_j; ++i) {
            nlohmann::ordered_json j;
            j["pt"] = d.log_uniform(20000.0, 300000.0);
            j["eta"] = d.uniform(-2.8, 2.8);
            j["phi"] = d.phi();
            j["isGood"] = d.unit() < 0.7;
            jets.push_back(std::move(j));
        }

        nlohmann::ordered_json event;
        nlohmann::ordered_json eles = json::array();
        for (const Particle& p : reco) {
            eles.push_back(nlohmann::ordered_json{{"pt", p.pt}, {"eta", p.eta}, {"phi", p.phi}});
        }
        nlohmann::ordered_json tps = json::array();
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const Particle& t = truth[i];
            tps.push_back(nlohmann::ordered_json{{"pdgId", t.pdg}, {"pt", t.pt}, {"eta", t.eta}, {"phi", t.phi}});
            if (t.partner) {
                out.labels.push_back(MatchLabel{ev, *t.partner, i, reco[*t.partner].pt, t.pt});
            }
        }
        event["Electrons"] = std::move(eles);
        event["Jets"] = std::move(jets);
        event["TruthParticles"] = std::move(tps);
        events << event.dump() << '\n';
    }
    std::sort(out.labels.begin(), out.labels.end(), [](const MatchLabel& a, const MatchLabel& b) {
        return std::tie(a.event, a.reco) < std::tie(b.event, b.reco);
    });
    out.events = events.str();
    return out;
}

void write_labels(const std::filesystem::path& path, const std::vector<MatchLabel>& labels) {
    std::ostringstream os;
    for (const MatchLabel& l : labels) {
        nlohmann::ordered_json j{{"event", l.event}, {"reco", l.reco},        {"truth", l.truth},
                                 {"reco_pt", l.reco_pt}, {"truth_pt", l.truth_pt}};
        os << j.dump() << '\n';
    }
    write_file(path, os.str());
}

std::vector<MatchLabel> read_labels(const std::filesystem::path& path) {
    std::vector<MatchLabel> out;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        out.push_back(MatchLabel{j.at("event").get<std::size_t>(), j.at("reco").get<std::size_t>(),
                                 j.at("truth").get<std::size_t>(), j.at("reco_pt").get<double>(),
                                 j.at("truth_pt").get<double>()});
    }
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        fail(ErrorCode::IoError, "write to " + path.string() + " failed");
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace jagq
