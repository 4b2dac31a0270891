#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jagq/jagged.hpp"
#include "jagq/schema.hpp"

namespace jagq {

/// Read access to the columns of one dataset.
class EventSource {
public:
    virtual ~EventSource() = default;
    virtual std::size_t n_events() const = 0;
    /// Depth-1 Int array of element indices 0..N-1 laid out with the
    /// collection's per-event offsets.
    virtual JaggedArray collection(std::string_view name) const = 0;
    virtual JaggedArray leaf(std::string_view collection, std::string_view leaf) const = 0;
};

/// Fully ingested event file: one depth-1 array per (collection, leaf), all
/// leaves of a collection sharing one offsets buffer.
class EventTable final : public EventSource {
public:
    EventTable() = default;
    EventTable(std::size_t n_events, std::map<std::string, std::shared_ptr<const Offsets>, std::less<>> offsets,
               std::map<std::string, std::map<std::string, JaggedArray, std::less<>>, std::less<>> leaves);

    std::size_t n_events() const override { return n_events_; }
    JaggedArray collection(std::string_view name) const override;
    JaggedArray leaf(std::string_view collection, std::string_view leaf) const override;

private:
    std::size_t n_events_ = 0;
    std::map<std::string, std::shared_ptr<const Offsets>, std::less<>> offsets_;
    std::map<std::string, std::map<std::string, JaggedArray, std::less<>>, std::less<>> leaves_;
};

/// Parses a JSON-lines event file (one object per event, collection name to a
/// list of records). Collections absent from a line are empty for that event;
/// blank lines are skipped.
EventTable ingest(const std::filesystem::path& path, const DatasetSchema& schema);
EventTable ingest_text(std::string_view text, const DatasetSchema& schema);

struct DatasetEntry {
    std::string id;
    std::filesystem::path events;
    std::filesystem::path schema;
};

/// Dataset id to file mapping, read from text such as
///
///     [localds://mc15_13TeV.zee]
///     events = "zee.jsonl"
///     schema = "physics.schema"
///
/// Relative paths resolve against the registry file's directory.
class DatasetRegistry {
public:
    static DatasetRegistry load(const std::filesystem::path& path);
    static DatasetRegistry parse(std::string_view text, const std::filesystem::path& base_dir,
                                 bool check_paths = true);

    void add(DatasetEntry entry);
    const DatasetEntry& find(std::string_view id) const;
    bool contains(std::string_view id) const { return entries_.find(id) != entries_.end(); }
    std::vector<std::string> ids() const;

private:
    std::map<std::string, DatasetEntry, std::less<>> entries_;
};

/// Schema text for the collections written by generate().
std::string_view generated_schema_text();

struct MatchLabel {
    std::size_t event = 0;
    std::size_t reco = 0;   ///< index into Electrons
    std::size_t truth = 0;  ///< index into TruthParticles
    double reco_pt = 0;     ///< MeV
    double truth_pt = 0;    ///< MeV
};

struct GeneratedSample {
    std::string events;              ///< JSON-lines text
    std::vector<MatchLabel> labels;  ///< every reco electron given a truth partner
};

/// Deterministic synthetic electron/jet/truth sample (pt in MeV). About 80% of
/// reconstructed electrons receive a truth electron (pdgId +-11) within
/// DeltaR 0.04 and pt smeared by up to 10%; the remaining truth particles sit
/// more than 0.2 away from every reconstructed electron, and reconstructed
/// electrons are more than 0.5 apart.
GeneratedSample generate(std::uint64_t seed, std::size_t n_events);

void write_labels(const std::filesystem::path& path, const std::vector<MatchLabel>& labels);
std::vector<MatchLabel> read_labels(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace jagq
