#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "jagq/dataset.hpp"
#include "jagq/functions.hpp"
#include "jagq/schema.hpp"
#include "jagq/wire.hpp"

namespace jagq {

/// Simulated remote query service. Requests and responses cross the service
/// boundary only as wire frames. Results are cached on disk under
/// `<cache_dir>/<first two hex digits>/<key>.jqr` with a `<key>.meta` JSON
/// sidecar naming the dataset and query.
class RemoteService {
public:
    /// An empty `cache_dir` disables caching.
    RemoteService(DatasetRegistry datasets, FunctionRegistry functions, std::filesystem::path cache_dir);

    /// Takes a JQQ1 frame, returns a JQR1 frame or a JQE1 error frame.
    std::string handle(std::string_view request);

    /// Queries actually evaluated (cache misses that ran).
    std::uint64_t evaluations() const { return evaluations_.load(); }
    std::uint64_t cache_hits() const { return hits_.load(); }

    /// Hex SHA-256 of `dataset + "\n" + query`.
    static std::string cache_key(std::string_view dataset, std::string_view query);
    /// Location of the result frame for `key`.
    std::filesystem::path cache_file(const std::string& key) const;

private:
    struct Loaded {
        DatasetSchema schema;
        EventTable table;
    };

    std::string evaluate(const QueryRequest& q);
    std::shared_ptr<const Loaded> load(const std::string& id);
    void store(const std::string& key, const QueryRequest& q, const std::string& frame) const;

    DatasetRegistry datasets_;
    FunctionRegistry functions_;
    std::filesystem::path cache_dir_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const Loaded>, std::less<>> loaded_;
    std::atomic<std::uint64_t> evaluations_{0};
    std::atomic<std::uint64_t> hits_{0};
};

/// Caller side of the service boundary.
class RemoteClient {
public:
    explicit RemoteClient(RemoteService& service) : service_(service) {}

    /// Raw response frame (JQR1 or JQE1).
    std::string submit_frame(std::string_view dataset, std::string_view query);
    /// Decoded result; an error frame is rethrown with its original code.
    RemoteResult submit(std::string_view dataset, std::string_view query);

private:
    RemoteService& service_;
};

}  // namespace jagq
