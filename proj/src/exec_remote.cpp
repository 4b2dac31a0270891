#include "jagq/exec_remote.hpp"

#include <random>
#include <sstream>
#include <thread>

#include "jagq/canonical.hpp"
#include "jagq/exec_local.hpp"
#include "jagq/hashing.hpp"
#include "jagq/query_lang.hpp"
#include "json.hpp"

namespace jagq {

namespace {

/// Distinct per process and call, so concurrent writers never share a temp file.
std::string temp_suffix() {
    static const std::uint64_t process_tag = std::random_device{}() ^ (std::uint64_t{std::random_device{}()} << 32);
    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream s;
    s << ".tmp." << std::hex << process_tag << '.' << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.'
      << counter.fetch_add(1);
    return s.str();
}

void write_atomically(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += temp_suffix();
    write_file(tmp, contents);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::IoError, "cannot move result into " + path.string());
    }
}

}  // namespace

RemoteService::RemoteService(DatasetRegistry datasets, FunctionRegistry functions, std::filesystem::path cache_dir)
    : datasets_(std::move(datasets)), functions_(std::move(functions)), cache_dir_(std::move(cache_dir)) {}

std::string RemoteService::cache_key(std::string_view dataset, std::string_view query) {
    std::string material(dataset);
    material += '\n';
    material += query;
    return sha256_hex(material);
}

std::filesystem::path RemoteService::cache_file(const std::string& key) const {
    return cache_dir_ / key.substr(0, 2) / (key + ".jqr");
}

std::string RemoteService::handle(std::string_view request) {
    try {
        const QueryRequest q = decode_request(request);
        if (!datasets_.contains(q.dataset)) fail(ErrorCode::UnknownDataset, "no dataset '" + q.dataset + "'");
        if (cache_dir_.empty()) return evaluate(q);
        const std::string key = cache_key(q.dataset, q.query);
        const auto path = cache_file(key);
        if (std::filesystem::exists(path)) {
            std::string frame = read_file(path);
            try {
                decode_result(frame);
                ++hits_;
                return frame;
            } catch (const Error&) {
                // unreadable entry: recompute and overwrite it below
            }
        }
        std::string frame = evaluate(q);
        store(key, q, frame);
        return frame;
    } catch (const Error& e) {
        return encode_error(e.code(), e.what());
    } catch (const std::exception& e) {
        return encode_error(ErrorCode::Internal, e.what());
    }
}

std::string RemoteService::evaluate(const QueryRequest& q) {
    Session session;
    functions_.declare_all(session);
    const Expr root = parse_query(q.query, session);
    const Dag dag = canonicalize(session, root);
    for (const Node& n : dag.nodes) {
        if (n.kind == NodeKind::Source && n.name != q.dataset) {
            fail(ErrorCode::UnknownDataset, "query reads '" + n.name + "' but was sent to '" + q.dataset + "'");
        }
    }
    const auto data = load(q.dataset);
    infer(dag, data->schema, true, true);
    ++evaluations_;
    RemoteResult result;
    result.events = data->table.n_events();
    result.columns.push_back(Column{"value", evaluate_all(dag, data->table, functions_).at(0)});
    return encode_result(result);
}

std::shared_ptr<const RemoteService::Loaded> RemoteService::load(const std::string& id) {
    std::lock_guard lock(mutex_);
    if (auto it = loaded_.find(id); it != loaded_.end()) return it->second;
    const DatasetEntry& entry = datasets_.find(id);
    auto schema = DatasetSchema::load(entry.schema);
    auto table = ingest(entry.events, schema);
    auto loaded = std::make_shared<const Loaded>(Loaded{std::move(schema), std::move(table)});
    loaded_.emplace(id, loaded);
    return loaded;
}

void RemoteService::store(const std::string& key, const QueryRequest& q, const std::string& frame) const {
    const nlohmann::ordered_json meta = {{"key", key}, {"dataset", q.dataset}, {"query", q.query}};
    const auto path = cache_file(key);
    std::filesystem::path meta_path = path;
    meta_path.replace_extension(".meta");
    write_atomically(meta_path, meta.dump() + "\n");
    write_atomically(path, frame);
}

std::string RemoteClient::submit_frame(std::string_view dataset, std::string_view query) {
    return service_.handle(encode_request(QueryRequest{std::string(dataset), std::string(query)}));
}

RemoteResult RemoteClient::submit(std::string_view dataset, std::string_view query) {
    const std::string frame = submit_frame(dataset, query);
    if (is_error_frame(frame)) raise_error_frame(frame);
    return decode_result(frame);
}

}  // namespace jagq
