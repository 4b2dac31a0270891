#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jagq/errors.hpp"
#include "jagq/jagged.hpp"

/// Byte frames exchanged with the remote service. All integers are 64-bit
/// little-endian unless noted.
///
///   JQR1 result:  "JQR1" u64 columns u64 events, then per column
///                 u64 name_len, name, u8 kind (0 float, 1 int, 2 bool),
///                 u64 depth, depth x (u64 n, n x i64 offsets),
///                 u64 n_values, values (f64 / i64 / one byte per bool)
///   JQQ1 request: "JQQ1" u64 len, dataset id, u64 len, query text
///   JQE1 error:   "JQE1" u64 code, u64 len, message
namespace jagq {

struct Column {
    std::string name;
    JaggedArray data;
};

struct RemoteResult {
    std::uint64_t events = 0;
    std::vector<Column> columns;
};

struct QueryRequest {
    std::string dataset;
    std::string query;
};

std::string encode_result(const RemoteResult& result);
RemoteResult decode_result(std::string_view frame);

std::string encode_request(const QueryRequest& request);
QueryRequest decode_request(std::string_view frame);

std::string encode_error(ErrorCode code, std::string_view message);
bool is_error_frame(std::string_view frame);
/// Rethrows the error carried by a JQE1 frame.
[[noreturn]] void raise_error_frame(std::string_view frame);

}  // namespace jagq
