#include "jagq/wire.hpp"

#include <bit>
#include <cstring>

namespace jagq {

namespace {

constexpr std::string_view kResult = "JQR1";
constexpr std::string_view kRequest = "JQQ1";
constexpr std::string_view kError = "JQE1";
constexpr ErrorCode kLastCode = ErrorCode::Internal;

class Writer {
public:
    explicit Writer(std::string_view magic) : out_(magic) {}

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void str(std::string_view s) {
        u64(s.size());
        out_.append(s);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    Reader(std::string_view frame, std::string_view magic) : in_(frame) {
        if (in_.substr(0, 4) != magic) {
            fail(ErrorCode::WireFormat, "expected a " + std::string(magic) + " frame");
        }
        pos_ = 4;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(in_[pos_++]);
    }
    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    /// Element count that must fit in the remaining bytes at `width` each.
    std::uint64_t count(std::uint64_t width) {
        const std::uint64_t n = u64();
        if (width != 0 && n > (in_.size() - pos_) / width) fail(ErrorCode::WireFormat, "truncated frame");
        return n;
    }
    void finish() const {
        if (pos_ != in_.size()) fail(ErrorCode::WireFormat, "trailing bytes after frame");
    }

private:
    void need(std::uint64_t n) const {
        if (n > in_.size() - pos_) fail(ErrorCode::WireFormat, "truncated frame");
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_result(const RemoteResult& result) {
    Writer w(kResult);
    w.u64(result.columns.size());
    w.u64(result.events);
    for (const Column& c : result.columns) {
        const JaggedArray& a = c.data;
        w.str(c.name);
        w.u8(static_cast<std::uint8_t>(a.kind()));
        w.u64(a.depth());
        for (std::size_t l = 0; l < a.depth(); ++l) {
            const Offsets& o = a.offsets(l);
            w.u64(o.size());
            for (std::int64_t v : o) w.i64(v);
        }
        w.u64(a.size());
        switch (a.kind()) {
            case ElementKind::Float:
                for (double v : a.floats()) w.f64(v);
                break;
            case ElementKind::Int:
                for (std::int64_t v : a.ints()) w.i64(v);
                break;
            case ElementKind::Bool:
                for (std::uint8_t v : a.bools()) w.u8(v);
                break;
        }
    }
    return w.take();
}

RemoteResult decode_result(std::string_view frame) {
    Reader r(frame, kResult);
    RemoteResult out;
    const std::uint64_t n_columns = r.count(0);
    out.events = r.u64();
    for (std::uint64_t c = 0; c < n_columns; ++c) {
        Column col;
        col.name = r.str();
        const std::uint8_t kind = r.u8();
        if (kind > 2) fail(ErrorCode::WireFormat, "unknown element kind " + std::to_string(kind));
        const std::uint64_t depth = r.count(8);
        std::vector<Offsets> levels(depth);
        for (auto& level : levels) {
            level.resize(r.count(8));
            for (auto& v : level) v = r.i64();
        }
        JaggedArray::Values values;
        switch (static_cast<ElementKind>(kind)) {
            case ElementKind::Float: {
                std::vector<double> v(r.count(8));
                for (auto& x : v) x = r.f64();
                values = std::move(v);
                break;
            }
            case ElementKind::Int: {
                std::vector<std::int64_t> v(r.count(8));
                for (auto& x : v) x = r.i64();
                values = std::move(v);
                break;
            }
            case ElementKind::Bool: {
                std::vector<std::uint8_t> v(r.count(1));
                for (auto& x : v) x = r.u8();
                values = std::move(v);
                break;
            }
        }
        try {
            col.data = depth == 0 ? JaggedArray::flat(std::move(values)) : JaggedArray(std::move(levels), std::move(values));
        } catch (const Error& e) {
            fail(ErrorCode::WireFormat, std::string("column '") + col.name + "': " + e.what());
        }
        if (col.data.n_events() != out.events) {
            fail(ErrorCode::WireFormat, "column '" + col.name + "' has " + std::to_string(col.data.n_events()) +
                                            " events, frame says " + std::to_string(out.events));
        }
        out.columns.push_back(std::move(col));
    }
    r.finish();
    return out;
}

std::string encode_request(const QueryRequest& request) {
    Writer w(kRequest);
    w.str(request.dataset);
    w.str(request.query);
    return w.take();
}

QueryRequest decode_request(std::string_view frame) {
    Reader r(frame, kRequest);
    QueryRequest q;
    q.dataset = r.str();
    q.query = r.str();
    r.finish();
    return q;
}

std::string encode_error(ErrorCode code, std::string_view message) {
    const std::string prefix = std::string(to_string(code)) + ": ";
    if (message.starts_with(prefix)) message.remove_prefix(prefix.size());
    Writer w(kError);
    w.u64(static_cast<std::uint64_t>(code));
    w.str(message);
    return w.take();
}

bool is_error_frame(std::string_view frame) { return frame.substr(0, 4) == kError; }

void raise_error_frame(std::string_view frame) {
    Reader r(frame, kError);
    const std::uint64_t code = r.u64();
    std::string message = r.str();
    r.finish();
    if (code > static_cast<std::uint64_t>(kLastCode)) fail(ErrorCode::WireFormat, "unknown error code " + std::to_string(code));
    fail(static_cast<ErrorCode>(code), message);
}

}  // namespace jagq
