#include "dbt/distribution/message.hpp"

#include "dbt/error.hpp"

namespace dbt::distribution {

using nlohmann::json;

json Message::to_json() const {
    return {{"type", type}, {"correlationId", correlation_id}, {"senderId", sender}, {"payload", payload}};
}

Message Message::from_json(const json& j) {
    if (!j.is_object()) {
        throw DeserializationError("message is not an object");
    }
    auto text = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            throw DeserializationError(std::string("message field '") + key + "' missing or not a string");
        }
        return it->get<std::string>();
    };
    Message m;
    m.type = text("type");
    m.correlation_id = text("correlationId");
    m.sender = text("senderId");
    if (auto it = j.find("payload"); it != j.end()) {
        m.payload = *it;
    }
    return m;
}

std::string encode_frame(const json& body) {
    const std::string text = body.dump();
    if (text.size() > max_frame_size) {
        throw TransportError("frame of " + std::to_string(text.size()) + " bytes is too large");
    }
    const auto n = static_cast<std::uint32_t>(text.size());
    std::string out;
    out.reserve(4 + text.size());
    out.push_back(static_cast<char>((n >> 24) & 0xff));
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
    out += text;
    return out;
}

std::string encode_frame(const Message& m) { return encode_frame(m.to_json()); }

void FrameDecoder::feed(std::string_view bytes) {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    buf_.append(bytes);
}

std::optional<json> FrameDecoder::next() {
    if (buffered() < 4) {
        return std::nullopt;
    }
    const auto* p = reinterpret_cast<const unsigned char*>(buf_.data() + pos_);
    const std::uint32_t n = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
                            std::uint32_t{p[3]};
    if (n > max_frame_size) {
        throw DeserializationError("frame length " + std::to_string(n) + " exceeds the limit");
    }
    if (buffered() < 4 + std::size_t{n}) {
        return std::nullopt;
    }
    const std::string_view body(buf_.data() + pos_ + 4, n);
    pos_ += 4 + n;
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) {
        throw DeserializationError("frame body is not valid JSON");
    }
    if (pos_ > 4096 && pos_ * 2 > buf_.size()) {
        buf_.erase(0, pos_);
        pos_ = 0;
    }
    return j;
}

} // namespace dbt::distribution
