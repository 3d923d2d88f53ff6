#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace dbt::distribution {

namespace msg {
inline constexpr std::string_view utility_query = "UTILITY_QUERY";
inline constexpr std::string_view utility_reply = "UTILITY_REPLY";
inline constexpr std::string_view shove = "SHOVE";
inline constexpr std::string_view shove_ack = "SHOVE_ACK";
inline constexpr std::string_view shove_reject = "SHOVE_REJECT";
inline constexpr std::string_view result = "RESULT";
inline constexpr std::string_view cancel = "CANCEL";
inline constexpr std::string_view announce = "ANNOUNCE";
} // namespace msg

struct Message {
    std::string type;
    std::string correlation_id;
    std::string sender;
    nlohmann::json payload = nlohmann::json::object();

    nlohmann::json to_json() const;
    /// Throws DeserializationError when a field is missing or mistyped.
    static Message from_json(const nlohmann::json& j);

    bool operator==(const Message&) const = default;
};

/// Largest frame body accepted by the decoder.
inline constexpr std::uint32_t max_frame_size = 64u << 20;

/// 4-byte big-endian body length followed by the compact JSON body.
std::string encode_frame(const nlohmann::json& body);
std::string encode_frame(const Message& m);

/// Incremental frame reassembly for byte streams.
class FrameDecoder {
public:
    void feed(std::string_view bytes);
    /// Next complete body. Throws DeserializationError on an oversized
    /// length prefix or a body that is not JSON.
    std::optional<nlohmann::json> next();
    std::size_t buffered() const noexcept { return buf_.size() - pos_; }

private:
    std::string buf_;
    std::size_t pos_ = 0;
};

} // namespace dbt::distribution
