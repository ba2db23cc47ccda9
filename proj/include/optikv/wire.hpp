#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "optikv/hvc.hpp"

namespace optikv {

using Json = nlohmann::json;

// Message types on the shared wire protocol. Every record is
// {type, request-id, payload} as length-prefixed UTF-8 JSON.
namespace msg {
inline constexpr const char* kPut = "PUT";
inline constexpr const char* kPutAck = "PUT-ACK";
inline constexpr const char* kGet = "GET";
inline constexpr const char* kGetResp = "GET-RESP";
inline constexpr const char* kMetadata = "METADATA";
inline constexpr const char* kMetadataResp = "METADATA-RESP";
inline constexpr const char* kCandidate = "CANDIDATE";
inline constexpr const char* kViolation = "VIOLATION";
inline constexpr const char* kPause = "PAUSE";
inline constexpr const char* kRestore = "RESTORE";
inline constexpr const char* kResume = "RESUME";
// extensions: control acks and checkpoint collection
inline constexpr const char* kPauseAck = "PAUSE-ACK";
inline constexpr const char* kRestoreAck = "RESTORE-ACK";
inline constexpr const char* kResumeAck = "RESUME-ACK";
inline constexpr const char* kSnapshot = "SNAPSHOT";
inline constexpr const char* kSnapshotResp = "SNAPSHOT-RESP";
}  // namespace msg

// Request statuses used in PUT-ACK / GET-RESP payloads.
namespace status {
inline constexpr const char* kOk = "ok";
inline constexpr const char* kRetryAfterRestore = "RETRY-AFTER-RESTORE";
inline constexpr const char* kError = "error";
}  // namespace status

struct Message {
  std::string type;
  std::uint64_t request_id = 0;
  Json payload;
};

std::string base64_encode(const std::string& data);
std::string base64_decode(const std::string& text);

// One record per frame: u32 little-endian byte length, then the JSON text.
std::string encode_frame(const Message& m);

// Incremental frame decoder for stream transports.
class FrameReader {
 public:
  void feed(const char* data, size_t len);
  std::optional<Message> next();

 private:
  std::string buf_;
};

Message parse_message(const std::string& json_text);

// Hvc fields inside JSON payloads: base64 of the binary encoding.
Json hvc_to_json(const Hvc& h);
Hvc hvc_from_json(const Json& j, int owner);

}  // namespace optikv
