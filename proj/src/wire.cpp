#include "optikv/wire.hpp"

#include "optikv/errors.hpp"

namespace optikv {

namespace {
constexpr char kB64[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::string& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 3 <= data.size()) {
    std::uint32_t v = (static_cast<unsigned char>(data[i]) << 16) |
                      (static_cast<unsigned char>(data[i + 1]) << 8) |
                      static_cast<unsigned char>(data[i + 2]);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back(kB64[v & 63]);
    i += 3;
  }
  size_t rem = data.size() - i;
  if (rem == 1) {
    std::uint32_t v = static_cast<unsigned char>(data[i]) << 16;
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out += "==";
  } else if (rem == 2) {
    std::uint32_t v = (static_cast<unsigned char>(data[i]) << 16) |
                      (static_cast<unsigned char>(data[i + 1]) << 8);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw ProtocolError("bad base64 length");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (size_t k = 0; k < 4; ++k) {
      char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw ProtocolError("bad base64 padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw ProtocolError("bad base64 padding");
      int x = val(c);
      if (x < 0) throw ProtocolError("bad base64 character");
      v = (v << 6) | static_cast<std::uint32_t>(x);
    }
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

std::string encode_frame(const Message& m) {
  Json j;
  j["type"] = m.type;
  j["request-id"] = m.request_id;
  j["payload"] = m.payload;
  std::string body = j.dump();
  std::string out;
  auto len = static_cast<std::uint32_t>(body.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
  out += body;
  return out;
}

Message parse_message(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("bad message json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j.contains("request-id") ||
      !j.contains("payload"))
    throw ProtocolError("message record missing type/request-id/payload");
  Message m;
  m.type = j["type"].get<std::string>();
  m.request_id = j["request-id"].get<std::uint64_t>();
  m.payload = j["payload"];
  return m;
}

void FrameReader::feed(const char* data, size_t len) { buf_.append(data, len); }

std::optional<Message> FrameReader::next() {
  if (buf_.size() < 4) return std::nullopt;
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i)
    len |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[static_cast<size_t>(i)]))
           << (8 * i);
  if (len > (64u << 20)) throw ProtocolError("oversized frame");
  if (buf_.size() < 4 + static_cast<size_t>(len)) return std::nullopt;
  std::string body = buf_.substr(4, len);
  buf_.erase(0, 4 + static_cast<size_t>(len));
  return parse_message(body);
}

Json hvc_to_json(const Hvc& h) { return base64_encode(encode_hvc(h)); }

Hvc hvc_from_json(const Json& j, int owner) {
  if (!j.is_string()) throw ProtocolError("hvc field must be base64 string");
  return decode_hvc(base64_decode(j.get<std::string>()), owner);
}

}  // namespace optikv
