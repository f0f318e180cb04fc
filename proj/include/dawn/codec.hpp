#pragma once

// Canonical JSON wire encoding for protocol messages.
//
// Every message is a JSON object with a `"type"` discriminator and `"v": 1`.
// Keys are emitted sorted with no whitespace, so encode(decode(b)) == b for
// any b produced by encode. Decoding rejects unknown types, unknown fields,
// missing fields and type mismatches with a ParseError naming the JSON path,
// and rejects syntax errors with a ParseError naming the byte offset.

#include <string>
#include <string_view>
#include <variant>

#include "dawn/protocol.hpp"
#include "json.hpp"

namespace dawn {

using Json = nlohmann::json;

inline constexpr int kWireVersion = 1;

using Message = std::variant<ResourceManifest, ResourceQuery, ResourceOffer, ExecutionCommand,
                             ExecutionResult, GatewayIdentity>;

std::string_view message_type_name(const Message& m);

std::string encode(const Message& m);
Message decode(std::string_view bytes);

/// Decode and require a specific message type.
template <class T>
T decode_as(std::string_view bytes);

/// Parse bytes into a Json value, mapping syntax errors to ParseError(offset).
Json parse_json(std::string_view bytes);

/// Strict object reader: tracks consumed keys so `finish()` can reject
/// anything unexpected. Paths look like `$.subtasks[2].task_id`.
class JsonReader {
 public:
  JsonReader(const Json& j, std::string path);

  const std::string& path() const { return path_; }
  std::string child_path(std::string_view key) const;

  bool has(std::string_view key) const;
  const Json& raw(std::string_view key);
  std::string string(std::string_view key);
  std::int64_t integer(std::string_view key);
  double number(std::string_view key);
  bool boolean(std::string_view key);
  const Json& array(std::string_view key);
  const Json& object(std::string_view key);
  std::vector<std::string> strings(std::string_view key);

  std::optional<std::string> opt_string(std::string_view key);
  std::optional<std::int64_t> opt_integer(std::string_view key);

  void skip(std::string_view key);
  void finish();

 private:
  const Json& require(std::string_view key);

  const Json& j_;
  std::string path_;
  std::vector<std::string> consumed_;
};

[[noreturn]] void throw_at(const std::string& path, const std::string& what);

// Field-level conversions shared with the snapshot formats.
Json to_json(const Scalar& v);
Scalar scalar_from_json(const Json& j, const std::string& path);
Json to_json(const ValueMap& m);
ValueMap value_map_from_json(const Json& j, const std::string& path);
Json to_json(const Schema& s);
Schema schema_from_json(const Json& j, const std::string& path);
Json to_json(const ResourceMetrics& m);
ResourceMetrics metrics_from_json(const Json& j, const std::string& path);
Json to_json(const TaskSpec& t);
TaskSpec task_from_json(const Json& j, const std::string& path);
Json to_json(const TaskGraph& g);
TaskGraph graph_from_json(const Json& j, const std::string& path);

// Message bodies without the envelope.
Json body_to_json(const ResourceManifest& m);
ResourceManifest manifest_from_json(const Json& j, const std::string& path);
Json body_to_json(const ResourceQuery& q);
ResourceQuery query_from_json(const Json& j, const std::string& path);
Json body_to_json(const ResourceOffer& o);
ResourceOffer offer_from_json(const Json& j, const std::string& path);
Json body_to_json(const ExecutionCommand& c);
ExecutionCommand command_from_json(const Json& j, const std::string& path);
Json body_to_json(const ExecutionResult& r);
ExecutionResult result_from_json(const Json& j, const std::string& path);
Json body_to_json(const GatewayIdentity& g);
GatewayIdentity identity_from_json(const Json& j, const std::string& path);

}  // namespace dawn
