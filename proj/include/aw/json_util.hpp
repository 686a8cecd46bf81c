#pragma once

#include "aw/bytes.hpp"
#include "aw/crypto.hpp"
#include "aw/errors.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace aw {

using Json = nlohmann::json;

// Wire records are single-line JSON with lexicographically ordered keys,
// which is what nlohmann produces by default (objects are std::map-backed).
inline std::string dump_wire(const Json& j) { return j.dump(); }

Json json_parse(const std::string& text);

// Exact key count so unknown or duplicated-then-merged fields are rejected.
void expect_object(const Json& j, std::size_t key_count, const char* what);

// Checks v == "aw/1" and type == type_name.
void expect_artifact(const Json& j, const char* type_name);

std::string get_string(const Json& j, const char* key);
std::uint64_t get_u64(const Json& j, const char* key);
const Json& get_object(const Json& j, const char* key);
const Json& get_array(const Json& j, const char* key);

// Binary fields travel as strict lowercase hex.
Bytes get_hex(const Json& j, const char* key);
Digest256 get_digest(const Json& j, const char* key);
Signature get_signature(const Json& j, const char* key);
PublicKey get_public_key(const Json& j, const char* key);

} // namespace aw
