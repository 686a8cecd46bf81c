#include "aw/json_util.hpp"

namespace aw {

Json json_parse(const std::string& text) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw ParseError("not valid JSON");
    return j;
}

void expect_object(const Json& j, std::size_t key_count, const char* what) {
    if (!j.is_object())
        throw ParseError(std::string(what) + ": not a JSON object");
    if (j.size() != key_count)
        throw ParseError(std::string(what) + ": unexpected field count");
}

void expect_artifact(const Json& j, const char* type_name) {
    if (get_string(j, "v") != "aw/1")
        throw ParseError(std::string(type_name) + ": unsupported schema version");
    if (get_string(j, "type") != type_name)
        throw ParseError(std::string(type_name) + ": wrong record type");
}

namespace {

const Json& require(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end())
        throw ParseError(std::string("missing field: ") + key);
    return *it;
}

} // namespace

std::string get_string(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_string())
        throw ParseError(std::string("field is not a string: ") + key);
    return v.get<std::string>();
}

std::uint64_t get_u64(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number_unsigned())
        throw ParseError(std::string("field is not an unsigned integer: ") + key);
    return v.get<std::uint64_t>();
}

const Json& get_object(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_object())
        throw ParseError(std::string("field is not an object: ") + key);
    return v;
}

const Json& get_array(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_array())
        throw ParseError(std::string("field is not an array: ") + key);
    return v;
}

Bytes get_hex(const Json& j, const char* key) {
    const auto decoded = hex_decode(get_string(j, key));
    if (!decoded)
        throw ParseError(std::string("field is not lowercase hex: ") + key);
    return *decoded;
}

Digest256 get_digest(const Json& j, const char* key) {
    const Bytes b = get_hex(j, key);
    if (b.size() != 32)
        throw ParseError(std::string("field is not a 32-byte digest: ") + key);
    Digest256 d;
    std::copy(b.begin(), b.end(), d.bytes.begin());
    return d;
}

Signature get_signature(const Json& j, const char* key) {
    const Bytes b = get_hex(j, key);
    if (b.size() != 64)
        throw ParseError(std::string("field is not a 64-byte signature: ") + key);
    Signature s;
    std::copy(b.begin(), b.end(), s.bytes.begin());
    return s;
}

PublicKey get_public_key(const Json& j, const char* key) {
    const Bytes b = get_hex(j, key);
    if (b.size() != 32)
        throw ParseError(std::string("field is not a 32-byte key: ") + key);
    PublicKey k{};
    std::copy(b.begin(), b.end(), k.begin());
    return k;
}

} // namespace aw
