#pragma once

#include "aw/crypto.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace aw {

struct ManifestEntry {
    std::string path;      // corpus-relative, '/'-separated
    Digest256 file_digest;
    std::uint64_t byte_length = 0;

    bool operator==(const ManifestEntry&) const = default;

    // "<hex digest> <byte_length> <path>", the byte layout the corpus hash
    // consumes and the manifest file stores.
    std::string line() const;
};

// F_map plus H_corpus: the pre-commitment that pins every file's content
// before the audit starts.
struct CorpusManifest {
    std::vector<ManifestEntry> entries; // unique paths, byte-order sorted
    Digest256 corpus_digest;
    bool paths_obfuscated = false;
    std::vector<std::string> warnings;  // skipped symlinks etc.

    const ManifestEntry* find(const std::string& path) const;
    std::string to_file() const;                       // entries + "#corpus <hex>" trailer
    static CorpusManifest from_file(const std::string& text);
};

Digest256 corpus_hash(const CorpusManifest& manifest);

struct BuildManifestOptions {
    bool obfuscate_paths = false; // manifest paths become hex(digest(path))
};

CorpusManifest build_manifest(const std::filesystem::path& root,
                              const BuildManifestOptions& options = {});

// Obfuscated manifest lookup key for a plain path.
std::string obfuscated_path(const std::string& path);

enum class ToolKind { read_file, list_files, search_repository };

std::string tool_kind_name(ToolKind k);
std::optional<ToolKind> tool_kind_from_name(std::string_view name);

struct ToolCall {
    ToolKind kind = ToolKind::read_file;
    std::string argument;               // path or query
    std::uint64_t sequence_number = 0;  // per-question, strictly increasing
};

struct ToolResult {
    ToolKind kind = ToolKind::read_file;
    Bytes payload;                       // read_file: exact file bytes
    std::vector<std::string> listing;    // list_files / search_repository
    std::optional<Digest256> file_digest; // present iff kind == read_file && ok
    std::string status = "ok";           // "ok" or an error tag

    bool ok() const { return status == "ok"; }
};

ToolResult read_file(const std::filesystem::path& root, const std::string& path);
ToolResult list_files(const std::filesystem::path& root, const std::string& path);

// Lowercase alphanumeric tokens of length >= 2.
std::vector<std::string> tokenize(std::string_view text);

struct SearchIndex {
    std::map<std::string, std::set<std::string>> token_map;
};

SearchIndex build_search_index(const std::filesystem::path& root);
ToolResult search_repository(const SearchIndex& index, const std::string& query);

// The three tool functions behind one seam, so the harness can wrap an honest
// backend with tampering decorators without touching prover code.
class ToolBackend {
public:
    virtual ~ToolBackend() = default;
    virtual ToolResult execute(const ToolCall& call) = 0;
};

class CorpusBackend final : public ToolBackend {
public:
    explicit CorpusBackend(std::filesystem::path root)
        : root_(std::move(root)), index_(build_search_index(root_)) {}

    ToolResult execute(const ToolCall& call) override;
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    SearchIndex index_;
};

} // namespace aw
