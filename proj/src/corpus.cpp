#include "aw/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace aw {

namespace {

// Lexical confinement: reject absolute paths and anything that escapes the
// root after normalization. Symlinks are treated as absent.
enum class PathVerdict { ok, forbidden, not_found };

PathVerdict resolve_relative(const std::string& path, fs::path& out) {
    fs::path p(path);
    if (p.is_absolute()) return PathVerdict::forbidden;
    fs::path normal;
    for (const auto& part : p.lexically_normal()) {
        if (part == "..") return PathVerdict::forbidden;
        if (part == "." || part.empty()) continue;
        normal /= part;
    }
    out = normal;
    return PathVerdict::ok;
}

bool contains_symlink(const fs::path& root, const fs::path& rel) {
    fs::path walk = root;
    for (const auto& part : rel) {
        walk /= part;
        std::error_code ec;
        if (fs::is_symlink(fs::symlink_status(walk, ec))) return true;
    }
    return false;
}

Bytes read_all(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ManifestError("unreadable file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw ManifestError("unreadable file: " + file.string());
    std::string s = buf.str();
    return Bytes(s.begin(), s.end());
}

std::string relative_slash_path(const fs::path& root, const fs::path& full) {
    std::string rel = full.lexically_relative(root).generic_string();
    return rel;
}

} // namespace

std::string ManifestEntry::line() const {
    return file_digest.hex() + " " + std::to_string(byte_length) + " " + path;
}

const ManifestEntry* CorpusManifest::find(const std::string& path) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), path,
                               [](const ManifestEntry& e, const std::string& p) { return e.path < p; });
    if (it != entries.end() && it->path == path) return &*it;
    return nullptr;
}

std::string CorpusManifest::to_file() const {
    std::string out;
    for (const auto& e : entries) {
        out += e.line();
        out += '\n';
    }
    out += "#corpus " + corpus_digest.hex() + "\n";
    return out;
}

CorpusManifest CorpusManifest::from_file(const std::string& text) {
    CorpusManifest m;
    std::istringstream in(text);
    std::string line;
    bool saw_trailer = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("#corpus ", 0) == 0) {
            auto d = Digest256::from_hex(line.substr(8));
            if (!d) throw ManifestError("manifest trailer has malformed digest");
            m.corpus_digest = *d;
            saw_trailer = true;
            continue;
        }
        if (saw_trailer) throw ManifestError("manifest entries after #corpus trailer");
        auto sp1 = line.find(' ');
        auto sp2 = line.find(' ', sp1 == std::string::npos ? sp1 : sp1 + 1);
        if (sp1 == std::string::npos || sp2 == std::string::npos) {
            throw ManifestError("malformed manifest line: " + line);
        }
        ManifestEntry e;
        auto d = Digest256::from_hex(line.substr(0, sp1));
        if (!d) throw ManifestError("malformed manifest digest: " + line);
        e.file_digest = *d;
        const std::string len_str = line.substr(sp1 + 1, sp2 - sp1 - 1);
        if (len_str.empty() || len_str.size() > 18 ||
            len_str.find_first_not_of("0123456789") != std::string::npos) {
            throw ManifestError("malformed manifest length: " + line);
        }
        e.byte_length = std::stoull(len_str);
        e.path = line.substr(sp2 + 1);
        if (e.path.empty()) throw ManifestError("empty manifest path");
        m.entries.push_back(std::move(e));
    }
    if (!saw_trailer) throw ManifestError("manifest missing #corpus trailer");
    for (std::size_t i = 1; i < m.entries.size(); ++i) {
        if (!(m.entries[i - 1].path < m.entries[i].path))
            throw ManifestError("manifest entries not in canonical order");
    }
    if (!(corpus_hash(m) == m.corpus_digest))
        throw ManifestError("manifest trailer digest does not match its entries");
    return m;
}

Digest256 corpus_hash(const CorpusManifest& manifest) {
    std::vector<EncodedField> fields;
    fields.reserve(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        fields.emplace_back(std::to_string(i), manifest.entries[i].line());
    }
    return digest(canonical_encode(fields));
}

std::string obfuscated_path(const std::string& path) {
    return digest(path).hex();
}

CorpusManifest build_manifest(const fs::path& root, const BuildManifestOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw ManifestError("corpus root is not a readable directory: " + root.string());
    }
    CorpusManifest m;
    m.paths_obfuscated = options.obfuscate_paths;

    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
    if (ec) throw ManifestError("cannot walk corpus root: " + root.string());
    for (auto end = fs::recursive_directory_iterator(); it != end; it.increment(ec)) {
        if (ec) throw ManifestError("cannot walk corpus root: " + root.string());
        const auto& entry = *it;
        if (entry.is_symlink()) {
            m.warnings.push_back("skipped symlink: " + relative_slash_path(root, entry.path()));
            if (entry.is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (entry.is_regular_file()) files.push_back(entry.path());
    }

    for (const auto& f : files) {
        ManifestEntry e;
        std::string rel = relative_slash_path(root, f);
        e.path = options.obfuscate_paths ? obfuscated_path(rel) : rel;
        Bytes content = read_all(f);
        e.byte_length = content.size();
        e.file_digest = digest(content);
        m.entries.push_back(std::move(e));
    }
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
    m.corpus_digest = corpus_hash(m);
    return m;
}

std::string tool_kind_name(ToolKind k) {
    switch (k) {
    case ToolKind::read_file: return "read_file";
    case ToolKind::list_files: return "list_files";
    case ToolKind::search_repository: return "search_repository";
    }
    return "unknown";
}

std::optional<ToolKind> tool_kind_from_name(std::string_view name) {
    if (name == "read_file") return ToolKind::read_file;
    if (name == "list_files") return ToolKind::list_files;
    if (name == "search_repository") return ToolKind::search_repository;
    return std::nullopt;
}

ToolResult read_file(const fs::path& root, const std::string& path) {
    ToolResult r;
    r.kind = ToolKind::read_file;
    fs::path rel;
    switch (resolve_relative(path, rel)) {
    case PathVerdict::forbidden:
        r.status = "forbidden";
        return r;
    default:
        break;
    }
    if (rel.empty() || contains_symlink(root, rel)) {
        r.status = "not_found";
        return r;
    }
    fs::path full = root / rel;
    std::error_code ec;
    if (!fs::is_regular_file(full, ec)) {
        r.status = "not_found";
        return r;
    }
    try {
        r.payload = read_all(full);
    } catch (const ManifestError&) {
        r.status = "not_found";
        return r;
    }
    r.file_digest = digest(r.payload);
    return r;
}

ToolResult list_files(const fs::path& root, const std::string& path) {
    ToolResult r;
    r.kind = ToolKind::list_files;
    fs::path rel;
    if (resolve_relative(path, rel) == PathVerdict::forbidden) {
        r.status = "forbidden";
        return r;
    }
    if (!rel.empty() && contains_symlink(root, rel)) {
        r.status = "not_found";
        return r;
    }
    fs::path full = rel.empty() ? root : root / rel;
    std::error_code ec;
    if (!fs::is_directory(full, ec)) {
        r.status = "not_found";
        return r;
    }
    for (const auto& entry : fs::directory_iterator(full, ec)) {
        if (entry.is_symlink()) continue; // unservable, kept out of the view
        std::string name = entry.path().filename().generic_string();
        if (entry.is_directory()) name += "/";
        r.listing.push_back(std::move(name));
    }
    std::sort(r.listing.begin(), r.listing.end());
    return r;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 2) tokens.push_back(cur);
        cur.clear();
    };
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

SearchIndex build_search_index(const fs::path& root) {
    SearchIndex index;
    CorpusManifest m = build_manifest(root); // same walk, same confinement
    for (const auto& e : m.entries) {
        ToolResult content = read_file(root, e.path);
        if (!content.ok()) continue;
        for (const auto& tok : tokenize(to_string(content.payload))) {
            index.token_map[tok].insert(e.path);
        }
    }
    return index;
}

ToolResult search_repository(const SearchIndex& index, const std::string& query) {
    ToolResult r;
    r.kind = ToolKind::search_repository;
    auto tokens = tokenize(query);
    if (tokens.empty()) {
        r.status = "empty_query";
        return r;
    }
    std::set<std::string> hits;
    for (const auto& tok : tokens) {
        auto it = index.token_map.find(tok);
        if (it == index.token_map.end()) continue;
        hits.insert(it->second.begin(), it->second.end());
    }
    r.listing.assign(hits.begin(), hits.end());
    return r;
}

ToolResult CorpusBackend::execute(const ToolCall& call) {
    switch (call.kind) {
    case ToolKind::read_file: return read_file(root_, call.argument);
    case ToolKind::list_files: return list_files(root_, call.argument);
    case ToolKind::search_repository: return search_repository(index_, call.argument);
    }
    ToolResult r;
    r.status = "bad_call";
    return r;
}

} // namespace aw
