#include <doctest.h>

#include "aw/corpus.hpp"
#include "aw/crypto.hpp"
#include "aw/errors.hpp"

#include <filesystem>
#include <fstream>
#include <string>

using namespace aw;
namespace fs = std::filesystem;

namespace {

struct TempCorpus {
    fs::path root;

    TempCorpus() {
        root = fs::temp_directory_path() /
               ("aw-corpus-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(root);
    }
    ~TempCorpus() { fs::remove_all(root); }

    void put(const std::string& rel, const std::string& content) {
        const fs::path p = root / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        out << content;
    }
};

} // namespace

TEST_CASE("empty directory yields an empty manifest with the empty-encoding digest") {
    TempCorpus c;
    const CorpusManifest m = build_manifest(c.root.string());
    CHECK(m.entries.empty());
    CHECK(m.corpus_digest == digest(canonical_encode({})));
    CHECK(m.corpus_digest.hex() ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("single file manifest carries the independent content hash") {
    TempCorpus c;
    c.put("a.txt", "x");
    const CorpusManifest m = build_manifest(c.root.string());
    REQUIRE(m.entries.size() == 1);
    CHECK(m.entries[0].path == "a.txt");
    CHECK(m.entries[0].byte_length == 1);
    // sha256("x"), recomputed in tests/oracle/golden_chain.py.
    CHECK(m.entries[0].file_digest.hex() ==
          "2d711642b726b04401627ca9fbac32f5c8530fb1903cc4db02258717921a4881");
}

TEST_CASE("manifest build is deterministic and sorted by path bytes") {
    TempCorpus c;
    c.put("b/x.txt", "1");
    c.put("a.txt", "2");
    c.put("a0.txt", "3");
    const CorpusManifest m1 = build_manifest(c.root.string());
    const CorpusManifest m2 = build_manifest(c.root.string());
    CHECK(m1.corpus_digest == m2.corpus_digest);
    REQUIRE(m1.entries.size() == 3);
    CHECK(m1.entries[0].path == "a.txt");
    CHECK(m1.entries[1].path == "a0.txt");
    CHECK(m1.entries[2].path == "b/x.txt");
}

TEST_CASE("corpus hash changes under entry reorder or digest mutation") {
    TempCorpus c;
    c.put("a.txt", "alpha content");
    c.put("b.txt", "beta content");
    CorpusManifest m = build_manifest(c.root.string());
    CorpusManifest reordered = m;
    std::swap(reordered.entries[0], reordered.entries[1]);
    CHECK(corpus_hash(reordered) != corpus_hash(m));
    CorpusManifest mutated = m;
    mutated.entries[0].file_digest.bytes[5] ^= 0x01;
    CHECK(corpus_hash(mutated) != corpus_hash(m));
}

TEST_CASE("manifest file format round trips") {
    TempCorpus c;
    c.put("src/main.py", "print('hi')\n");
    c.put("readme.md", "# fixture\n");
    const CorpusManifest m = build_manifest(c.root.string());
    const std::string text = m.to_file();
    const CorpusManifest back = CorpusManifest::from_file(text);
    CHECK(back.entries.size() == m.entries.size());
    CHECK(back.corpus_digest == m.corpus_digest);
    CHECK(back.to_file() == text);
    CHECK(text.find("#corpus " + m.corpus_digest.hex()) != std::string::npos);
}

TEST_CASE("manifest parser rejects tampered or malformed text") {
    TempCorpus c;
    c.put("a.txt", "x");
    std::string text = build_manifest(c.root.string()).to_file();
    CHECK_THROWS_AS(CorpusManifest::from_file("no trailer at all\n"), ManifestError);
    std::string no_final = text.substr(0, text.find("#corpus"));
    CHECK_THROWS_AS(CorpusManifest::from_file(no_final), ManifestError);
    // Trailer digest must equal the recomputation over the entry lines.
    std::string flipped = text;
    const auto pos = flipped.find("#corpus ") + 8;
    flipped[pos] = flipped[pos] == '0' ? '1' : '0';
    CHECK_THROWS_AS(CorpusManifest::from_file(flipped), ManifestError);
}

TEST_CASE("symlinks are skipped with a warning") {
    TempCorpus c;
    c.put("real.txt", "content");
    std::error_code ec;
    fs::create_symlink(c.root / "real.txt", c.root / "link.txt", ec);
    if (ec)
        return; // filesystem without symlink support; nothing to assert
    const CorpusManifest m = build_manifest(c.root.string());
    REQUIRE(m.entries.size() == 1);
    CHECK(m.entries[0].path == "real.txt");
    CHECK(!m.warnings.empty());
}

TEST_CASE("read_file returns exact bytes with their digest") {
    TempCorpus c;
    c.put("a.txt", "x");
    const ToolResult r = read_file(c.root.string(), "a.txt");
    REQUIRE(r.ok());
    CHECK(to_string(r.payload) == "x");
    REQUIRE(r.file_digest.has_value());
    CHECK(r.file_digest->hex() ==
          "2d711642b726b04401627ca9fbac32f5c8530fb1903cc4db02258717921a4881");
    CHECK(*r.file_digest == digest(r.payload));
}

TEST_CASE("read_file confines paths to the corpus root") {
    TempCorpus c;
    c.put("a.txt", "x");
    CHECK(read_file(c.root.string(), "../etc/secret").status == "forbidden");
    CHECK(read_file(c.root.string(), "/etc/hostname").status == "forbidden");
    CHECK(read_file(c.root.string(), "sub/../../a.txt").status == "forbidden");
    CHECK(read_file(c.root.string(), "missing.txt").status == "not_found");
    // "sub/.." stays inside the root (it names the root itself, a directory).
    CHECK(read_file(c.root.string(), "sub/..").status == "not_found");
}

TEST_CASE("list_files lists sorted children with directory suffixes") {
    TempCorpus c;
    c.put("a.txt", "1");
    c.put("sub/b.txt", "2");
    const ToolResult top = list_files(c.root.string(), "");
    REQUIRE(top.ok());
    REQUIRE(top.listing.size() == 2);
    CHECK(top.listing[0] == "a.txt");
    CHECK(top.listing[1] == "sub/");
    const ToolResult sub = list_files(c.root.string(), "sub");
    REQUIRE(sub.ok());
    REQUIRE(sub.listing.size() == 1);
    CHECK(sub.listing[0] == "b.txt");
    CHECK(list_files(c.root.string(), "nope").status == "not_found");
}

TEST_CASE("search finds tokens case-insensitively") {
    TempCorpus c;
    c.put("a.py", "import flask");
    const SearchIndex index = build_search_index(c.root.string());
    const ToolResult hit = search_repository(index, "flask");
    REQUIRE(hit.ok());
    REQUIRE(hit.listing.size() == 1);
    CHECK(hit.listing[0] == "a.py");
    CHECK(search_repository(index, "FLASK").listing == hit.listing);
    CHECK(search_repository(index, "zzz").listing.empty());
    CHECK(search_repository(index, "!!!").status == "empty_query");
}

TEST_CASE("search completeness over every token of every file") {
    TempCorpus c;
    c.put("one.md", "alpha beta gamma");
    c.put("two.md", "beta delta");
    c.put("three.py", "def gamma(): return 'delta'");
    const SearchIndex index = build_search_index(c.root.string());
    for (const auto& [token, paths] : index.token_map) {
        const ToolResult r = search_repository(index, token);
        REQUIRE(r.ok());
        for (const std::string& p : paths) {
            CHECK(std::find(r.listing.begin(), r.listing.end(), p) != r.listing.end());
        }
    }
    const ToolResult beta = search_repository(index, "beta");
    REQUIRE(beta.listing.size() == 2);
    CHECK(beta.listing[0] == "one.md");
    CHECK(beta.listing[1] == "two.md");
}

TEST_CASE("tokenization drops one-character fragments and splits on punctuation") {
    const auto tokens = tokenize("API_v2: a b, or C3-po; x");
    CHECK(std::find(tokens.begin(), tokens.end(), "api") != tokens.end());
    CHECK(std::find(tokens.begin(), tokens.end(), "v2") != tokens.end());
    CHECK(std::find(tokens.begin(), tokens.end(), "c3") != tokens.end());
    CHECK(std::find(tokens.begin(), tokens.end(), "po") != tokens.end());
    CHECK(std::find(tokens.begin(), tokens.end(), "or") != tokens.end());
    CHECK(std::find(tokens.begin(), tokens.end(), "a") == tokens.end());
    CHECK(std::find(tokens.begin(), tokens.end(), "b") == tokens.end());
    CHECK(std::find(tokens.begin(), tokens.end(), "x") == tokens.end());
}

TEST_CASE("manifest soundness: every entry digest matches a fresh read") {
    TempCorpus c;
    c.put("a.txt", "first file");
    c.put("deep/nested/b.bin", std::string("\x00\x01\x02", 3));
    c.put("deep/c.txt", "third");
    const CorpusManifest m = build_manifest(c.root.string());
    REQUIRE(m.entries.size() == 3);
    for (const ManifestEntry& e : m.entries) {
        const ToolResult r = read_file(c.root.string(), e.path);
        REQUIRE(r.ok());
        CHECK(*r.file_digest == e.file_digest);
        CHECK(r.payload.size() == e.byte_length);
    }
}

TEST_CASE("obfuscated manifests hash path names") {
    TempCorpus c;
    c.put("visible-name.txt", "content");
    BuildManifestOptions opt;
    opt.obfuscate_paths = true;
    const CorpusManifest m = build_manifest(c.root.string(), opt);
    REQUIRE(m.entries.size() == 1);
    CHECK(m.paths_obfuscated);
    CHECK(m.entries[0].path == digest("visible-name.txt").hex());
    CHECK(m.entries[0].path.find("visible") == std::string::npos);
}

TEST_CASE("CorpusBackend dispatches all three tool kinds") {
    TempCorpus c;
    c.put("a.py", "import flask");
    c.put("docs/guide.md", "flask setup guide");
    CorpusBackend backend(c.root.string());
    ToolCall read{ToolKind::read_file, "a.py", 1};
    const ToolResult r1 = backend.execute(read);
    REQUIRE(r1.ok());
    CHECK(to_string(r1.payload) == "import flask");
    ToolCall list{ToolKind::list_files, "", 2};
    const ToolResult r2 = backend.execute(list);
    REQUIRE(r2.ok());
    CHECK(r2.listing == std::vector<std::string>{"a.py", "docs/"});
    ToolCall search{ToolKind::search_repository, "flask", 3};
    const ToolResult r3 = backend.execute(search);
    REQUIRE(r3.ok());
    CHECK(r3.listing == std::vector<std::string>{"a.py", "docs/guide.md"});
}

TEST_CASE("unreadable corpus path raises ManifestError") {
    CHECK_THROWS_AS(build_manifest("/nonexistent/aw-no-such-dir"), ManifestError);
}
