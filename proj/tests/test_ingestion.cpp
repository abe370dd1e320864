#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>

#include "doctest.h"
#include "privpol/ingestion.hpp"
#include "privpol/rng.hpp"

using namespace privpol;
namespace fs = std::filesystem;

namespace {

std::string words(std::size_t n, const std::string& lead = "This privacy policy") {
    static const char* filler[] = {"we", "use", "the", "data", "that", "you", "give", "to", "us", "and"};
    std::string out = lead;
    std::size_t count = whitespace_word_count(lead);
    for (std::size_t i = 0; count < n; ++i, ++count) out += std::string(" ") + filler[i % 10];
    return out;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / ("privpol-ingest-" + name + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    void put(const std::string& name, const std::string& body) const {
        fs::create_directories((path / name).parent_path());
        std::ofstream(path / name, std::ios::binary) << body;
    }
};

}  // namespace

TEST_CASE("sanitize strips tags and keeps content") {
    CHECK(sanitize_markup("<p>We collect data.</p>") == "We collect data.");
    CHECK(sanitize_markup("plain text") == "plain text");
    CHECK(sanitize_markup("<div><script>x()</script>Hello &amp; bye</div>") == "Hello & bye");
}

TEST_CASE("sanitize drops style and comments, decodes entities") {
    CHECK(sanitize_markup("<style>p{color:red}</style>a<!-- hidden -->b") == "a b");
    CHECK(sanitize_markup("x&nbsp;&quot;z&quot; &#65;&#x42;") == "x \"z\" AB");
    // decoded markup is markup again, so the fixpoint strips it too
    CHECK(sanitize_markup("x &lt;y&gt; z") == "x z");
    CHECK(sanitize_markup("  lots \n\t of   space  ") == "lots of space");
    CHECK(sanitize_markup("") == "");
}

TEST_CASE("sanitize is idempotent") {
    const std::string alphabet = "<>/&;#ab scriptyle!-amplt";
    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        const auto len = uniform_index(rng, 40);
        for (std::uint64_t i = 0; i < len; ++i) s += alphabet[uniform_index(rng, alphabet.size())];
        const auto once = sanitize_markup(s);
        CHECK_MESSAGE(sanitize_markup(once) == once, "input: " << s);
    }
    const auto tricky = sanitize_markup("&amp;lt;b&amp;gt;x");
    CHECK(sanitize_markup(tricky) == tricky);
}

TEST_CASE("word count and hash") {
    CHECK(whitespace_word_count("") == 0);
    CHECK(whitespace_word_count("  one two\tthree\n") == 3);
    CHECK(content_hash("abc") == content_hash("abc"));
    CHECK(content_hash("abc") != content_hash("abd"));
}

TEST_CASE("validity rules") {
    const auto ok = is_valid_policy(words(60));
    CHECK(ok.valid);
    CHECK(ok.reason == "ok");

    const auto short_text = is_valid_policy(words(40));
    CHECK_FALSE(short_text.valid);
    CHECK(short_text.reason == "length");

    const auto no_keyword = is_valid_policy(words(80, "Our terms"));
    CHECK_FALSE(no_keyword.valid);
    CHECK(no_keyword.reason == "keyword");

    const auto empty = is_valid_policy("");
    CHECK_FALSE(empty.valid);
    CHECK(empty.reason == "length");

    CHECK(is_valid_policy(words(60, "Legal notice")).valid);
    CHECK(is_valid_policy(words(50)).valid);
    CHECK(is_valid_policy(words(49)).reason == "length");
}

TEST_CASE("validity: keyword is checked before length") {
    CHECK(is_valid_policy(words(10, "Our terms")).reason == "keyword");
}

TEST_CASE("validity: language heuristic and format") {
    std::string gibberish = "privacy policy";
    for (int i = 0; i < 70; ++i) gibberish += " qzx" + std::to_string(i);
    const auto v = is_valid_policy(gibberish);
    CHECK_FALSE(v.valid);
    CHECK(v.reason == "language");

    CHECK(is_valid_policy("%PDF-1.4 " + words(60)).reason == "format");

    ValidityRules loose;
    loose.min_stopword_ratio = 0.0;
    CHECK(is_valid_policy(gibberish, loose).valid);
}

TEST_CASE("corpus: counts valid and invalid files") {
    TempDir dir("counts");
    dir.put("a.txt", words(60, "First privacy policy"));
    dir.put("b.html", "<html><body>" + words(70, "Second privacy policy") + "</body></html>");
    dir.put("sub/c.htm", words(55, "Third legal text"));
    dir.put("d.txt", words(20));
    dir.put("e.txt", words(80, "Unrelated terms"));
    dir.put("ignored.pdf", words(80));

    const auto load = load_corpus(dir.path);
    REQUIRE(load.policies.size() == 3);
    CHECK(load.skipped_invalid == 2);
    CHECK(load.skipped_duplicate == 0);
    CHECK(load.policies[0].id == "a.txt");
    CHECK(load.policies[1].id == "b.html");
    CHECK(load.policies[2].id == "sub/c.htm");
    for (const auto& p : load.policies) {
        CHECK(p.word_count == whitespace_word_count(p.sanitized_text));
        CHECK(p.content_hash == content_hash(p.sanitized_text));
    }
    CHECK(load.policies[1].sanitized_text.find('<') == std::string::npos);
}

TEST_CASE("corpus: duplicates keep the first path") {
    TempDir dir("dups");
    const auto body = words(60);
    dir.put("z.txt", body);
    dir.put("a.html", "<p>" + body + "</p>");
    const auto load = load_corpus(dir.path);
    REQUIRE(load.policies.size() == 1);
    CHECK(load.policies[0].id == "a.html");
    CHECK(load.skipped_duplicate == 1);
}

TEST_CASE("corpus: empty and missing directories") {
    TempDir dir("empty");
    const auto load = load_corpus(dir.path);
    CHECK(load.policies.empty());
    CHECK(load.skipped_invalid == 0);
    CHECK_THROWS_AS(load_corpus(dir.path / "missing"), std::runtime_error);
}
