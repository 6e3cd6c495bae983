#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mediator::text {

struct Token {
    std::string text;    // as written
    std::string lower;   // ASCII-lowercased
    std::size_t begin = 0;
    std::size_t end = 0;  // one past the last byte
};

// Word tokens: maximal runs of ASCII letters, digits, and inner apostrophes.
std::vector<Token> tokenize(std::string_view body);

std::vector<std::string> lower_words(std::string_view body);

struct Sentence {
    std::size_t begin = 0;  // first non-space byte
    std::size_t end = 0;    // one past the last byte before the terminator
    char terminator = '\0';  // '.', '!', '?', or '\0' at a line break / end of text
};

// Splits on '.', '!', '?' (runs collapse) and line breaks. Empty sentences are
// dropped. A period between two digits ("3.5") does not end a sentence.
std::vector<Sentence> split_sentences(std::string_view body);

std::string to_lower(std::string_view s);
bool is_all_caps_word(std::string_view word);

// One term per line; blank lines and lines starting with '#' are skipped. A
// line may carry a tab-separated value (a weight or a replacement word);
// terms without one map to an empty value. Multi-word terms are allowed.
class Lexicon {
public:
    Lexicon() = default;
    static Lexicon load(const std::string& path);
    static Lexicon from_terms(const std::vector<std::string>& lines);

    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    bool contains(std::string_view lower_term) const;
    const std::string* value(std::string_view lower_term) const;

    struct Match {
        std::size_t first = 0;  // token index
        std::size_t count = 0;  // tokens covered
        std::string term;
    };

    // Non-overlapping matches against a lowercase token sequence, longest term
    // first at each position, in order of appearance.
    std::vector<Match> find(const std::vector<std::string>& lower_tokens) const;
    std::vector<std::string> matches(const std::vector<std::string>& lower_tokens) const;

private:
    void add_line(std::string_view line);

    std::map<std::string, std::string, std::less<>> terms_;
    std::size_t max_words_ = 1;
};

}  // namespace mediator::text
