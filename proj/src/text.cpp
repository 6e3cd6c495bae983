#include "mediator/text.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mediator/errors.hpp"

namespace mediator::text {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_all_caps_word(std::string_view word) {
    int letters = 0;
    for (char c : word) {
        const auto u = static_cast<unsigned char>(c);
        if (std::islower(u)) return false;
        if (std::isupper(u)) ++letters;
    }
    return letters > 0;
}

std::vector<Token> tokenize(std::string_view body) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < body.size()) {
        if (!is_word_char(body[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < body.size()) {
            if (is_word_char(body[j])) {
                ++j;
            } else if (body[j] == '\'' && j + 1 < body.size() && is_word_char(body[j + 1])) {
                ++j;
            } else {
                break;
            }
        }
        Token t;
        t.text = std::string(body.substr(i, j - i));
        t.lower = to_lower(t.text);
        t.begin = i;
        t.end = j;
        out.push_back(std::move(t));
        i = j;
    }
    return out;
}

std::vector<std::string> lower_words(std::string_view body) {
    std::vector<std::string> out;
    for (auto& t : tokenize(body)) out.push_back(std::move(t.lower));
    return out;
}

std::vector<Sentence> split_sentences(std::string_view body) {
    std::vector<Sentence> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t end, char term) {
        std::size_t b = start;
        std::size_t e = end;
        while (b < e && is_space(body[b])) ++b;
        while (e > b && is_space(body[e - 1])) --e;
        if (e > b) out.push_back({b, e, term});
    };

    std::size_t i = 0;
    while (i < body.size()) {
        const char c = body[i];
        const bool decimal_point = c == '.' && i > 0 && i + 1 < body.size() &&
                                   std::isdigit(static_cast<unsigned char>(body[i - 1])) &&
                                   std::isdigit(static_cast<unsigned char>(body[i + 1]));
        if ((c == '.' || c == '!' || c == '?') && !decimal_point) {
            // The last mark of a run like "?!" decides the sentence type; a
            // question mark anywhere in the run marks it interrogative.
            std::size_t j = i;
            char term = c;
            while (j < body.size() && (body[j] == '.' || body[j] == '!' || body[j] == '?')) {
                if (body[j] == '?') term = '?';
                ++j;
            }
            emit(i, term);
            start = j;
            i = j;
        } else if (c == '\n') {
            emit(i, '\0');
            start = i + 1;
            ++i;
        } else {
            ++i;
        }
    }
    emit(body.size(), '\0');
    return out;
}

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open lexicon " + path);
    Lexicon lex;
    std::string line;
    while (std::getline(in, line)) lex.add_line(line);
    return lex;
}

Lexicon Lexicon::from_terms(const std::vector<std::string>& lines) {
    Lexicon lex;
    for (const auto& l : lines) lex.add_line(l);
    return lex;
}

void Lexicon::add_line(std::string_view raw) {
    std::string line = trim(raw);
    if (line.empty() || line.front() == '#') return;
    std::string term = line;
    std::string value;
    if (auto tab = line.find('\t'); tab != std::string::npos) {
        term = trim(line.substr(0, tab));
        value = trim(line.substr(tab + 1));
    }
    // Normalize whitespace inside multi-word terms.
    std::string normalized;
    std::size_t words = 0;
    for (const auto& w : lower_words(term)) {
        if (!normalized.empty()) normalized.push_back(' ');
        normalized += w;
        ++words;
    }
    if (normalized.empty()) return;
    max_words_ = std::max(max_words_, words);
    terms_[normalized] = value;
}

bool Lexicon::contains(std::string_view lower_term) const {
    return terms_.find(lower_term) != terms_.end();
}

const std::string* Lexicon::value(std::string_view lower_term) const {
    auto it = terms_.find(lower_term);
    return it == terms_.end() ? nullptr : &it->second;
}

std::vector<Lexicon::Match> Lexicon::find(const std::vector<std::string>& tokens) const {
    std::vector<Match> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::size_t matched = 0;
        const std::size_t limit = std::min(max_words_, tokens.size() - i);
        for (std::size_t n = limit; n >= 1; --n) {
            std::string phrase = tokens[i];
            for (std::size_t k = 1; k < n; ++k) phrase += " " + tokens[i + k];
            if (terms_.count(phrase)) {
                out.push_back({i, n, std::move(phrase)});
                matched = n;
                break;
            }
        }
        i += matched ? matched : 1;
    }
    return out;
}

std::vector<std::string> Lexicon::matches(const std::vector<std::string>& tokens) const {
    std::vector<std::string> out;
    for (auto& m : find(tokens)) out.push_back(std::move(m.term));
    return out;
}

}  // namespace mediator::text
