#include "mediator/rewriter.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

std::string_view to_string(DraftRisk c) {
    switch (c) {
        case DraftRisk::insult: return "insult";
        case DraftRisk::absolutism: return "absolutism";
        case DraftRisk::profanity: return "profanity";
        case DraftRisk::shouting: return "shouting";
        case DraftRisk::accusation: return "accusation";
    }
    return "insult";
}

double draft_risk_weight(DraftRisk c) {
    switch (c) {
        case DraftRisk::profanity: return 0.3;
        case DraftRisk::insult: return 0.3;
        case DraftRisk::accusation: return 0.2;
        case DraftRisk::absolutism: return 0.1;
        case DraftRisk::shouting: return 0.1;
    }
    return 0.0;
}

std::string_view to_string(Tone tone) { return tone == Tone::neutral ? "neutral" : "empathetic"; }

RewriteLexicons RewriteLexicons::load(const UserConfig& config) {
    const ResourcePaths& p = config.resources;
    RewriteLexicons lex;
    lex.profanity = text::Lexicon::load(resolve_resource(p, p.profanity, "profanity.txt"));
    lex.insult = text::Lexicon::load(resolve_resource(p, p.insult, "insult.txt"));
    lex.absolutism = text::Lexicon::load(resolve_resource(p, p.absolutism, "absolutism.txt"));
    lex.intensifiers = text::Lexicon::load(resolve_resource(p, p.intensifiers, "intensifiers.txt"));
    return lex;
}

namespace {

constexpr std::size_t kMinShoutLetters = 4;

bool is_second_person(const std::string& w) {
    static const std::set<std::string, std::less<>> kWords = {
        "you", "your", "you're", "yours", "yourself", "you've", "you'll", "u", "ur"};
    return kWords.count(w) > 0;
}

std::size_t letter_count(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(
        s.begin(), s.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); }));
}

std::size_t upper_count(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(
        s.begin(), s.end(), [](char c) { return std::isupper(static_cast<unsigned char>(c)); }));
}

bool loud_word(const text::Token& t) {
    return text::is_all_caps_word(t.text) && letter_count(t.text) >= kMinShoutLetters;
}

bool mostly_caps(std::string_view sentence) {
    const std::size_t letters = letter_count(sentence);
    return letters >= kMinShoutLetters && upper_count(sentence) * 5 >= letters * 3;
}

bool sentence_shouts(std::string_view sentence) {
    if (mostly_caps(sentence)) return true;
    const auto tokens = text::tokenize(sentence);
    return std::any_of(tokens.begin(), tokens.end(), loud_word);
}

std::vector<std::string> lowers(const std::vector<text::Token>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.lower);
    return out;
}

bool sentence_accuses(std::string_view sentence, const RewriteLexicons& lex) {
    const auto words = lowers(text::tokenize(sentence));
    const bool second_person = std::any_of(words.begin(), words.end(), is_second_person);
    if (!second_person) return false;
    return !lex.absolutism.find(words).empty() || !lex.insult.find(words).empty();
}

std::string capitalize_first(std::string s) {
    for (char& c : s) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            break;
        }
    }
    return s;
}

// Applies `fn` to every sentence span and copies everything else verbatim.
template <typename Fn>
std::string map_sentences(const std::string& body, Fn fn) {
    std::string out;
    std::size_t pos = 0;
    for (const auto& s : text::split_sentences(body)) {
        out.append(body, pos, s.begin - pos);
        out += fn(std::string_view(body).substr(s.begin, s.end - s.begin));
        pos = s.end;
    }
    out.append(body, pos, std::string::npos);
    return out;
}

// Replaces matched token ranges; `fn` maps the original covered text.
template <typename Fn>
std::string map_matches(const std::string& body, const text::Lexicon& lex, Fn fn, bool& changed) {
    const auto tokens = text::tokenize(body);
    const auto matches = lex.find(lowers(tokens));
    std::string out;
    std::size_t pos = 0;
    for (const auto& m : matches) {
        const std::size_t b = tokens[m.first].begin;
        const std::size_t e = tokens[m.first + m.count - 1].end;
        std::string replacement = fn(std::string_view(body).substr(b, e - b), m.term);
        if (replacement == body.substr(b, e - b)) continue;
        out.append(body, pos, b - pos);
        out += replacement;
        pos = e;
        changed = true;
    }
    out.append(body, pos, std::string::npos);
    return out;
}

std::string normalize_caps(const std::string& body, bool& changed) {
    return map_sentences(body, [&](std::string_view sentence) {
        std::string s(sentence);
        if (mostly_caps(sentence)) {
            s = capitalize_first(text::to_lower(sentence));
            // Restore the pronoun "I" and its contractions.
            std::string fixed;
            std::size_t pos = 0;
            for (const auto& t : text::tokenize(s)) {
                if (t.lower == "i" || t.lower.rfind("i'", 0) == 0) {
                    fixed.append(s, pos, t.begin - pos);
                    fixed += capitalize_first(t.text);
                    pos = t.end;
                }
            }
            fixed.append(s, pos, std::string::npos);
            s = fixed;
        } else {
            std::string out;
            std::size_t pos = 0;
            const auto tokens = text::tokenize(sentence);
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (!loud_word(tokens[i])) continue;
                out.append(s, pos, tokens[i].begin - pos);
                out += i == 0 ? capitalize_first(tokens[i].lower) : tokens[i].lower;
                pos = tokens[i].end;
            }
            out.append(s, pos, std::string::npos);
            s = out;
        }
        if (s != sentence) changed = true;
        return s;
    });
}

std::string mask_word(std::string_view original) {
    std::string out(original);
    bool first = true;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c))) {
            first = true;
            continue;
        }
        if (first) {
            first = false;
            continue;
        }
        c = '*';
    }
    return out;
}

std::string reframe_first_person(const std::string& body, const RewriteLexicons& lex, bool& changed) {
    return map_sentences(body, [&](std::string_view sentence) {
        std::string s(sentence);
        const auto words = lowers(text::tokenize(sentence));
        const bool already = words.size() >= 2 && words[0] == "i" && words[1] == "feel";
        if (already || !sentence_accuses(sentence, lex)) return s;
        // Lowercase the opening word unless it is the pronoun "I".
        if (!words.empty() && words[0] != "i" && !text::is_all_caps_word(text::tokenize(s)[0].text)) {
            for (char& c : s) {
                if (std::isalpha(static_cast<unsigned char>(c))) {
                    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                    break;
                }
            }
        }
        changed = true;
        return "I feel hurt when it seems like " + s;
    });
}

struct RuleOutput {
    std::string text;
    std::vector<std::string> transforms;
};

RuleOutput neutral_rules(const std::string& body, const RewriteLexicons& lex) {
    RuleOutput out{body, {}};
    bool changed = false;
    out.text = normalize_caps(out.text, changed);
    if (changed) out.transforms.emplace_back(transform::caps);

    changed = false;
    out.text = map_matches(
        out.text, lex.intensifiers,
        [&](std::string_view original, const std::string& term) {
            const std::string* soft = lex.intensifiers.value(term);
            if (soft == nullptr || soft->empty()) return std::string(original);
            const bool upper = std::isupper(static_cast<unsigned char>(original.front()));
            return upper ? capitalize_first(*soft) : *soft;
        },
        changed);
    if (changed) out.transforms.emplace_back(transform::intensifier);

    changed = false;
    out.text = map_matches(
        out.text, lex.profanity, [](std::string_view o, const std::string&) { return mask_word(o); },
        changed);
    if (changed) out.transforms.emplace_back(transform::profanity_mask);

    changed = false;
    out.text = map_matches(
        out.text, lex.insult, [](std::string_view o, const std::string&) { return mask_word(o); },
        changed);
    if (changed) out.transforms.emplace_back(transform::insult_mask);
    return out;
}

std::string build_preview(const std::vector<DraftRisk>& cats) {
    if (cats.empty()) return "No warning signs found; the draft reads as neutral.";
    std::vector<std::string> notes;
    for (DraftRisk c : cats) {
        switch (c) {
            case DraftRisk::insult:
                notes.emplace_back("it contains name-calling that readers will likely take as a personal attack");
                break;
            case DraftRisk::absolutism:
                notes.emplace_back("absolute words such as 'always' or 'never' can read as exaggeration");
                break;
            case DraftRisk::profanity:
                notes.emplace_back("it contains profanity");
                break;
            case DraftRisk::shouting:
                notes.emplace_back("all-caps text reads as shouting");
                break;
            case DraftRisk::accusation:
                notes.emplace_back("it is framed as an accusation aimed at the reader");
                break;
        }
    }
    std::string out = "Readers may interpret this draft as hostile: ";
    for (std::size_t i = 0; i < notes.size(); ++i) {
        if (i) out += "; ";
        out += notes[i];
    }
    return out + ". You decide whether to post it as is.";
}

}  // namespace

DraftAnalysis Rewriter::analyze_draft(std::string_view body) const {
    const auto words = text::lower_words(body);
    bool shouting = false;
    bool accusation = false;
    for (const auto& s : text::split_sentences(body)) {
        const std::string_view sentence = body.substr(s.begin, s.end - s.begin);
        shouting = shouting || sentence_shouts(sentence);
        accusation = accusation || sentence_accuses(sentence, lex_);
    }

    DraftAnalysis a;
    if (!lex_.insult.find(words).empty()) a.risk_categories.push_back(DraftRisk::insult);
    if (!lex_.absolutism.find(words).empty()) a.risk_categories.push_back(DraftRisk::absolutism);
    if (!lex_.profanity.find(words).empty()) a.risk_categories.push_back(DraftRisk::profanity);
    if (shouting) a.risk_categories.push_back(DraftRisk::shouting);
    if (accusation) a.risk_categories.push_back(DraftRisk::accusation);

    double sum = 0.0;
    for (DraftRisk c : a.risk_categories) sum += draft_risk_weight(c);
    a.risk = std::min(sum, 1.0);
    a.preview = build_preview(a.risk_categories);
    return a;
}

RewriteOffer Rewriter::generate_rewrites(std::string_view body, const DraftAnalysis& analysis) const {
    RewriteOffer offer;
    offer.original = std::string(body);
    if (analysis.risk == 0.0) return offer;

    RuleOutput neutral = neutral_rules(offer.original, lex_);
    if (!neutral.transforms.empty()) {
        offer.suggestions.push_back({Tone::neutral, neutral.text, neutral.transforms});
    }

    bool reframed = false;
    std::string empathetic = reframe_first_person(neutral.text, lex_, reframed);
    if (reframed) {
        std::vector<std::string> transforms = neutral.transforms;
        transforms.emplace_back(transform::first_person);
        offer.suggestions.push_back({Tone::empathetic, std::move(empathetic), std::move(transforms)});
    }
    return offer;
}

RewriteOffer Rewriter::with_provider_result(std::string_view body, const DraftAnalysis& analysis,
                                            bool provider_configured,
                                            const std::optional<std::string>& provider_text) const {
    RewriteOffer offer = generate_rewrites(body, analysis);
    if (!provider_configured || analysis.risk == 0.0) return offer;
    if (provider_text && !provider_text->empty() && *provider_text != body) {
        if (offer.suggestions.size() < RewriteOffer::kMaxSuggestions) {
            offer.suggestions.push_back(
                {Tone::neutral, *provider_text, {std::string(transform::provider)}});
        }
    } else {
        offer.provider_fallback = true;
        for (auto& s : offer.suggestions) s.transforms_applied.emplace_back(transform::provider_fallback);
    }
    return offer;
}

RewriteOffer Rewriter::generate_rewrites(std::string_view body, const DraftAnalysis& analysis,
                                         RewriteProvider* provider,
                                         std::chrono::milliseconds deadline) const {
    std::optional<std::string> answer;
    if (provider != nullptr && analysis.risk > 0.0) {
        try {
            answer = provider->rewrite(body, Tone::neutral, deadline);
        } catch (const std::exception&) {
            answer.reset();
        }
    }
    return with_provider_result(body, analysis, provider != nullptr, answer);
}

std::optional<std::string> HttpRewriteProvider::rewrite(std::string_view draft, Tone tone,
                                                        std::chrono::milliseconds deadline) {
    const json request{{"text", std::string(draft)}, {"tone", std::string(to_string(tone))}};
    auto response = gateway_.post_json(endpoint_, "/v1/rewrite", request.dump(), deadline);
    if (!response || response->status != 200) return std::nullopt;
    const json body = json::parse(response->body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
        return std::nullopt;
    }
    return body["text"].get<std::string>();
}

json to_json(const DraftAnalysis& a) {
    json cats = json::array();
    for (DraftRisk c : a.risk_categories) cats.push_back(std::string(to_string(c)));
    return json{{"risk_categories", cats}, {"risk", a.risk}, {"preview", a.preview}};
}

json to_json(const RewriteOffer& offer) {
    json suggestions = json::array();
    for (const auto& s : offer.suggestions) {
        suggestions.push_back({{"tone", std::string(to_string(s.tone))},
                               {"text", s.text},
                               {"transforms_applied", s.transforms_applied}});
    }
    return json{{"keep_original", {{"text", offer.original}, {"available", true}}},
                {"suggestions", suggestions},
                {"provider_fallback", offer.provider_fallback}};
}

}  // namespace mediator
