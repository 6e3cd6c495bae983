#include "mediator/integrity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "json_util.hpp"
#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Claim extraction

namespace {

// Closed-class and very common verbs. Regular past tense is caught by suffix.
const std::unordered_set<std::string_view>& verb_lexicon() {
    static const std::unordered_set<std::string_view> verbs = {
        "is",       "are",      "was",      "were",     "be",       "been",     "being",
        "am",       "has",      "have",     "had",      "do",       "does",     "did",
        "will",     "would",    "can",      "could",    "shall",    "should",   "may",
        "might",    "must",     "isn't",    "aren't",   "wasn't",   "weren't",  "doesn't",
        "don't",    "didn't",   "won't",    "can't",    "causes",   "cause",    "cures",
        "cure",     "contains", "contain",  "kills",    "kill",     "makes",    "make",
        "made",     "says",     "say",      "said",     "shows",    "show",     "showed",
        "shown",    "finds",    "find",     "found",    "wins",     "win",      "won",
        "loses",    "lose",     "lost",     "rises",    "rise",     "rose",     "falls",
        "fall",     "fell",     "gives",    "give",     "gave",     "takes",    "take",
        "took",     "gets",     "get",      "got",      "goes",     "go",       "went",
        "comes",    "come",     "came",     "leads",    "lead",     "led",      "reduces",
        "reduce",   "increases","increase", "prevents", "prevent",  "protects", "protect",
        "spreads",  "spread",   "runs",     "run",      "ran",      "holds",    "hold",
        "held",     "means",    "mean",     "meant",    "knows",    "know",     "knew",
        "builds",   "build",    "built",    "pays",     "pay",      "paid",     "sells",
        "sell",     "sold",     "costs",    "cost",     "becomes",  "become",   "became",
        "begins",   "begin",    "began",    "grows",    "grow",     "grew",     "keeps",
        "keep",     "kept",     "leaves",   "leave",    "left",     "meets",    "meet",
        "met",      "sees",     "see",      "saw",      "seen",     "tells",    "tell",
        "told",     "thinks",   "think",    "thought",  "writes",   "write",    "wrote",
        "works",    "work",     "needs",    "need",     "plans",    "bans",     "ban",
        "allows",   "allow",    "requires", "require",  "hits",     "hit",      "struck",
        "voted",    "votes",    "vote",     "claims",   "claim",    "reports",  "report",
        "confirms", "confirm",  "denies",   "deny",     "owns",     "own",      "uses",
        "use",      "changes",  "change",   "affects",  "affect",   "damages",  "damage",
        "doubles",  "double",   "triples",  "drops",    "drop",     "lowers",   "lower",
        "raises",   "raise",    "boosts",   "boost",    "cuts",     "cut",      "closes",
        "close",    "opens",    "open",     "melts",    "melt",     "orbits",   "orbit",
    };
    return verbs;
}

std::string join_lower(const std::vector<text::Token>& tokens) {
    std::string key;
    for (const auto& t : tokens) {
        if (!key.empty()) key.push_back(' ');
        key += t.lower;
    }
    return key;
}

bool starts_upper(const std::string& s) {
    return !s.empty() && std::isupper(static_cast<unsigned char>(s.front()));
}

bool has_digit(const std::string& s) {
    return std::any_of(s.begin(), s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::vector<std::string> sentence_entities(const std::vector<text::Token>& tokens) {
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const bool entity_like = (i > 0 && starts_upper(tokens[i].text)) || has_digit(tokens[i].text);
        if (entity_like) {
            if (!current.empty()) current.push_back(' ');
            current += tokens[i].text;
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

}  // namespace

bool looks_like_verb(std::string_view t) {
    if (verb_lexicon().count(t)) return true;
    return t.size() >= 4 && t.substr(t.size() - 2) == "ed";
}

std::vector<Claim> RuleClaimExtractor::extract(const PostContent& post) const {
    std::vector<Claim> claims;
    const std::string& body = post.body;
    for (const text::Sentence& s : text::split_sentences(body)) {
        if (s.terminator == '?') continue;
        const std::string_view span(body.data() + s.begin, s.end - s.begin);
        std::vector<text::Token> tokens = text::tokenize(span);
        if (tokens.size() < 4) continue;
        const bool has_verb = std::any_of(tokens.begin(), tokens.end(),
                                          [](const text::Token& t) { return looks_like_verb(t.lower); });
        if (!has_verb) continue;
        Claim c;
        c.claim_key = join_lower(tokens);
        c.surface_text = std::string(span);
        c.entities = sentence_entities(tokens);
        claims.push_back(std::move(c));
    }
    return claims;
}

std::vector<Claim> extract_claims(const PostContent& post) {
    return RuleClaimExtractor{}.extract(post);
}

// ---------------------------------------------------------------------------
// Fact database

namespace {

std::vector<std::string> token_set(std::string_view key) {
    std::vector<std::string> words = text::lower_words(key);
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return words;
}

std::size_t intersection_size(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

std::string normalize_key(std::string_view key) {
    std::string out;
    for (const auto& w : text::lower_words(key)) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

}  // namespace

FactRecord fact_record_from_json(const json& j) {
    detail::ObjectReader r(j, "");
    FactRecord rec;
    rec.claim_key = normalize_key(r.string("claim_key"));
    const std::string stance = r.string("stance");
    if (stance == "supports") {
        rec.stance = Stance::supports;
    } else if (stance == "contradicts") {
        rec.stance = Stance::contradicts;
    } else {
        throw ValidationError("stance", "expected 'supports' or 'contradicts'");
    }
    rec.source_url = r.string("source_url");
    rec.source_name = r.string_or("source_name", "");
    r.finish();
    if (rec.claim_key.empty()) throw ValidationError("claim_key", "must contain a word");
    if (rec.source_url.empty()) throw ValidationError("source_url", "must not be empty");
    return rec;
}

json to_json(const FactRecord& r) {
    return json{{"claim_key", r.claim_key},
                {"stance", r.stance == Stance::supports ? "supports" : "contradicts"},
                {"source_url", r.source_url},
                {"source_name", r.source_name}};
}

FactDatabase::FactDatabase(std::vector<FactRecord> records) : records_(std::move(records)) {
    for (auto& r : records_) r.claim_key = normalize_key(r.claim_key);
    build_index();
}

FactDatabase FactDatabase::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open fact database " + path);
    std::vector<FactRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(fact_record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw LoadError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return FactDatabase(std::move(records));
}

void FactDatabase::build_index() {
    record_tokens_.clear();
    by_key_.clear();
    by_token_.clear();
    record_tokens_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        by_key_[records_[i].claim_key].push_back(i);
        record_tokens_.push_back(token_set(records_[i].claim_key));
        for (const auto& tok : record_tokens_.back()) by_token_[tok].push_back(i);
    }
}

std::vector<FactMatch> FactDatabase::query(const Claim& claim) const {
    struct Hit {
        std::size_t index;
        double similarity;
    };
    std::vector<Hit> hits;
    std::set<std::size_t> taken;

    const std::string key = normalize_key(claim.claim_key);
    if (auto it = by_key_.find(key); it != by_key_.end()) {
        for (std::size_t i : it->second) {
            hits.push_back({i, 1.0});
            taken.insert(i);
        }
    }

    const std::vector<std::string> claim_tokens = token_set(key);
    std::set<std::size_t> candidates;
    for (const auto& tok : claim_tokens) {
        if (auto it = by_token_.find(tok); it != by_token_.end()) {
            candidates.insert(it->second.begin(), it->second.end());
        }
    }
    for (std::size_t i : candidates) {
        if (taken.count(i)) continue;
        const std::size_t inter = intersection_size(claim_tokens, record_tokens_[i]);
        const std::size_t uni = claim_tokens.size() + record_tokens_[i].size() - inter;
        if (uni == 0) continue;
        // Integer comparison keeps the 0.6 boundary exact.
        if (kJaccardDenominator * inter >= kJaccardNumerator * uni) {
            hits.push_back({i, static_cast<double>(inter) / static_cast<double>(uni)});
        }
    }

    std::stable_sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        if (records_[a.index].source_name != records_[b.index].source_name) {
            return records_[a.index].source_name < records_[b.index].source_name;
        }
        return a.index < b.index;
    });

    std::vector<FactMatch> out;
    out.reserve(hits.size());
    for (const Hit& h : hits) out.push_back({records_[h.index], h.similarity});
    return out;
}

std::vector<FactMatch> query_fact_db(const Claim& claim, const FactSource& db) {
    return db.query(claim);
}

// ---------------------------------------------------------------------------
// Stylometric AI-text detector

namespace {

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double population_variance(const std::vector<double>& xs, double mean) {
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

}  // namespace

StylometricFeatures stylometric_features(std::string_view body) {
    StylometricFeatures f;
    const std::vector<std::string> words = text::lower_words(body);
    f.tokens = words.size();
    if (words.empty()) return f;

    std::set<std::string_view> types(words.begin(), words.end());
    f.type_token_ratio = static_cast<double>(types.size()) / static_cast<double>(words.size());

    std::vector<double> lengths;
    for (const auto& s : text::split_sentences(body)) {
        const auto n = text::tokenize(body.substr(s.begin, s.end - s.begin)).size();
        if (n > 0) lengths.push_back(static_cast<double>(n));
    }
    if (lengths.size() >= 2) {
        const double m = mean_of(lengths);
        f.sentence_length_dispersion = population_variance(lengths, m) / (m * m);
    }

    if (words.size() >= 3) {
        std::set<std::string> trigrams;
        const std::size_t total = words.size() - 2;
        for (std::size_t i = 0; i < total; ++i) {
            trigrams.insert(words[i] + ' ' + words[i + 1] + ' ' + words[i + 2]);
        }
        f.repeated_trigram_rate = 1.0 - static_cast<double>(trigrams.size()) / static_cast<double>(total);
    }

    std::map<std::string_view, std::size_t> last_seen;
    std::vector<double> gaps;
    for (std::size_t i = 0; i < words.size(); ++i) {
        auto [it, inserted] = last_seen.try_emplace(words[i], i);
        if (!inserted) {
            gaps.push_back(static_cast<double>(i - it->second));
            it->second = i;
        }
    }
    if (!gaps.empty()) {
        const double m = mean_of(gaps);
        const double sd = std::sqrt(population_variance(gaps, m));
        f.burstiness = (sd - m) / (sd + m);
    }
    return f;
}

double StylometricDetector::logit(const StylometricFeatures& f) {
    return -1.0 + 1.5 * (1.0 - f.type_token_ratio) + 2.5 * f.repeated_trigram_rate -
           1.0 * std::min(f.sentence_length_dispersion, 1.0) - 1.0 * f.burstiness;
}

double StylometricDetector::probability(std::string_view body) const {
    const StylometricFeatures f = stylometric_features(body);
    if (f.tokens == 0) return 0.5;
    return 1.0 / (1.0 + std::exp(-logit(f)));
}

double detect_ai_generated(std::string_view body) { return StylometricDetector{}.probability(body); }

// ---------------------------------------------------------------------------
// Bias

std::string_view to_string(BiasLabel label) {
    switch (label) {
        case BiasLabel::left: return "left";
        case BiasLabel::center: return "center";
        case BiasLabel::right: return "right";
    }
    return "center";
}

BiasLabel bias_label_for(double score) {
    if (score < -0.2) return BiasLabel::left;
    if (score > 0.2) return BiasLabel::right;
    return BiasLabel::center;
}

LexiconBiasEstimator::LexiconBiasEstimator(text::Lexicon left, text::Lexicon right)
    : left_(std::move(left)), right_(std::move(right)) {}

LexiconBiasEstimator LexiconBiasEstimator::load(const std::string& left_path,
                                                const std::string& right_path) {
    return LexiconBiasEstimator(text::Lexicon::load(left_path), text::Lexicon::load(right_path));
}

BiasEstimate LexiconBiasEstimator::estimate(std::string_view body) const {
    const std::vector<std::string> words = text::lower_words(body);
    BiasEstimate e;
    e.left_hits = left_.matches(words).size();
    e.right_hits = right_.matches(words).size();
    const double total = static_cast<double>(std::max<std::size_t>(e.left_hits + e.right_hits, 1));
    e.score = (static_cast<double>(e.right_hits) - static_cast<double>(e.left_hits)) / total;
    e.label = bias_label_for(e.score);
    return e;
}

// ---------------------------------------------------------------------------
// Assessment

namespace {

std::string fixed(double v, int places) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

std::string fact_explanation(const IntegrityScore& s) {
    if (s.total_claims == 0) {
        return "No checkable factual claims found, so the fact score stays at 1.00.";
    }
    std::size_t covered = 0;
    for (const auto& v : s.claims) covered += v.sources.empty() ? 0 : 1;
    std::string text = std::to_string(s.total_claims) + " claim(s) found; " +
                       std::to_string(covered) + " matched fact-check sources and " +
                       std::to_string(s.conflicts) + " contradicted by at least one source.";
    for (const auto& v : s.claims) {
        if (!v.conflict) continue;
        for (const auto& m : v.sources) {
            if (m.record.stance == Stance::contradicts) {
                text += " \"" + v.claim.surface_text + "\" is disputed by " +
                        (m.record.source_name.empty() ? m.record.source_url : m.record.source_name) +
                        ".";
                break;
            }
        }
    }
    if (covered < s.total_claims) {
        text += " Claims without coverage do not lower the score.";
    }
    return text + " Fact score " + fixed(s.s_fact, 2) + ".";
}

}  // namespace

IntegrityScore assess_post(const PostContent& post, const IntegrityComponents& c) {
    if (c.facts == nullptr) throw UsageError("assess_post needs a fact source");
    static const RuleClaimExtractor kDefaultExtractor;
    const ClaimExtractor& extractor = c.extractor ? *c.extractor : kDefaultExtractor;

    IntegrityScore s;
    std::set<std::string> seen_links;
    for (Claim& claim : extractor.extract(post)) {
        ClaimVerdict v;
        v.sources = c.facts->query(claim);
        v.conflict = !v.sources.empty() &&
                     std::any_of(v.sources.begin(), v.sources.end(), [](const FactMatch& m) {
                         return m.record.stance == Stance::contradicts;
                     });
        for (const auto& m : v.sources) {
            if (seen_links.insert(m.record.source_url).second) s.source_links.push_back(m.record.source_url);
        }
        if (v.conflict) ++s.conflicts;
        v.claim = std::move(claim);
        s.claims.push_back(std::move(v));
    }
    s.total_claims = s.claims.size();
    s.s_fact = 1.0 - static_cast<double>(s.conflicts) /
                         static_cast<double>(std::max<std::size_t>(s.total_claims, 1));
    s.explanations.fact = fact_explanation(s);

    if (c.ai_detector == nullptr) {
        s.explanations.ai = "AI-generation check unavailable: no detector configured.";
    } else {
        try {
            const double p = std::clamp(c.ai_detector->probability(post.body), 0.0, 1.0);
            s.s_ai = p;
            s.explanations.ai = "Estimated " + fixed(p * 100.0, 0) +
                                "% likelihood that the text is machine-generated, from writing-style "
                                "signals (vocabulary variety, repetition, sentence rhythm). Treat it "
                                "as a hint, not a verdict.";
        } catch (const std::exception& e) {
            s.explanations.ai = std::string("AI-generation check unavailable: ") + e.what();
        }
    }

    if (c.bias == nullptr) {
        s.explanations.bias = "Bias estimate unavailable: no lean lexicon loaded.";
    } else {
        try {
            const BiasEstimate b = c.bias->estimate(post.body);
            s.s_bias = b.score;
            s.bias_label = b.label;
            if (b.left_hits + b.right_hits == 0) {
                s.explanations.bias = "No politically coded vocabulary found; lean reads as center.";
            } else {
                s.explanations.bias = "Lean " + fixed(b.score, 2) + " (" +
                                      std::string(to_string(b.label)) + "): " +
                                      std::to_string(b.right_hits) + " right-coded vs " +
                                      std::to_string(b.left_hits) +
                                      " left-coded terms. Word choice only, not the author's intent.";
            }
        } catch (const std::exception& e) {
            s.explanations.bias = std::string("Bias estimate unavailable: ") + e.what();
        }
    }

    if (!post.media.empty()) {
        s.media_unassessed = true;
        s.explanations.media = std::to_string(post.media.size()) +
                               " media attachment(s) unassessed; only the text was analyzed.";
    }
    return s;
}

json to_json(const IntegrityScore& s) {
    json claims = json::array();
    for (const auto& v : s.claims) {
        json sources = json::array();
        for (const auto& m : v.sources) {
            json r = to_json(m.record);
            r["similarity"] = m.similarity;
            sources.push_back(std::move(r));
        }
        claims.push_back({{"claim_key", v.claim.claim_key},
                          {"surface_text", v.claim.surface_text},
                          {"entities", v.claim.entities},
                          {"conflict", v.conflict},
                          {"sources", sources}});
    }
    json j{{"s_fact", s.s_fact},
           {"s_ai", s.s_ai ? json(*s.s_ai) : json(nullptr)},
           {"s_bias", s.s_bias ? json(*s.s_bias) : json(nullptr)},
           {"bias_label", std::string(to_string(s.bias_label))},
           {"total_claims", s.total_claims},
           {"conflicts", s.conflicts},
           {"claims", claims},
           {"explanations",
            {{"fact", s.explanations.fact},
             {"ai", s.explanations.ai},
             {"bias", s.explanations.bias},
             {"media", s.explanations.media}}},
           {"source_links", s.source_links},
           {"media_unassessed", s.media_unassessed}};
    return j;
}

}  // namespace mediator
