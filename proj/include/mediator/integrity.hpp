#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "mediator/text.hpp"
#include "mediator/types.hpp"

namespace mediator {

struct Claim {
    std::string claim_key;     // lowercase tokens joined by single spaces
    std::string surface_text;  // contiguous span of the post body
    std::vector<std::string> entities;
};

// Rule-based declarative-sentence extractor. A sentence yields a claim when it
// has at least four word tokens, contains a verb token, and is not a question.
class ClaimExtractor {
public:
    virtual ~ClaimExtractor() = default;
    virtual std::vector<Claim> extract(const PostContent& post) const = 0;
};

class RuleClaimExtractor final : public ClaimExtractor {
public:
    std::vector<Claim> extract(const PostContent& post) const override;
};

std::vector<Claim> extract_claims(const PostContent& post);

// Exposed for tests: the verb test used by the extractor.
bool looks_like_verb(std::string_view lower_token);

enum class Stance { supports, contradicts };

struct FactRecord {
    std::string claim_key;
    Stance stance = Stance::supports;
    std::string source_url;
    std::string source_name;
};

struct FactMatch {
    FactRecord record;
    double similarity = 0.0;  // token-set Jaccard, 1.0 for an exact key hit
};

// Something that can be asked about a claim. The baseline is the local
// database; a remote fact-check client would implement the same interface.
class FactSource {
public:
    virtual ~FactSource() = default;
    virtual std::vector<FactMatch> query(const Claim& claim) const = 0;
};

class FactDatabase final : public FactSource {
public:
    static constexpr int kJaccardNumerator = 3;    // threshold 0.6 == 3/5
    static constexpr int kJaccardDenominator = 5;

    FactDatabase() = default;
    explicit FactDatabase(std::vector<FactRecord> records);

    // JSON-lines, one FactRecord per line. Throws LoadError naming the line.
    static FactDatabase load(const std::string& path);

    std::size_t size() const { return records_.size(); }
    const std::vector<FactRecord>& records() const { return records_; }

    // Exact claim_key matches plus records whose token-set Jaccard similarity
    // is at least 0.6, ordered by similarity (desc) then source_name.
    std::vector<FactMatch> query(const Claim& claim) const override;

private:
    void build_index();

    std::vector<FactRecord> records_;
    std::vector<std::vector<std::string>> record_tokens_;  // sorted, unique
    std::unordered_map<std::string, std::vector<std::size_t>> by_key_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_token_;
};

std::vector<FactMatch> query_fact_db(const Claim& claim, const FactSource& db);

FactRecord fact_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FactRecord& r);

// ---------------------------------------------------------------------------
// AI-generated text probability.

class AiDetector {
public:
    virtual ~AiDetector() = default;
    // Probability in [0,1]. May throw; the assessor then reports the component
    // as unavailable.
    virtual double probability(std::string_view body) const = 0;
};

struct StylometricFeatures {
    std::size_t tokens = 0;
    double type_token_ratio = 0.0;
    double sentence_length_dispersion = 0.0;  // variance / mean^2 of sentence lengths
    double repeated_trigram_rate = 0.0;       // 1 - distinct/total trigrams
    double burstiness = 0.0;                  // (sd - mean)/(sd + mean) of recurrence gaps
};

StylometricFeatures stylometric_features(std::string_view body);

// Logistic combination of the stylometric features. Empty text scores 0.5.
class StylometricDetector final : public AiDetector {
public:
    double probability(std::string_view body) const override;
    static double logit(const StylometricFeatures& f);
};

double detect_ai_generated(std::string_view body);

// ---------------------------------------------------------------------------
// Political lean.

enum class BiasLabel { left, center, right };

std::string_view to_string(BiasLabel label);

// -0.2 and +0.2 themselves map to center.
BiasLabel bias_label_for(double score);

struct BiasEstimate {
    double score = 0.0;  // in [-1, 1]
    BiasLabel label = BiasLabel::center;
    std::size_t left_hits = 0;
    std::size_t right_hits = 0;
};

class BiasEstimator {
public:
    virtual ~BiasEstimator() = default;
    virtual BiasEstimate estimate(std::string_view body) const = 0;
};

class LexiconBiasEstimator final : public BiasEstimator {
public:
    LexiconBiasEstimator(text::Lexicon left, text::Lexicon right);
    // Throws LoadError when either list is missing.
    static LexiconBiasEstimator load(const std::string& left_path, const std::string& right_path);

    BiasEstimate estimate(std::string_view body) const override;

private:
    text::Lexicon left_;
    text::Lexicon right_;
};

// ---------------------------------------------------------------------------
// The integrity meter.

struct ClaimVerdict {
    Claim claim;
    std::vector<FactMatch> sources;
    bool conflict = false;
};

struct IntegrityExplanations {
    std::string fact;
    std::string ai;
    std::string bias;
    std::string media;  // empty when the post has no media
};

struct IntegrityScore {
    double s_fact = 1.0;
    std::optional<double> s_ai;    // nullopt when the detector is unavailable
    std::optional<double> s_bias;  // nullopt when the estimator is unavailable
    BiasLabel bias_label = BiasLabel::center;
    std::size_t total_claims = 0;
    std::size_t conflicts = 0;
    std::vector<ClaimVerdict> claims;
    IntegrityExplanations explanations;
    std::vector<std::string> source_links;
    bool media_unassessed = false;
};

struct IntegrityComponents {
    const ClaimExtractor* extractor = nullptr;  // defaults to the rule extractor
    const FactSource* facts = nullptr;          // required
    const AiDetector* ai_detector = nullptr;    // nullptr: unavailable
    const BiasEstimator* bias = nullptr;        // nullptr: unavailable
};

IntegrityScore assess_post(const PostContent& post, const IntegrityComponents& components);

nlohmann::json to_json(const IntegrityScore& score);

}  // namespace mediator
