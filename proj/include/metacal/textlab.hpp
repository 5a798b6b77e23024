#pragma once

#include <map>
#include <string>
#include <vector>

namespace metacal::textlab {

enum class Source { Q, M, P };

std::string to_string(Source s);

// Word lists frozen as data files under data/lexicons and embedded at build
// time. Entries are lowercase; multi-word phrases allowed. The version
// stamp travels into every feature-table output.
struct Lexicons {
    std::string version;
    std::map<std::string, std::vector<std::string>> lists;

    const std::vector<std::string>& list(const std::string& name) const;
};

const Lexicons& lexicons();
const std::string& lexicon_version();

struct FeatureVector {
    Source source = Source::Q;
    std::vector<double> values;  // fixed length: Q = 19, M/P = 21
};

// Stable schema names; response names carry the m_/p_ prefix.
const std::vector<std::string>& question_feature_names();
std::vector<std::string> response_feature_names(Source source);

// 19 question-text features: 4 length/structure, type-token ratio, 4
// content flags, Flesch-Kincaid grade, choice-marker count, 8 question-type
// one-hots (exactly one hot).
FeatureVector question_features(const std::string& text);

// 21 response features: 4 length/structure, 2 lexical diversity, 4
// hedging/certainty, 5 content lexicons, 6 structural/numeric. Same
// definitions for M and P sources.
FeatureVector response_features(const std::string& text, Source source);

struct InlineSolveResult {
    int score = 0;  // 0..5
    bool flagged = false;
    bool per_feature[5] = {false, false, false, false, false};
};

// Five-feature inline-solve rubric: convergence phrases, math notation,
// computation-verb stems, numbered step lines, length > 120 words.
// flagged iff score >= 3. An empty text scores 0.
InlineSolveResult inline_solve_score(const std::string& text);

// Tokenization helpers shared by the detectors (declared rules: whitespace
// split, surrounding punctuation stripped, lowercased; sentences split on
// terminal punctuation). Exposed for tests.
std::vector<std::string> tokenize(const std::string& text);
std::size_t sentence_count(const std::string& text);
int count_lexicon(const std::vector<std::string>& tokens, const std::vector<std::string>& list);

}  // namespace metacal::textlab
