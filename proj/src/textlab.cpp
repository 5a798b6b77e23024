#include "metacal/textlab.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "lexicons_embedded.hpp"
#include "metacal/errors.hpp"

namespace metacal::textlab {

std::string to_string(Source s) {
    switch (s) {
        case Source::Q: return "Q";
        case Source::M: return "M";
        default: return "P";
    }
}

const std::vector<std::string>& Lexicons::list(const std::string& name) const {
    auto it = lists.find(name);
    if (it == lists.end()) throw DataError("unknown lexicon '" + name + "'");
    return it->second;
}

const Lexicons& lexicons() {
    static const Lexicons instance = [] {
        Lexicons lex;
        lex.version = std::string(embedded::kVersion);
        for (const auto& file : embedded::kFiles) {
            std::vector<std::string> entries;
            std::istringstream in{std::string(file.content)};
            std::string line;
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
                if (!line.empty()) entries.push_back(line);
            }
            lex.lists[std::string(file.name)] = std::move(entries);
        }
        return lex;
    }();
    return instance;
}

const std::string& lexicon_version() {
    return lexicons().version;
}

namespace {

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_edge_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) && c != '\'';
}

std::string strip_token(const std::string& tok) {
    std::size_t begin = 0, end = tok.size();
    while (begin < end && is_edge_punct(tok[begin])) ++begin;
    while (end > begin && is_edge_punct(tok[end - 1])) --end;
    return tok.substr(begin, end - begin);
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> sentences;
    std::string current;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?') {
            if (current.find_first_of(
                    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789") !=
                std::string::npos) {
                sentences.push_back(current);
            }
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (current.find_first_of(
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789") !=
        std::string::npos) {
        sentences.push_back(current);
    }
    return sentences;
}

int syllables(const std::string& word) {
    std::string letters;
    for (char c : word) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            letters.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (letters.empty()) return 1;
    auto is_vowel = [](char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
    };
    int groups = 0;
    bool in_group = false;
    for (char c : letters) {
        if (is_vowel(c)) {
            if (!in_group) ++groups;
            in_group = true;
        } else {
            in_group = false;
        }
    }
    if (groups > 1 && letters.size() > 2 && letters.back() == 'e' &&
        !(letters.size() >= 2 && letters[letters.size() - 2] == 'l')) {
        --groups;
    }
    return std::max(1, groups);
}

struct PreparedLexicon {
    std::set<std::string> words;
    std::vector<std::vector<std::string>> phrases;
};

const PreparedLexicon& prepared(const std::string& name) {
    static std::map<std::string, PreparedLexicon> cache = [] {
        std::map<std::string, PreparedLexicon> out;
        for (const auto& [name, entries] : lexicons().lists) {
            PreparedLexicon prep;
            for (const std::string& entry : entries) {
                std::istringstream in(entry);
                std::vector<std::string> parts;
                std::string part;
                while (in >> part) parts.push_back(part);
                if (parts.size() == 1) prep.words.insert(parts.front());
                else if (!parts.empty()) prep.phrases.push_back(parts);
            }
            out[name] = std::move(prep);
        }
        return out;
    }();
    auto it = cache.find(name);
    if (it == cache.end()) throw DataError("unknown lexicon '" + name + "'");
    return it->second;
}

int count_prepared(const std::vector<std::string>& tokens, const PreparedLexicon& lex) {
    int count = 0;
    for (const std::string& tok : tokens) {
        if (lex.words.count(tok)) ++count;
    }
    for (const auto& phrase : lex.phrases) {
        // Non-overlapping contiguous matches.
        std::size_t i = 0;
        while (i + phrase.size() <= tokens.size()) {
            bool match = true;
            for (std::size_t j = 0; j < phrase.size(); ++j) {
                if (tokens[i + j] != phrase[j]) {
                    match = false;
                    break;
                }
            }
            if (match) {
                ++count;
                i += phrase.size();
            } else {
                ++i;
            }
        }
    }
    return count;
}

int count_named(const std::vector<std::string>& tokens, const std::string& name) {
    return count_prepared(tokens, prepared(name));
}

bool has_math_notation(const std::string& text) {
    static const std::regex re(
        R"((\\[a-zA-Z]+)|(\$)|(\^)|(\d\s*[-+*/=]\s*\d))");
    return std::regex_search(text, re);
}

bool has_code_markers(const std::string& lowered) {
    static const std::regex re(
        R"((```)|(`[^`]+`)|(#include)|(\bdef )|(\bimport )|(\breturn )|(\bfor\s*\()|(\bwhile\s*\()|(==)|(->))");
    return std::regex_search(lowered, re);
}

int choice_marker_count(const std::string& lowered) {
    std::set<char> letters;
    static const std::regex line_re(R"(^\s*\(?([a-j])[).:]\s+)");
    static const std::regex inline_re(R"(\(([a-j])\))");
    std::istringstream in(lowered);
    std::string line;
    std::smatch m;
    while (std::getline(in, line)) {
        if (std::regex_search(line, m, line_re)) letters.insert(m[1].str()[0]);
    }
    auto begin = std::sregex_iterator(lowered.begin(), lowered.end(), inline_re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        letters.insert((*it)[1].str()[0]);
    }
    return static_cast<int>(letters.size());
}

int numbered_step_lines(const std::string& text) {
    int count = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t i = line.find_first_not_of(" \t");
        if (i == std::string::npos) continue;
        std::size_t d = i;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        if (d == i || d >= line.size()) continue;
        if (line[d] == ')' || line[d] == '.') {
            if (d + 1 >= line.size() || line[d + 1] == ' ' || line[d + 1] == '\t') ++count;
        }
    }
    return count;
}

int math_operator_count(const std::string& text) {
    int count = 0;
    auto nearest_digit = [&](std::size_t pos, int step) {
        std::size_t i = pos;
        while (true) {
            if (step < 0 && i == 0) return false;
            i += step;
            if (i >= text.size()) return false;
            if (text[i] == ' ') continue;
            return std::isdigit(static_cast<unsigned char>(text[i])) != 0;
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '+' || c == '*' || c == '/' || c == '=' || c == '^') ++count;
        else if (c == '-' && nearest_digit(i, -1) && nearest_digit(i, +1)) ++count;
    }
    return count;
}

int digit_count(const std::string& text) {
    int count = 0;
    for (char c : text) {
        if (std::isdigit(static_cast<unsigned char>(c))) ++count;
    }
    return count;
}

double distinct_ngram_ratio(const std::vector<std::string>& tokens, std::size_t n) {
    if (tokens.size() < n) return 1.0;
    std::set<std::string> distinct;
    const std::size_t total = tokens.size() - n + 1;
    for (std::size_t i = 0; i < total; ++i) {
        std::string key;
        for (std::size_t j = 0; j < n; ++j) {
            key += tokens[i + j];
            key.push_back('\x1f');
        }
        distinct.insert(std::move(key));
    }
    return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string raw;
    while (in >> raw) {
        std::string tok = strip_token(raw);
        if (!tok.empty()) tokens.push_back(lower(tok));
    }
    return tokens;
}

std::size_t sentence_count(const std::string& text) {
    return split_sentences(text).size();
}

int count_lexicon(const std::vector<std::string>& tokens, const std::vector<std::string>& list) {
    PreparedLexicon prep;
    for (const std::string& entry : list) {
        std::istringstream in(entry);
        std::vector<std::string> parts;
        std::string part;
        while (in >> part) parts.push_back(part);
        if (parts.size() == 1) prep.words.insert(parts.front());
        else if (!parts.empty()) prep.phrases.push_back(parts);
    }
    return count_prepared(tokens, prep);
}

const std::vector<std::string>& question_feature_names() {
    static const std::vector<std::string> names = {
        "q_char_count",      "q_word_count",         "q_sentence_count",
        "q_mean_word_length", "q_type_token_ratio",  "q_has_negation",
        "q_has_math_notation", "q_has_code_markers", "q_constraint_marker_count",
        "q_fk_grade",        "q_choice_marker_count", "q_type_what",
        "q_type_how",        "q_type_why",           "q_type_which",
        "q_type_compute",    "q_type_find",          "q_type_explain",
        "q_type_other"};
    return names;
}

std::vector<std::string> response_feature_names(Source source) {
    const std::string prefix = source == Source::P ? "p_" : "m_";
    static const char* const stems[] = {
        "char_count",        "word_count",          "sentence_count",
        "mean_sentence_length", "distinct_bigram_ratio", "distinct_trigram_ratio",
        "hedging_count",     "hedging_sentence_rate", "certainty_count",
        "causal_count",      "self_correction_count", "harmful_count",
        "insight_count",     "difficulty_count",    "unknown_phrase_count",
        "negation_count",    "first_person_count",  "step_marker_count",
        "question_mark_count", "digit_count",       "math_operator_count"};
    std::vector<std::string> names;
    for (const char* stem : stems) names.push_back(prefix + stem);
    return names;
}

FeatureVector question_features(const std::string& text) {
    const std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) throw DataError("question_features: empty text");
    const std::string lowered = lower(text);
    const std::vector<std::string> sentences = split_sentences(text);
    const double n_words = static_cast<double>(tokens.size());
    const double n_sentences = static_cast<double>(std::max<std::size_t>(1, sentences.size()));

    double total_len = 0.0;
    double total_syllables = 0.0;
    std::set<std::string> types;
    for (const std::string& tok : tokens) {
        total_len += static_cast<double>(tok.size());
        total_syllables += syllables(tok);
        types.insert(tok);
    }

    static const char* const kTypes[] = {"what", "how", "why", "which", "compute", "find",
                                         "explain"};
    int type_idx = 7;  // other
    for (const std::string& tok : tokens) {
        bool found = false;
        for (int t = 0; t < 7; ++t) {
            if (tok == kTypes[t]) {
                type_idx = t;
                found = true;
                break;
            }
        }
        if (found) break;
    }

    FeatureVector fv;
    fv.source = Source::Q;
    fv.values = {
        static_cast<double>(text.size()),
        n_words,
        n_sentences,
        total_len / n_words,
        static_cast<double>(types.size()) / n_words,
        count_named(tokens, "negation") > 0 ? 1.0 : 0.0,
        has_math_notation(text) ? 1.0 : 0.0,
        has_code_markers(lowered) ? 1.0 : 0.0,
        static_cast<double>(count_named(tokens, "constraint_markers")),
        0.39 * (n_words / n_sentences) + 11.8 * (total_syllables / n_words) - 15.59,
        static_cast<double>(choice_marker_count(lowered)),
    };
    for (int t = 0; t < 8; ++t) fv.values.push_back(t == type_idx ? 1.0 : 0.0);
    return fv;
}

FeatureVector response_features(const std::string& text, Source source) {
    if (source == Source::Q) throw DataError("response_features: source must be M or P");
    const std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) throw DataError("response_features: empty text");
    const std::vector<std::string> sentences = split_sentences(text);
    const double n_words = static_cast<double>(tokens.size());
    const double n_sentences = static_cast<double>(std::max<std::size_t>(1, sentences.size()));

    int hedged_sentences = 0;
    for (const std::string& s : sentences) {
        if (count_named(tokenize(s), "hedging") > 0) ++hedged_sentences;
    }

    int question_marks = 0;
    for (char c : text) {
        if (c == '?') ++question_marks;
    }

    const int step_words = count_named(tokens, "step_markers");
    const int step_lines = numbered_step_lines(text);

    FeatureVector fv;
    fv.source = source;
    fv.values = {
        static_cast<double>(text.size()),
        n_words,
        n_sentences,
        n_words / n_sentences,
        distinct_ngram_ratio(tokens, 2),
        distinct_ngram_ratio(tokens, 3),
        static_cast<double>(count_named(tokens, "hedging")),
        static_cast<double>(hedged_sentences) / n_sentences,
        static_cast<double>(count_named(tokens, "certainty")),
        static_cast<double>(count_named(tokens, "causal")),
        static_cast<double>(count_named(tokens, "self_correction")),
        static_cast<double>(count_named(tokens, "harmful25")),
        static_cast<double>(count_named(tokens, "insight")),
        static_cast<double>(count_named(tokens, "difficulty")),
        static_cast<double>(count_named(tokens, "unknown_phrases")),
        static_cast<double>(count_named(tokens, "negation")),
        static_cast<double>(count_named(tokens, "first_person")),
        static_cast<double>(step_words + step_lines),
        static_cast<double>(question_marks),
        static_cast<double>(digit_count(text)),
        static_cast<double>(math_operator_count(text)),
    };
    return fv;
}

InlineSolveResult inline_solve_score(const std::string& text) {
    InlineSolveResult result;
    const std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) return result;
    const std::string lowered = lower(text);

    static const std::regex convergence_re(
        R"((\btherefore\b)|(\bwhich gives\b)|(\bwe get\b)|(\bso\s+[^\s=]{1,16}\s*=)|(\bthus\b[^.?!\n]{0,40}=))");
    static const std::regex math_re(R"((\\[a-zA-Z]+)|(\$[^$]+\$)|(\^))");
    static const std::regex stems_re(
        R"(\b(substitut|integrat|differentiat|expand|simplif|calculat|complet)[a-z]*)");

    result.per_feature[0] = std::regex_search(lowered, convergence_re);
    result.per_feature[1] = std::regex_search(text, math_re);
    result.per_feature[2] = std::regex_search(lowered, stems_re);
    result.per_feature[3] = numbered_step_lines(text) > 0;
    result.per_feature[4] = tokens.size() > 120;

    for (bool f : result.per_feature) result.score += f ? 1 : 0;
    result.flagged = result.score >= 3;
    return result;
}

}  // namespace metacal::textlab
