#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <string>

#include "metacal/errors.hpp"
#include "metacal/textlab.hpp"

using namespace metacal;
using namespace metacal::textlab;

namespace {

std::map<std::string, double> named(const FeatureVector& fv, Source source) {
    const auto names =
        source == Source::Q ? question_feature_names() : response_feature_names(source);
    REQUIRE(names.size() == fv.values.size());
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = fv.values[i];
    return out;
}

}  // namespace

TEST_CASE("schemas have the documented sizes") {
    CHECK(question_feature_names().size() == 19);
    CHECK(response_feature_names(Source::M).size() == 21);
    CHECK(response_feature_names(Source::P).size() == 21);
    CHECK(response_feature_names(Source::P)[0] == "p_char_count");
    CHECK(lexicon_version() == "lexicons-v1");
}

TEST_CASE("question features on a small math stem") {
    const auto f = named(question_features("What is 2+2?"), Source::Q);
    CHECK(f.at("q_type_what") == 1.0);
    CHECK(f.at("q_type_how") == 0.0);
    CHECK(f.at("q_type_other") == 0.0);
    CHECK(f.at("q_has_math_notation") == 1.0);
    CHECK(f.at("q_word_count") == 3.0);
    CHECK(f.at("q_sentence_count") == 1.0);
}

TEST_CASE("exactly one question-type indicator is hot") {
    for (const char* text : {"What is this?", "Compute the sum.", "Prove the identity.",
                             "Find x such that x > 2.", "Why though?"}) {
        const auto fv = question_features(text);
        double hot = 0.0;
        for (std::size_t i = 11; i < 19; ++i) hot += fv.values[i];
        CHECK(hot == 1.0);
    }
}

TEST_CASE("constraint markers count multi-word phrases") {
    const auto f = named(
        question_features("You must pick at least one of the boxes."), Source::Q);
    CHECK(f.at("q_constraint_marker_count") == 2.0);
}

TEST_CASE("choice markers count distinct letters") {
    const std::string prompt =
        "Which option fits?\nA) cats\nB) dogs\nC) newts\nA) repeated letter";
    const auto f = named(question_features(prompt), Source::Q);
    CHECK(f.at("q_choice_marker_count") == 3.0);
}

TEST_CASE("question features reject empty text") {
    CHECK_THROWS_AS(question_features(""), DataError);
    CHECK_THROWS_AS(question_features("   "), DataError);
    CHECK_THROWS_AS(response_features("", Source::M), DataError);
}

TEST_CASE("hand-computed 19-vector for a fixed fixture") {
    // "Which of the following must hold? No value exceeds 3^2."
    // tokens: which, of, the, following, must, hold, no, value, exceeds, 3^2
    const std::string text = "Which of the following must hold? No value exceeds 3^2.";
    const auto f = named(question_features(text), Source::Q);
    CHECK(f.at("q_char_count") == static_cast<double>(text.size()));
    CHECK(f.at("q_word_count") == 10.0);
    CHECK(f.at("q_sentence_count") == 2.0);
    CHECK(f.at("q_type_token_ratio") == 1.0);
    CHECK(f.at("q_has_negation") == 1.0);         // "no"
    CHECK(f.at("q_has_math_notation") == 1.0);    // superscript
    CHECK(f.at("q_has_code_markers") == 0.0);
    CHECK(f.at("q_constraint_marker_count") == 1.0);  // "must"
    CHECK(f.at("q_type_which") == 1.0);
    CHECK(f.at("q_choice_marker_count") == 0.0);
    // mean word length: (5+2+3+9+4+4+2+5+7+3)/10 = 44/10
    CHECK(f.at("q_mean_word_length") == doctest::Approx(4.4));
}

TEST_CASE("response features on a hedged sentence") {
    const auto f = named(response_features("I think maybe this works.", Source::M), Source::M);
    CHECK(f.at("m_hedging_count") >= 1.0);
    CHECK(f.at("m_first_person_count") == 1.0);
    CHECK(f.at("m_insight_count") >= 1.0);
    CHECK(f.at("m_word_count") == 5.0);
}

TEST_CASE("distinct trigram ratio is one for all-unique text") {
    const auto f = named(
        response_features("alpha beta gamma delta epsilon zeta", Source::M), Source::M);
    CHECK(f.at("m_distinct_trigram_ratio") == 1.0);
    CHECK(f.at("m_distinct_bigram_ratio") == 1.0);
}

TEST_CASE("hand count of a fixture reasoning trace") {
    const std::string trace =
        "Wait, I am not sure about this. First I check the data, then I guess the result. "
        "It is hard because 12 + 30 = 42?";
    const auto f = named(response_features(trace, Source::M), Source::M);
    CHECK(f.at("m_sentence_count") == 3.0);
    CHECK(f.at("m_self_correction_count") == 1.0);   // wait
    CHECK(f.at("m_unknown_phrase_count") == 1.0);    // not sure
    CHECK(f.at("m_harmful_count") == 2.0);           // guess, hard
    CHECK(f.at("m_difficulty_count") == 1.0);        // hard
    CHECK(f.at("m_causal_count") == 1.0);            // because
    CHECK(f.at("m_step_marker_count") == 2.0);       // first, then
    CHECK(f.at("m_question_mark_count") == 1.0);
    CHECK(f.at("m_digit_count") == 6.0);             // 12, 30, 42
    CHECK(f.at("m_math_operator_count") == 2.0);     // + and =
    CHECK(f.at("m_negation_count") == 1.0);       // not
    CHECK(f.at("m_first_person_count") == 3.0);   // "I am", "First I", "then I"
}

TEST_CASE("length features double exactly when text doubles") {
    const std::string text = "One two three 42. Four five.\n";
    const auto once = named(response_features(text, Source::M), Source::M);
    const auto twice = named(response_features(text + text, Source::M), Source::M);
    CHECK(twice.at("m_char_count") == 2.0 * once.at("m_char_count"));
    CHECK(twice.at("m_word_count") == 2.0 * once.at("m_word_count"));
    CHECK(twice.at("m_sentence_count") == 2.0 * once.at("m_sentence_count"));
    CHECK(twice.at("m_digit_count") == 2.0 * once.at("m_digit_count"));
}

TEST_CASE("determinism") {
    const std::string text = "Maybe I can simplify this; we get x = 4 after step 1.";
    CHECK(response_features(text, Source::M).values ==
          response_features(text, Source::M).values);
    CHECK(question_features(text).values == question_features(text).values);
}

TEST_CASE("lexicon matching is case-insensitive") {
    const auto lower = named(response_features("maybe it works", Source::M), Source::M);
    const auto upper = named(response_features("MAYBE it works", Source::M), Source::M);
    CHECK(lower.at("m_hedging_count") == upper.at("m_hedging_count"));
}

TEST_CASE("inline solve scores the computation-stem example low") {
    const InlineSolveResult r =
        inline_solve_score("I think I can do this integration problem.");
    CHECK(r.score == 1);
    CHECK(r.per_feature[2]);  // integrat- stem
    CHECK_FALSE(r.flagged);
}

TEST_CASE("inline solve empty text scores zero") {
    const InlineSolveResult r = inline_solve_score("");
    CHECK(r.score == 0);
    CHECK_FALSE(r.flagged);
}

TEST_CASE("inline solve constructed high-scoring trace") {
    std::string text = "1) Substitute the values into the formula \\frac{a}{b}.\n";
    text += "2. Simplify each side, therefore the terms cancel.\n";
    std::string filler;
    for (int i = 0; i < 125; ++i) filler += "word ";
    text += filler;
    const InlineSolveResult r = inline_solve_score(text);
    CHECK(r.score >= 4);
    CHECK(r.flagged);
}

TEST_CASE("detector exactness for k in 0..5") {
    // Each string is constructed to exhibit exactly k rubric features.
    std::vector<std::string> texts(6);
    texts[0] = "A short note about nothing special.";
    texts[1] = "Therefore the claim holds.";                       // convergence only
    texts[2] = "Therefore the value is x^2.";                      // convergence + math
    texts[3] = "Therefore we substitute and obtain x^2.";          // + computation stem
    texts[4] = "1) Therefore we substitute and obtain x^2.";       // + numbered step
    {
        std::string filler;
        for (int i = 0; i < 130; ++i) filler += "pad ";
        texts[5] = "1) Therefore we substitute and obtain x^2. " + filler;  // + length
    }
    for (int k = 0; k <= 5; ++k) {
        const InlineSolveResult r = inline_solve_score(texts[k]);
        CHECK(r.score == k);
        CHECK(r.flagged == (k >= 3));
    }
}

TEST_CASE("lexicons expose the frozen lists") {
    const Lexicons& lex = lexicons();
    CHECK(lex.list("harmful25").size() == 25);
    CHECK_THROWS_AS(lex.list("nonexistent"), DataError);
    // Exemplar seeds present.
    auto has = [&](const std::string& name, const std::string& word) {
        for (const std::string& w : lex.list(name)) {
            if (w == word) return true;
        }
        return false;
    };
    CHECK(has("hedging", "maybe"));
    CHECK(has("causal", "because"));
    CHECK(has("insight", "think"));
    CHECK(has("self_correction", "wait"));
    CHECK(has("harmful25", "stuck"));
    CHECK(has("harmful25", "guess"));
    CHECK(has("unknown_phrases", "not sure"));
    CHECK(has("unknown_phrases", "cannot tell"));
}
