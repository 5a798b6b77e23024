#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace metacal {

enum class Probe { prospective, counterfactual };
enum class Signal { confidence, performance };
enum class Regime { reasoning, non_reasoning, unknown };

std::string to_string(Probe p);
std::string to_string(Signal s);
std::string to_string(Regime r);
Probe probe_from_string(const std::string& s);
Signal signal_from_string(const std::string& s);
Regime regime_from_string(const std::string& s);

struct Warning {
    std::string code;
    std::string message;
};

// One (benchmark, probe, model, item) observation.
struct TrialRecord {
    std::string benchmark;
    Probe probe = Probe::prospective;
    std::string model;
    std::string item_id;
    std::optional<int> confidence;  // binary
    std::optional<int> correct;     // binary
    std::optional<std::string> question_text;
    std::optional<std::string> reasoning_text;  // confidence-judgement reasoning (M)
    std::optional<std::string> answer_text;     // answer attempt (P)
    std::optional<Regime> regime;
    // Unknown input fields, preserved verbatim for round-tripping.
    std::map<std::string, std::string> extra;
};

struct TrialSet {
    std::vector<TrialRecord> records;
    std::vector<Warning> warnings;

    std::size_t size() const { return records.size(); }
};

struct ModelMeta {
    std::string model_id;
    Regime regime = Regime::unknown;
    std::optional<std::string> provider;
};

// items x models binary matrix with explicit missingness.
struct JudgementMatrix {
    std::vector<std::string> item_ids;   // ordered, lexicographic
    std::vector<std::string> model_ids;  // ordered, lexicographic
    Signal signal = Signal::confidence;
    std::vector<std::int8_t> cells;      // row-major, -1 = missing
    std::vector<double> marginals;       // per-model mean over non-missing cells

    int at(std::size_t item, std::size_t model) const {
        return cells[item * model_ids.size() + model];
    }
    void set(std::size_t item, std::size_t model, std::int8_t v) {
        cells[item * model_ids.size() + model] = v;
    }
    std::size_t n_items() const { return item_ids.size(); }
    std::size_t n_models() const { return model_ids.size(); }
};

enum class TrialFormat { jsonl, csv };

// Loads and validates trial records. Duplicate keys, out-of-range binary
// fields, and missing mandatory fields are rejected with the offending line
// number. In strict mode the counterfactual success-conditioning convention
// (correct present implies correct = 1) upgrades from warning to error.
TrialSet load_trials(const std::string& path, TrialFormat format, bool strict = false);
TrialSet parse_trials(std::istream& in, TrialFormat format, bool strict,
                      const std::string& origin);

void save_trials_jsonl(const TrialSet& trials, std::ostream& out);

// Regime sidecar: CSV with model_id,regime[,provider] columns.
std::vector<ModelMeta> load_model_meta(const std::string& path);

// Builds the items x models matrix for one (benchmark, probe, signal)
// selection. Models with zero non-missing cells are dropped with a warning;
// so are items left without any non-missing cell.
JudgementMatrix build_matrix(const TrialSet& trials, const std::string& benchmark, Probe probe,
                             Signal signal, std::vector<Warning>* warnings = nullptr);

// Canonical CSV dump: rows = item_ids, columns = model_ids, cells 0/1/NA.
void write_matrix_csv(const JudgementMatrix& matrix, std::ostream& out,
                      const std::vector<std::string>& metadata = {});
JudgementMatrix read_matrix_csv(std::istream& in);
JudgementMatrix read_matrix_csv_file(const std::string& path);

std::vector<std::string> benchmarks_in(const TrialSet& trials);
std::vector<Probe> probes_in(const TrialSet& trials, const std::string& benchmark);

}  // namespace metacal
