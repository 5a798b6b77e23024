#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metacal/corpus.hpp"
#include "metacal/tetra.hpp"

namespace metacal {

// Declarative run configuration. Every default traces to a documented
// constant; the serialized form is stamped into each output's metadata
// header so artifacts are self-describing.
struct RunConfig {
    std::string input_path;
    std::string input_format = "jsonl";
    std::string meta_path;  // optional regime sidecar
    std::string out_dir = "out";
    std::vector<std::string> benchmarks;  // empty = all
    std::vector<std::string> probes;      // empty = all
    int null_draws = 100;                 // parallel-analysis draws
    int pair_null_draws = 100;            // per-pair null draws
    std::uint64_t seed = 1;
    double contentious_lo = 0.1;
    double contentious_hi = 0.9;
    double window_lo = 0.25;
    double window_hi = 0.75;
    double ridge_c = 1.0;
    int cv_folds = 5;
    int beta_points = 25;
    double beta_min = 0.01;
    double beta_max = 100.0;
    std::string representative_model;  // empty = closest to median base rates
    bool strict = false;

    // synth stage knobs
    int synth_models = 12;
    int synth_items = 240;
    double synth_loading = 0.6;
    double synth_threshold_lo = -0.8;
    double synth_threshold_hi = 0.8;
    double synth_cross_alignment = 0.7;
    double synth_self_calibration = 0.3;
    std::string synth_benchmark = "synthbench";
    bool synth_fixture_text = false;

    std::string to_json() const;  // canonical single line
};

enum class Stage {
    ingest,
    tetra,
    eigen,
    factors,
    pairwise,
    textfeat,
    classify,
    summary,
    synth,
    report_all
};

Stage stage_from_string(const std::string& name);
std::string to_string(Stage stage);

// 64-bit FNV-1a content hash used in manifests.
std::uint64_t fnv1a(const std::string& data);

// Atomic artifact emission (temp file + rename) plus manifest maintenance.
// The manifest lists every artifact path with its content hash, sorted by
// path, and is itself rewritten atomically.
class ArtifactWriter {
public:
    ArtifactWriter(const std::string& out_dir, const RunConfig& config);

    void write_text(const std::string& rel_path, const std::string& content);
    std::string config_comment() const;  // "config: {...}" metadata line
    void finalize();                     // writes manifest.json

    const std::map<std::string, std::string>& entries() const { return hashes_; }

private:
    std::string out_dir_;
    std::string config_json_;
    std::map<std::string, std::string> hashes_;
};

// Runs one pipeline stage against the persisted artifact tree under
// config.out_dir. Missing upstream artifacts raise DataError naming the
// prerequisite stage.
void run_stage(Stage stage, const RunConfig& config);

// Deterministic placeholder texts for the bundled synthetic fixture so the
// text-feature and classifier stages have input to chew on.
void attach_fixture_texts(TrialSet& trials, std::uint64_t seed);

// Serialization helpers shared by stages and tests.
void write_tetra_csv(const TetrachoricMatrix& tetra, std::ostream& rho_out,
                     std::ostream& thresholds_out, std::ostream& clamped_out,
                     const std::string& config_line);
TetrachoricMatrix read_tetra_artifacts(const std::string& rho_path,
                                       const std::string& thresholds_path);

}  // namespace metacal
