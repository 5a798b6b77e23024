#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "metacal/errors.hpp"
#include "metacal/report.hpp"

namespace {

// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

void add_common_options(CLI::App* cmd, metacal::RunConfig& config) {
    cmd->add_option("-i,--input", config.input_path, "trials file (JSON-lines or CSV)");
    cmd->add_option("--format", config.input_format, "input format: jsonl or csv")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    cmd->add_option("--meta", config.meta_path, "regime sidecar CSV (model_id,regime)");
    cmd->add_option("-o,--out", config.out_dir, "output directory")
        ->envname("METACAL_OUT_DIR");
    cmd->add_option("--benchmark", config.benchmarks, "restrict to benchmark(s)");
    cmd->add_option("--probe", config.probes, "restrict to probe(s)")
        ->check(CLI::IsMember({"prospective", "counterfactual"}));
    cmd->add_option("-B,--null-draws", config.null_draws, "parallel-analysis draws");
    cmd->add_option("--pair-null-draws", config.pair_null_draws, "per-pair null draws");
    cmd->add_option("--seed", config.seed, "master seed; all substreams derive from it");
    cmd->add_option("--contentious-lo", config.contentious_lo, "contentious-item lower bound");
    cmd->add_option("--contentious-hi", config.contentious_hi, "contentious-item upper bound");
    cmd->add_option("--window-lo", config.window_lo, "gap-curve item window lower bound");
    cmd->add_option("--window-hi", config.window_hi, "gap-curve item window upper bound");
    cmd->add_option("-c,--ridge-c", config.ridge_c, "logistic regularization c");
    cmd->add_option("-k,--folds", config.cv_folds, "grouped CV folds");
    cmd->add_option("--beta-points", config.beta_points, "F-beta grid size");
    cmd->add_option("--beta-min", config.beta_min, "F-beta grid lower end");
    cmd->add_option("--beta-max", config.beta_max, "F-beta grid upper end");
    cmd->add_option("--representative", config.representative_model,
                    "classifier representative model (default: closest to median base rates)");
    cmd->add_flag("--strict", config.strict, "upgrade validation warnings to errors");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-model confidence decomposition pipeline"};
    app.require_subcommand(1);

    metacal::RunConfig config;

    const char* stages[] = {"ingest",   "tetra",    "eigen",   "factors", "pairwise",
                            "textfeat", "classify", "summary", "synth",   "report-all"};
    const char* descriptions[] = {
        "validate trials and write judgement matrices",
        "estimate tetrachoric correlation matrices",
        "eigenspectra with parallel-analysis null envelopes",
        "factor scores and performance/confidence alignment",
        "pairwise tau-b, nulls, Fisher tests, gap curves, regime strata",
        "surface-feature extraction and the inline-solve detector",
        "correctness classifiers (Internal/Pop/Q/QM/QP/QMP) and transfer",
        "marginals, F-beta curves, consistency",
        "generate a synthetic single-factor population",
        "run the full pipeline end to end"};

    for (std::size_t i = 0; i < 10; ++i) {
        CLI::App* cmd = app.add_subcommand(stages[i], descriptions[i]);
        add_common_options(cmd, config);
        if (std::string(stages[i]) == "synth") {
            cmd->add_option("--models", config.synth_models, "number of models");
            cmd->add_option("--items", config.synth_items, "number of items");
            cmd->add_option("--loading", config.synth_loading, "uniform factor loading");
            cmd->add_option("--threshold-lo", config.synth_threshold_lo,
                            "threshold spread lower end");
            cmd->add_option("--threshold-hi", config.synth_threshold_hi,
                            "threshold spread upper end");
            cmd->add_option("--cross-alignment", config.synth_cross_alignment,
                            "confidence/performance axis correlation");
            cmd->add_option("--self-calibration", config.synth_self_calibration,
                            "within-model perf-conf noise coupling");
            cmd->add_option("--synth-benchmark", config.synth_benchmark, "benchmark name");
            cmd->add_flag("--fixture-text", config.synth_fixture_text,
                          "attach deterministic fixture texts");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        metacal::run_stage(metacal::stage_from_string(name), config);
        std::cout << name << ": artifacts written to " << config.out_dir << "\n";
        return 0;
    } catch (const metacal::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const metacal::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
