#include "metacal/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "metacal/csv.hpp"
#include "metacal/errors.hpp"
#include "metacal/factors.hpp"
#include "metacal/learner.hpp"
#include "metacal/pairwise.hpp"
#include "metacal/rng.hpp"
#include "metacal/spectra.hpp"
#include "metacal/summary.hpp"
#include "metacal/svg.hpp"
#include "metacal/synth.hpp"
#include "metacal/textlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace metacal {

namespace {

constexpr int kGapCurvePoints = 50;
constexpr int kHistBins = 40;

std::string fmt(double v) {
    return csv::format_double(v);
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'
                          ? c
                          : '_');
    }
    return out;
}

}  // namespace

std::string RunConfig::to_json() const {
    // out_dir is deliberately not stamped: artifacts must hash identically
    // wherever the tree is written.
    json j;
    j["input_path"] = input_path;
    j["input_format"] = input_format;
    j["meta_path"] = meta_path;
    j["benchmarks"] = benchmarks;
    j["probes"] = probes;
    j["null_draws"] = null_draws;
    j["pair_null_draws"] = pair_null_draws;
    j["seed"] = seed;
    j["contentious_lo"] = contentious_lo;
    j["contentious_hi"] = contentious_hi;
    j["window_lo"] = window_lo;
    j["window_hi"] = window_hi;
    j["ridge_c"] = ridge_c;
    j["cv_folds"] = cv_folds;
    j["beta_points"] = beta_points;
    j["beta_min"] = beta_min;
    j["beta_max"] = beta_max;
    j["representative_model"] = representative_model;
    j["strict"] = strict;
    j["synth_models"] = synth_models;
    j["synth_items"] = synth_items;
    j["synth_loading"] = synth_loading;
    j["synth_threshold_lo"] = synth_threshold_lo;
    j["synth_threshold_hi"] = synth_threshold_hi;
    j["synth_cross_alignment"] = synth_cross_alignment;
    j["synth_self_calibration"] = synth_self_calibration;
    j["synth_benchmark"] = synth_benchmark;
    j["synth_fixture_text"] = synth_fixture_text;
    j["lexicons"] = textlab::lexicon_version();
    return j.dump();
}

Stage stage_from_string(const std::string& name) {
    if (name == "ingest") return Stage::ingest;
    if (name == "tetra") return Stage::tetra;
    if (name == "eigen") return Stage::eigen;
    if (name == "factors") return Stage::factors;
    if (name == "pairwise") return Stage::pairwise;
    if (name == "textfeat") return Stage::textfeat;
    if (name == "classify") return Stage::classify;
    if (name == "summary") return Stage::summary;
    if (name == "synth") return Stage::synth;
    if (name == "report-all") return Stage::report_all;
    throw DataError("unknown subcommand '" + name + "'");
}

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::ingest: return "ingest";
        case Stage::tetra: return "tetra";
        case Stage::eigen: return "eigen";
        case Stage::factors: return "factors";
        case Stage::pairwise: return "pairwise";
        case Stage::textfeat: return "textfeat";
        case Stage::classify: return "classify";
        case Stage::summary: return "summary";
        case Stage::synth: return "synth";
        default: return "report-all";
    }
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

ArtifactWriter::ArtifactWriter(const std::string& out_dir, const RunConfig& config)
    : out_dir_(out_dir), config_json_(config.to_json()) {
    fs::create_directories(out_dir_);
    const fs::path manifest = fs::path(out_dir_) / "manifest.json";
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        json j = json::parse(in, nullptr, false);
        if (j.is_object() && j.contains("artifacts") && j["artifacts"].is_object()) {
            for (auto it = j["artifacts"].begin(); it != j["artifacts"].end(); ++it) {
                hashes_[it.key()] = it.value().get<std::string>();
            }
        }
    }
}

void ArtifactWriter::write_text(const std::string& rel_path, const std::string& content) {
    const fs::path target = fs::path(out_dir_) / rel_path;
    fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(content)));
    hashes_[rel_path] = buf;
}

std::string ArtifactWriter::config_comment() const {
    return "config: " + config_json_;
}

void ArtifactWriter::finalize() {
    json j;
    j["config"] = json::parse(config_json_);
    j["artifacts"] = json::object();
    for (const auto& [path, hash] : hashes_) j["artifacts"][path] = hash;
    const fs::path target = fs::path(out_dir_) / "manifest.json";
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << "\n";
    }
    fs::rename(tmp, target);
}

namespace {

struct Condition {
    std::string benchmark;
    Probe probe;

    std::string name() const { return sanitize(benchmark) + "__" + metacal::to_string(probe); }
};

std::uint64_t subseed(const RunConfig& config, std::initializer_list<std::uint64_t> ids) {
    Rng rng = Rng::substream(config.seed, ids);
    return rng.next();
}

bool selected(const RunConfig& config, const Condition& cond) {
    if (!config.benchmarks.empty() &&
        std::find(config.benchmarks.begin(), config.benchmarks.end(), cond.benchmark) ==
            config.benchmarks.end()) {
        return false;
    }
    if (!config.probes.empty() &&
        std::find(config.probes.begin(), config.probes.end(), metacal::to_string(cond.probe)) ==
            config.probes.end()) {
        return false;
    }
    return true;
}

void require_dir(const RunConfig& config, const std::string& subdir, const std::string& stage) {
    if (!fs::is_directory(fs::path(config.out_dir) / subdir)) {
        throw DataError("missing artifacts '" + subdir + "' under " + config.out_dir +
                        "; run the " + stage + " stage first");
    }
}

std::vector<Condition> discover_conditions(const RunConfig& config) {
    // Conditions are discovered from persisted confidence/performance
    // matrices written by ingest.
    require_dir(config, "matrices", "ingest");
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& entry : fs::directory_iterator(fs::path(config.out_dir) / "matrices")) {
        const std::string name = entry.path().filename().string();
        for (const char* suffix : {"__confidence.csv", "__performance.csv"}) {
            if (name.size() > std::strlen(suffix) &&
                name.compare(name.size() - std::strlen(suffix), std::strlen(suffix), suffix) ==
                    0) {
                const std::string stem = name.substr(0, name.size() - std::strlen(suffix));
                const std::size_t split = stem.rfind("__");
                if (split == std::string::npos) continue;
                seen.insert({stem.substr(0, split), stem.substr(split + 2)});
            }
        }
    }
    std::vector<Condition> conditions;
    for (const auto& [bench, probe] : seen) {
        conditions.push_back({bench, probe_from_string(probe)});
    }
    std::sort(conditions.begin(), conditions.end(), [](const Condition& a, const Condition& b) {
        if (a.benchmark != b.benchmark) return a.benchmark < b.benchmark;
        return metacal::to_string(a.probe) < metacal::to_string(b.probe);
    });
    return conditions;
}

std::optional<JudgementMatrix> try_read_matrix(const RunConfig& config, const Condition& cond,
                                               Signal signal) {
    const fs::path path = fs::path(config.out_dir) / "matrices" /
                          (cond.name() + "__" + metacal::to_string(signal) + ".csv");
    if (!fs::exists(path)) return std::nullopt;
    return read_matrix_csv_file(path.string());
}

JudgementMatrix need_matrix(const RunConfig& config, const Condition& cond, Signal signal) {
    auto m = try_read_matrix(config, cond, signal);
    if (!m) {
        throw DataError("missing matrix for " + cond.name() + "/" + metacal::to_string(signal) +
                        "; run the ingest stage first");
    }
    return *m;
}

std::vector<ModelMeta> read_models_artifact(const RunConfig& config) {
    const fs::path path = fs::path(config.out_dir) / "models.csv";
    if (!fs::exists(path)) return {};
    return load_model_meta(path.string());
}

TrialSet load_input(const RunConfig& config) {
    if (config.input_path.empty()) throw DataError("no input file configured");
    const TrialFormat format =
        config.input_format == "csv" ? TrialFormat::csv : TrialFormat::jsonl;
    return load_trials(config.input_path, format, config.strict);
}

std::string warnings_csv(const std::vector<Warning>& warnings, const std::string& config_line) {
    std::ostringstream out;
    out << "# " << config_line << "\n";
    csv::write_row(out, {"code", "message"});
    for (const Warning& w : warnings) csv::write_row(out, {w.code, w.message});
    return out.str();
}

// ---------------------------------------------------------------- ingest --

void stage_ingest(const RunConfig& config, ArtifactWriter& writer) {
    TrialSet trials = load_input(config);
    std::vector<Warning> warnings = trials.warnings;

    // Regime table: sidecar file wins over per-record labels.
    std::map<std::string, ModelMeta> meta;
    for (const TrialRecord& rec : trials.records) {
        auto& m = meta[rec.model];
        m.model_id = rec.model;
        if (rec.regime) m.regime = *rec.regime;
    }
    if (!config.meta_path.empty()) {
        for (const ModelMeta& m : load_model_meta(config.meta_path)) meta[m.model_id] = m;
    }

    int written = 0;
    for (const std::string& benchmark : benchmarks_in(trials)) {
        for (Probe probe : probes_in(trials, benchmark)) {
            const Condition cond{benchmark, probe};
            if (!selected(config, cond)) continue;
            for (Signal signal : {Signal::confidence, Signal::performance}) {
                try {
                    const JudgementMatrix matrix =
                        build_matrix(trials, benchmark, probe, signal, &warnings);
                    std::ostringstream out;
                    write_matrix_csv(matrix, out, {writer.config_comment()});
                    writer.write_text("matrices/" + cond.name() + "__" +
                                          metacal::to_string(signal) + ".csv",
                                      out.str());
                    ++written;
                } catch (const DataError& e) {
                    warnings.push_back({"matrix_skipped", cond.name() + "/" +
                                                              metacal::to_string(signal) + ": " +
                                                              e.what()});
                }
            }
        }
    }
    if (written == 0) throw DataError("ingest: no matrix could be built from the selection");

    {
        std::ostringstream out;
        out << "# " << writer.config_comment() << "\n";
        csv::write_row(out, {"model_id", "regime", "provider"});
        for (const auto& [id, m] : meta) {
            csv::write_row(out, {id, metacal::to_string(m.regime), m.provider.value_or("")});
        }
        writer.write_text("models.csv", out.str());
    }
    writer.write_text("matrices/ingest_log.csv", warnings_csv(warnings, writer.config_comment()));
}

// ----------------------------------------------------------------- tetra --

void stage_tetra(const RunConfig& config, ArtifactWriter& writer) {
    const std::vector<Condition> conditions = discover_conditions(config);
    std::vector<Warning> warnings;
    for (const Condition& cond : conditions) {
        if (!selected(config, cond)) continue;
        for (Signal signal : {Signal::confidence, Signal::performance}) {
            const auto matrix = try_read_matrix(config, cond, signal);
            if (!matrix) continue;
            const TetrachoricMatrix tetra = tetrachoric_matrix(*matrix, &warnings);
            std::ostringstream rho_out, thr_out, clamp_out;
            write_tetra_csv(tetra, rho_out, thr_out, clamp_out, writer.config_comment());
            const std::string stem =
                "tetra/" + cond.name() + "__" + metacal::to_string(signal);
            writer.write_text(stem + "__rho.csv", rho_out.str());
            writer.write_text(stem + "__thresholds.csv", thr_out.str());
            writer.write_text(stem + "__clamped.csv", clamp_out.str());
        }
    }
    writer.write_text("tetra/tetra_log.csv", warnings_csv(warnings, writer.config_comment()));
}

// ----------------------------------------------------------------- eigen --

json spectrum_to_json(const SpectrumReport& spectrum, const TetrachoricMatrix& tetra,
                      const NullEnvelope& envelope, const std::vector<RankClass>& classes,
                      const std::optional<FitReport>& fit) {
    json j;
    j["model_ids"] = tetra.model_ids;
    j["thresholds"] = tetra.thresholds;
    j["eigenvalues"] = spectrum.eigenvalues;
    j["normalized"] = spectrum.normalized;
    j["cumulative"] = spectrum.cumulative;
    std::vector<int> negatives;
    for (bool f : spectrum.negative_flags) negatives.push_back(f ? 1 : 0);
    j["negative_flags"] = negatives;
    std::vector<std::vector<double>> loadings;
    for (Eigen::Index m = 0; m < spectrum.loadings.rows(); ++m) {
        std::vector<double> row;
        for (Eigen::Index r = 0; r < spectrum.loadings.cols(); ++r) {
            row.push_back(spectrum.loadings(m, r));
        }
        loadings.push_back(std::move(row));
    }
    j["loadings"] = loadings;
    j["null"] = {{"per_rank_q95", envelope.per_rank_q95},
                 {"per_rank_mean", envelope.per_rank_mean},
                 {"draws", envelope.draws},
                 {"seed", envelope.seed},
                 {"retries", envelope.retries}};
    std::vector<std::string> class_names;
    for (RankClass c : classes) {
        class_names.push_back(c == RankClass::signal ? "signal"
                              : c == RankClass::noise ? "noise"
                                                      : "negative");
    }
    j["rank_class"] = class_names;
    if (fit) {
        j["loading_fit"] = {{"linear_r2", fit->linear_r2},
                            {"quad_r2", fit->quad_r2},
                            {"quad_coeffs", {fit->quad_coeffs[0], fit->quad_coeffs[1],
                                             fit->quad_coeffs[2]}}};
    }
    return j;
}

std::string spectrum_svg(const std::string& title, const SpectrumReport& spectrum,
                         const NullEnvelope& envelope, const std::vector<RankClass>& classes,
                         const std::string& config_line) {
    const int n = spectrum.n_ranks();
    svg::Figure fig(760, 330);
    fig.comment(config_line);
    {
        std::string data = "rank,normalized,q95,cumulative,null_cumulative";
        double null_cum = 0.0;
        for (int r = 0; r < n; ++r) {
            null_cum += envelope.per_rank_mean[r];
            data += "\n" + std::to_string(r + 1) + "," + fmt(spectrum.normalized[r]) + "," +
                    fmt(envelope.per_rank_q95[r]) + "," + fmt(spectrum.cumulative[r]) + "," +
                    fmt(null_cum);
        }
        fig.comment(data);
    }

    double y_min = 0.0, y_max = 0.0;
    for (int r = 0; r < n; ++r) {
        y_min = std::min({y_min, spectrum.normalized[r], envelope.per_rank_q95[r]});
        y_max = std::max({y_max, spectrum.normalized[r], envelope.per_rank_q95[r]});
    }
    y_max += 0.05;
    y_min -= 0.02;

    svg::Panel left{60, 40, 280, 230, 0.5, static_cast<double>(n) + 0.5, y_min, y_max};
    svg::draw_frame(fig, left, "panel-spectrum", title + " spectrum", "rank",
                    "normalized eigenvalue");
    std::vector<double> ranks(n), q95(n);
    for (int r = 0; r < n; ++r) {
        ranks[r] = r + 1;
        q95[r] = envelope.per_rank_q95[r];
    }
    fig.open_group("spectrum-null-q95");
    svg::draw_polyline(fig, left, ranks, q95, "#d62728", 1.2, "4,3");
    fig.close_group();
    for (int r = 0; r < n; ++r) {
        const char* color = classes[r] == RankClass::signal     ? "#2ca02c"
                            : classes[r] == RankClass::negative ? "#d62728"
                                                                : "#888888";
        svg::draw_points(fig, left, {ranks[r]}, {spectrum.normalized[r]}, color, 3.5);
    }

    svg::Panel right{440, 40, 280, 230, 0.5, static_cast<double>(n) + 0.5, 0.0, 1.05};
    svg::draw_frame(fig, right, "panel-cumulative", title + " cumulative", "rank",
                    "cumulative share");
    std::vector<double> cum(n), null_cum(n);
    double run = 0.0;
    for (int r = 0; r < n; ++r) {
        cum[r] = spectrum.cumulative[r];
        run += envelope.per_rank_mean[r];
        null_cum[r] = run;
    }
    svg::draw_polyline(fig, right, ranks, cum, "#2ca02c", 1.6);
    svg::draw_polyline(fig, right, ranks, null_cum, "#e377c2", 1.6);
    svg::draw_label(fig, right.px + 8, right.py + 14, "observed", 9);
    svg::draw_label(fig, right.px + 8, right.py + 26, "null mean", 9);
    return fig.finish();
}

void stage_eigen(const RunConfig& config, ArtifactWriter& writer) {
    require_dir(config, "tetra", "tetra");
    const std::vector<Condition> conditions = discover_conditions(config);
    std::vector<Warning> warnings;
    for (const Condition& cond : conditions) {
        if (!selected(config, cond)) continue;
        for (Signal signal : {Signal::confidence, Signal::performance}) {
            const std::string stem =
                "tetra/" + cond.name() + "__" + metacal::to_string(signal);
            const fs::path rho_path = fs::path(config.out_dir) / (stem + "__rho.csv");
            if (!fs::exists(rho_path)) continue;
            const fs::path thr_path = fs::path(config.out_dir) / (stem + "__thresholds.csv");
            if (!fs::exists(thr_path)) {
                throw DataError("missing " + thr_path.string() + "; run the tetra stage first");
            }
            const TetrachoricMatrix tetra =
                read_tetra_artifacts(rho_path.string(), thr_path.string());
            const JudgementMatrix matrix = need_matrix(config, cond, signal);

            const SpectrumReport spectrum = eigenspectrum(tetra);
            const std::uint64_t seed = subseed(
                config, {1, fnv1a(cond.name()), static_cast<std::uint64_t>(signal)});
            const NullEnvelope envelope =
                parallel_analysis(matrix, config.null_draws, seed);
            const std::vector<RankClass> classes = classify_ranks(spectrum, envelope);

            std::optional<FitReport> fit;
            try {
                std::vector<double> pc1(spectrum.loadings.rows());
                for (Eigen::Index m = 0; m < spectrum.loadings.rows(); ++m) {
                    pc1[m] = spectrum.loadings(m, 0);
                }
                fit = loading_threshold_fit(pc1, tetra.thresholds);
            } catch (const std::exception& e) {
                warnings.push_back({"loading_fit_skipped", cond.name() + ": " + e.what()});
            }

            json j = spectrum_to_json(spectrum, tetra, envelope, classes, fit);
            j["config"] = json::parse(config.to_json());
            j["benchmark"] = cond.benchmark;
            j["probe"] = metacal::to_string(cond.probe);
            j["signal"] = metacal::to_string(signal);
            const std::string out_stem =
                "spectra/" + cond.name() + "__" + metacal::to_string(signal);
            writer.write_text(out_stem + "__spectrum.json", j.dump(2) + "\n");
            writer.write_text(out_stem + "__spectrum.svg",
                              spectrum_svg(cond.name() + " " + metacal::to_string(signal),
                                           spectrum, envelope, classes,
                                           writer.config_comment()));
        }
    }
    writer.write_text("spectra/eigen_log.csv", warnings_csv(warnings, writer.config_comment()));
}

// --------------------------------------------------------------- factors --

struct SpectrumArtifact {
    std::vector<std::string> model_ids;
    std::vector<double> thresholds;
    Eigen::MatrixXd loadings;
    std::vector<bool> negative_flags;
};

SpectrumArtifact read_spectrum_artifact(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json j = json::parse(in);
    SpectrumArtifact artifact;
    artifact.model_ids = j["model_ids"].get<std::vector<std::string>>();
    artifact.thresholds = j["thresholds"].get<std::vector<double>>();
    const auto rows = j["loadings"].get<std::vector<std::vector<double>>>();
    artifact.loadings.resize(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t m = 0; m < rows.size(); ++m) {
        for (std::size_t r = 0; r < rows[m].size(); ++r) artifact.loadings(m, r) = rows[m][r];
    }
    for (int f : j["negative_flags"].get<std::vector<int>>()) {
        artifact.negative_flags.push_back(f != 0);
    }
    return artifact;
}

SpectrumReport spectrum_from_artifact(const SpectrumArtifact& artifact) {
    SpectrumReport spectrum;
    spectrum.loadings = artifact.loadings;
    spectrum.negative_flags = artifact.negative_flags;
    spectrum.eigenvalues.assign(artifact.negative_flags.size(), 0.0);
    spectrum.normalized.assign(artifact.negative_flags.size(), 0.0);
    spectrum.cumulative.assign(artifact.negative_flags.size(), 0.0);
    return spectrum;
}

std::string alignment_scatter_svg(const std::string& title, const AlignmentReport& report,
                                  const std::string& config_line) {
    svg::Figure fig(620, 330);
    fig.comment(config_line);
    auto panel_for = [&](double x0, const std::string& id, const std::string& subtitle,
                         const std::vector<double>& xs, const std::vector<double>& ys, double r) {
        svg::Panel panel{x0, 40, 230, 230, -3.5, 3.5, -3.5, 3.5};
        svg::draw_frame(fig, panel, id, subtitle, "performance F1 score (z)",
                        "confidence F1 score (z)");
        svg::draw_points(fig, panel, xs, ys, "#1f77b4", 2.0);
        svg::draw_label(fig, panel.px + 8, panel.py + 14, "r = " + fmt(r), 10);
    };
    panel_for(50, "panel-unfiltered", title + " unfiltered", report.z_perf_all, report.z_conf_all,
              report.r_unfiltered);
    panel_for(340, "panel-filtered", title + " filtered", report.z_perf_filtered,
              report.z_conf_filtered, report.r_filtered);
    return fig.finish();
}

void stage_factors(const RunConfig& config, ArtifactWriter& writer) {
    require_dir(config, "spectra", "eigen");
    const std::vector<Condition> conditions = discover_conditions(config);
    std::vector<Warning> warnings;

    std::ostringstream table;
    table << "# " << writer.config_comment() << "\n";
    csv::write_row(table, {"benchmark", "probe", "unfiltered_r", "unfiltered_r2", "filtered_r",
                           "filtered_r2", "n_all", "n_filtered", "bounds_lo", "bounds_hi"});

    int rows = 0;
    for (const Condition& cond : conditions) {
        if (!selected(config, cond)) continue;
        const auto conf = try_read_matrix(config, cond, Signal::confidence);
        const auto perf = try_read_matrix(config, cond, Signal::performance);
        if (!conf || !perf) {
            warnings.push_back({"alignment_skipped",
                                cond.name() + ": needs both confidence and performance data"});
            continue;
        }
        const fs::path conf_spec =
            fs::path(config.out_dir) / ("spectra/" + cond.name() + "__confidence__spectrum.json");
        const fs::path perf_spec =
            fs::path(config.out_dir) / ("spectra/" + cond.name() + "__performance__spectrum.json");
        if (!fs::exists(conf_spec) || !fs::exists(perf_spec)) {
            throw DataError("missing spectrum artifacts for " + cond.name() +
                            "; run the eigen stage first");
        }
        try {
            const SpectrumReport conf_spectrum =
                spectrum_from_artifact(read_spectrum_artifact(conf_spec));
            const SpectrumReport perf_spectrum =
                spectrum_from_artifact(read_spectrum_artifact(perf_spec));

            FactorScores conf_scores = factor_scores(*conf, conf_spectrum, 0);
            FactorScores perf_scores = factor_scores(*perf, perf_spectrum, 0);

            // Align on shared item ids.
            std::map<std::string, std::size_t> conf_idx;
            for (std::size_t i = 0; i < conf->item_ids.size(); ++i) {
                conf_idx[conf->item_ids[i]] = i;
            }
            const std::vector<double> perf_rates = item_rates(*perf);
            const std::vector<double> conf_rates = item_rates(*conf);
            FactorScores aligned_conf, aligned_perf;
            aligned_conf.factor_index = aligned_perf.factor_index = 0;
            std::vector<double> rates_p, rates_c;
            for (std::size_t i = 0; i < perf->item_ids.size(); ++i) {
                auto it = conf_idx.find(perf->item_ids[i]);
                if (it == conf_idx.end()) continue;
                aligned_perf.scores.push_back(perf_scores.scores[i]);
                aligned_conf.scores.push_back(conf_scores.scores[it->second]);
                rates_p.push_back(perf_rates[i]);
                rates_c.push_back(conf_rates[it->second]);
            }
            const std::vector<std::size_t> subset = contentious_filter(
                rates_p, rates_c, config.contentious_lo, config.contentious_hi);
            const AlignmentReport report =
                alignment_r(aligned_perf, aligned_conf, subset, config.contentious_lo,
                            config.contentious_hi);

            csv::write_row(table, {cond.benchmark, metacal::to_string(cond.probe),
                                   fmt(report.r_unfiltered), fmt(report.r2_unfiltered),
                                   fmt(report.r_filtered), fmt(report.r2_filtered),
                                   std::to_string(report.n_all),
                                   std::to_string(report.n_filtered), fmt(report.bounds_lo),
                                   fmt(report.bounds_hi)});
            ++rows;
            writer.write_text("factors/" + cond.name() + "__alignment.svg",
                              alignment_scatter_svg(cond.name(), report,
                                                    writer.config_comment()));
        } catch (const std::exception& e) {
            warnings.push_back({"alignment_failed", cond.name() + ": " + e.what()});
        }
    }
    writer.write_text("factors/alignment.csv", table.str());
    writer.write_text("factors/factors_log.csv",
                      warnings_csv(warnings, writer.config_comment()));
    (void)rows;
}

// -------------------------------------------------------------- pairwise --

std::string tau_hist_svg(const std::string& title, const std::vector<double>& observed,
                         const std::vector<double>& null_base, const std::vector<double>& null_cal,
                         const std::vector<double>& p_values, const std::string& config_line) {
    svg::Figure fig(760, 330);
    fig.comment(config_line);
    const std::vector<double> edges = svg::uniform_edges(-1.0, 1.0, kHistBins);
    auto density = [&](const std::vector<double>& values) {
        std::vector<double> counts = svg::bin_counts(values, edges);
        const double total = std::max<double>(1.0, values.size());
        for (double& c : counts) c /= total;
        return counts;
    };
    const std::vector<double> h_obs = density(observed);
    const std::vector<double> h_base = density(null_base);
    const std::vector<double> h_cal = density(null_cal);
    double y_max = 1e-9;
    for (const auto* h : {&h_obs, &h_base, &h_cal}) {
        for (double v : *h) y_max = std::max(y_max, v);
    }

    svg::Panel left{60, 40, 300, 230, -1.0, 1.0, 0.0, y_max * 1.1};
    svg::draw_frame(fig, left, "panel-tau", title + " tau-b", "tau-b", "share of pairs");
    svg::draw_histogram(fig, left, edges, h_base, "#1f77b4", 0.45);
    svg::draw_histogram(fig, left, edges, h_cal, "#2ca02c", 0.45);
    svg::draw_histogram(fig, left, edges, h_obs, "#ff7f0e", 0.6);
    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / v.size();
    };
    svg::draw_vline(fig, left, 0.0, "#999999", "3,3");
    if (!observed.empty()) svg::draw_vline(fig, left, mean_of(observed), "#ff7f0e");
    if (!null_base.empty()) svg::draw_vline(fig, left, mean_of(null_base), "#1f77b4");
    if (!null_cal.empty()) svg::draw_vline(fig, left, mean_of(null_cal), "#2ca02c");

    const std::vector<double> p_edges = svg::uniform_edges(0.0, 1.0, 20);
    std::vector<double> p_counts = svg::bin_counts(p_values, p_edges);
    const double p_total = std::max<double>(1.0, p_values.size());
    for (double& c : p_counts) c /= p_total;
    double p_max = 0.05;
    for (double v : p_counts) p_max = std::max(p_max, v);
    svg::Panel right{440, 40, 280, 230, 0.0, 1.0, 0.0, p_max * 1.1};
    svg::draw_frame(fig, right, "panel-pvalues", title + " per-pair p", "p-value",
                    "share of pairs");
    svg::draw_histogram(fig, right, p_edges, p_counts, "#9467bd", 0.7);
    svg::draw_polyline(fig, right, {0.0, 1.0}, {1.0 / 20, 1.0 / 20}, "#999999", 1.0, "3,3");

    std::string data = "tau_observed";
    for (double t : observed) data += "," + fmt(t);
    fig.comment(data);
    return fig.finish();
}

void stage_pairwise(const RunConfig& config, ArtifactWriter& writer) {
    const std::vector<Condition> conditions = discover_conditions(config);
    const std::vector<ModelMeta> meta = read_models_artifact(config);
    std::vector<Warning> warnings;

    for (const Condition& cond : conditions) {
        if (!selected(config, cond)) continue;
        const auto conf = try_read_matrix(config, cond, Signal::confidence);
        const auto perf = try_read_matrix(config, cond, Signal::performance);
        if (!conf || !perf) {
            warnings.push_back({"pairwise_skipped",
                                cond.name() + ": needs both confidence and performance data"});
            continue;
        }
        const std::vector<PairData> pairs =
            build_pairs(*perf, *conf, config.window_lo, config.window_hi);
        if (pairs.empty()) {
            warnings.push_back({"pairwise_skipped", cond.name() + ": no admissible pairs"});
            continue;
        }

        std::map<std::string, Regime> regimes;
        for (const ModelMeta& m : meta) regimes[m.model_id] = m.regime;

        std::vector<PairReport> reports;
        std::vector<double> pooled_base, pooled_cal, observed, p_values;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const PairData& pair = pairs[p];
            PairReport report;
            report.model_a = pair.model_a;
            report.model_b = pair.model_b;
            report.gap = pair.gap;
            const Regime ra = regimes.count(pair.model_a) ? regimes[pair.model_a] : Regime::unknown;
            const Regime rb = regimes.count(pair.model_b) ? regimes[pair.model_b] : Regime::unknown;
            if (ra == Regime::unknown || rb == Regime::unknown) {
                report.regime_pair = RegimePair::unknown;
            } else if (ra == Regime::reasoning && rb == Regime::reasoning) {
                report.regime_pair = RegimePair::rr;
            } else if (ra == Regime::non_reasoning && rb == Regime::non_reasoning) {
                report.regime_pair = RegimePair::nrnr;
            } else {
                report.regime_pair = RegimePair::rnr;
            }
            try {
                report.tau = pair_tau(pair);
                observed.push_back(report.tau);
            } catch (const NumericalError&) {
                report.tau_defined = false;
            }
            report.fisher = fisher_exact_3x3(
                sign_table(pair), 10000000, 100000,
                subseed(config, {2, fnv1a(cond.name()), static_cast<std::uint64_t>(p), 0}));
            if (report.tau_defined) p_values.push_back(report.fisher.p_two_sided);

            auto summarize = [](const std::vector<double>& taus, int resampled) {
                NullSummary s;
                s.draws = static_cast<int>(taus.size());
                s.resampled = resampled;
                double mean = 0.0;
                for (double t : taus) mean += t;
                mean /= std::max<std::size_t>(1, taus.size());
                s.mean = mean;
                double ss = 0.0;
                for (double t : taus) ss += (t - mean) * (t - mean);
                s.sd = taus.size() > 1 ? std::sqrt(ss / (taus.size() - 1)) : 0.0;
                return s;
            };
            try {
                int resampled = 0;
                auto taus = null_taus(
                    pair, NullMode::base_rate_matched, config.pair_null_draws,
                    subseed(config, {2, fnv1a(cond.name()), static_cast<std::uint64_t>(p), 1}),
                    &resampled);
                report.null_base_rate = summarize(taus, resampled);
                pooled_base.insert(pooled_base.end(), taus.begin(), taus.end());
                report.null_base_rate_samples = std::move(taus);
            } catch (const NumericalError& e) {
                warnings.push_back({"null_failed", cond.name() + " " + pair.model_a + "/" +
                                                       pair.model_b + ": " + e.what()});
            }
            try {
                int resampled = 0;
                auto taus = null_taus(
                    pair, NullMode::calibration_preserving, config.pair_null_draws,
                    subseed(config, {2, fnv1a(cond.name()), static_cast<std::uint64_t>(p), 2}),
                    &resampled);
                report.null_cal_preserving = summarize(taus, resampled);
                pooled_cal.insert(pooled_cal.end(), taus.begin(), taus.end());
                report.null_cal_samples = std::move(taus);
            } catch (const NumericalError& e) {
                warnings.push_back({"null_failed", cond.name() + " " + pair.model_a + "/" +
                                                       pair.model_b + ": " + e.what()});
            }
            reports.push_back(std::move(report));
        }

        std::ostringstream out;
        out << "# " << writer.config_comment() << "\n";
        csv::write_row(out, {"model_a", "model_b", "n_items", "tau", "tau_defined", "p_exact",
                             "point_prob", "p_method", "gap", "regime_pair", "null_base_mean",
                             "null_base_sd", "null_base_resampled", "null_cal_mean",
                             "null_cal_sd", "null_cal_resampled"});
        for (std::size_t p = 0; p < reports.size(); ++p) {
            const PairReport& r = reports[p];
            csv::write_row(
                out, {r.model_a, r.model_b, std::to_string(pairs[p].n_items()),
                      r.tau_defined ? fmt(r.tau) : std::string("NA"),
                      r.tau_defined ? std::string("1") : std::string("0"),
                      fmt(r.fisher.p_two_sided), fmt(r.fisher.point_prob),
                      r.fisher.exact ? "enumeration" : "monte_carlo", fmt(r.gap),
                      metacal::to_string(r.regime_pair), fmt(r.null_base_rate.mean),
                      fmt(r.null_base_rate.sd), std::to_string(r.null_base_rate.resampled),
                      fmt(r.null_cal_preserving.mean), fmt(r.null_cal_preserving.sd),
                      std::to_string(r.null_cal_preserving.resampled)});
        }
        writer.write_text("pairwise/" + cond.name() + "__pairs.csv", out.str());

        // Histogram data: observed taus, both pooled nulls, per-pair p.
        std::ostringstream hist_out;
        hist_out << "# " << writer.config_comment() << "\n";
        csv::write_row(hist_out, {"source", "value"});
        for (double t : observed) csv::write_row(hist_out, {"observed_tau", fmt(t)});
        for (double t : pooled_base) csv::write_row(hist_out, {"null_base_rate_tau", fmt(t)});
        for (double t : pooled_cal) csv::write_row(hist_out, {"null_cal_preserving_tau", fmt(t)});
        for (double p : p_values) csv::write_row(hist_out, {"pair_p_exact", fmt(p)});
        writer.write_text("pairwise/" + cond.name() + "__tau_hist.csv", hist_out.str());
        writer.write_text("pairwise/" + cond.name() + "__tau_hist.svg",
                          tau_hist_svg(cond.name(), observed, pooled_base, pooled_cal, p_values,
                                       writer.config_comment()));

        // Gap curve.
        std::vector<double> deltas;
        for (int i = 1; i <= kGapCurvePoints; ++i) {
            deltas.push_back(static_cast<double>(i) / kGapCurvePoints);
        }
        const std::vector<GapCurvePoint> curve = tau_vs_gap_curve(reports, deltas);
        std::ostringstream gap_out;
        gap_out << "# " << writer.config_comment() << "\n";
        gap_out << "# note: ci_half_width is a normal approximation over admitted pairs; "
                   "pairs share models and are not independent\n";
        csv::write_row(gap_out, {"delta", "mean_tau", "ci_half_width", "n_pairs"});
        for (const GapCurvePoint& pt : curve) {
            csv::write_row(gap_out, {fmt(pt.delta), fmt(pt.mean_tau), fmt(pt.ci_half_width),
                                     std::to_string(pt.n_pairs)});
        }
        writer.write_text("pairwise/" + cond.name() + "__gap_curve.csv", gap_out.str());
        {
            svg::Figure fig(440, 330);
            fig.comment(writer.config_comment());
            {
                std::string data = "delta,mean_tau,ci_half_width,n_pairs";
                for (const auto& pt : curve) {
                    data += "\n" + fmt(pt.delta) + "," + fmt(pt.mean_tau) + "," +
                            fmt(pt.ci_half_width) + "," + std::to_string(pt.n_pairs);
                }
                fig.comment(data);
            }
            double y_lo = 0.0, y_hi = 0.0;
            for (const auto& pt : curve) {
                y_lo = std::min(y_lo, pt.mean_tau - pt.ci_half_width);
                y_hi = std::max(y_hi, pt.mean_tau + pt.ci_half_width);
            }
            svg::Panel panel{60, 40, 300, 230, 0.0, 1.0, y_lo - 0.05, y_hi + 0.05};
            svg::draw_frame(fig, panel, "panel-gap-curve", cond.name() + " tau vs gap",
                            "max performance gap delta", "mean tau");
            std::vector<double> xs, ys, lo, hi;
            for (const auto& pt : curve) {
                xs.push_back(pt.delta);
                ys.push_back(pt.mean_tau);
                lo.push_back(pt.mean_tau - pt.ci_half_width);
                hi.push_back(pt.mean_tau + pt.ci_half_width);
            }
            svg::draw_band(fig, panel, xs, lo, hi, "#e377c2", 0.3);
            svg::draw_polyline(fig, panel, xs, ys, "#e377c2", 1.8);
            svg::draw_polyline(fig, panel, {0.0, 1.0}, {0.0, 0.0}, "#999999", 1.0, "3,3");
            writer.write_text("pairwise/" + cond.name() + "__gap_curve.svg", fig.finish());
        }

        // Regime stratification.
        if (!meta.empty()) {
            int excluded = 0;
            const std::vector<RegimeStats> strata =
                stratify_by_regime(reports, meta, 0.05, &excluded);
            std::ostringstream reg_out;
            reg_out << "# " << writer.config_comment() << "\n";
            csv::write_row(reg_out, {"regime_pair", "median_tau", "share_significant", "n_pairs",
                                     "n_excluded"});
            for (const RegimeStats& s : strata) {
                csv::write_row(reg_out,
                               {metacal::to_string(s.regime_pair), fmt(s.median_tau),
                                fmt(s.share_significant), std::to_string(s.n_pairs),
                                std::to_string(excluded)});
            }
            writer.write_text("pairwise/" + cond.name() + "__regime.csv", reg_out.str());

            svg::Figure fig(440, 330);
            fig.comment(writer.config_comment());
            {
                std::string data = "regime_pair,median_tau,share_significant,n_pairs";
                for (const auto& s : strata) {
                    data += "\n" + metacal::to_string(s.regime_pair) + "," + fmt(s.median_tau) +
                            "," + fmt(s.share_significant) + "," + std::to_string(s.n_pairs);
                }
                fig.comment(data);
            }
            double y_hi = 0.05;
            for (const auto& s : strata) {
                y_hi = std::max({y_hi, s.median_tau, s.share_significant});
            }
            svg::Panel panel{60, 40, 300, 230, 0.0, 3.0, 0.0, y_hi * 1.15};
            svg::draw_frame(fig, panel, "panel-regime", cond.name() + " by regime", "pair class",
                            "median tau / share p<0.05");
            for (std::size_t s = 0; s < strata.size(); ++s) {
                const double x = static_cast<double>(s);
                svg::draw_bar(fig, panel, x + 0.15, x + 0.5, strata[s].median_tau, "#9467bd");
                svg::draw_bar(fig, panel, x + 0.5, x + 0.85, strata[s].share_significant,
                              "#ff7f0e", 0.8);
                svg::draw_label(fig, panel.sx(x + 0.5), panel.py + panel.ph + 14,
                                metacal::to_string(strata[s].regime_pair), 9, "middle");
            }
            writer.write_text("pairwise/" + cond.name() + "__regime.svg", fig.finish());
        }
    }
    writer.write_text("pairwise/pairwise_log.csv",
                      warnings_csv(warnings, writer.config_comment()));
}

// -------------------------------------------------------------- textfeat --

void stage_textfeat(const RunConfig& config, ArtifactWriter& writer) {
    TrialSet trials = load_input(config);
    std::vector<Warning> warnings;

    std::map<std::string, std::ostringstream> features_by_cond;
    std::map<std::string, std::ostringstream> inline_by_cond;
    std::map<std::string, std::map<std::string, std::pair<int, int>>> inline_rates;

    const auto q_names = textlab::question_feature_names();
    const auto m_names = textlab::response_feature_names(textlab::Source::M);
    const auto p_names = textlab::response_feature_names(textlab::Source::P);

    for (const TrialRecord& rec : trials.records) {
        const Condition cond{rec.benchmark, rec.probe};
        if (!selected(config, cond)) continue;
        if (!rec.question_text && !rec.reasoning_text && !rec.answer_text) continue;
        const std::string key = cond.name();
        auto& out = features_by_cond[key];
        if (out.tellp() == 0) {
            out << "# " << writer.config_comment() << "\n";
            out << "# lexicons=" << textlab::lexicon_version() << "\n";
            std::vector<std::string> header{"benchmark", "probe", "model", "item_id", "correct"};
            header.insert(header.end(), q_names.begin(), q_names.end());
            header.insert(header.end(), m_names.begin(), m_names.end());
            header.insert(header.end(), p_names.begin(), p_names.end());
            csv::write_row(out, header);
        }
        std::vector<std::string> row{rec.benchmark, to_string(rec.probe), rec.model, rec.item_id,
                                     rec.correct ? std::to_string(*rec.correct) : "NA"};
        auto push_features = [&](const std::optional<std::string>& text, textlab::Source source,
                                 std::size_t n_features) {
            if (text && !text->empty()) {
                try {
                    const textlab::FeatureVector fv =
                        source == textlab::Source::Q
                            ? textlab::question_features(*text)
                            : textlab::response_features(*text, source);
                    for (double v : fv.values) row.push_back(fmt(v));
                    return;
                } catch (const DataError&) {
                    // fall through to NA fill
                }
            }
            for (std::size_t i = 0; i < n_features; ++i) row.push_back("NA");
        };
        push_features(rec.question_text, textlab::Source::Q, q_names.size());
        push_features(rec.reasoning_text, textlab::Source::M, m_names.size());
        push_features(rec.answer_text, textlab::Source::P, p_names.size());
        csv::write_row(out, row);

        // Inline-solve detection on the confidence-judgement reasoning.
        auto& iout = inline_by_cond[key];
        if (iout.tellp() == 0) {
            iout << "# " << writer.config_comment() << "\n";
            csv::write_row(iout, {"benchmark", "probe", "model", "item_id", "score", "flagged",
                                  "convergence", "math_notation", "computation", "steps",
                                  "length"});
        }
        const textlab::InlineSolveResult isr =
            textlab::inline_solve_score(rec.reasoning_text.value_or(""));
        csv::write_row(iout, {rec.benchmark, to_string(rec.probe), rec.model, rec.item_id,
                              std::to_string(isr.score), isr.flagged ? "1" : "0",
                              isr.per_feature[0] ? "1" : "0", isr.per_feature[1] ? "1" : "0",
                              isr.per_feature[2] ? "1" : "0", isr.per_feature[3] ? "1" : "0",
                              isr.per_feature[4] ? "1" : "0"});
        auto& rate = inline_rates[key][rec.model];
        rate.second += 1;
        rate.first += isr.flagged ? 1 : 0;
    }

    if (features_by_cond.empty()) {
        warnings.push_back({"textfeat_empty", "no records carried text fields"});
    }
    for (const auto& [key, out] : features_by_cond) {
        writer.write_text("textfeat/" + key + "__features.csv", out.str());
    }
    for (const auto& [key, out] : inline_by_cond) {
        writer.write_text("textfeat/" + key + "__inline_solve.csv", out.str());
    }
    for (const auto& [key, rates] : inline_rates) {
        std::ostringstream out;
        out << "# " << writer.config_comment() << "\n";
        csv::write_row(out, {"model", "inline_solve_rate", "n"});
        for (const auto& [model, rate] : rates) {
            csv::write_row(out, {model, fmt(static_cast<double>(rate.first) / rate.second),
                                 std::to_string(rate.second)});
        }
        writer.write_text("textfeat/" + key + "__inline_rate.csv", out.str());
    }
    writer.write_text("textfeat/textfeat_log.csv",
                      warnings_csv(warnings, writer.config_comment()));
}

// -------------------------------------------------------------- classify --

struct FeatureTableRows {
    std::vector<std::string> feature_names;  // full q+m+p schema
    std::vector<std::string> models;
    std::vector<std::string> item_ids;
    std::vector<int> correct;
    std::vector<std::vector<double>> values;  // NaN = missing
};

FeatureTableRows read_feature_table(const fs::path& path) {
    csv::Table table = csv::read_file(path.string());
    if (table.rows.size() < 2) throw DataError("feature table empty: " + path.string());
    const auto& header = table.rows.front();
    FeatureTableRows rows;
    rows.feature_names.assign(header.begin() + 5, header.end());
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row[4] == "NA") continue;  // correctness label required
        rows.models.push_back(row[2]);
        rows.item_ids.push_back(row[3]);
        rows.correct.push_back(row[4] == "1" ? 1 : 0);
        std::vector<double> vals;
        for (std::size_t c = 5; c < row.size(); ++c) {
            vals.push_back(row[c] == "NA" ? std::numeric_limits<double>::quiet_NaN()
                                          : std::stod(row[c]));
        }
        rows.values.push_back(std::move(vals));
    }
    return rows;
}

std::string pick_representative(const RunConfig& config, const JudgementMatrix& conf,
                                const JudgementMatrix* perf) {
    if (!config.representative_model.empty()) return config.representative_model;
    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t mid = v.size() / 2;
        return (v.size() % 2) ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    };
    const double conf_median = median_of(conf.marginals);
    std::map<std::string, double> perf_rate;
    double perf_median = 0.0;
    if (perf) {
        for (std::size_t m = 0; m < perf->n_models(); ++m) {
            perf_rate[perf->model_ids[m]] = perf->marginals[m];
        }
        perf_median = median_of(perf->marginals);
    }
    std::string best;
    double best_score = 1e300;
    for (std::size_t m = 0; m < conf.n_models(); ++m) {
        double score = std::fabs(conf.marginals[m] - conf_median);
        if (perf) {
            auto it = perf_rate.find(conf.model_ids[m]);
            if (it == perf_rate.end()) continue;
            score += std::fabs(it->second - perf_median);
        }
        if (score < best_score || (score == best_score && conf.model_ids[m] < best)) {
            best_score = score;
            best = conf.model_ids[m];
        }
    }
    if (best.empty()) throw DataError("no representative model available");
    return best;
}

std::vector<std::pair<double, double>> roc_points(const std::vector<double>& scores,
                                                  const std::vector<int>& labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double n_pos = 0, n_neg = 0;
    for (int y : labels) (y ? n_pos : n_neg) += 1;
    std::vector<std::pair<double, double>> points{{0.0, 0.0}};
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t t = i; t <= j; ++t) (labels[order[t]] ? tp : fp) += 1;
        points.push_back({fp / n_neg, tp / n_pos});
        i = j + 1;
    }
    return points;
}

void stage_classify(const RunConfig& config, ArtifactWriter& writer) {
    require_dir(config, "textfeat", "textfeat");
    const std::vector<Condition> conditions = discover_conditions(config);
    std::vector<Warning> warnings;

    std::ostringstream auc_table;
    auc_table << "# " << writer.config_comment() << "\n";
    csv::write_row(auc_table,
                   {"benchmark", "probe", "model", "internal", "pop", "q", "qm", "qp", "qmp"});

    // Per-condition QM datasets for the transfer matrix.
    std::vector<std::pair<std::string, Dataset>> qm_datasets;

    for (const Condition& cond : conditions) {
        if (!selected(config, cond)) continue;
        const fs::path feat_path =
            fs::path(config.out_dir) / ("textfeat/" + cond.name() + "__features.csv");
        if (!fs::exists(feat_path)) {
            warnings.push_back({"classify_skipped", cond.name() + ": no feature table"});
            continue;
        }
        const auto conf = try_read_matrix(config, cond, Signal::confidence);
        const auto perf = try_read_matrix(config, cond, Signal::performance);
        if (!conf || !perf) {
            warnings.push_back({"classify_skipped",
                                cond.name() + ": needs confidence and performance matrices"});
            continue;
        }
        FeatureTableRows rows;
        try {
            rows = read_feature_table(feat_path);
        } catch (const DataError& e) {
            warnings.push_back({"classify_skipped", cond.name() + ": " + e.what()});
            continue;
        }
        const std::string model = pick_representative(config, *conf, &*perf);

        // Internal and Population predictors over the model's labeled items.
        std::map<std::string, std::size_t> conf_item, perf_item;
        for (std::size_t i = 0; i < conf->item_ids.size(); ++i) conf_item[conf->item_ids[i]] = i;
        for (std::size_t i = 0; i < perf->item_ids.size(); ++i) perf_item[perf->item_ids[i]] = i;
        std::size_t conf_col = conf->n_models(), perf_col = perf->n_models();
        for (std::size_t m = 0; m < conf->n_models(); ++m) {
            if (conf->model_ids[m] == model) conf_col = m;
        }
        for (std::size_t m = 0; m < perf->n_models(); ++m) {
            if (perf->model_ids[m] == model) perf_col = m;
        }
        if (conf_col == conf->n_models() || perf_col == perf->n_models()) {
            warnings.push_back({"classify_skipped",
                                cond.name() + ": representative model lacks data"});
            continue;
        }
        const std::vector<double> pop_rates = item_rates(*conf);
        std::vector<double> internal_scores, pop_scores;
        std::vector<int> labels;
        for (const auto& [item, ci] : conf_item) {
            auto pit = perf_item.find(item);
            if (pit == perf_item.end()) continue;
            const int c = conf->at(ci, conf_col);
            const int y = perf->at(pit->second, perf_col);
            if (c < 0 || y < 0) continue;
            internal_scores.push_back(c);
            pop_scores.push_back(pop_rates[ci]);
            labels.push_back(y);
        }

        auto auc_or_na = [&](auto&& compute) -> std::string {
            try {
                return fmt(compute());
            } catch (const std::exception& e) {
                warnings.push_back({"classify_auc_failed", cond.name() + ": " + e.what()});
                return "NA";
            }
        };
        const std::string internal_auc =
            auc_or_na([&] { return roc_auc(internal_scores, labels); });
        const std::string pop_auc = auc_or_na([&] { return roc_auc(pop_scores, labels); });

        // Feature-subset classifiers on the representative model's rows.
        auto subset_columns = [&](const std::string& subset) {
            std::vector<std::size_t> cols;
            for (std::size_t c = 0; c < rows.feature_names.size(); ++c) {
                const std::string& name = rows.feature_names[c];
                const bool q = name.rfind("q_", 0) == 0;
                const bool m = name.rfind("m_", 0) == 0;
                const bool p = name.rfind("p_", 0) == 0;
                if ((subset.find('q') != std::string::npos && q) ||
                    (subset.find('m') != std::string::npos && m) ||
                    (subset.find('p') != std::string::npos && p)) {
                    cols.push_back(c);
                }
            }
            return cols;
        };

        std::map<std::string, std::string> subset_auc;
        // Out-of-fold scores per subset for the ROC overlay.
        std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> subset_scores;
        std::ostringstream coeffs;
        coeffs << "# " << writer.config_comment() << "\n";
        coeffs << "# lexicons=" << textlab::lexicon_version() << "\n";
        csv::write_row(coeffs, {"subset", "feature", "weight"});
        for (const std::string& subset : {std::string("q"), std::string("qm"), std::string("qp"),
                                          std::string("qmp")}) {
            const std::vector<std::size_t> cols = subset_columns(subset);
            std::vector<std::size_t> usable;
            for (std::size_t r = 0; r < rows.values.size(); ++r) {
                if (rows.models[r] != model) continue;
                bool ok = true;
                for (std::size_t c : cols) {
                    if (std::isnan(rows.values[r][c])) {
                        ok = false;
                        break;
                    }
                }
                if (ok) usable.push_back(r);
            }
            if (usable.size() < 10) {
                subset_auc[subset] = "NA";
                warnings.push_back({"classify_subset_skipped",
                                    cond.name() + "/" + subset + ": too few usable rows"});
                continue;
            }
            Eigen::MatrixXd X(usable.size(), cols.size());
            std::vector<int> y(usable.size());
            std::vector<std::string> groups(usable.size());
            for (std::size_t r = 0; r < usable.size(); ++r) {
                for (std::size_t c = 0; c < cols.size(); ++c) {
                    X(r, c) = rows.values[usable[r]][cols[c]];
                }
                y[r] = rows.correct[usable[r]];
                groups[r] = rows.item_ids[usable[r]];
            }
            subset_auc[subset] = auc_or_na([&] {
                const CvResult cv = grouped_cv(X, y, groups, config.cv_folds, config.ridge_c);
                auto& [probs, labels_out] = subset_scores[subset];
                for (std::size_t r = 0; r < y.size(); ++r) {
                    if (!std::isnan(cv.out_of_fold_probs[r])) {
                        probs.push_back(cv.out_of_fold_probs[r]);
                        labels_out.push_back(y[r]);
                    }
                }
                return cv.auc;
            });
            try {
                const LogisticModel full = fit_logistic(X, y, config.ridge_c);
                for (std::size_t c = 0; c < cols.size(); ++c) {
                    csv::write_row(coeffs, {subset, rows.feature_names[cols[c]],
                                            fmt(full.weights(c))});
                }
                csv::write_row(coeffs, {subset, "(intercept)", fmt(full.intercept)});
            } catch (const std::exception& e) {
                warnings.push_back({"classify_fit_failed",
                                    cond.name() + "/" + subset + ": " + e.what()});
            }

            if (subset == "qm") {
                Dataset ds;
                ds.X = X;
                ds.y = y;
                ds.groups = groups;
                for (std::size_t c : cols) ds.feature_names.push_back(rows.feature_names[c]);
                // Rename m_/p_ prefixes are uniform across conditions, so
                // schemas match whenever texts are present.
                qm_datasets.push_back({cond.name(), std::move(ds)});
            }
        }

        csv::write_row(auc_table, {cond.benchmark, metacal::to_string(cond.probe), model,
                                   internal_auc, pop_auc, subset_auc["q"], subset_auc["qm"],
                                   subset_auc["qp"], subset_auc["qmp"]});
        writer.write_text("classify/" + cond.name() + "__coefficients.csv", coeffs.str());

        // ROC overlay figure.
        {
            svg::Figure fig(440, 330);
            fig.comment(writer.config_comment());
            svg::Panel panel{60, 40, 300, 230, 0.0, 1.0, 0.0, 1.0};
            svg::draw_frame(fig, panel, "panel-roc", cond.name() + " ROC (" + model + ")",
                            "false positive rate", "true positive rate");
            svg::draw_polyline(fig, panel, {0.0, 1.0}, {0.0, 1.0}, "#999999", 1.0, "3,3");
            auto draw_roc = [&](const std::vector<double>& scores, const std::vector<int>& ys_in,
                                const std::string& color, const std::string& label,
                                double label_y) {
                if (scores.empty()) return;
                bool has0 = false, has1 = false;
                for (int v : ys_in) (v ? has1 : has0) = true;
                if (!has0 || !has1) return;
                std::vector<double> xs, ys;
                for (const auto& [fpr, tpr] : roc_points(scores, ys_in)) {
                    xs.push_back(fpr);
                    ys.push_back(tpr);
                }
                svg::draw_polyline(fig, panel, xs, ys, color, 1.6);
                svg::draw_label(fig, panel.px + 8, label_y, label, 9);
            };
            draw_roc(internal_scores, labels, "#1f77b4", "internal", panel.py + 14);
            draw_roc(pop_scores, labels, "#2ca02c", "population", panel.py + 26);
            const char* subset_colors[] = {"#ff7f0e", "#9467bd", "#8c564b", "#d62728"};
            const char* subset_names[] = {"q", "qm", "qp", "qmp"};
            for (int s = 0; s < 4; ++s) {
                auto it = subset_scores.find(subset_names[s]);
                if (it == subset_scores.end()) continue;
                draw_roc(it->second.first, it->second.second, subset_colors[s], subset_names[s],
                         panel.py + 38.0 + 12.0 * s);
            }
            writer.write_text("classify/" + cond.name() + "__roc.svg", fig.finish());
        }
    }

    writer.write_text("classify/auc.csv", auc_table.str());

    if (qm_datasets.size() >= 2) {
        try {
            const TransferResult transfer =
                transfer_matrix(qm_datasets, config.cv_folds, config.ridge_c);
            std::ostringstream out;
            out << "# " << writer.config_comment() << "\n";
            std::vector<std::string> header{"train_condition"};
            header.insert(header.end(), transfer.benchmarks.begin(), transfer.benchmarks.end());
            csv::write_row(out, header);
            for (std::size_t r = 0; r < transfer.benchmarks.size(); ++r) {
                std::vector<std::string> row{transfer.benchmarks[r]};
                for (std::size_t c = 0; c < transfer.benchmarks.size(); ++c) {
                    row.push_back(fmt(transfer.auc(r, c)));
                }
                csv::write_row(out, row);
            }
            writer.write_text("classify/transfer_qm.csv", out.str());
        } catch (const std::exception& e) {
            warnings.push_back({"transfer_skipped", e.what()});
        }
    }
    writer.write_text("classify/classify_log.csv",
                      warnings_csv(warnings, writer.config_comment()));
}

// --------------------------------------------------------------- summary --

void stage_summary(const RunConfig& config, ArtifactWriter& writer) {
    const std::vector<Condition> conditions = discover_conditions(config);
    std::vector<Warning> warnings;

    std::ostringstream marg;
    marg << "# " << writer.config_comment() << "\n";
    csv::write_row(marg, {"benchmark", "probe", "model", "yes_rate", "accuracy"});

    // models x conditions yes-rate table for the consistency report.
    std::vector<std::string> cond_names;
    std::map<std::string, std::map<std::string, double>> yes_by_model;  // model -> cond -> rate

    std::ostringstream fbeta_csv;
    fbeta_csv << "# " << writer.config_comment() << "\n";
    csv::write_row(fbeta_csv,
                   {"benchmark", "probe", "model", "beta", "fbeta", "precision", "recall"});
    const std::vector<double> betas =
        log_spaced_betas(config.beta_min, config.beta_max, config.beta_points);

    for (const Condition& cond : conditions) {
        if (!selected(config, cond)) continue;
        const auto conf = try_read_matrix(config, cond, Signal::confidence);
        const auto perf = try_read_matrix(config, cond, Signal::performance);
        if (!conf && !perf) continue;

        std::map<std::string, double> conf_rate, perf_rate;
        if (conf) {
            cond_names.push_back(cond.name());
            for (std::size_t m = 0; m < conf->n_models(); ++m) {
                conf_rate[conf->model_ids[m]] = conf->marginals[m];
                yes_by_model[conf->model_ids[m]][cond.name()] = conf->marginals[m];
            }
        }
        if (perf) {
            for (std::size_t m = 0; m < perf->n_models(); ++m) {
                perf_rate[perf->model_ids[m]] = perf->marginals[m];
            }
        }
        std::set<std::string> models;
        for (const auto& [m, _] : conf_rate) models.insert(m);
        for (const auto& [m, _] : perf_rate) models.insert(m);
        for (const std::string& m : models) {
            csv::write_row(marg, {cond.benchmark, metacal::to_string(cond.probe), m,
                                  conf_rate.count(m) ? fmt(conf_rate[m]) : "NA",
                                  perf_rate.count(m) ? fmt(perf_rate[m]) : "NA"});
        }

        // Calibration scatter, labeled and unlabeled variants.
        if (conf && perf) {
            for (bool labeled : {false, true}) {
                svg::Figure fig(370, 330);
                fig.comment(writer.config_comment());
                svg::Panel panel{60, 40, 260, 230, 0.0, 1.0, 0.0, 1.0};
                svg::draw_frame(fig, panel, "panel-calibration", cond.name(),
                                "mean confidence (yes-rate)", "accuracy");
                svg::draw_polyline(fig, panel, {0.0, 1.0}, {0.0, 1.0}, "#cccccc", 1.0, "3,3");
                std::string data = "model,yes_rate,accuracy";
                for (const std::string& m : models) {
                    if (!conf_rate.count(m) || !perf_rate.count(m)) continue;
                    svg::draw_points(fig, panel, {conf_rate[m]}, {perf_rate[m]}, "#1f77b4", 3.0);
                    if (labeled) {
                        svg::draw_label(fig, panel.sx(conf_rate[m]) + 4,
                                        panel.sy(perf_rate[m]) - 4, m, 8);
                    }
                    data += "\n" + m + "," + fmt(conf_rate[m]) + "," + fmt(perf_rate[m]);
                }
                fig.comment(data);
                writer.write_text("summary/" + cond.name() +
                                      (labeled ? "__calibration_labeled.svg"
                                               : "__calibration.svg"),
                                  fig.finish());
            }

            // F-beta curves per model.
            svg::Figure fig(440, 330);
            fig.comment(writer.config_comment());
            svg::Panel panel{60, 40, 300, 230, config.beta_min, config.beta_max, 0.0, 1.0};
            panel.log_x = true;
            svg::draw_frame(fig, panel, "panel-fbeta", cond.name() + " F-beta",
                            "beta (log scale)", "F-beta");
            svg::draw_vline(fig, panel, 1.0, "#999999", "3,3");
            std::map<std::string, std::size_t> perf_item;
            for (std::size_t i = 0; i < perf->item_ids.size(); ++i) {
                perf_item[perf->item_ids[i]] = i;
            }
            int color_idx = 0;
            const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                     "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
            for (std::size_t cm = 0; cm < conf->n_models(); ++cm) {
                const std::string& model = conf->model_ids[cm];
                std::size_t pm = perf->n_models();
                for (std::size_t m = 0; m < perf->n_models(); ++m) {
                    if (perf->model_ids[m] == model) pm = m;
                }
                if (pm == perf->n_models()) continue;
                std::vector<int> cvec, yvec;
                for (std::size_t i = 0; i < conf->item_ids.size(); ++i) {
                    auto it = perf_item.find(conf->item_ids[i]);
                    if (it == perf_item.end()) continue;
                    const int c = conf->at(i, cm);
                    const int y = perf->at(it->second, pm);
                    if (c < 0 || y < 0) continue;
                    cvec.push_back(c);
                    yvec.push_back(y);
                }
                try {
                    const FBetaCurve curve = fbeta_curve(cvec, yvec, betas);
                    for (std::size_t b = 0; b < betas.size(); ++b) {
                        csv::write_row(fbeta_csv,
                                       {cond.benchmark, metacal::to_string(cond.probe), model,
                                        fmt(betas[b]), fmt(curve.scores[b]),
                                        fmt(curve.precision), fmt(curve.recall)});
                    }
                    fig.comment(model + ": precision=" + fmt(curve.precision) +
                                " recall=" + fmt(curve.recall));
                    svg::draw_polyline(fig, panel, curve.betas, curve.scores,
                                       palette[color_idx % 10], 1.3);
                    ++color_idx;
                } catch (const NumericalError& e) {
                    warnings.push_back({"fbeta_omitted",
                                        cond.name() + "/" + model + ": " + e.what()});
                }
            }
            writer.write_text("summary/" + cond.name() + "__fbeta.svg", fig.finish());
        }
    }
    writer.write_text("summary/marginals.csv", marg.str());
    writer.write_text("summary/fbeta.csv", fbeta_csv.str());

    // Cross-condition consistency of confidence base rates.
    if (cond_names.size() >= 2) {
        std::vector<std::string> models;
        for (const auto& [m, _] : yes_by_model) models.push_back(m);
        std::vector<std::string> kept_models;
        std::vector<std::vector<double>> rates;
        for (const std::string& m : models) {
            bool complete = true;
            std::vector<double> row;
            for (const std::string& c : cond_names) {
                auto it = yes_by_model[m].find(c);
                if (it == yes_by_model[m].end()) {
                    complete = false;
                    break;
                }
                row.push_back(it->second);
            }
            if (complete) {
                kept_models.push_back(m);
                rates.push_back(std::move(row));
            }
        }
        if (kept_models.size() >= 2) {
            try {
                const ConsistencyReport report = consistency(kept_models, cond_names, rates);
                std::ostringstream out;
                out << "# " << writer.config_comment() << "\n";
                out << "# median_pairwise_r=" << fmt(report.median_pairwise_r) << "\n";
                std::vector<std::string> header{"model"};
                for (const std::string& c : report.conditions) header.push_back("z_" + c);
                csv::write_row(out, header);
                for (std::size_t rank = 0; rank < report.model_order.size(); ++rank) {
                    const std::size_t m = report.model_order[rank];
                    std::vector<std::string> row{report.models[m]};
                    for (double z : report.z[m]) row.push_back(fmt(z));
                    csv::write_row(out, row);
                }
                writer.write_text("summary/consistency.csv", out.str());

                svg::Figure fig(520, 330);
                fig.comment(writer.config_comment());
                {
                    std::string data = "model";
                    for (const std::string& c : report.conditions) data += ",z_" + c;
                    for (std::size_t rank = 0; rank < report.model_order.size(); ++rank) {
                        const std::size_t m = report.model_order[rank];
                        data += "\n" + report.models[m];
                        for (double z : report.z[m]) data += "," + fmt(z);
                    }
                    fig.comment(data);
                }
                double z_lo = -1.0, z_hi = 1.0;
                for (const auto& row : report.z) {
                    for (double z : row) {
                        z_lo = std::min(z_lo, z);
                        z_hi = std::max(z_hi, z);
                    }
                }
                svg::Panel panel{60, 40, 380, 230, -0.5,
                                 static_cast<double>(report.model_order.size()) - 0.5,
                                 z_lo - 0.3, z_hi + 0.3};
                svg::draw_frame(fig, panel, "panel-consistency",
                                "confidence base-rate z-scores "
                                "(median pairwise r = " +
                                    fmt(report.median_pairwise_r) + ")",
                                "model (ordered by mean z)", "z within condition");
                // One box per model: quartile box, median tick, min/max whiskers.
                for (std::size_t rank = 0; rank < report.model_order.size(); ++rank) {
                    const std::size_t m = report.model_order[rank];
                    std::vector<double> zs = report.z[m];
                    std::sort(zs.begin(), zs.end());
                    auto quantile = [&](double q) {
                        const double pos = q * (zs.size() - 1);
                        const std::size_t lo_idx = static_cast<std::size_t>(pos);
                        const double frac = pos - lo_idx;
                        if (lo_idx + 1 >= zs.size()) return zs.back();
                        return zs[lo_idx] * (1.0 - frac) + zs[lo_idx + 1] * frac;
                    };
                    const double x = static_cast<double>(rank);
                    const double q1 = quantile(0.25), q2 = quantile(0.5), q3 = quantile(0.75);
                    const double sx0 = panel.sx(x - 0.3), sx1 = panel.sx(x + 0.3);
                    const double sxm = panel.sx(x);
                    fig.raw("<line x1=\"" + fmt(sxm) + "\" y1=\"" + fmt(panel.sy(zs.front())) +
                            "\" x2=\"" + fmt(sxm) + "\" y2=\"" + fmt(panel.sy(zs.back())) +
                            "\" stroke=\"#1f77b4\" stroke-width=\"1\"/>");
                    fig.raw("<rect x=\"" + fmt(sx0) + "\" y=\"" + fmt(panel.sy(q3)) +
                            "\" width=\"" + fmt(sx1 - sx0) + "\" height=\"" +
                            fmt(panel.sy(q1) - panel.sy(q3)) +
                            "\" fill=\"#1f77b4\" fill-opacity=\"0.35\" stroke=\"#1f77b4\"/>");
                    fig.raw("<line x1=\"" + fmt(sx0) + "\" y1=\"" + fmt(panel.sy(q2)) +
                            "\" x2=\"" + fmt(sx1) + "\" y2=\"" + fmt(panel.sy(q2)) +
                            "\" stroke=\"#1f77b4\" stroke-width=\"2\"/>");
                }
                writer.write_text("summary/consistency.svg", fig.finish());
            } catch (const std::exception& e) {
                warnings.push_back({"consistency_skipped", e.what()});
            }
        }
    }

    // Internal/Population predictor table for the representative model.
    std::ostringstream pred;
    pred << "# " << writer.config_comment() << "\n";
    csv::write_row(pred, {"benchmark", "probe", "model", "item_id", "internal", "population"});
    for (const Condition& cond : conditions) {
        if (!selected(config, cond)) continue;
        const auto conf = try_read_matrix(config, cond, Signal::confidence);
        if (!conf) continue;
        const auto perf = try_read_matrix(config, cond, Signal::performance);
        try {
            const std::string model = pick_representative(config, *conf, perf ? &*perf : nullptr);
            const PredictorScores scores = internal_and_population_predictors(*conf, model);
            for (std::size_t i = 0; i < scores.item_ids.size(); ++i) {
                csv::write_row(pred, {cond.benchmark, metacal::to_string(cond.probe), model,
                                      scores.item_ids[i], fmt(scores.internal[i]),
                                      fmt(scores.population[i])});
            }
        } catch (const std::exception& e) {
            warnings.push_back({"predictors_skipped", cond.name() + ": " + e.what()});
        }
    }
    writer.write_text("summary/predictors.csv", pred.str());
    writer.write_text("summary/summary_log.csv",
                      warnings_csv(warnings, writer.config_comment()));
}

// ----------------------------------------------------------------- synth --

void stage_synth(const RunConfig& config, ArtifactWriter& writer) {
    PopulationSpec spec;
    spec.n_models = config.synth_models;
    spec.n_items = config.synth_items;
    spec.seed = config.seed;
    spec.cross_alignment = config.synth_cross_alignment;
    spec.loadings_conf.assign(spec.n_models, config.synth_loading);
    spec.loadings_perf.assign(spec.n_models, config.synth_loading);
    spec.self_calibration.assign(spec.n_models, config.synth_self_calibration);
    for (int m = 0; m < spec.n_models; ++m) {
        const double t = spec.n_models > 1 ? static_cast<double>(m) / (spec.n_models - 1) : 0.5;
        const double threshold =
            config.synth_threshold_lo + t * (config.synth_threshold_hi - config.synth_threshold_lo);
        spec.thresholds_conf.push_back(threshold);
        spec.thresholds_perf.push_back(threshold);
    }
    const SynthData data = generate(spec);

    const Probe probe = config.probes.size() == 1 ? probe_from_string(config.probes.front())
                                                  : Probe::prospective;
    TrialSet trials = to_trials(data, config.synth_benchmark, probe);
    if (probe == Probe::counterfactual) {
        // Counterfactual judgements are conditioned on success; emit the
        // confidence signal only.
        for (TrialRecord& rec : trials.records) rec.correct.reset();
    }
    if (config.synth_fixture_text) attach_fixture_texts(trials, config.seed);

    std::ostringstream out;
    save_trials_jsonl(trials, out);
    writer.write_text("synth/trials.jsonl", out.str());

    json truth;
    truth["config"] = json::parse(config.to_json());
    truth["axis_conf"] = data.truth.axis_conf;
    truth["axis_perf"] = data.truth.axis_perf;
    writer.write_text("synth/truth.json", truth.dump(2) + "\n");
}

}  // namespace

void attach_fixture_texts(TrialSet& trials, std::uint64_t seed) {
    const std::vector<std::string> fillers = {
        "the terms are small integers",     "every value is a whole number",
        "the sequence follows one rule",    "the expression has two parts",
        "the quantities are all positive",  "the setup repeats a known pattern"};
    for (TrialRecord& rec : trials.records) {
        Rng rng = Rng::substream(seed, {77, fnv1a(rec.item_id), fnv1a(rec.model)});
        Rng item_rng = Rng::substream(seed, {78, fnv1a(rec.item_id)});
        const int a = static_cast<int>(item_rng.below(90)) + 10;
        const int b = static_cast<int>(item_rng.below(90)) + 10;
        std::string question = "What is the value of " + std::to_string(a) + " + " +
                               std::to_string(b) + " when " +
                               fillers[item_rng.below(fillers.size())] + "?";
        rec.question_text = question;

        const bool confident = rec.confidence.value_or(0) == 1;
        const bool correct = rec.correct.value_or(rec.confidence.value_or(0)) == 1;
        std::string reasoning;
        if (confident) {
            reasoning += "I think this one is within reach. ";
            if (rng.uniform01() < 0.6) reasoning += "The sum is clearly simple to check. ";
        } else {
            reasoning += "I am not sure about this one, maybe the terms interact. ";
            if (rng.uniform01() < 0.6) reasoning += "It could be tricky and I might get stuck. ";
        }
        if (!correct && rng.uniform01() < 0.7) {
            reasoning += "Wait, the pattern seems confusing and hard to pin down. ";
        }
        if (correct && rng.uniform01() < 0.5) {
            reasoning += "Because the structure is familiar, I know the route. ";
        }
        rec.reasoning_text = reasoning;

        std::string answer = "We compute " + std::to_string(a) + " + " + std::to_string(b) +
                             " = " + std::to_string(correct ? a + b : a + b + 1) + ".";
        if (!correct && rng.uniform01() < 0.6) {
            answer += " The middle step was a guess and the result may be wrong.";
        }
        if (correct && rng.uniform01() < 0.4) {
            answer += " Therefore the total follows directly.";
        }
        rec.answer_text = answer;
    }
}

void write_tetra_csv(const TetrachoricMatrix& tetra, std::ostream& rho_out,
                     std::ostream& thresholds_out, std::ostream& clamped_out,
                     const std::string& config_line) {
    const int n = tetra.n_models();
    rho_out << "# metacal-tetra v1\n# " << config_line << "\n";
    std::vector<std::string> header{"model_id"};
    header.insert(header.end(), tetra.model_ids.begin(), tetra.model_ids.end());
    csv::write_row(rho_out, header);
    for (int a = 0; a < n; ++a) {
        std::vector<std::string> row{tetra.model_ids[a]};
        for (int b = 0; b < n; ++b) {
            row.push_back(tetra.missing(a, b) ? "NA" : fmt(tetra.rho(a, b)));
        }
        csv::write_row(rho_out, row);
    }

    thresholds_out << "# metacal-tetra-thresholds v1\n# " << config_line << "\n";
    csv::write_row(thresholds_out, {"model_id", "threshold", "n_items"});
    for (int a = 0; a < n; ++a) {
        csv::write_row(thresholds_out, {tetra.model_ids[a], fmt(tetra.thresholds[a]),
                                        std::to_string(tetra.n_pairs(a, a))});
    }

    clamped_out << "# metacal-tetra-clamped v1\n# " << config_line << "\n";
    csv::write_row(clamped_out, header);
    for (int a = 0; a < n; ++a) {
        std::vector<std::string> row{tetra.model_ids[a]};
        for (int b = 0; b < n; ++b) row.push_back(tetra.clamped(a, b) ? "1" : "0");
        csv::write_row(clamped_out, row);
    }
}

TetrachoricMatrix read_tetra_artifacts(const std::string& rho_path,
                                       const std::string& thresholds_path) {
    csv::Table rho_table = csv::read_file(rho_path);
    if (rho_table.rows.size() < 2) throw DataError("tetra csv too small: " + rho_path);
    TetrachoricMatrix tetra;
    const auto& header = rho_table.rows.front();
    tetra.model_ids.assign(header.begin() + 1, header.end());
    const int n = static_cast<int>(tetra.model_ids.size());
    tetra.rho = Eigen::MatrixXd::Identity(n, n);
    tetra.n_pairs = Eigen::MatrixXi::Zero(n, n);
    tetra.clamped.setZero(n, n);
    tetra.missing.setZero(n, n);
    for (int a = 0; a < n; ++a) {
        const auto& row = rho_table.rows.at(a + 1);
        for (int b = 0; b < n; ++b) {
            const std::string& cell = row.at(b + 1);
            if (cell == "NA") {
                tetra.missing(a, b) = 1;
                tetra.rho(a, b) = std::numeric_limits<double>::quiet_NaN();
            } else {
                tetra.rho(a, b) = std::stod(cell);
            }
        }
    }
    csv::Table thr_table = csv::read_file(thresholds_path);
    tetra.thresholds.assign(n, 0.0);
    for (std::size_t r = 1; r < thr_table.rows.size(); ++r) {
        const auto& row = thr_table.rows[r];
        for (int a = 0; a < n; ++a) {
            if (tetra.model_ids[a] == row.at(0)) {
                tetra.thresholds[a] = std::stod(row.at(1));
                tetra.n_pairs(a, a) = std::stoi(row.at(2));
            }
        }
    }
    return tetra;
}

void run_stage(Stage stage, const RunConfig& config) {
    ArtifactWriter writer(config.out_dir, config);
    switch (stage) {
        case Stage::ingest: stage_ingest(config, writer); break;
        case Stage::tetra: stage_tetra(config, writer); break;
        case Stage::eigen: stage_eigen(config, writer); break;
        case Stage::factors: stage_factors(config, writer); break;
        case Stage::pairwise: stage_pairwise(config, writer); break;
        case Stage::textfeat: stage_textfeat(config, writer); break;
        case Stage::classify: stage_classify(config, writer); break;
        case Stage::summary: stage_summary(config, writer); break;
        case Stage::synth: stage_synth(config, writer); break;
        case Stage::report_all:
            stage_ingest(config, writer);
            stage_tetra(config, writer);
            stage_eigen(config, writer);
            stage_factors(config, writer);
            stage_pairwise(config, writer);
            stage_textfeat(config, writer);
            stage_classify(config, writer);
            stage_summary(config, writer);
            break;
    }
    writer.finalize();
}

}  // namespace metacal
