#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include <optional>

#include "metacal/corpus.hpp"
#include "metacal/errors.hpp"
#include "metacal/factors.hpp"
#include "metacal/learner.hpp"
#include "metacal/pairwise.hpp"
#include "metacal/spectra.hpp"
#include "metacal/summary.hpp"
#include "metacal/synth.hpp"
#include "metacal/tetra.hpp"
#include "metacal/textlab.hpp"

namespace py = pybind11;
using namespace metacal;

namespace {

// items x models matrix with NaN for missing cells -> JudgementMatrix.
JudgementMatrix matrix_from_array(const Eigen::MatrixXd& values, const std::string& signal) {
    JudgementMatrix m;
    m.signal = signal_from_string(signal);
    const int width = static_cast<int>(std::to_string(std::max<Eigen::Index>(
                                           1, std::max(values.rows(), values.cols()) - 1))
                                           .size());
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        std::string s = std::to_string(i);
        while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
        m.item_ids.push_back("item" + s);
    }
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        std::string s = std::to_string(j);
        while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
        m.model_ids.push_back("model" + s);
    }
    m.cells.assign(values.size(), -1);
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double v = values(i, j);
            if (std::isnan(v)) continue;
            if (v != 0.0 && v != 1.0) throw DataError("matrix cells must be 0, 1, or NaN");
            m.set(i, j, static_cast<std::int8_t>(v));
        }
    }
    m.marginals.resize(m.n_models());
    for (std::size_t j = 0; j < m.n_models(); ++j) {
        std::int64_t yes = 0, present = 0;
        for (std::size_t i = 0; i < m.n_items(); ++i) {
            const int cell = m.at(i, j);
            if (cell < 0) continue;
            ++present;
            yes += cell;
        }
        if (present == 0) throw DataError("matrix column " + std::to_string(j) + " is all-missing");
        m.marginals[j] = static_cast<double>(yes) / static_cast<double>(present);
    }
    return m;
}

Eigen::MatrixXd matrix_to_array(const JudgementMatrix& m) {
    Eigen::MatrixXd out(m.n_items(), m.n_models());
    for (std::size_t i = 0; i < m.n_items(); ++i) {
        for (std::size_t j = 0; j < m.n_models(); ++j) {
            const int cell = m.at(i, j);
            out(i, j) = cell < 0 ? std::numeric_limits<double>::quiet_NaN() : cell;
        }
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Tetrachoric confidence-decomposition core";

    py::register_exception<DataError>(mod, "DataError", PyExc_ValueError);
    py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);

    mod.def("probit", &probit, py::arg("p"));
    mod.def("norm_cdf", &norm_cdf, py::arg("x"));
    mod.def("bvn_upper", &bvn_upper, py::arg("h"), py::arg("k"), py::arg("rho"));
    mod.def(
        "estimate_tetrachoric",
        [](std::int64_t n11, std::int64_t n10, std::int64_t n01, std::int64_t n00) {
            const TetraEstimate est = estimate_tetrachoric({n11, n10, n01, n00});
            return py::make_tuple(est.rho, est.clamped);
        },
        py::arg("n11"), py::arg("n10"), py::arg("n01"), py::arg("n00"),
        "Returns (rho, clamped) for a 2x2 table");

    mod.def(
        "tetrachoric_matrix",
        [](const Eigen::MatrixXd& values, const std::string& signal) {
            const TetrachoricMatrix t = tetrachoric_matrix(matrix_from_array(values, signal));
            return py::make_tuple(t.rho, t.thresholds);
        },
        py::arg("values"), py::arg("signal") = "confidence",
        "items x models binary array (NaN = missing) -> (rho, thresholds)");

    mod.def(
        "eigenspectrum",
        [](const Eigen::MatrixXd& values, const std::string& signal) {
            const SpectrumReport s =
                eigenspectrum(tetrachoric_matrix(matrix_from_array(values, signal)));
            return py::make_tuple(s.eigenvalues, s.normalized, s.loadings);
        },
        py::arg("values"), py::arg("signal") = "confidence",
        "-> (eigenvalues, normalized, loadings)");

    mod.def(
        "parallel_analysis",
        [](const Eigen::MatrixXd& values, int draws, std::uint64_t seed,
           const std::string& signal) {
            const NullEnvelope env =
                parallel_analysis(matrix_from_array(values, signal), draws, seed);
            return py::make_tuple(env.per_rank_q95, env.per_rank_mean);
        },
        py::arg("values"), py::arg("draws") = 100, py::arg("seed") = 1,
        py::arg("signal") = "confidence", "-> (per_rank_q95, per_rank_mean), normalized scale");

    mod.def("kendall_tau_b", &kendall_tau_b, py::arg("x"), py::arg("y"));
    mod.def(
        "fisher_exact_3x3",
        [](const std::vector<std::vector<std::int64_t>>& table) {
            if (table.size() != 3 || table[0].size() != 3 || table[1].size() != 3 ||
                table[2].size() != 3) {
                throw DataError("fisher_exact_3x3: expected a 3x3 table");
            }
            std::array<std::array<std::int64_t, 3>, 3> t{};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) t[i][j] = table[i][j];
            }
            const FisherResult r = fisher_exact_3x3(t);
            return py::make_tuple(r.p_two_sided, r.point_prob, r.exact);
        },
        py::arg("table"), "-> (p_two_sided, point_prob, exact)");

    mod.def("roc_auc", &roc_auc, py::arg("scores"), py::arg("labels"));
    mod.def(
        "fit_logistic",
        [](const Eigen::MatrixXd& X, const std::vector<int>& y, double c) {
            const LogisticModel m = fit_logistic(X, y, c);
            return py::make_tuple(m.weights, m.intercept);
        },
        py::arg("X"), py::arg("y"), py::arg("c") = 1.0, "-> (weights, intercept)");
    mod.def(
        "grouped_cv_auc",
        [](const Eigen::MatrixXd& X, const std::vector<int>& y,
           const std::vector<std::string>& groups, int k, double c) {
            return grouped_cv(X, y, groups, k, c).auc;
        },
        py::arg("X"), py::arg("y"), py::arg("groups"), py::arg("k") = 5, py::arg("c") = 1.0);

    mod.def(
        "question_features",
        [](const std::string& text) { return textlab::question_features(text).values; },
        py::arg("text"));
    mod.def(
        "response_features",
        [](const std::string& text, const std::string& source) {
            return textlab::response_features(
                       text, source == "P" ? textlab::Source::P : textlab::Source::M)
                .values;
        },
        py::arg("text"), py::arg("source") = "M");
    mod.def("question_feature_names", [] { return textlab::question_feature_names(); });
    mod.def(
        "response_feature_names",
        [](const std::string& source) {
            return textlab::response_feature_names(source == "P" ? textlab::Source::P
                                                                 : textlab::Source::M);
        },
        py::arg("source") = "M");
    mod.def(
        "inline_solve_score",
        [](const std::string& text) {
            const textlab::InlineSolveResult r = textlab::inline_solve_score(text);
            return py::make_tuple(r.score, r.flagged);
        },
        py::arg("text"), "-> (score, flagged)");
    mod.def("lexicon_version", [] { return textlab::lexicon_version(); });

    mod.def(
        "generate_population",
        [](int n_models, int n_items, double loading, double threshold, double cross_alignment,
           double self_calibration, std::uint64_t seed) {
            const SynthData data = generate(PopulationSpec::uniform(
                n_models, n_items, loading, threshold, cross_alignment, self_calibration, seed));
            return py::make_tuple(matrix_to_array(data.conf), matrix_to_array(data.perf),
                                  data.truth.axis_conf, data.truth.axis_perf);
        },
        py::arg("n_models"), py::arg("n_items"), py::arg("loading") = 0.7,
        py::arg("threshold") = 0.0, py::arg("cross_alignment") = 0.0,
        py::arg("self_calibration") = 0.0, py::arg("seed") = 1,
        "-> (conf, perf, axis_conf, axis_perf); matrices are items x models with NaN missing");

    mod.def(
        "fbeta_curve",
        [](const std::vector<int>& conf, const std::vector<int>& correct,
           const std::vector<double>& betas) {
            const FBetaCurve c = fbeta_curve(conf, correct, betas);
            return py::make_tuple(c.scores, c.precision, c.recall);
        },
        py::arg("conf"), py::arg("correct"), py::arg("betas"));
}
