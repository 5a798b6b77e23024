#include "metacal/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "metacal/errors.hpp"
#include "metacal/factors.hpp"
#include "metacal/rng.hpp"

namespace metacal {

std::string to_string(RegimePair r) {
    switch (r) {
        case RegimePair::rr: return "RR";
        case RegimePair::rnr: return "RNR";
        case RegimePair::nrnr: return "NRNR";
        default: return "unknown";
    }
}

namespace {

struct TieCounts {
    std::int64_t n0 = 0;  // all pairs
    std::int64_t n1 = 0;  // pairs tied in x
    std::int64_t n2 = 0;  // pairs tied in y
    std::int64_t s = 0;   // concordant minus discordant
};

double finalize_tau(const TieCounts& t) {
    const double dx = static_cast<double>(t.n0 - t.n1);
    const double dy = static_cast<double>(t.n0 - t.n2);
    if (dx <= 0.0 || dy <= 0.0) {
        throw NumericalError("kendall_tau_b: undefined, a vector is fully tied");
    }
    return static_cast<double>(t.s) / (std::sqrt(dx) * std::sqrt(dy));
}

std::int64_t pairs_of(std::int64_t t) { return t * (t - 1) / 2; }

// Counts inversions in v by bottom-up merge sort; equal elements are stable
// and not counted.
std::int64_t count_inversions(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> buf(n);
    std::int64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[i] <= v[j]) {
                    buf[k++] = v[i++];
                } else {
                    inversions += static_cast<std::int64_t>(mid - i);
                    buf[k++] = v[j++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
            std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
        }
    }
    return inversions;
}

}  // namespace

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) {
        throw DataError("kendall_tau_b: need two equal-length vectors of size >= 2");
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    TieCounts t;
    t.n0 = pairs_of(static_cast<std::int64_t>(n));

    std::int64_t n3 = 0;  // pairs tied in both
    {
        std::int64_t run_x = 1, run_xy = 1;
        for (std::size_t i = 1; i < n; ++i) {
            const bool same_x = x[order[i]] == x[order[i - 1]];
            const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
            if (same_x) {
                ++run_x;
            } else {
                t.n1 += pairs_of(run_x);
                run_x = 1;
            }
            if (same_xy) {
                ++run_xy;
            } else {
                n3 += pairs_of(run_xy);
                run_xy = 1;
            }
        }
        t.n1 += pairs_of(run_x);
        n3 += pairs_of(run_xy);
    }
    {
        std::vector<double> ys(y);
        std::sort(ys.begin(), ys.end());
        std::int64_t run = 1;
        for (std::size_t i = 1; i < n; ++i) {
            if (ys[i] == ys[i - 1]) {
                ++run;
            } else {
                t.n2 += pairs_of(run);
                run = 1;
            }
        }
        t.n2 += pairs_of(run);
    }

    std::vector<double> y_by_x(n);
    for (std::size_t i = 0; i < n; ++i) y_by_x[i] = y[order[i]];
    const std::int64_t discordant = count_inversions(y_by_x);

    // concordant = n0 - n1 - n2 + n3 - discordant
    t.s = t.n0 - t.n1 - t.n2 + n3 - 2 * discordant;
    return finalize_tau(t);
}

double kendall_tau_b_brute(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) {
        throw DataError("kendall_tau_b_brute: need two equal-length vectors of size >= 2");
    }
    TieCounts t;
    t.n0 = pairs_of(static_cast<std::int64_t>(n));
    std::int64_t concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const int dx = x[i] < x[j] ? -1 : (x[i] > x[j] ? 1 : 0);
            const int dy = y[i] < y[j] ? -1 : (y[i] > y[j] ? 1 : 0);
            if (dx == 0) ++t.n1;
            if (dy == 0) ++t.n2;
            if (dx != 0 && dy != 0) {
                if (dx == dy) ++concordant;
                else ++discordant;
            }
        }
    }
    t.s = concordant - discordant;
    return finalize_tau(t);
}

double pair_tau(const PairData& pair) {
    const std::size_t n = pair.n_items();
    if (pair.perf_b.size() != n || pair.conf_a.size() != n || pair.conf_b.size() != n) {
        throw DataError("pair_tau: vectors differ in length");
    }
    std::vector<double> dperf(n), dconf(n);
    for (std::size_t i = 0; i < n; ++i) {
        dperf[i] = static_cast<double>(pair.perf_a[i]) - static_cast<double>(pair.perf_b[i]);
        dconf[i] = static_cast<double>(pair.conf_a[i]) - static_cast<double>(pair.conf_b[i]);
    }
    return kendall_tau_b(dperf, dconf);
}

PairData null_draw(const PairData& pair, NullMode mode, std::uint64_t seed, std::uint64_t draw,
                   std::uint64_t attempt) {
    const std::size_t n = pair.n_items();
    auto permuted = [&](const std::vector<std::int8_t>& v,
                        const std::vector<std::uint32_t>& perm) {
        std::vector<std::int8_t> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = v[perm[i]];
        return out;
    };
    PairData shuffled = pair;
    if (mode == NullMode::base_rate_matched) {
        shuffled.perf_a =
            permuted(pair.perf_a, Rng::substream(seed, {draw, attempt, 0}).permutation(n));
        shuffled.perf_b =
            permuted(pair.perf_b, Rng::substream(seed, {draw, attempt, 1}).permutation(n));
        shuffled.conf_a =
            permuted(pair.conf_a, Rng::substream(seed, {draw, attempt, 2}).permutation(n));
        shuffled.conf_b =
            permuted(pair.conf_b, Rng::substream(seed, {draw, attempt, 3}).permutation(n));
    } else {
        // One permutation per model applied to (perf, conf) as a unit.
        const auto perm_a = Rng::substream(seed, {draw, attempt, 0}).permutation(n);
        const auto perm_b = Rng::substream(seed, {draw, attempt, 1}).permutation(n);
        shuffled.perf_a = permuted(pair.perf_a, perm_a);
        shuffled.conf_a = permuted(pair.conf_a, perm_a);
        shuffled.perf_b = permuted(pair.perf_b, perm_b);
        shuffled.conf_b = permuted(pair.conf_b, perm_b);
    }
    return shuffled;
}

std::vector<double> null_taus(const PairData& pair, NullMode mode, int draws, std::uint64_t seed,
                              int* resampled) {
    if (draws < 1) throw DataError("null_taus: draws must be >= 1");

    std::vector<double> taus;
    taus.reserve(draws);
    int resample_count = 0;
    for (int b = 0; b < draws; ++b) {
        bool done = false;
        for (std::uint64_t attempt = 0; attempt < 100 && !done; ++attempt) {
            try {
                taus.push_back(pair_tau(
                    null_draw(pair, mode, seed, static_cast<std::uint64_t>(b), attempt)));
                done = true;
            } catch (const NumericalError&) {
                ++resample_count;
            }
        }
        if (!done) {
            throw NumericalError("null_taus: all resamples degenerate for draw " +
                                 std::to_string(b));
        }
    }
    if (resampled) *resampled = resample_count;
    return taus;
}

namespace {

struct Margins {
    std::array<std::int64_t, 3> rows{};
    std::array<std::int64_t, 3> cols{};
    std::int64_t total = 0;
};

Margins margins_of(const std::array<std::array<std::int64_t, 3>, 3>& table) {
    Margins m;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (table[i][j] < 0) throw DataError("fisher_exact_3x3: negative cell");
            m.rows[i] += table[i][j];
            m.cols[j] += table[i][j];
            m.total += table[i][j];
        }
    }
    if (m.total < 1) throw DataError("fisher_exact_3x3: empty table");
    return m;
}

// log P(T | margins) under the multivariate hypergeometric.
class TableLogProb {
public:
    TableLogProb(const Margins& m) : base_(0.0) {
        log_fact_.resize(m.total + 1, 0.0);
        for (std::int64_t i = 2; i <= m.total; ++i) {
            log_fact_[i] = log_fact_[i - 1] + std::log(static_cast<double>(i));
        }
        for (int i = 0; i < 3; ++i) base_ += log_fact_[m.rows[i]] + log_fact_[m.cols[i]];
        base_ -= log_fact_[m.total];
    }

    double operator()(const std::array<std::array<std::int64_t, 3>, 3>& t) const {
        double lp = base_;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) lp -= log_fact_[t[i][j]];
        }
        return lp;
    }

private:
    std::vector<double> log_fact_;
    double base_;
};

// Visits every 3x3 table with the given margins. The visitor returns false
// to stop early.
template <typename Visitor>
void for_each_table(const Margins& m, Visitor&& visit) {
    std::array<std::array<std::int64_t, 3>, 3> t{};
    for (std::int64_t a = 0; a <= std::min(m.rows[0], m.cols[0]); ++a) {
        for (std::int64_t b = 0; b <= std::min(m.rows[0] - a, m.cols[1]); ++b) {
            const std::int64_t c = m.rows[0] - a - b;
            if (c > m.cols[2]) continue;
            for (std::int64_t d = 0; d <= std::min(m.rows[1], m.cols[0] - a); ++d) {
                for (std::int64_t e = 0; e <= std::min(m.rows[1] - d, m.cols[1] - b); ++e) {
                    const std::int64_t f = m.rows[1] - d - e;
                    if (f > m.cols[2] - c) continue;
                    const std::int64_t g = m.cols[0] - a - d;
                    const std::int64_t h = m.cols[1] - b - e;
                    const std::int64_t i = m.cols[2] - c - f;
                    if (g < 0 || h < 0 || i < 0 || g + h + i != m.rows[2]) continue;
                    t = {{{a, b, c}, {d, e, f}, {g, h, i}}};
                    if (!visit(t)) return;
                }
            }
        }
    }
}

}  // namespace

FisherResult fisher_exact_3x3(const std::array<std::array<std::int64_t, 3>, 3>& table,
                              std::int64_t max_tables, int mc_draws, std::uint64_t seed) {
    const Margins m = margins_of(table);
    const TableLogProb log_prob(m);
    const double lp_obs = log_prob(table);
    // Tables "no more probable than observed" with a relative tolerance for
    // floating-point ties.
    const double cutoff = lp_obs + 1e-7;

    FisherResult result;
    result.point_prob = std::exp(lp_obs);

    std::int64_t n_tables = 0;
    for_each_table(m, [&](const auto&) {
        ++n_tables;
        return n_tables <= max_tables;
    });

    if (n_tables <= max_tables) {
        double p = 0.0;
        for_each_table(m, [&](const auto& t) {
            const double lp = log_prob(t);
            if (lp <= cutoff) p += std::exp(lp);
            return true;
        });
        result.p_two_sided = std::min(1.0, p);
        result.exact = true;
        result.tables_or_draws = n_tables;
        return result;
    }

    // Margin-preserving Monte Carlo: shuffle column labels against fixed row
    // labels; the induced table follows the hypergeometric null.
    std::vector<std::int8_t> row_labels, col_labels;
    row_labels.reserve(m.total);
    col_labels.reserve(m.total);
    for (int i = 0; i < 3; ++i) {
        for (std::int64_t r = 0; r < m.rows[i]; ++r) row_labels.push_back(static_cast<std::int8_t>(i));
        for (std::int64_t c = 0; c < m.cols[i]; ++c) col_labels.push_back(static_cast<std::int8_t>(i));
    }
    std::int64_t hits = 0;
    for (int d = 0; d < mc_draws; ++d) {
        std::vector<std::int8_t> cols = col_labels;
        Rng rng = Rng::substream(seed, {static_cast<std::uint64_t>(d)});
        rng.shuffle(cols);
        std::array<std::array<std::int64_t, 3>, 3> t{};
        for (std::int64_t i = 0; i < m.total; ++i) ++t[row_labels[i]][cols[i]];
        if (log_prob(t) <= cutoff) ++hits;
    }
    result.p_two_sided =
        (static_cast<double>(hits) + 1.0) / (static_cast<double>(mc_draws) + 1.0);
    result.exact = false;
    const double p_hat = result.p_two_sided;
    result.mc_se = std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(mc_draws));
    result.tables_or_draws = mc_draws;
    return result;
}

std::array<std::array<std::int64_t, 3>, 3> sign_table(const PairData& pair) {
    std::array<std::array<std::int64_t, 3>, 3> table{};
    for (std::size_t i = 0; i < pair.n_items(); ++i) {
        const int dp = pair.perf_a[i] - pair.perf_b[i];
        const int dc = pair.conf_a[i] - pair.conf_b[i];
        ++table[dp + 1][dc + 1];
    }
    return table;
}

std::vector<PairData> build_pairs(const JudgementMatrix& perf, const JudgementMatrix& conf,
                                  std::optional<double> window_lo,
                                  std::optional<double> window_hi) {
    // Shared models and items between the two matrices.
    std::vector<std::string> models;
    std::set<std::string> conf_models(conf.model_ids.begin(), conf.model_ids.end());
    for (const std::string& m : perf.model_ids) {
        if (conf_models.count(m)) models.push_back(m);
    }

    std::map<std::string, std::size_t> perf_model_idx, conf_model_idx;
    for (std::size_t i = 0; i < perf.model_ids.size(); ++i) perf_model_idx[perf.model_ids[i]] = i;
    for (std::size_t i = 0; i < conf.model_ids.size(); ++i) conf_model_idx[conf.model_ids[i]] = i;

    std::map<std::string, std::size_t> conf_item_idx;
    for (std::size_t i = 0; i < conf.item_ids.size(); ++i) conf_item_idx[conf.item_ids[i]] = i;

    const std::vector<double> perf_rates = item_rates(perf);
    const std::vector<double> conf_rates = item_rates(conf);

    std::vector<std::pair<std::size_t, std::size_t>> items;  // (perf row, conf row)
    for (std::size_t i = 0; i < perf.item_ids.size(); ++i) {
        auto it = conf_item_idx.find(perf.item_ids[i]);
        if (it == conf_item_idx.end()) continue;
        if (window_lo && window_hi) {
            // Cross-model disagreement window on both rates.
            if (perf_rates[i] < *window_lo || perf_rates[i] > *window_hi) continue;
            if (conf_rates[it->second] < *window_lo || conf_rates[it->second] > *window_hi)
                continue;
        }
        items.push_back({i, it->second});
    }

    std::vector<PairData> pairs;
    for (std::size_t a = 0; a < models.size(); ++a) {
        for (std::size_t b = a + 1; b < models.size(); ++b) {
            PairData pair;
            pair.model_a = models[a];
            pair.model_b = models[b];
            const std::size_t pa = perf_model_idx[models[a]];
            const std::size_t pb = perf_model_idx[models[b]];
            const std::size_t ca = conf_model_idx[models[a]];
            const std::size_t cb = conf_model_idx[models[b]];
            for (const auto& [pi, ci] : items) {
                const int xpa = perf.at(pi, pa);
                const int xpb = perf.at(pi, pb);
                const int xca = conf.at(ci, ca);
                const int xcb = conf.at(ci, cb);
                if (xpa < 0 || xpb < 0 || xca < 0 || xcb < 0) continue;
                pair.perf_a.push_back(static_cast<std::int8_t>(xpa));
                pair.perf_b.push_back(static_cast<std::int8_t>(xpb));
                pair.conf_a.push_back(static_cast<std::int8_t>(xca));
                pair.conf_b.push_back(static_cast<std::int8_t>(xcb));
            }
            if (pair.n_items() == 0) continue;
            double mean_a = 0.0, mean_b = 0.0;
            for (std::size_t i = 0; i < pair.n_items(); ++i) {
                mean_a += pair.perf_a[i];
                mean_b += pair.perf_b[i];
            }
            mean_a /= static_cast<double>(pair.n_items());
            mean_b /= static_cast<double>(pair.n_items());
            pair.gap = std::fabs(mean_a - mean_b);
            pairs.push_back(std::move(pair));
        }
    }
    return pairs;
}

std::vector<GapCurvePoint> tau_vs_gap_curve(const std::vector<PairReport>& pairs,
                                            const std::vector<double>& deltas) {
    if (pairs.empty()) throw DataError("tau_vs_gap_curve: no pairs");
    std::vector<GapCurvePoint> curve;
    for (double delta : deltas) {
        std::vector<double> taus;
        for (const PairReport& p : pairs) {
            if (p.tau_defined && p.gap <= delta) taus.push_back(p.tau);
        }
        if (taus.empty()) continue;
        GapCurvePoint point;
        point.delta = delta;
        point.n_pairs = static_cast<int>(taus.size());
        double mean = 0.0;
        for (double t : taus) mean += t;
        mean /= static_cast<double>(taus.size());
        point.mean_tau = mean;
        if (taus.size() > 1) {
            double ss = 0.0;
            for (double t : taus) ss += (t - mean) * (t - mean);
            const double sd = std::sqrt(ss / static_cast<double>(taus.size() - 1));
            point.ci_half_width = 1.96 * sd / std::sqrt(static_cast<double>(taus.size()));
        }
        curve.push_back(point);
    }
    return curve;
}

std::vector<RegimeStats> stratify_by_regime(const std::vector<PairReport>& pairs,
                                            const std::vector<ModelMeta>& meta, double alpha,
                                            int* n_excluded) {
    if (pairs.empty()) throw DataError("stratify_by_regime: no pairs");
    std::map<std::string, Regime> regimes;
    for (const ModelMeta& m : meta) regimes[m.model_id] = m.regime;

    auto regime_of = [&](const std::string& model) {
        auto it = regimes.find(model);
        return it == regimes.end() ? Regime::unknown : it->second;
    };

    std::map<RegimePair, std::vector<const PairReport*>> by_class;
    int excluded = 0;
    for (const PairReport& p : pairs) {
        const Regime ra = regime_of(p.model_a);
        const Regime rb = regime_of(p.model_b);
        if (ra == Regime::unknown || rb == Regime::unknown) {
            ++excluded;
            continue;
        }
        RegimePair cls;
        if (ra == Regime::reasoning && rb == Regime::reasoning) cls = RegimePair::rr;
        else if (ra == Regime::non_reasoning && rb == Regime::non_reasoning) cls = RegimePair::nrnr;
        else cls = RegimePair::rnr;
        by_class[cls].push_back(&p);
    }
    if (n_excluded) *n_excluded = excluded;

    std::vector<RegimeStats> out;
    for (RegimePair cls : {RegimePair::rr, RegimePair::rnr, RegimePair::nrnr}) {
        auto it = by_class.find(cls);
        if (it == by_class.end()) continue;
        RegimeStats stats;
        stats.regime_pair = cls;
        stats.n_pairs = static_cast<int>(it->second.size());
        std::vector<double> taus;
        int significant = 0;
        for (const PairReport* p : it->second) {
            if (p->tau_defined) taus.push_back(p->tau);
            if (p->fisher.p_two_sided < alpha) ++significant;
        }
        if (!taus.empty()) {
            std::sort(taus.begin(), taus.end());
            const std::size_t mid = taus.size() / 2;
            stats.median_tau = (taus.size() % 2) ? taus[mid] : 0.5 * (taus[mid - 1] + taus[mid]);
        }
        stats.share_significant = static_cast<double>(significant) / stats.n_pairs;
        out.push_back(stats);
    }
    return out;
}

}  // namespace metacal
