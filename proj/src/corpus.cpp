#include "metacal/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "metacal/csv.hpp"
#include "metacal/errors.hpp"

namespace metacal {

using nlohmann::ordered_json;

std::string to_string(Probe p) {
    return p == Probe::prospective ? "prospective" : "counterfactual";
}

std::string to_string(Signal s) {
    return s == Signal::confidence ? "confidence" : "performance";
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::reasoning: return "reasoning";
        case Regime::non_reasoning: return "non_reasoning";
        default: return "unknown";
    }
}

Probe probe_from_string(const std::string& s) {
    if (s == "prospective") return Probe::prospective;
    if (s == "counterfactual") return Probe::counterfactual;
    throw DataError("unknown probe '" + s + "'");
}

Signal signal_from_string(const std::string& s) {
    if (s == "confidence") return Signal::confidence;
    if (s == "performance") return Signal::performance;
    throw DataError("unknown signal '" + s + "'");
}

Regime regime_from_string(const std::string& s) {
    if (s == "reasoning") return Regime::reasoning;
    if (s == "non_reasoning") return Regime::non_reasoning;
    if (s == "unknown") return Regime::unknown;
    throw DataError("unknown regime '" + s + "'");
}

namespace {

const char* const kKnownFields[] = {"benchmark", "probe",          "model",
                                    "item_id",   "confidence",     "correct",
                                    "question_text", "reasoning_text", "answer_text",
                                    "regime"};

bool is_known_field(const std::string& name) {
    for (const char* f : kKnownFields) {
        if (name == f) return true;
    }
    return false;
}

int parse_binary(const ordered_json& v, const std::string& field, const std::string& where) {
    if (!v.is_number_integer()) {
        throw DataError(where + ": binary field '" + field + "' must be an integer 0 or 1");
    }
    const int b = v.get<int>();
    if (b != 0 && b != 1) {
        throw DataError(where + ": binary field out of range: " + field + "=" +
                        std::to_string(b));
    }
    return b;
}

std::string key_of(const TrialRecord& r) {
    return r.benchmark + "|" + to_string(r.probe) + "|" + r.model + "|" + r.item_id;
}

void validate_record(TrialRecord& rec, const std::string& where, bool strict,
                     std::vector<Warning>& warnings) {
    if (rec.benchmark.empty() || rec.model.empty() || rec.item_id.empty()) {
        throw DataError(where + ": missing mandatory field (benchmark, model, item_id)");
    }
    if (!rec.confidence && !rec.correct) {
        throw DataError(where + ": at least one of confidence/correct must be present");
    }
    if (rec.probe == Probe::counterfactual && rec.correct && *rec.correct == 0) {
        // Counterfactual judgements are conditioned on success; an
        // unconditioned row is tolerated unless strict mode is on.
        if (strict) {
            throw DataError(where + ": counterfactual record with correct=0 (strict mode)");
        }
        warnings.push_back({"counterfactual_unconditioned",
                            where + ": counterfactual record with correct=0 for " +
                                key_of(rec)});
    }
}

TrialRecord parse_jsonl_line(const std::string& line, const std::string& where) {
    ordered_json obj;
    try {
        obj = ordered_json::parse(line);
    } catch (const std::exception& e) {
        throw DataError(where + ": malformed JSON line: " + e.what());
    }
    if (!obj.is_object()) throw DataError(where + ": expected a JSON object");

    TrialRecord rec;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& name = it.key();
        const ordered_json& v = it.value();
        if (name == "benchmark") rec.benchmark = v.get<std::string>();
        else if (name == "probe") rec.probe = probe_from_string(v.get<std::string>());
        else if (name == "model") rec.model = v.get<std::string>();
        else if (name == "item_id") rec.item_id = v.get<std::string>();
        else if (name == "confidence" && !v.is_null()) rec.confidence = parse_binary(v, name, where);
        else if (name == "correct" && !v.is_null()) rec.correct = parse_binary(v, name, where);
        else if (name == "question_text" && !v.is_null()) rec.question_text = v.get<std::string>();
        else if (name == "reasoning_text" && !v.is_null()) rec.reasoning_text = v.get<std::string>();
        else if (name == "answer_text" && !v.is_null()) rec.answer_text = v.get<std::string>();
        else if (name == "regime" && !v.is_null()) rec.regime = regime_from_string(v.get<std::string>());
        else if (!is_known_field(name)) rec.extra[name] = v.dump();
    }
    return rec;
}

TrialRecord parse_csv_row(const std::vector<std::string>& header,
                          const std::vector<std::string>& row, const std::string& where) {
    if (row.size() != header.size()) {
        throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(row.size()));
    }
    TrialRecord rec;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string& name = header[i];
        const std::string& v = row[i];
        if (v.empty() && name != "benchmark" && name != "model" && name != "item_id") continue;
        if (name == "benchmark") rec.benchmark = v;
        else if (name == "probe") rec.probe = probe_from_string(v);
        else if (name == "model") rec.model = v;
        else if (name == "item_id") rec.item_id = v;
        else if (name == "confidence" || name == "correct") {
            if (v != "0" && v != "1") {
                throw DataError(where + ": binary field out of range: " + name + "=" + v);
            }
            (name == "confidence" ? rec.confidence : rec.correct) = (v == "1");
        } else if (name == "question_text") rec.question_text = v;
        else if (name == "reasoning_text") rec.reasoning_text = v;
        else if (name == "answer_text") rec.answer_text = v;
        else if (name == "regime") rec.regime = regime_from_string(v);
        else rec.extra[name] = v;
    }
    return rec;
}

}  // namespace

TrialSet parse_trials(std::istream& in, TrialFormat format, bool strict,
                      const std::string& origin) {
    TrialSet out;
    std::set<std::string> seen;

    auto admit = [&](TrialRecord rec, const std::string& where) {
        validate_record(rec, where, strict, out.warnings);
        const std::string key = key_of(rec);
        if (!seen.insert(key).second) {
            throw DataError(where + ": duplicate key (" + key + ")");
        }
        out.records.push_back(std::move(rec));
    };

    if (format == TrialFormat::jsonl) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const std::string where = origin + ":" + std::to_string(line_no);
            admit(parse_jsonl_line(line, where), where);
        }
    } else {
        csv::Table table = csv::read(in);
        if (table.rows.empty()) return out;
        const std::vector<std::string>& header = table.rows.front();
        for (std::size_t r = 1; r < table.rows.size(); ++r) {
            const std::string where = origin + ":row" + std::to_string(r + 1);
            admit(parse_csv_row(header, table.rows[r], where), where);
        }
    }
    return out;
}

TrialSet load_trials(const std::string& path, TrialFormat format, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open trials file " + path);
    return parse_trials(in, format, strict, path);
}

void save_trials_jsonl(const TrialSet& trials, std::ostream& out) {
    for (const TrialRecord& rec : trials.records) {
        ordered_json obj;
        obj["benchmark"] = rec.benchmark;
        obj["probe"] = to_string(rec.probe);
        obj["model"] = rec.model;
        obj["item_id"] = rec.item_id;
        if (rec.confidence) obj["confidence"] = *rec.confidence;
        if (rec.correct) obj["correct"] = *rec.correct;
        if (rec.question_text) obj["question_text"] = *rec.question_text;
        if (rec.reasoning_text) obj["reasoning_text"] = *rec.reasoning_text;
        if (rec.answer_text) obj["answer_text"] = *rec.answer_text;
        if (rec.regime) obj["regime"] = to_string(*rec.regime);
        for (const auto& [name, raw] : rec.extra) {
            obj[name] = ordered_json::parse(raw, nullptr, false);
        }
        out << obj.dump() << '\n';
    }
}

std::vector<ModelMeta> load_model_meta(const std::string& path) {
    csv::Table table = csv::read_file(path);
    if (table.rows.empty()) throw DataError("model meta file is empty: " + path);
    const auto& header = table.rows.front();
    auto col = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    const int id_col = col("model_id");
    const int regime_col = col("regime");
    const int provider_col = col("provider");
    if (id_col < 0 || regime_col < 0) {
        throw DataError("model meta file needs model_id and regime columns: " + path);
    }
    std::vector<ModelMeta> out;
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        ModelMeta meta;
        meta.model_id = row.at(id_col);
        meta.regime = regime_from_string(row.at(regime_col));
        if (provider_col >= 0 && static_cast<std::size_t>(provider_col) < row.size() &&
            !row[provider_col].empty()) {
            meta.provider = row[provider_col];
        }
        out.push_back(std::move(meta));
    }
    return out;
}

JudgementMatrix build_matrix(const TrialSet& trials, const std::string& benchmark, Probe probe,
                             Signal signal, std::vector<Warning>* warnings) {
    std::set<std::string> model_set;
    std::set<std::string> item_set;
    std::map<std::pair<std::string, std::string>, int> values;  // (item, model) -> 0/1

    for (const TrialRecord& rec : trials.records) {
        if (rec.benchmark != benchmark || rec.probe != probe) continue;
        model_set.insert(rec.model);
        item_set.insert(rec.item_id);
        const std::optional<int>& v =
            signal == Signal::confidence ? rec.confidence : rec.correct;
        if (v) values[{rec.item_id, rec.model}] = *v;
    }
    if (model_set.empty() || item_set.empty()) {
        throw DataError("build_matrix: empty selection for benchmark=" + benchmark +
                        " probe=" + to_string(probe));
    }

    std::vector<std::string> models(model_set.begin(), model_set.end());
    std::vector<std::string> items(item_set.begin(), item_set.end());

    // Drop models with no non-missing cell for this signal.
    std::vector<std::string> kept_models;
    for (const std::string& m : models) {
        bool any = false;
        for (const std::string& it : items) {
            if (values.count({it, m})) {
                any = true;
                break;
            }
        }
        if (any) {
            kept_models.push_back(m);
        } else if (warnings) {
            warnings->push_back({"model_dropped", "model " + m + " has no " + to_string(signal) +
                                                      " cells in " + benchmark + "/" +
                                                      to_string(probe) + "; excluded"});
        }
    }
    // Drop items left with no non-missing cell.
    std::vector<std::string> kept_items;
    for (const std::string& it : items) {
        bool any = false;
        for (const std::string& m : kept_models) {
            if (values.count({it, m})) {
                any = true;
                break;
            }
        }
        if (any) {
            kept_items.push_back(it);
        } else if (warnings) {
            warnings->push_back({"item_dropped", "item " + it + " has no " + to_string(signal) +
                                                     " cells in " + benchmark + "/" +
                                                     to_string(probe) + "; excluded"});
        }
    }
    if (kept_models.size() < 2 || kept_items.size() < 2) {
        throw DataError("build_matrix: selection needs at least 2 models and 2 items (" +
                        std::to_string(kept_models.size()) + " models, " +
                        std::to_string(kept_items.size()) + " items)");
    }

    JudgementMatrix matrix;
    matrix.signal = signal;
    matrix.model_ids = kept_models;
    matrix.item_ids = kept_items;
    matrix.cells.assign(kept_items.size() * kept_models.size(), -1);
    for (std::size_t i = 0; i < kept_items.size(); ++i) {
        for (std::size_t m = 0; m < kept_models.size(); ++m) {
            auto it = values.find({kept_items[i], kept_models[m]});
            if (it != values.end()) matrix.set(i, m, static_cast<std::int8_t>(it->second));
        }
    }
    matrix.marginals.resize(kept_models.size());
    for (std::size_t m = 0; m < kept_models.size(); ++m) {
        std::int64_t yes = 0, present = 0;
        for (std::size_t i = 0; i < kept_items.size(); ++i) {
            const int cell = matrix.at(i, m);
            if (cell < 0) continue;
            ++present;
            yes += cell;
        }
        matrix.marginals[m] = static_cast<double>(yes) / static_cast<double>(present);
    }
    return matrix;
}

void write_matrix_csv(const JudgementMatrix& matrix, std::ostream& out,
                      const std::vector<std::string>& metadata) {
    out << "# metacal-matrix v1\n";
    out << "# signal=" << to_string(matrix.signal) << "\n";
    for (const std::string& line : metadata) out << "# " << line << "\n";
    std::vector<std::string> header{"item_id"};
    header.insert(header.end(), matrix.model_ids.begin(), matrix.model_ids.end());
    csv::write_row(out, header);
    for (std::size_t i = 0; i < matrix.n_items(); ++i) {
        std::vector<std::string> row{matrix.item_ids[i]};
        for (std::size_t m = 0; m < matrix.n_models(); ++m) {
            const int v = matrix.at(i, m);
            row.push_back(v < 0 ? "NA" : std::to_string(v));
        }
        csv::write_row(out, row);
    }
}

JudgementMatrix read_matrix_csv(std::istream& in) {
    csv::Table table = csv::read(in);
    JudgementMatrix matrix;
    for (const std::string& c : table.comments) {
        if (c.rfind(" signal=", 0) == 0) matrix.signal = signal_from_string(c.substr(8));
    }
    if (table.rows.size() < 2 || table.rows.front().size() < 2) {
        throw DataError("matrix csv: need a header and at least one row");
    }
    const auto& header = table.rows.front();
    matrix.model_ids.assign(header.begin() + 1, header.end());
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != header.size()) {
            throw DataError("matrix csv: ragged row " + std::to_string(r + 1));
        }
        matrix.item_ids.push_back(row.front());
        for (std::size_t m = 1; m < row.size(); ++m) {
            if (row[m] == "NA") matrix.cells.push_back(-1);
            else if (row[m] == "0") matrix.cells.push_back(0);
            else if (row[m] == "1") matrix.cells.push_back(1);
            else throw DataError("matrix csv: bad cell '" + row[m] + "'");
        }
    }
    matrix.marginals.resize(matrix.n_models());
    for (std::size_t m = 0; m < matrix.n_models(); ++m) {
        std::int64_t yes = 0, present = 0;
        for (std::size_t i = 0; i < matrix.n_items(); ++i) {
            const int cell = matrix.at(i, m);
            if (cell < 0) continue;
            ++present;
            yes += cell;
        }
        if (present == 0) throw DataError("matrix csv: model column with no data");
        matrix.marginals[m] = static_cast<double>(yes) / static_cast<double>(present);
    }
    return matrix;
}

JudgementMatrix read_matrix_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open matrix file " + path);
    return read_matrix_csv(in);
}

std::vector<std::string> benchmarks_in(const TrialSet& trials) {
    std::set<std::string> set;
    for (const auto& r : trials.records) set.insert(r.benchmark);
    return {set.begin(), set.end()};
}

std::vector<Probe> probes_in(const TrialSet& trials, const std::string& benchmark) {
    std::set<std::string> set;
    for (const auto& r : trials.records) {
        if (r.benchmark == benchmark) set.insert(to_string(r.probe));
    }
    std::vector<Probe> out;
    for (const auto& s : set) out.push_back(probe_from_string(s));
    return out;
}

}  // namespace metacal
