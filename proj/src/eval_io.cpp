#include "bracketrank/eval_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace bracketrank {

namespace {

using nlohmann::json;

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path.string());
    }
    return in;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Parses one line-delimited JSON file of {"id": ..., <text_field>: ...} rows.
std::unordered_map<std::string, std::string> load_jsonl_map(const std::filesystem::path& path,
                                                            const std::string& text_field) {
    auto in = open_or_throw(path);
    std::unordered_map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        json row = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (row.is_discarded() || !row.contains("id") || !row.contains(text_field)) {
            throw MalformedLineError(line_no, "expected JSON with \"id\" and \"" + text_field +
                                                  "\" in " + path.string());
        }
        const std::string id =
            row["id"].is_string() ? row["id"].get<std::string>() : row["id"].dump();
        out[id] = row[text_field].is_string() ? row[text_field].get<std::string>()
                                              : row[text_field].dump();
    }
    return out;
}

}  // namespace

std::vector<RunRecord> load_run(const std::filesystem::path& run_path) {
    auto in = open_or_throw(run_path);

    std::vector<RunRecord> records;
    std::vector<std::size_t> line_nos;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        std::istringstream fields(line);
        RunRecord rec;
        std::string q0, extra;
        if (!(fields >> rec.qid >> q0 >> rec.doc_id >> rec.rank >> rec.score >> rec.tag)) {
            throw MalformedLineError(line_no, "expected 'qid Q0 docid rank score tag'");
        }
        if (fields >> extra) {
            throw MalformedLineError(line_no, "trailing content after 6 columns");
        }
        if (rec.rank < 1) {
            throw MalformedLineError(line_no, "rank must be >= 1");
        }
        records.push_back(std::move(rec));
        line_nos.push_back(line_no);
    }

    // Per-qid checks: dense ranks 1..N, unique docs, strictly decreasing scores.
    std::map<std::string, std::vector<std::size_t>> by_qid;
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_qid[records[i].qid].push_back(i);
    }
    for (const auto& [qid, idxs] : by_qid) {
        std::vector<std::size_t> sorted = idxs;
        std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
            return records[a].rank < records[b].rank;
        });
        std::set<std::string> docs;
        for (std::size_t pos = 0; pos < sorted.size(); ++pos) {
            const RunRecord& rec = records[sorted[pos]];
            const std::size_t at_line = line_nos[sorted[pos]];
            if (rec.rank != static_cast<int>(pos) + 1) {
                throw MalformedLineError(at_line, "qid " + qid +
                                                      ": ranks are not a dense 1..N sequence");
            }
            if (!docs.insert(rec.doc_id).second) {
                throw MalformedLineError(at_line, "qid " + qid + ": duplicate doc_id " +
                                                      rec.doc_id);
            }
            if (pos > 0 && !(records[sorted[pos - 1]].score > rec.score)) {
                throw MalformedLineError(at_line, "qid " + qid +
                                                      ": scores not strictly decreasing");
            }
        }
    }
    return records;
}

std::vector<Qrel> load_qrels(const std::filesystem::path& qrels_path) {
    auto in = open_or_throw(qrels_path);

    std::vector<Qrel> qrels;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        std::istringstream fields(line);
        Qrel qrel;
        std::string unused;
        if (!(fields >> qrel.qid >> unused >> qrel.doc_id >> qrel.relevance)) {
            throw MalformedLineError(line_no, "expected 'qid 0 docid rel'");
        }
        if (qrel.relevance < 0) qrel.relevance = 0;
        if (!seen.emplace(qrel.qid, qrel.doc_id).second) {
            throw MalformedLineError(line_no, "duplicate (qid, doc_id) pair: " + qrel.qid +
                                                  " " + qrel.doc_id);
        }
        qrels.push_back(std::move(qrel));
    }
    return qrels;
}

std::unordered_map<std::string, std::string> load_corpus(const std::filesystem::path& path) {
    return load_jsonl_map(path, "contents");
}

std::unordered_map<std::string, std::string> load_queries(const std::filesystem::path& path) {
    return load_jsonl_map(path, "text");
}

std::map<std::string, QueryCandidates> load_candidates(const std::filesystem::path& run_path,
                                                       const std::filesystem::path& corpus_path,
                                                       const std::filesystem::path& queries_path) {
    const std::vector<RunRecord> records = load_run(run_path);
    if (records.empty()) {
        std::cerr << "warning: run file " << run_path.string() << " is empty\n";
        return {};
    }
    if (!std::filesystem::exists(corpus_path)) {
        // No corpus at all: every document is missing.
        std::vector<std::string> first_ids;
        std::set<std::string> seen;
        for (const RunRecord& rec : records) {
            if (seen.insert(rec.doc_id).second && first_ids.size() < 10) {
                first_ids.push_back(rec.doc_id);
            }
        }
        throw MissingDocumentError(std::move(first_ids));
    }
    const auto corpus = load_corpus(corpus_path);
    const auto queries = load_queries(queries_path);

    std::map<std::string, QueryCandidates> out;
    std::vector<std::string> missing_docs;
    std::set<std::string> missing_seen;
    for (const RunRecord& rec : records) {
        auto& entry = out[rec.qid];
        const auto doc = corpus.find(rec.doc_id);
        if (doc == corpus.end()) {
            if (missing_seen.insert(rec.doc_id).second && missing_docs.size() < 10) {
                missing_docs.push_back(rec.doc_id);
            }
            continue;
        }
        entry.candidates.push_back({rec.doc_id, doc->second, rec.score, rec.rank});
    }
    if (!missing_seen.empty()) {
        throw MissingDocumentError(std::move(missing_docs));
    }

    for (auto& [qid, entry] : out) {
        const auto q = queries.find(qid);
        if (q == queries.end()) {
            throw Error("queries file lacks text for qid " + qid);
        }
        entry.query = {qid, q->second};
        std::sort(entry.candidates.begin(), entry.candidates.end(),
                  [](const Candidate& a, const Candidate& b) {
                      return a.first_stage_rank < b.first_stage_rank;
                  });
        validate_candidates(entry.candidates);
    }
    return out;
}

void write_run(const std::map<std::string, std::vector<Candidate>>& rankings,
               const std::string& tag, const std::filesystem::path& out_path) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open output file: " + out_path.string());
    }
    for (const auto& [qid, ordered] : rankings) {
        const std::size_t n = ordered.size();
        for (std::size_t i = 0; i < n; ++i) {
            out << qid << " Q0 " << ordered[i].doc_id << " " << (i + 1) << " " << (n - i)
                << " " << tag << "\n";
        }
    }
    if (!out) {
        throw IoError("write failed: " + out_path.string());
    }
}

double ndcg_at_k(const std::vector<std::string>& ranking, const std::vector<Qrel>& qrels,
                 int k) {
    if (k < 1) {
        throw InvalidArgumentError("ndcg_at_k: k must be >= 1");
    }
    std::unordered_map<std::string, int> relevance;
    std::vector<int> judged;
    relevance.reserve(qrels.size());
    judged.reserve(qrels.size());
    for (const Qrel& q : qrels) {
        relevance[q.doc_id] = q.relevance;
        judged.push_back(q.relevance);
    }

    const auto gain = [](int rel) { return std::exp2(rel) - 1.0; };
    const auto discount = [](std::size_t i) { return std::log2(static_cast<double>(i) + 2.0); };

    double dcg = 0.0;
    const std::size_t depth = std::min(ranking.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < depth; ++i) {
        const auto it = relevance.find(ranking[i]);
        const int rel = it == relevance.end() ? 0 : it->second;
        dcg += gain(rel) / discount(i);
    }

    std::sort(judged.begin(), judged.end(), std::greater<int>());
    double idcg = 0.0;
    const std::size_t ideal_depth = std::min(judged.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ideal_depth; ++i) {
        idcg += gain(judged[i]) / discount(i);
    }

    return idcg > 0.0 ? dcg / idcg : 0.0;
}

EvalReport evaluate_run(const std::filesystem::path& run_path,
                        const std::filesystem::path& qrels_path,
                        const std::vector<int>& cutoffs) {
    const std::vector<RunRecord> records = load_run(run_path);
    const std::vector<Qrel> qrels = load_qrels(qrels_path);

    std::map<std::string, std::vector<std::pair<int, std::string>>> run_by_qid;
    for (const RunRecord& rec : records) {
        run_by_qid[rec.qid].emplace_back(rec.rank, rec.doc_id);
    }
    std::map<std::string, std::vector<Qrel>> qrels_by_qid;
    for (const Qrel& q : qrels) {
        qrels_by_qid[q.qid].push_back(q);
    }

    EvalReport report;
    for (auto& [qid, entries] : run_by_qid) {
        const auto judged = qrels_by_qid.find(qid);
        if (judged == qrels_by_qid.end()) {
            report.excluded_queries += 1;
            continue;
        }
        std::sort(entries.begin(), entries.end());
        std::vector<std::string> ranking;
        ranking.reserve(entries.size());
        for (const auto& [rank, doc] : entries) ranking.push_back(doc);

        EvalReport::Row row;
        row.qid = qid;
        for (int k : cutoffs) {
            row.ndcg[k] = ndcg_at_k(ranking, judged->second, k);
        }
        report.per_query.push_back(std::move(row));
        report.judged_queries += 1;
    }

    for (int k : cutoffs) {
        double sum = 0.0;
        for (const auto& row : report.per_query) sum += row.ndcg.at(k);
        report.mean_ndcg[k] =
            report.judged_queries > 0 ? sum / report.judged_queries : 0.0;
    }
    return report;
}

}  // namespace bracketrank
