#include "dbroute/corpus.hpp"

#include "dbroute/errors.hpp"
#include "dbroute/util.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace dbroute {

using nlohmann::json;

bool RoutingDataset::has_db(const std::string& db_id) const {
    return std::any_of(repository.begin(), repository.end(),
                       [&](const DatabaseSchema& s) { return s.db_id == db_id; });
}

void validate_dataset(const RoutingDataset& dataset) {
    std::unordered_set<std::string> db_ids;
    for (const DatabaseSchema& s : dataset.repository) {
        if (!db_ids.insert(s.db_id).second)
            throw ValidationError("duplicate db_id in repository: " + s.db_id);
    }
    std::unordered_set<std::string> train_ids;
    for (const QuerySample& q : dataset.train) {
        if (!train_ids.insert(q.query_id).second)
            throw ValidationError("duplicate query_id in train: " + q.query_id);
        if (!db_ids.count(q.gold_db_id))
            throw ValidationError("train query " + q.query_id + " gold db '" + q.gold_db_id +
                                  "' not in repository");
        if (dataset.cross_domain_db_ids.count(q.gold_db_id))
            throw ValidationError("train query " + q.query_id + " targets held-out db '" +
                                  q.gold_db_id + "'");
    }
    for (const QuerySample& q : dataset.test) {
        if (train_ids.count(q.query_id))
            throw ValidationError("query_id in both train and test: " + q.query_id);
        if (!db_ids.count(q.gold_db_id))
            throw ValidationError("test query " + q.query_id + " gold db '" + q.gold_db_id +
                                  "' not in repository");
    }
    std::unordered_set<std::string> test_ids;
    for (const QuerySample& q : dataset.test) {
        if (!test_ids.insert(q.query_id).second)
            throw ValidationError("duplicate query_id in test: " + q.query_id);
    }
    for (const std::string& held : dataset.cross_domain_db_ids) {
        if (!db_ids.count(held))
            throw ValidationError("cross-domain db '" + held + "' not in repository");
    }
}

std::pair<std::vector<QuerySample>, std::vector<QuerySample>>
build_route_split(const std::vector<QuerySample>& samples, std::uint64_t seed) {
    if (samples.empty()) throw ValidationError("build_route_split: empty sample list");

    // Group per database; std::map iteration gives a deterministic db order.
    std::map<std::string, std::vector<QuerySample>> by_db;
    for (const QuerySample& q : samples) {
        if (q.gold_db_id.empty())
            throw ValidationError("sample " + q.query_id + " has empty gold_db_id");
        by_db[q.gold_db_id].push_back(q);
    }

    std::vector<QuerySample> train, test;
    for (auto& [db_id, group] : by_db) {
        std::mt19937_64 rng(derive_seed(seed, db_id));
        deterministic_shuffle(group, rng);
        const std::size_t n_train = (group.size() + 1) / 2; // ceil to train
        for (std::size_t i = 0; i < group.size(); ++i) {
            QuerySample q = group[i];
            q.split = (i < n_train) ? Split::train : Split::test;
            (i < n_train ? train : test).push_back(std::move(q));
        }
    }
    return {std::move(train), std::move(test)};
}

std::map<std::string, EvidenceSet> merge_evidence(const std::vector<QuerySample>& samples) {
    std::map<std::string, EvidenceSet> merged;
    for (const QuerySample& q : samples) {
        if (q.evidence.empty()) continue;
        merged[q.gold_db_id].insert(q.evidence);
    }
    return merged;
}

void attach_evidence(std::vector<DatabaseSchema>& repository,
                     const std::map<std::string, EvidenceSet>& evidence) {
    for (DatabaseSchema& schema : repository) {
        auto it = evidence.find(schema.db_id);
        if (it != evidence.end() && !it->second.empty()) schema.metadata = it->second;
    }
}

RoutingDataset make_cross_domain(const RoutingDataset& dataset,
                                 const std::set<std::string>& held_out_db_ids) {
    for (const std::string& db_id : held_out_db_ids) {
        if (!dataset.has_db(db_id))
            throw ValidationError("make_cross_domain: unknown db '" + db_id + "'");
    }
    RoutingDataset out;
    out.repository = dataset.repository;
    out.test = dataset.test;
    out.cross_domain_db_ids = held_out_db_ids;
    for (const QuerySample& q : dataset.train) {
        if (!held_out_db_ids.count(q.gold_db_id)) out.train.push_back(q);
    }
    return out;
}

json dataset_stats(const RoutingDataset& dataset) {
    std::map<std::string, int> per_db_total, per_db_train, per_db_test;
    for (const DatabaseSchema& s : dataset.repository) {
        per_db_total[s.db_id] = 0;
        per_db_train[s.db_id] = 0;
        per_db_test[s.db_id] = 0;
    }
    for (const QuerySample& q : dataset.train) {
        ++per_db_total[q.gold_db_id];
        ++per_db_train[q.gold_db_id];
    }
    for (const QuerySample& q : dataset.test) {
        ++per_db_total[q.gold_db_id];
        ++per_db_test[q.gold_db_id];
    }
    json histogram = json::object();
    for (const auto& [db_id, total] : per_db_total) {
        histogram[db_id] = json{{"total", total},
                                {"train", per_db_train[db_id]},
                                {"test", per_db_test[db_id]}};
    }
    return json{{"db_count", dataset.repository.size()},
                {"total_questions", dataset.train.size() + dataset.test.size()},
                {"train_questions", dataset.train.size()},
                {"test_questions", dataset.test.size()},
                {"cross_domain_db_count", dataset.cross_domain_db_ids.size()},
                {"per_db", std::move(histogram)}};
}

std::vector<QuerySample> load_questions(const json& doc) {
    if (!doc.is_array()) throw ValidationError("questions document must be a JSON array");
    std::vector<QuerySample> samples;
    samples.reserve(doc.size());
    std::unordered_set<std::string> seen_ids;

    int width = 1;
    for (std::size_t n = doc.size(); n >= 10; n /= 10) ++width;

    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& rec = doc[i];
        QuerySample q;
        if (rec.contains("query_id")) {
            q.query_id = rec["query_id"].is_string() ? rec["query_id"].get<std::string>()
                                                     : rec["query_id"].dump();
        } else if (rec.contains("question_id")) {
            q.query_id = rec["question_id"].is_string() ? rec["question_id"].get<std::string>()
                                                        : rec["question_id"].dump();
        } else {
            std::string num = std::to_string(i);
            q.query_id = "q" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
        }
        if (!rec.contains("question"))
            throw ValidationError("question record " + q.query_id + " missing 'question'");
        q.text = rec["question"].get<std::string>();
        if (!rec.contains("db_id"))
            throw ValidationError("question record " + q.query_id + " missing 'db_id'");
        q.gold_db_id = rec["db_id"].get<std::string>();
        if (rec.contains("evidence") && rec["evidence"].is_string())
            q.evidence = rec["evidence"].get<std::string>();
        if (rec.contains("SQL") && rec["SQL"].is_string()) q.sql = rec["SQL"].get<std::string>();
        else if (rec.contains("query") && rec["query"].is_string())
            q.sql = rec["query"].get<std::string>();
        if (!seen_ids.insert(q.query_id).second)
            throw ValidationError("duplicate query_id in questions file: " + q.query_id);
        samples.push_back(std::move(q));
    }
    return samples;
}

std::vector<QuerySample> load_questions_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("questions file " + path.string() + ": " + e.what());
    }
    return load_questions(doc);
}

json split_manifest(std::uint64_t seed, const std::vector<QuerySample>& train,
                    const std::vector<QuerySample>& test) {
    json train_ids = json::array();
    for (const QuerySample& q : train) train_ids.push_back(q.query_id);
    json test_ids = json::array();
    for (const QuerySample& q : test) test_ids.push_back(q.query_id);
    return json{{"seed", seed},
                {"rounding", "train_ceil"},
                {"train", std::move(train_ids)},
                {"test", std::move(test_ids)}};
}

std::pair<std::vector<QuerySample>, std::vector<QuerySample>>
apply_split_manifest(const std::vector<QuerySample>& samples, const json& manifest) {
    std::unordered_map<std::string, const QuerySample*> by_id;
    for (const QuerySample& q : samples) by_id[q.query_id] = &q;

    auto pick = [&](const char* key, Split split) {
        std::vector<QuerySample> out;
        if (!manifest.contains(key))
            throw ValidationError(std::string("split manifest missing '") + key + "'");
        for (const auto& idj : manifest[key]) {
            const std::string id = idj.get<std::string>();
            auto it = by_id.find(id);
            if (it == by_id.end())
                throw ValidationError("split manifest references unknown query_id '" + id + "'");
            QuerySample q = *it->second;
            q.split = split;
            out.push_back(std::move(q));
        }
        return out;
    };
    return {pick("train", Split::train), pick("test", Split::test)};
}

} // namespace dbroute
