#include "qagnn/tasks.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "qagnn/errors.hpp"
#include "qagnn/text.hpp"

namespace qagnn {

namespace {

// Largest weakly-connected component size over the union of all relations.
size_t largest_component(size_t n, const std::vector<std::array<int, 3>>& edges) {
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] =
                parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (const auto& e : edges) {
        int a = find(e[0]), b = find(e[2]);
        if (a != b) parent[static_cast<size_t>(a)] = b;
    }
    std::vector<size_t> size(n, 0);
    size_t best = 0;
    for (size_t i = 0; i < n; ++i) {
        best = std::max(best, ++size[static_cast<size_t>(find(static_cast<int>(i)))]);
    }
    return best;
}

// Out-neighbor sets per (relation, head).
struct Adjacency {
    size_t n, m;
    std::vector<std::vector<std::vector<int>>> out;  // [rel][head] -> tails

    explicit Adjacency(const ToyKG& kg) : n(kg.n), m(kg.m) {
        out.assign(m, std::vector<std::vector<int>>(n));
        for (const auto& e : kg.edges) {
            out[static_cast<size_t>(e[1])][static_cast<size_t>(e[0])].push_back(e[2]);
        }
    }

    std::set<int> answers_one_hop(int rel, int a) const {
        const auto& v = out[static_cast<size_t>(rel)][static_cast<size_t>(a)];
        return {v.begin(), v.end()};
    }
    std::set<int> answers_two_hop(int r1, int r2, int a) const {
        std::set<int> acc;
        for (int x : out[static_cast<size_t>(r1)][static_cast<size_t>(a)]) {
            const auto& v = out[static_cast<size_t>(r2)][static_cast<size_t>(x)];
            acc.insert(v.begin(), v.end());
        }
        return acc;
    }
};

std::set<int> set_intersect(const std::set<int>& a, const std::set<int>& b) {
    std::set<int> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::inserter(out, out.begin()));
    return out;
}

std::set<int> set_minus(const std::set<int>& a, const std::set<int>& b) {
    std::set<int> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
    return out;
}

int pick(std::mt19937_64& rng, int upper) {
    return static_cast<int>(std::uniform_int_distribution<size_t>(
        0, static_cast<size_t>(upper) - 1)(rng));
}

template <typename T>
T pick_from(std::mt19937_64& rng, const std::vector<T>& v) {
    return v[std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng)];
}

}  // namespace

void ToyKG::to_tsv(std::ostream& out) const {
    for (const auto& e : edges) {
        out << entity_name(e[0]) << '\t' << relation_name(e[1]) << '\t' << entity_name(e[2])
            << '\n';
    }
}

std::string ToyKG::to_tsv_string() const {
    std::ostringstream os;
    to_tsv(os);
    return os.str();
}

ToyKG gen_toy_kg(size_t n, size_t m, double p, uint64_t seed) {
    if (n < 10) throw UsageError("toy KG needs n >= 10");
    if (m < 2) throw UsageError("toy KG needs m >= 2");
    if (p < 0.0 || p > 1.0) throw UsageError("edge probability must be in [0,1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int attempt = 0; attempt < 20; ++attempt) {
        ToyKG kg;
        kg.n = n;
        kg.m = m;
        kg.p = p;
        kg.seed = seed;
        for (size_t rel = 0; rel < m; ++rel) {
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = 0; j < n; ++j) {
                    if (i == j) continue;
                    if (uni(rng) < p) {
                        kg.edges.push_back({static_cast<int>(i), static_cast<int>(rel),
                                            static_cast<int>(j)});
                    }
                }
            }
        }
        if (largest_component(n, kg.edges) >=
            static_cast<size_t>(0.8 * static_cast<double>(n))) {
            return kg;
        }
    }
    throw DataError("toy KG connectivity check failed after 20 attempts");
}

const char* logical_pattern_name(LogicalPattern p) {
    switch (p) {
        case LogicalPattern::one_hop: return "one_hop";
        case LogicalPattern::two_hop: return "two_hop";
        case LogicalPattern::conjunction: return "conjunction";
        case LogicalPattern::negated_conjunction: return "negated_conjunction";
    }
    return "?";
}

std::string LogicalQuery::question_text(const ToyKG& kg) const {
    switch (pattern) {
        case LogicalPattern::one_hop:
            return "which entity has relation " + kg.relation_name(relations[0]) + " from " +
                   kg.entity_name(anchors[0]);
        case LogicalPattern::two_hop:
            return "which entity has relation " + kg.relation_name(relations[1]) +
                   " from some entity with relation " + kg.relation_name(relations[0]) +
                   " from " + kg.entity_name(anchors[0]);
        case LogicalPattern::conjunction:
            return "which entity has relation " + kg.relation_name(relations[0]) + " from " +
                   kg.entity_name(anchors[0]) + " and relation " +
                   kg.relation_name(relations[1]) + " from " + kg.entity_name(anchors[1]);
        case LogicalPattern::negated_conjunction:
            return "which entity has relation " + kg.relation_name(relations[0]) + " from " +
                   kg.entity_name(anchors[0]) + " and not relation " +
                   kg.relation_name(relations[1]) + " from " + kg.entity_name(anchors[1]);
    }
    throw UsageError("invalid pattern");
}

QAExample LogicalQuery::to_example(const ToyKG& kg, const std::string& id) const {
    QAExample ex;
    ex.id = id;
    ex.question = question_text(kg);
    for (int c : candidates) ex.choices.push_back(kg.entity_name(c));
    ex.answer_index = gold;
    return ex;
}

ParsedLogicalQuestion parse_logical_question(const std::string& question) {
    auto toks = tokenize(question);
    auto expect = [&](size_t i, const char* word) {
        if (i >= toks.size() || toks[i] != word) {
            throw DataError("cannot parse logical question: " + question);
        }
    };
    expect(0, "which");
    expect(1, "entity");
    expect(2, "has");
    expect(3, "relation");
    if (toks.size() == 7) {  // which entity has relation R from A
        expect(5, "from");
        return {LogicalPattern::one_hop, {toks[6]}, {toks[4]}};
    }
    if (toks.size() == 13 && toks[6] == "some") {
        // which entity has relation R2 from some entity with relation R1 from A
        expect(5, "from");
        expect(7, "entity");
        expect(8, "with");
        expect(9, "relation");
        expect(11, "from");
        return {LogicalPattern::two_hop, {toks[12]}, {toks[10], toks[4]}};
    }
    if (toks.size() == 12 && toks[7] == "and") {
        // which entity has relation R1 from A and relation R2 from B
        expect(5, "from");
        expect(8, "relation");
        expect(10, "from");
        return {LogicalPattern::conjunction, {toks[6], toks[11]}, {toks[4], toks[9]}};
    }
    if (toks.size() == 13 && toks[8] == "not") {
        // which entity has relation R1 from A and not relation R2 from B
        expect(5, "from");
        expect(7, "and");
        expect(9, "relation");
        expect(11, "from");
        return {LogicalPattern::negated_conjunction, {toks[6], toks[12]}, {toks[4], toks[10]}};
    }
    throw DataError("cannot parse logical question: " + question);
}

namespace {

std::set<int> eval_pattern(const Adjacency& adj, LogicalPattern pattern,
                           const std::vector<int>& anchors, const std::vector<int>& rels) {
    switch (pattern) {
        case LogicalPattern::one_hop:
            return adj.answers_one_hop(rels[0], anchors[0]);
        case LogicalPattern::two_hop:
            return adj.answers_two_hop(rels[0], rels[1], anchors[0]);
        case LogicalPattern::conjunction:
            return set_intersect(adj.answers_one_hop(rels[0], anchors[0]),
                                 adj.answers_one_hop(rels[1], anchors[1]));
        case LogicalPattern::negated_conjunction:
            return set_minus(adj.answers_one_hop(rels[0], anchors[0]),
                             adj.answers_one_hop(rels[1], anchors[1]));
    }
    throw UsageError("invalid pattern");
}

}  // namespace

std::vector<LogicalQuery> gen_logical_queries(const ToyKG& kg, const LogicalQueryOptions& opts,
                                              uint64_t seed) {
    Adjacency adj(kg);
    std::mt19937_64 rng(seed);
    std::vector<LogicalQuery> out;
    std::set<std::string> signatures;

    for (const auto& [pattern, count] : opts.counts) {
        for (size_t i = 0; i < count; ++i) {
            bool made = false;
            for (size_t tries = 0; tries < opts.resample_budget; ++tries) {
                LogicalQuery q;
                q.pattern = pattern;
                switch (pattern) {
                    case LogicalPattern::one_hop:
                        q.anchors = {pick(rng, static_cast<int>(kg.n))};
                        q.relations = {pick(rng, static_cast<int>(kg.m))};
                        break;
                    case LogicalPattern::two_hop:
                        q.anchors = {pick(rng, static_cast<int>(kg.n))};
                        q.relations = {pick(rng, static_cast<int>(kg.m)),
                                       pick(rng, static_cast<int>(kg.m))};
                        break;
                    case LogicalPattern::conjunction:
                    case LogicalPattern::negated_conjunction:
                        q.anchors = {pick(rng, static_cast<int>(kg.n)),
                                     pick(rng, static_cast<int>(kg.n))};
                        q.relations = {pick(rng, static_cast<int>(kg.m)),
                                       pick(rng, static_cast<int>(kg.m))};
                        if (q.anchors[0] == q.anchors[1]) continue;
                        break;
                }
                auto ans = eval_pattern(adj, pattern, q.anchors, q.relations);
                if (ans.empty()) continue;
                // Candidates: one designated answer plus non-answer fillers.
                std::vector<int> non_answers;
                for (size_t v = 0; v < kg.n; ++v) {
                    if (!ans.count(static_cast<int>(v))) non_answers.push_back(static_cast<int>(v));
                }
                if (non_answers.size() + 1 < opts.num_candidates) continue;

                std::string sig = std::string(logical_pattern_name(pattern));
                for (int a : q.anchors) sig += "|a" + std::to_string(a);
                for (int r : q.relations) sig += "|r" + std::to_string(r);
                if (signatures.count(sig)) continue;

                q.answers.assign(ans.begin(), ans.end());
                std::vector<int> answer_pool(q.answers);
                int true_answer = pick_from(rng, answer_pool);
                std::shuffle(non_answers.begin(), non_answers.end(), rng);
                q.candidates.assign(non_answers.begin(),
                                    non_answers.begin() +
                                        static_cast<long>(opts.num_candidates - 1));
                q.candidates.push_back(true_answer);
                std::shuffle(q.candidates.begin(), q.candidates.end(), rng);
                q.gold = static_cast<int>(std::find(q.candidates.begin(), q.candidates.end(),
                                                    true_answer) -
                                          q.candidates.begin());
                signatures.insert(sig);
                out.push_back(std::move(q));
                made = true;
                break;
            }
            if (!made) {
                throw DataError(std::string("could not satisfy pattern ") +
                                logical_pattern_name(pattern) + " within the resample budget");
            }
        }
    }
    return out;
}

NegationDataset gen_negation_qa(const ToyKG& kg, size_t count, uint64_t seed) {
    Adjacency adj(kg);
    std::mt19937_64 rng(seed);
    NegationDataset ds;

    for (size_t i = 0; i < count; ++i) {
        bool made = false;
        for (size_t tries = 0; tries < 4000 && !made; ++tries) {
            int a = pick(rng, static_cast<int>(kg.n));
            int b = pick(rng, static_cast<int>(kg.n));
            if (a == b) continue;
            int r1 = pick(rng, static_cast<int>(kg.m));
            int r2 = pick(rng, static_cast<int>(kg.m));
            auto a1 = adj.answers_one_hop(r1, a);
            auto a2 = adj.answers_one_hop(r2, b);
            auto both = set_intersect(a1, a2);   // valid for the positive question
            auto only1 = set_minus(a1, a2);      // valid for the negated question
            if (both.empty() || only1.empty()) continue;
            std::vector<int> distractors;
            for (size_t v = 0; v < kg.n; ++v) {
                // Distractors fail the first conjunct, so they satisfy neither.
                if (!a1.count(static_cast<int>(v)) && static_cast<int>(v) != a &&
                    static_cast<int>(v) != b) {
                    distractors.push_back(static_cast<int>(v));
                }
            }
            if (distractors.size() < 2) continue;

            int x = pick_from(rng, std::vector<int>(both.begin(), both.end()));
            int y = pick_from(rng, std::vector<int>(only1.begin(), only1.end()));
            std::shuffle(distractors.begin(), distractors.end(), rng);
            std::vector<int> choices = {x, y, distractors[0], distractors[1]};
            std::shuffle(choices.begin(), choices.end(), rng);

            LogicalQuery pos;
            pos.pattern = LogicalPattern::conjunction;
            pos.anchors = {a, b};
            pos.relations = {r1, r2};
            LogicalQuery neg = pos;
            neg.pattern = LogicalPattern::negated_conjunction;

            std::string base_id = "neg" + std::to_string(ds.pairs);
            QAExample pos_ex, neg_ex;
            pos_ex.id = base_id + "_pos";
            neg_ex.id = base_id + "_neg";
            pos_ex.question = pos.question_text(kg);
            neg_ex.question = neg.question_text(kg);
            for (int c : choices) {
                pos_ex.choices.push_back(kg.entity_name(c));
                neg_ex.choices.push_back(kg.entity_name(c));
            }
            pos_ex.answer_index = static_cast<int>(
                std::find(choices.begin(), choices.end(), x) - choices.begin());
            neg_ex.answer_index = static_cast<int>(
                std::find(choices.begin(), choices.end(), y) - choices.begin());
            ds.examples.push_back(pos_ex);
            ds.examples.push_back(neg_ex);
            ++ds.pairs;
            made = true;

            // Anchor-substitution variant on the negated question: swap b for
            // b' so that exactly one of the same choices stays valid.
            for (size_t sub_tries = 0; sub_tries < 200; ++sub_tries) {
                int b2 = pick(rng, static_cast<int>(kg.n));
                if (b2 == b || b2 == a) continue;
                auto a2b = adj.answers_one_hop(r2, b2);
                std::vector<int> valid;
                for (int c : choices) {
                    if (a1.count(c) && !a2b.count(c)) valid.push_back(c);
                }
                if (valid.size() != 1) continue;
                QAExample sub_ex = neg_ex;
                sub_ex.id = base_id + "_sub";
                LogicalQuery subq = neg;
                subq.anchors = {a, b2};
                sub_ex.question = subq.question_text(kg);
                sub_ex.answer_index = static_cast<int>(
                    std::find(choices.begin(), choices.end(), valid[0]) - choices.begin());
                ds.examples.push_back(sub_ex);
                ++ds.substitutions;
                break;
            }
        }
        if (!made) throw DataError("could not build a negation pair within the budget");
    }
    return ds;
}

EntityCountSplit gen_entity_count_split(const std::vector<QAExample>& examples,
                                        const KnowledgeGraph& kg,
                                        std::optional<double> threshold) {
    EntityMatcher matcher(kg);
    EntityCountSplit split;
    for (const auto& ex : examples) {
        auto linked = matcher.match(tokenize(ex.question));
        for (const auto& choice : ex.choices) {
            auto more = matcher.match(tokenize(choice));
            linked.insert(more.begin(), more.end());
        }
        split.counts.push_back(linked.size());
    }
    if (threshold) {
        split.threshold = *threshold;
    } else {
        std::vector<size_t> sorted = split.counts;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.empty()) {
            split.threshold = 0.0;
        } else if (sorted.size() % 2 == 1) {
            split.threshold = static_cast<double>(sorted[sorted.size() / 2]);
        } else {
            split.threshold = 0.5 * (static_cast<double>(sorted[sorted.size() / 2 - 1]) +
                                     static_cast<double>(sorted[sorted.size() / 2]));
        }
    }
    for (size_t i = 0; i < examples.size(); ++i) {
        if (static_cast<double>(split.counts[i]) <= split.threshold) {
            split.few.push_back(i);
        } else {
            split.many.push_back(i);
        }
    }
    return split;
}

}  // namespace qagnn
