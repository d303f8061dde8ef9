#include "lonecast/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "lonecast/error.hpp"
#include "lonecast/rng.hpp"

namespace lonecast::forest {

double gini(long c0, long c1) {
    long n = c0 + c1;
    if (n == 0) throw ValidationError("gini of an empty node is undefined");
    double p0 = double(c0) / double(n), p1 = double(c1) / double(n);
    return 1.0 - p0 * p0 - p1 * p1;
}

size_t Tree::route(const std::vector<double>& x) const {
    size_t i = 0;
    while (feature[i] >= 0)
        i = size_t(x[size_t(feature[i])] <= threshold[i] ? left[i] : right[i]);
    return i;
}

double Tree::expected_value() const {
    double acc = 0;
    for (size_t i = 0; i < size(); ++i)
        if (is_leaf(i)) acc += value[i] * double(cover[i]);
    return acc / double(cover[0]);
}

namespace {

// Stable 2-pass byte radix for keys < 65536; falls back to std::sort for
// wider keys or tiny arrays where the bucket overhead dominates.
void sort_keys(std::vector<uint32_t>& a, size_t m, uint32_t max_key,
               std::vector<uint32_t>& tmp) {
    if (m < 64 || max_key >= 65536) {
        std::sort(a.begin(), a.begin() + long(m));
        return;
    }
    uint32_t cnt_lo[256] = {0}, cnt_hi[256] = {0};
    for (size_t i = 0; i < m; ++i) {
        ++cnt_lo[a[i] & 255];
        ++cnt_hi[(a[i] >> 8) & 255];
    }
    uint32_t pos_lo[256], pos_hi[256];
    uint32_t run_lo = 0, run_hi = 0;
    for (int b = 0; b < 256; ++b) {
        pos_lo[b] = run_lo;
        run_lo += cnt_lo[b];
        pos_hi[b] = run_hi;
        run_hi += cnt_hi[b];
    }
    if (tmp.size() < m) tmp.resize(m);
    for (size_t i = 0; i < m; ++i) tmp[pos_lo[a[i] & 255]++] = a[i];
    for (size_t i = 0; i < m; ++i) a[pos_hi[(tmp[i] >> 8) & 255]++] = tmp[i];
}

struct RankData {
    size_t n = 0, d = 0;
    std::vector<uint32_t> rank;                   // column-major, d x n
    std::vector<std::vector<double>> sorted_vals; // per feature, unique ascending
};

RankData rank_encode(const Matrix& X) {
    RankData r;
    r.n = X.size();
    r.d = X[0].size();
    r.rank.resize(r.n * r.d);
    r.sorted_vals.resize(r.d);
    std::vector<double> col(r.n);
    for (size_t f = 0; f < r.d; ++f) {
        for (size_t i = 0; i < r.n; ++i) col[i] = X[i][f];
        auto& vals = r.sorted_vals[f];
        vals = col;
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        uint32_t* out = r.rank.data() + f * r.n;
        for (size_t i = 0; i < r.n; ++i)
            out[i] = uint32_t(std::lower_bound(vals.begin(), vals.end(), col[i]) - vals.begin());
    }
    return r;
}

class TreeGrower {
public:
    TreeGrower(const RankData& ranks, const std::vector<uint8_t>& y, const ForestParams& p,
               int mtry)
        : ranks_(ranks), y_(y), params_(p), mtry_(mtry), feat_perm_(ranks.d) {
        for (size_t f = 0; f < ranks_.d; ++f) feat_perm_[f] = uint32_t(f);
        idx_.resize(ranks_.n);
        keys_.resize(ranks_.n);
        tmp_.resize(ranks_.n);
    }

    // Grows one tree on a fresh bootstrap; returns which original samples
    // were never drawn.
    Tree grow(uint64_t tree_index, std::vector<uint8_t>& out_of_bag) {
        rng_ = Rng::derive(params_.seed, tree_index);
        // Reset the permutation so the tree is a pure function of its index
        // and seed, no matter which trees this grower handled before.
        for (size_t f = 0; f < ranks_.d; ++f) feat_perm_[f] = uint32_t(f);
        size_t n = ranks_.n;
        out_of_bag.assign(n, 1);
        for (size_t i = 0; i < n; ++i) {
            size_t s = size_t(rng_.next_below(n));
            idx_[i] = uint32_t(s);
            out_of_bag[s] = 0;
        }
        tree_ = Tree{};
        grow_node(0, n, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        double score = -1;
        size_t feature = 0;
        uint32_t rank_left = 0;  // highest rank routed left
        uint32_t rank_right = 0; // next distinct rank in the node
    };

    size_t grow_node(size_t begin, size_t end, int depth) {
        size_t m = end - begin;
        long c1 = 0;
        for (size_t i = begin; i < end; ++i) c1 += y_[idx_[i]];
        long c0 = long(m) - c1;

        size_t node = new_node(double(c1) / double(m), uint32_t(m));
        if (depth >= params_.max_depth || long(m) < long(params_.min_samples_split) ||
            c0 == 0 || c1 == 0)
            return node;

        Split best = find_split(begin, end, c1);
        if (best.score < 0) return node; // every tried feature was constant

        size_t f = best.feature;
        const uint32_t* rank_col = ranks_.rank.data() + f * ranks_.n;
        uint32_t rl = best.rank_left;
        uint32_t* first = idx_.data() + begin;
        uint32_t* mid = std::partition(first, idx_.data() + end,
                                       [&](uint32_t s) { return rank_col[s] <= rl; });
        size_t cut = size_t(mid - idx_.data());

        tree_.feature[node] = int32_t(f);
        tree_.threshold[node] =
            0.5 * (ranks_.sorted_vals[f][best.rank_left] + ranks_.sorted_vals[f][best.rank_right]);
        tree_.left[node] = int32_t(grow_node(begin, cut, depth + 1));
        tree_.right[node] = int32_t(grow_node(cut, end, depth + 1));
        return node;
    }

    Split find_split(size_t begin, size_t end, long c1) {
        size_t m = end - begin;
        size_t d = ranks_.d;

        // mtry distinct features, then ascending so equal scores resolve to
        // the lowest feature index.
        for (int k = 0; k < mtry_; ++k) {
            size_t j = size_t(k) + size_t(rng_.next_below(uint64_t(d - size_t(k))));
            std::swap(feat_perm_[size_t(k)], feat_perm_[j]);
        }
        std::sort(feat_perm_.begin(), feat_perm_.begin() + mtry_);

        Split best;
        for (int k = 0; k < mtry_; ++k) {
            size_t f = feat_perm_[size_t(k)];
            const uint32_t* rank_col = ranks_.rank.data() + f * ranks_.n;
            uint32_t max_key = 0;
            for (size_t i = 0; i < m; ++i) {
                uint32_t s = idx_[begin + i];
                uint32_t key = (rank_col[s] << 1) | y_[s];
                keys_[i] = key;
                max_key = std::max(max_key, key);
            }
            sort_keys(keys_, m, max_key, tmp_);
            if ((keys_[0] >> 1) == (keys_[m - 1] >> 1)) continue; // constant here

            long nl = 0, c1l = 0;
            size_t i = 0;
            while (i < m) {
                uint32_t r = keys_[i] >> 1;
                long run_c1 = 0;
                size_t j = i;
                for (; j < m && (keys_[j] >> 1) == r; ++j) run_c1 += long(keys_[j] & 1);
                nl += long(j - i);
                c1l += run_c1;
                if (j == m) break;
                long nr = long(m) - nl;
                long c1r = c1 - c1l;
                long c0l = nl - c1l, c0r = nr - c1r;
                double score = (double(c0l) * double(c0l) + double(c1l) * double(c1l)) / double(nl) +
                               (double(c0r) * double(c0r) + double(c1r) * double(c1r)) / double(nr);
                if (score > best.score) {
                    best.score = score;
                    best.feature = f;
                    best.rank_left = r;
                    best.rank_right = keys_[j] >> 1;
                }
                i = j;
            }
        }
        return best;
    }

    size_t new_node(double value, uint32_t cover) {
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.value.push_back(value);
        tree_.cover.push_back(cover);
        return tree_.size() - 1;
    }

    const RankData& ranks_;
    const std::vector<uint8_t>& y_;
    const ForestParams& params_;
    int mtry_;
    Rng rng_{0};
    std::vector<uint32_t> feat_perm_;
    std::vector<uint32_t> idx_;
    std::vector<uint32_t> keys_, tmp_;
    Tree tree_;
};

} // namespace

ForestModel fit(const Matrix& X, const std::vector<int>& y,
                const std::vector<std::string>& feature_names, const ForestParams& params,
                std::vector<int>* oob_tree_counts) {
    size_t n = X.size();
    if (n < 2) throw ValidationError("fit needs at least 2 samples");
    size_t d = X[0].size();
    if (d == 0) throw ValidationError("fit needs at least 1 feature");
    for (const auto& row : X)
        if (row.size() != d) throw ValidationError("ragged feature matrix");
    if (y.size() != n) throw ValidationError("label count does not match sample count");
    if (feature_names.size() != d)
        throw ValidationError("feature name count does not match matrix width");
    if (params.n_trees < 1 || params.max_depth < 1)
        throw ValidationError("n_trees and max_depth must be positive");

    std::vector<uint8_t> y8(n);
    long c1 = 0;
    for (size_t i = 0; i < n; ++i) {
        if (y[i] != 0 && y[i] != 1) throw ValidationError("labels must be 0 or 1");
        y8[i] = uint8_t(y[i]);
        c1 += y[i];
    }
    if (c1 == 0 || c1 == long(n))
        throw DegenerateLabels("training labels contain a single class");

    int mtry = params.mtry > 0 ? params.mtry : int(std::ceil(std::sqrt(double(d))));
    if (mtry < 1 || size_t(mtry) > d) throw ValidationError("mtry out of range");

    RankData ranks = rank_encode(X);

    ForestModel model;
    model.params = params;
    model.params.mtry = mtry;
    model.feature_names = feature_names;
    model.trees.resize(size_t(params.n_trees));

    size_t n_threads = size_t(std::clamp(params.n_threads, 1, params.n_trees));
    std::vector<std::vector<int>> oob_parts(n_threads);

    auto work = [&](size_t worker) {
        TreeGrower grower(ranks, y8, params, mtry);
        std::vector<uint8_t> oob;
        auto& counts = oob_parts[worker];
        if (oob_tree_counts) counts.assign(n, 0);
        for (size_t t = worker; t < size_t(params.n_trees); t += n_threads) {
            model.trees[t] = grower.grow(t, oob);
            if (oob_tree_counts)
                for (size_t i = 0; i < n; ++i) counts[i] += oob[i];
        }
    };
    if (n_threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < n_threads; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }

    if (oob_tree_counts) {
        oob_tree_counts->assign(n, 0);
        for (const auto& part : oob_parts)
            for (size_t i = 0; i < n; ++i) (*oob_tree_counts)[i] += part[i];
    }

    double base = 0;
    for (const auto& t : model.trees) base += t.expected_value();
    model.base_value = base / double(model.trees.size());
    return model;
}

double predict_proba(const ForestModel& m, const std::vector<double>& x) {
    if (x.size() != m.n_features())
        throw ValidationError("input has " + std::to_string(x.size()) + " features, model has " +
                              std::to_string(m.n_features()));
    double acc = 0;
    for (const auto& t : m.trees) acc += t.value[t.route(x)];
    return acc / double(m.trees.size());
}

int predict(const ForestModel& m, const std::vector<double>& x) {
    return predict_proba(m, x) >= 0.5 ? 1 : 0;
}

std::string to_json(const ForestModel& m) {
    nlohmann::ordered_json j;
    j["format"] = "lonecast-forest";
    j["version"] = 1;
    j["params"] = {{"n_trees", m.params.n_trees},
                   {"max_depth", m.params.max_depth},
                   {"min_samples_split", m.params.min_samples_split},
                   {"mtry", m.params.mtry},
                   {"seed", m.params.seed}};
    j["base_value"] = m.base_value;
    j["feature_names"] = m.feature_names;
    auto trees = nlohmann::ordered_json::array();
    for (const auto& t : m.trees) {
        auto nodes = nlohmann::ordered_json::array();
        for (size_t i = 0; i < t.size(); ++i) {
            if (t.is_leaf(i))
                nodes.push_back({-1, t.value[i], t.cover[i]});
            else
                nodes.push_back({t.feature[i], t.threshold[i], t.left[i], t.right[i], t.cover[i]});
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);
    return j.dump();
}

ForestModel from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel(std::string("model is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "lonecast-forest" || j.at("version") != 1)
            throw CorruptModel("unknown model format or version");
        ForestModel m;
        const auto& p = j.at("params");
        m.params.n_trees = p.at("n_trees").get<int>();
        m.params.max_depth = p.at("max_depth").get<int>();
        m.params.min_samples_split = p.at("min_samples_split").get<int>();
        m.params.mtry = p.at("mtry").get<int>();
        m.params.seed = p.at("seed").get<uint64_t>();
        m.base_value = j.at("base_value").get<double>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& tj : j.at("trees")) {
            Tree t;
            for (const auto& nj : tj.at("nodes")) {
                int32_t f = nj.at(0).get<int32_t>();
                if (f < 0) {
                    t.feature.push_back(-1);
                    t.threshold.push_back(0);
                    t.left.push_back(-1);
                    t.right.push_back(-1);
                    t.value.push_back(nj.at(1).get<double>());
                    t.cover.push_back(nj.at(2).get<uint32_t>());
                } else {
                    t.feature.push_back(f);
                    t.threshold.push_back(nj.at(1).get<double>());
                    t.left.push_back(nj.at(2).get<int32_t>());
                    t.right.push_back(nj.at(3).get<int32_t>());
                    t.value.push_back(0);
                    t.cover.push_back(nj.at(4).get<uint32_t>());
                }
            }
            size_t sz = t.size();
            if (sz == 0) throw CorruptModel("empty tree");
            for (size_t i = 0; i < sz; ++i) {
                if (t.cover[i] == 0) throw CorruptModel("zero cover at node " + std::to_string(i));
                if (t.is_leaf(i)) continue;
                if (t.left[i] < 0 || size_t(t.left[i]) >= sz || t.right[i] < 0 ||
                    size_t(t.right[i]) >= sz)
                    throw CorruptModel("child index out of range at node " + std::to_string(i));
                if (t.cover[size_t(t.left[i])] + t.cover[size_t(t.right[i])] != t.cover[i])
                    throw CorruptModel("cover mismatch at node " + std::to_string(i));
                if (size_t(t.feature[i]) >= m.feature_names.size())
                    throw CorruptModel("feature index out of range at node " + std::to_string(i));
            }
            m.trees.push_back(std::move(t));
        }
        if (m.trees.size() != size_t(m.params.n_trees))
            throw CorruptModel("tree count does not match params");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel(std::string("model JSON has unexpected shape: ") + e.what());
    }
}

void save(const ForestModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << to_json(m) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

ForestModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

} // namespace lonecast::forest
