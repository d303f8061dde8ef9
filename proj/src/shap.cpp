#include "lonecast/shap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "lonecast/csv.hpp"
#include "lonecast/error.hpp"

namespace lonecast::shap {

namespace {

// One entry of the weighted feature path maintained during tree descent.
// zero_fraction tracks how much of the training mass follows this branch
// when the feature is unknown, one_fraction whether the instance itself
// does, and pweight carries the permutation weights of Lundberg's
// polynomial-time algorithm, indexed by subset size.
struct PathElement {
    int feature = -1;
    double zero_fraction = 1;
    double one_fraction = 1;
    double pweight = 0;
};

// Grow the path by one element and refresh the permutation weights. The
// new element lands at index parent_len; weights are updated in place for
// the extended length parent_len + 1.
void extend(PathElement* path, size_t parent_len, double zero_fraction, double one_fraction,
            int feature) {
    path[parent_len] = {feature, zero_fraction, one_fraction, parent_len == 0 ? 1.0 : 0.0};
    double len = double(parent_len + 1);
    for (size_t i = parent_len; i-- > 0;) {
        path[i + 1].pweight += one_fraction * path[i].pweight * double(i + 1) / len;
        path[i].pweight = zero_fraction * path[i].pweight * double(parent_len - i) / len;
    }
}

// Remove the element at `index` from a path of `len` elements, restoring
// the weights to what they would have been had it never been added. The
// recomputed weights stay in their slots; only the feature metadata above
// the removed slot shifts down.
void unwind(PathElement* path, size_t len, size_t index) {
    double one_fraction = path[index].one_fraction;
    double zero_fraction = path[index].zero_fraction;
    double next = path[len - 1].pweight;
    for (size_t i = len - 1; i-- > 0;) {
        if (one_fraction != 0) {
            double tmp = path[i].pweight;
            path[i].pweight = next * double(len) / (double(i + 1) * one_fraction);
            next = tmp - path[i].pweight * zero_fraction * double(len - 1 - i) / double(len);
        } else {
            path[i].pweight =
                path[i].pweight * double(len) / (zero_fraction * double(len - 1 - i));
        }
    }
    for (size_t i = index; i + 1 < len; ++i) {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

// Sum of the weights the element at `index` would leave behind if unwound,
// without mutating the path. Used at leaves once per path element.
double unwound_sum(const PathElement* path, size_t len, size_t index) {
    double one_fraction = path[index].one_fraction;
    double zero_fraction = path[index].zero_fraction;
    double next = path[len - 1].pweight;
    double total = 0;
    if (one_fraction != 0) {
        for (size_t i = len - 1; i-- > 0;) {
            double tmp = next / (double(i + 1) * one_fraction);
            total += tmp;
            next = path[i].pweight - tmp * zero_fraction * double(len - 1 - i);
        }
    } else {
        for (size_t i = len - 1; i-- > 0;)
            total += path[i].pweight / (zero_fraction * double(len - 1 - i));
    }
    return total * double(len);
}

class TreeShap {
public:
    TreeShap(const forest::Tree& tree, const std::vector<double>& x, std::vector<double>& phi)
        : tree_(tree), x_(x), phi_(phi) {
        // Each recursion frame appends its path right after the parent's
        // elements, so the deepest chain needs 1 + 2 + ... + max_len slots.
        size_t max_len = max_path_length();
        storage_.resize(max_len * (max_len + 1) / 2);
    }

    void run() { recurse(0, storage_.data(), 0, 1.0, 1.0, -1); }

private:
    size_t max_path_length() const {
        size_t deepest = 1;
        std::vector<std::pair<size_t, size_t>> stack{{0, 1}};
        while (!stack.empty()) {
            auto [node, len] = stack.back();
            stack.pop_back();
            deepest = std::max(deepest, len);
            if (!tree_.is_leaf(node)) {
                stack.emplace_back(size_t(tree_.left[node]), len + 1);
                stack.emplace_back(size_t(tree_.right[node]), len + 1);
            }
        }
        return deepest;
    }

    void recurse(size_t node, PathElement* parent, size_t parent_len, double zero_fraction,
                 double one_fraction, int feature) {
        PathElement* path = parent + parent_len;
        std::copy(parent, parent + parent_len, path);
        extend(path, parent_len, zero_fraction, one_fraction, feature);
        size_t len = parent_len + 1;

        if (tree_.is_leaf(node)) {
            double leaf = tree_.value[node];
            for (size_t i = 1; i < len; ++i)
                phi_[size_t(path[i].feature)] +=
                    unwound_sum(path, len, i) * (path[i].one_fraction - path[i].zero_fraction) *
                    leaf;
            return;
        }

        size_t split = size_t(tree_.feature[node]);
        size_t hot = size_t(x_[split] <= tree_.threshold[node] ? tree_.left[node]
                                                               : tree_.right[node]);
        size_t cold = size_t(x_[split] <= tree_.threshold[node] ? tree_.right[node]
                                                                : tree_.left[node]);
        double hot_fraction = double(tree_.cover[hot]) / double(tree_.cover[node]);
        double cold_fraction = double(tree_.cover[cold]) / double(tree_.cover[node]);

        // A repeat split on a feature already on the path first undoes the
        // earlier entry so the two conditions do not double count.
        double incoming_zero = 1, incoming_one = 1;
        size_t found = len;
        for (size_t i = 0; i < len; ++i)
            if (path[i].feature == int(split)) {
                found = i;
                break;
            }
        if (found != len) {
            incoming_zero = path[found].zero_fraction;
            incoming_one = path[found].one_fraction;
            unwind(path, len, found);
            --len;
        }

        recurse(hot, path, len, incoming_zero * hot_fraction, incoming_one, int(split));
        recurse(cold, path, len, incoming_zero * cold_fraction, 0.0, int(split));
    }

    const forest::Tree& tree_;
    const std::vector<double>& x_;
    std::vector<double>& phi_;
    std::vector<PathElement> storage_;
};

} // namespace

std::vector<double> tree_shap(const forest::Tree& tree, size_t n_features,
                              const std::vector<double>& x) {
    for (uint32_t c : tree.cover)
        if (c == 0) throw CorruptModel("tree has a zero-cover node");
    std::vector<double> phi(n_features, 0.0);
    if (tree.size() == 1) return phi; // a constant model attributes nothing
    TreeShap(tree, x, phi).run();
    return phi;
}

Attribution forest_shap(const forest::ForestModel& model, const std::vector<double>& x) {
    if (x.size() != model.n_features())
        throw ValidationError("input width does not match model features");
    if (model.trees.empty()) throw CorruptModel("model has no trees");
    Attribution out;
    out.phi.assign(model.n_features(), 0.0);
    for (const auto& t : model.trees) {
        std::vector<double> p = tree_shap(t, model.n_features(), x);
        for (size_t f = 0; f < p.size(); ++f) out.phi[f] += p[f];
        out.base_value += t.expected_value();
    }
    double inv = 1.0 / double(model.trees.size());
    for (double& v : out.phi) v *= inv;
    out.base_value *= inv;
    return out;
}

ExplanationMatrix explain_dataset(const forest::ForestModel& model, const forest::Matrix& X,
                                  int n_threads) {
    if (X.empty()) throw ValidationError("explain_dataset needs at least one sample");

    ExplanationMatrix m;
    m.feature_names = model.feature_names;
    m.phi.resize(X.size());
    m.base_values.resize(X.size());

    size_t workers = size_t(std::clamp<long>(n_threads, 1, long(X.size())));
    auto work = [&](size_t w) {
        for (size_t i = w; i < X.size(); i += workers) {
            Attribution a = forest_shap(model, X[i]);
            m.phi[i] = std::move(a.phi);
            m.base_values[i] = a.base_value;
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }

    size_t nf = model.n_features();
    m.mean_abs_phi.assign(nf, 0.0);
    for (const auto& row : m.phi)
        for (size_t f = 0; f < nf; ++f) m.mean_abs_phi[f] += std::fabs(row[f]);
    for (double& v : m.mean_abs_phi) v /= double(X.size());

    m.ranking.resize(nf);
    for (size_t f = 0; f < nf; ++f) m.ranking[f] = f;
    std::sort(m.ranking.begin(), m.ranking.end(), [&](size_t a, size_t b) {
        if (m.mean_abs_phi[a] != m.mean_abs_phi[b]) return m.mean_abs_phi[a] > m.mean_abs_phi[b];
        return m.feature_names[a] < m.feature_names[b];
    });
    return m;
}

void export_beeswarm(const ExplanationMatrix& m, const forest::Matrix& X, int top_k,
                     const std::string& csv_path, const std::string& json_path) {
    if (m.phi.empty()) throw ValidationError("cannot export an empty explanation matrix");
    if (X.size() != m.phi.size())
        throw ValidationError("feature matrix does not match explanation rows");
    if (top_k < 0) top_k = 0;
    size_t k = std::min(size_t(top_k), m.ranking.size());

    CsvWriter w(csv_path, {"sample_id", "feature", "feature_value", "phi"});
    for (size_t r = 0; r < k; ++r) {
        size_t f = m.ranking[r];
        for (size_t i = 0; i < m.phi.size(); ++i)
            w.write_row({std::to_string(i), m.feature_names[f], format_double(X[i][f]),
                         format_double(m.phi[i][f])});
    }
    w.close();

    nlohmann::ordered_json j;
    j["n_samples"] = m.phi.size();
    j["top_k"] = k;
    auto rank = nlohmann::ordered_json::array();
    for (size_t f : m.ranking)
        rank.push_back({{"feature", m.feature_names[f]}, {"mean_abs_phi", m.mean_abs_phi[f]}});
    j["ranking"] = std::move(rank);
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + json_path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + json_path);
}

} // namespace lonecast::shap
