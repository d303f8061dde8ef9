#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lonecast::forest {

struct ForestParams {
    int n_trees = 400;
    int max_depth = 15;
    int min_samples_split = 2;
    int mtry = 0; // features tried per split; 0 means ceil(sqrt(d))
    uint64_t seed = 0;
    int n_threads = 1; // results are identical at any thread count
};

// One CART tree as parallel node arrays; node 0 is the root and children
// always follow their parent (preorder). feature < 0 marks a leaf.
struct Tree {
    std::vector<int32_t> feature;
    std::vector<double> threshold;
    std::vector<int32_t> left;
    std::vector<int32_t> right;
    std::vector<double> value;    // class-1 fraction of the node's samples
    std::vector<uint32_t> cover;  // bootstrap samples through the node

    size_t size() const { return feature.size(); }
    bool is_leaf(size_t i) const { return feature[i] < 0; }

    // Leaf index reached by routing x (x[f] <= threshold goes left).
    size_t route(const std::vector<double>& x) const;

    // Cover-weighted mean leaf value: the tree's expected output.
    double expected_value() const;
};

struct ForestModel {
    ForestParams params;
    std::vector<std::string> feature_names;
    std::vector<Tree> trees;
    double base_value = 0; // mean of per-tree expected values

    size_t n_features() const { return feature_names.size(); }
};

// Gini impurity 1 - p0^2 - p1^2. Throws ValidationError when both counts
// are zero.
double gini(long c0, long c1);

using Matrix = std::vector<std::vector<double>>;

// Grows params.n_trees CART trees on bootstrap resamples. Each node draws
// mtry features without replacement and takes the split minimizing the
// weighted child Gini over midpoints between consecutive distinct values;
// equal scores go to the lowest feature index, then the lowest threshold.
// Each tree consumes its own stream derived from (seed, tree index), so
// the model is byte-stable at any thread count. When oob_tree_counts is
// given it receives, per training sample, the number of trees whose
// bootstrap missed it. Throws DegenerateLabels when y is single-class.
ForestModel fit(const Matrix& X, const std::vector<int>& y,
                const std::vector<std::string>& feature_names, const ForestParams& params,
                std::vector<int>* oob_tree_counts = nullptr);

// Mean leaf class-1 fraction across trees.
double predict_proba(const ForestModel& m, const std::vector<double>& x);

// 1 (Lonely) iff predict_proba >= 0.5.
int predict(const ForestModel& m, const std::vector<double>& x);

// Versioned JSON with preorder node lists; lossless round-trip.
std::string to_json(const ForestModel& m);
ForestModel from_json(const std::string& text);
void save(const ForestModel& m, const std::string& path);
ForestModel load(const std::string& path);

} // namespace lonecast::forest
