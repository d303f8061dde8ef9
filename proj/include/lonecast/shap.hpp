#pragma once

#include "lonecast/forest.hpp"

namespace lonecast::shap {

struct Attribution {
    std::vector<double> phi; // per feature, model feature order
    double base_value = 0;   // expected model output
};

// Exact path-dependent Shapley values for one tree: conditional
// expectations follow the tree's own cover proportions at each split.
// Features absent from every decision path get exactly 0. Throws
// CorruptModel if any node cover is zero.
std::vector<double> tree_shap(const forest::Tree& tree, size_t n_features,
                              const std::vector<double>& x);

// Mean of tree_shap over the ensemble; base_value + sum(phi) equals
// predict_proba to within accumulation error (~1e-12).
Attribution forest_shap(const forest::ForestModel& model, const std::vector<double>& x);

struct ExplanationMatrix {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> phi; // rows = samples
    std::vector<double> base_values;      // per row
    std::vector<double> mean_abs_phi;     // per feature
    std::vector<size_t> ranking; // feature indices, mean |phi| descending,
                                 // ties by name
};

// n_threads parallelizes over samples; each row is a serial sum over
// trees, so results are identical at any thread count.
ExplanationMatrix explain_dataset(const forest::ForestModel& model, const forest::Matrix& X,
                                  int n_threads = 1);

// Long-format CSV (sample_id, feature, feature_value, phi) for the top_k
// ranked features, plus a JSON summary of the full ranking. X must be the
// matrix the explanations were computed from.
void export_beeswarm(const ExplanationMatrix& m, const forest::Matrix& X, int top_k,
                     const std::string& csv_path, const std::string& json_path);

} // namespace lonecast::shap
