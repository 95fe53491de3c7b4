#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace pcast {

/// Settings for the bagged regression forest and the imputation sweep that
/// drives it. m_try = 0 means ceil(sqrt(p)).
struct RfConfig {
    int n_trees = 100;
    int m_try = 0;
    int min_leaf = 2;
    int max_iter = 10;
    double tol = 1e-3;
    std::uint64_t seed = 0;

    void validate(Eigen::Index n_features) const;
    int effective_m_try(Eigen::Index n_features) const;
};

struct RfNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf mean

    bool is_leaf() const { return left < 0; }
};

struct RfTree {
    std::vector<RfNode> nodes;
    double predict(const Eigen::VectorXd& x) const;
};

/// Bagged regression trees with axis-aligned variance-reduction splits and
/// mean-leaf predictions. Tree t draws its bootstrap sample and split-feature
/// subsets from an RNG seeded with seed XOR t, so tree construction order
/// does not affect the result.
struct RandomForestModel {
    std::vector<RfTree> trees;
    std::vector<std::uint64_t> tree_seeds;
    std::vector<std::string> feature_names;

    double predict(const Eigen::VectorXd& x) const;
};

/// Requires complete inputs, at least 2 rows and 1 column.
RandomForestModel fit_random_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RfConfig& cfg,
                                    std::vector<std::string> feature_names = {}, unsigned threads = 1);

}  // namespace pcast
