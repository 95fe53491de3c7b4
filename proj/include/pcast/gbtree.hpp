#pragma once

#include "pcast/masked.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace pcast::gbt {

struct GbtParams {
    int n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 6;
    double subsample = 1.0;
    double reg_lambda = 1.0;      // L2 on leaf weights
    double reg_alpha = 0.0;       // L1 on leaf weights
    double gamma = 0.0;           // minimum loss reduction per split
    double min_child_weight = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One node of a regression tree. Rows whose split feature is missing follow
/// default_left, the direction that maximized gain during training.
struct GbtNode {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
    double weight = 0.0;
    int left = -1;
    int right = -1;
};

struct GbtTree {
    std::vector<GbtNode> nodes;  // preorder; root = 0

    double route(const Eigen::VectorXd& x, const BoolArray& present) const;
};

/// Boosted ensemble: prediction = base_score + learning_rate * sum of tree
/// leaf weights.
struct GbtModel {
    double base_score = 0.0;
    std::vector<GbtTree> trees;
    GbtParams params;
    Eigen::Index n_features = 0;
};

/// Custom loss hook: fills per-row gradients and hessians given current
/// predictions. The default is squared error (g = pred - y, h = 1).
using GradHessFn =
    std::function<void(const Eigen::VectorXd& pred, const Eigen::VectorXd& y, Eigen::VectorXd& grad,
                       Eigen::VectorXd& hess)>;

/// Second-order boosting with exact greedy splits: every sorted present-value
/// midpoint is tried with missing rows routed to both sides, gain
///   0.5 * [S(G_L,H_L) + S(G_R,H_R) - S(G,H)] - gamma,  S(G,H) = T(G)^2/(H+lambda)
/// with T the L1 soft-threshold; leaf weight -T(G)/(H+lambda). Each round
/// subsamples rows without replacement with a seed derived from (seed, round).
GbtModel fit(const MaskedMatrix& X, const Eigen::VectorXd& y, const GbtParams& params,
             const GradHessFn& grad_hess = {}, unsigned threads = 1);

double predict(const GbtModel& model, const Eigen::VectorXd& x, const BoolArray& present);
double predict(const GbtModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd predict(const GbtModel& model, const MaskedMatrix& X);

/// Training objective: sum (y - pred)^2 plus, per leaf,
/// gamma + 0.5*lambda*w^2 + alpha*|w|.
double objective(const GbtModel& model, const MaskedMatrix& X, const Eigen::VectorXd& y);

/// One evaluated split candidate; exposed so tests can check every streaming
/// gain against a brute-force objective difference.
struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
    double gain = 0.0;
    double g_left = 0.0, h_left = 0.0, g_right = 0.0, h_right = 0.0;
};

/// All admissible candidates at a node holding `rows`, in deterministic order:
/// feature ascending, threshold ascending, missing-left before missing-right.
/// Candidates whose children violate min_child_weight are not emitted.
std::vector<SplitCandidate> enumerate_splits(const MaskedMatrix& X, const Eigen::VectorXd& grad,
                                             const Eigen::VectorXd& hess,
                                             const std::vector<Eigen::Index>& rows, const GbtParams& params,
                                             unsigned threads = 1);

/// Highest-gain candidate under the tie-break (lowest feature, lowest
/// threshold, default-left); nullopt when there are no candidates.
const SplitCandidate* best_split(const std::vector<SplitCandidate>& candidates);

/// Text form: `key value` header lines then per-tree preorder node lists
/// `node_id,kind,feature,threshold,default_left,weight,left_id,right_id`.
/// Doubles use shortest round-trip formatting, so parsing restores the model
/// exactly.
std::string serialize_model(const GbtModel& model);
GbtModel parse_model(const std::string& text);
void save_model(const GbtModel& model, const std::filesystem::path& path);
GbtModel load_model(const std::filesystem::path& path);

}  // namespace pcast::gbt
