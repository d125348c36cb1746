#pragma once

#include <memnet/dataset.hpp>
#include <memnet/optimize.hpp>

namespace memnet {

// Frozen random first layer: z_i = (r_i^T x)^p with rows r_i ~ N(0, I).
struct RandomFeatureLayer {
    Matrix R;  // k x d
    int p = 1;
    std::uint64_t seed = 0;
};

RandomFeatureLayer make_feature_layer(Index k, Index d, int p, std::uint64_t seed);

// identity layer (R = I, p = 1); reduces the three-layer pipeline to the
// two-layer one
RandomFeatureLayer identity_feature_layer(Index d);

// Worst-case inputs softened by Gaussian noise N(0, v I) per sample.
struct SmoothedDataset {
    Dataset base;
    double v = 0.0;
    std::uint64_t seed = 0;
    Matrix inputs_bar;  // n x d
};

SmoothedDataset smooth_inputs(const Dataset& data, double v, std::uint64_t seed);

Vector feature_map(const RandomFeatureLayer& layer, const Vector& x);

// dataset over the features: row j = z_j, labels carried over, B/Y recomputed
Dataset feature_dataset(const RandomFeatureLayer& layer, const SmoothedDataset& smoothed);

// Z in R^{k^2 x n}, column j = z_j^{(x)2}; algebraically (Q(x)Q) Xbar where
// Q rows are r_i^{(x)p} (identity exercised at tiny scale in the tests; Q is
// never materialized here)
Matrix z_tensor_matrix(const RandomFeatureLayer& layer, const SmoothedDataset& smoothed,
                       Index cap = 4000000);

struct ZCertificate {
    double sigma_min = 0.0;
    double theory_bound = 0.0;  // probabilistic lower bound, reported not asserted
    bool bound_vacuous = false; // bracket in the bound formula was nonpositive
    bool positive = false;      // the hard check
};

// Measures sigma_min(Z) and evaluates the formal lower-bound expression
//   ((D_d^{2p} - k D_d^p C(2p,p)) (C(k+1,2) - n) / ((4p)!)^3)^{1/4}
//     * v^p delta^{4p} / (n^{2p+1/2} k^{4p}).
// Requires C(k+1,2) > n.
ZCertificate z_singular_certificate(const RandomFeatureLayer& layer,
                                    const SmoothedDataset& smoothed, double delta = 0.1);

struct FeatureNormReport {
    double max_norm = 0.0;  // max_j ||z_j||
    double bound = 0.0;
    bool violated = false;
};

// Empirical max feature norm against the high-probability bound
//   sqrt(k) (2 (B + 2 sqrt(v d L)) sqrt(d L))^p,  L = ln((k+n) d delta^{-1/2})
FeatureNormReport feature_norm_bound(const RandomFeatureLayer& layer,
                                     const SmoothedDataset& smoothed, double delta);

struct ThreeLayerSeeds {
    std::uint64_t features = 2;
    std::uint64_t noise = 3;
};

struct ThreeLayerResult {
    RandomFeatureLayer layer;
    SmoothedDataset smoothed;
    Dataset feature_data;
    ZCertificate certificate;
    TrainResult train;
};

// Full pipeline: smooth the inputs, build the feature dataset, train the
// quadratic layer of width r = 2k+2 on it with the theorem schedule.
// k <= 0 selects the default 2*ceil(sqrt(n)). Inputs must satisfy
// ||x_j|| <= 1 and |y_j| <= 1.
ThreeLayerResult train_three_layer(const Dataset& data, int p, Index k, double eps_target,
                                   double v, const ThreeLayerSeeds& seeds,
                                   const TrainOptions& opts, bool identity_features = false);

}  // namespace memnet
