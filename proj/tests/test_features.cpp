#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memnet/data_io.hpp>
#include <memnet/features.hpp>
#include <memnet/linalg.hpp>

#include <cmath>

using namespace memnet;

TEST_CASE("smooth_inputs basics") {
    const Dataset data = gen_synthetic(8, 5, 3);

    const SmoothedDataset none = smooth_inputs(data, 0.0, 7);
    CHECK(none.inputs_bar == data.inputs);

    const SmoothedDataset a = smooth_inputs(data, 0.01, 7);
    const SmoothedDataset b = smooth_inputs(data, 0.01, 7);
    CHECK(a.inputs_bar == b.inputs_bar);

    const SmoothedDataset c = smooth_inputs(data, 0.01, 8);
    CHECK(a.inputs_bar != c.inputs_bar);

    // entrywise noise mean is within 4 sigma / sqrt(nd) of zero
    const double mean = (a.inputs_bar - data.inputs).mean();
    CHECK(std::abs(mean) <= 4.0 * 0.1 / std::sqrt(40.0));

    CHECK_THROWS_AS(smooth_inputs(data, -0.1, 1), std::invalid_argument);
}

TEST_CASE("feature_map linear, square, and cubic cases") {
    Rng rng(4);
    Vector x(3);
    x << 0.2, -0.5, 0.9;

    const RandomFeatureLayer lin = make_feature_layer(4, 3, 1, 11);
    CHECK((feature_map(lin, x) - lin.R * x).cwiseAbs().maxCoeff() == 0.0);

    const RandomFeatureLayer sq{Matrix::Identity(3, 3), 2, 0};
    const Vector zsq = feature_map(sq, x);
    for (Index i = 0; i < 3; ++i) CHECK(zsq[i] == doctest::Approx(x[i] * x[i]));

    const RandomFeatureLayer cub = make_feature_layer(5, 3, 3, 12);
    const Vector zc = feature_map(cub, x);
    for (Index i = 0; i < 5; ++i) {
        double dot = 0.0;
        for (Index j = 0; j < 3; ++j) dot += cub.R(i, j) * x[j];
        CHECK(zc[i] == doctest::Approx(dot * dot * dot).epsilon(1e-12));
    }
}

TEST_CASE("feature layer weights are seed-reproducible standard normals") {
    const RandomFeatureLayer a = make_feature_layer(6, 4, 2, 42);
    const RandomFeatureLayer b = make_feature_layer(6, 4, 2, 42);
    CHECK(a.R == b.R);
    CHECK(a.R != make_feature_layer(6, 4, 2, 43).R);
}

TEST_CASE("z_tensor_matrix single-column expansion") {
    // layer and input chosen so the feature vector is (1, 2)
    Matrix x(1, 2);
    x << 1, 1;
    Vector y(1);
    y << 0.5;
    const SmoothedDataset sm = smooth_inputs(Dataset(x, y), 0.0, 1);
    Matrix r(2, 2);
    r << 1, 0, 0, 2;
    const RandomFeatureLayer layer{r, 1, 0};
    const Matrix z = z_tensor_matrix(layer, sm);
    REQUIRE(z.rows() == 4);
    REQUIRE(z.cols() == 1);
    CHECK(z(0, 0) == 1.0);
    CHECK(z(1, 0) == 2.0);
    CHECK(z(2, 0) == 2.0);
    CHECK(z(3, 0) == 4.0);
}

TEST_CASE("z_tensor_matrix with identity features reduces to the x tensor matrix") {
    const Dataset data = gen_synthetic(3, 2, 9);
    const SmoothedDataset sm = smooth_inputs(data, 0.0, 1);
    const Matrix z = z_tensor_matrix(identity_feature_layer(2), sm);
    for (Index j = 0; j < 3; ++j) {
        const Vector want = linalg::tensor_power(data.inputs.row(j).transpose(), 2);
        CHECK((z.col(j) - want).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("z_tensor_matrix equals the explicit (Q kron Q) Xbar construction") {
    const Dataset data = gen_synthetic(2, 2, 13);
    const SmoothedDataset sm = smooth_inputs(data, 0.005, 2);
    const int p = 2;
    const RandomFeatureLayer layer = make_feature_layer(3, 2, p, 21);

    const Matrix z = z_tensor_matrix(layer, sm);

    // Q rows are r_i^{(x)p}; Xbar columns are xbar_j^{(x)2p}
    Matrix q(3, 4);
    for (Index i = 0; i < 3; ++i) {
        q.row(i) = linalg::tensor_power(layer.R.row(i).transpose(), p).transpose();
    }
    Matrix xbar(16, 2);
    for (Index j = 0; j < 2; ++j) {
        xbar.col(j) = linalg::tensor_power(sm.inputs_bar.row(j).transpose(), 2 * p);
    }
    const Matrix oracle = linalg::kron(q, q) * xbar;
    CHECK((z - oracle).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("z_tensor_matrix respects the size cap") {
    const Dataset data = gen_synthetic(2, 2, 3);
    const SmoothedDataset sm = smooth_inputs(data, 0.0, 1);
    CHECK_THROWS_AS(z_tensor_matrix(make_feature_layer(5, 2, 1, 1), sm, 9), resource_limit);
}

TEST_CASE("z_singular_certificate measures positivity under smoothing") {
    const Dataset data = gen_synthetic(6, 4, 5);
    const SmoothedDataset sm = smooth_inputs(data, 0.01, 6);
    const RandomFeatureLayer layer = make_feature_layer(4, 4, 2, 7);  // C(5,2)=10 > 6
    const ZCertificate cert = z_singular_certificate(layer, sm);
    CHECK(cert.sigma_min > 0.0);
    CHECK(cert.positive);
    // at this scale the asymptotic bound bracket is negative
    CHECK(cert.bound_vacuous);
    CHECK(cert.theory_bound == 0.0);
}

TEST_CASE("duplicate samples with no smoothing give a singular Z") {
    Matrix x(2, 4);
    x.row(0) << 0.5, 0.5, 0.5, 0.5;
    x.row(1) << 0.5, 0.5, 0.5, 0.5;
    Vector y(2);
    y << 1, -1;
    const SmoothedDataset sm = smooth_inputs(Dataset(x, y), 0.0, 1);
    const RandomFeatureLayer layer = make_feature_layer(3, 4, 2, 3);  // C(4,2)=6 > 2
    const ZCertificate cert = z_singular_certificate(layer, sm);
    CHECK(cert.sigma_min <= 1e-12);
}

TEST_CASE("certificate theory bound is monotone in the smoothing variance") {
    // p = 1, d = 8, k = 2, n = 2 keeps the bound bracket positive
    const Dataset data = gen_synthetic(2, 8, 17);
    const RandomFeatureLayer layer = make_feature_layer(2, 8, 1, 19);
    const ZCertificate lo = z_singular_certificate(layer, smooth_inputs(data, 0.01, 4));
    const ZCertificate hi = z_singular_certificate(layer, smooth_inputs(data, 0.02, 4));
    REQUIRE(!lo.bound_vacuous);
    REQUIRE(!hi.bound_vacuous);
    CHECK(lo.theory_bound > 0.0);
    CHECK(hi.theory_bound > lo.theory_bound);
}

TEST_CASE("certificate enforces the width hypothesis") {
    const Dataset data = gen_synthetic(10, 3, 23);
    const SmoothedDataset sm = smooth_inputs(data, 0.01, 2);
    const RandomFeatureLayer layer = make_feature_layer(3, 3, 2, 2);  // C(4,2)=6 <= 10
    try {
        z_singular_certificate(layer, sm);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("C(k+1,2)") != std::string::npos);
    }
}

TEST_CASE("feature norm bound") {
    // degenerate zero layer: all features vanish and sit below the bound
    const Dataset data = gen_synthetic(5, 3, 29);
    const SmoothedDataset sm = smooth_inputs(data, 0.01, 3);
    const RandomFeatureLayer zero_layer{Matrix::Zero(4, 3), 2, 0};
    const FeatureNormReport zr = feature_norm_bound(zero_layer, sm, 0.1);
    CHECK(zr.max_norm == 0.0);
    CHECK(!zr.violated);

    // the configuration used by the desk-scale three-layer runs
    const Dataset big = gen_synthetic(40, 10, 31);
    const SmoothedDataset bsm = smooth_inputs(big, 0.01, 5);
    const RandomFeatureLayer layer = make_feature_layer(14, 10, 2, 6);
    const FeatureNormReport rep = feature_norm_bound(layer, bsm, 0.1);
    CHECK(rep.max_norm > 0.0);
    CHECK(rep.max_norm <= rep.bound);
    CHECK(!rep.violated);

    // the bound grows with the input norm cap B
    const Dataset scaled(0.5 * big.inputs, big.labels);
    const FeatureNormReport small = feature_norm_bound(layer, smooth_inputs(scaled, 0.01, 5), 0.1);
    CHECK(small.bound < rep.bound);
}

TEST_CASE("feature_dataset carries labels and recomputes bounds") {
    const Dataset data = gen_synthetic(6, 3, 37);
    const SmoothedDataset sm = smooth_inputs(data, 0.01, 4);
    const RandomFeatureLayer layer = make_feature_layer(4, 3, 2, 5);
    const Dataset feat = feature_dataset(layer, sm);
    CHECK(feat.n() == 6);
    CHECK(feat.d() == 4);
    CHECK(feat.labels == data.labels);
    CHECK(feat.B == feat.inputs.rowwise().norm().maxCoeff());
}

TEST_CASE("train_three_layer zero labels terminate immediately") {
    const Dataset base = gen_synthetic(6, 3, 41);
    const Dataset data(base.inputs, Vector::Zero(6));
    TrainOptions opts;
    opts.max_iters = 1000;
    const ThreeLayerResult res =
        train_three_layer(data, 2, 4, 1e-3, 0.01, ThreeLayerSeeds{1, 2}, opts);
    CHECK(res.train.final_loss <= 1e-3);
    CHECK(res.train.iterations == 0);
    CHECK(res.train.status == RunStatus::Stopped);
}

TEST_CASE("train_three_layer desk-scale instance with the adam option") {
    const Dataset data = gen_synthetic(40, 10, 1001);
    TrainOptions opts;
    opts.optimizer = OptimizerKind::Adam;
    opts.init = InitKind::Gaussian;
    opts.adam.lr = 0.01;
    opts.max_iters = 50000;
    opts.record_every = 50;
    const ThreeLayerResult res =
        train_three_layer(data, 2, 14, 1e-3, 0.01, ThreeLayerSeeds{2, 3}, opts);
    CHECK(res.certificate.sigma_min > 0.0);
    CHECK(res.train.final_loss <= 1e-3);
    // defaulted k matches 2 ceil(sqrt(n)) when passed as 0
    const ThreeLayerResult defk =
        train_three_layer(data, 2, 0, 1e-3, 0.01, ThreeLayerSeeds{2, 3}, opts);
    CHECK(defk.layer.R.rows() == 14);
}

TEST_CASE("train_three_layer works without smoothing on generic inputs") {
    const Dataset data = gen_synthetic(6, 4, 43);
    TrainOptions opts;
    opts.optimizer = OptimizerKind::Adam;
    opts.init = InitKind::Gaussian;
    opts.adam.lr = 0.01;
    opts.max_iters = 50000;
    opts.record_every = 50;
    const ThreeLayerResult res =
        train_three_layer(data, 2, 4, 1e-3, 0.0, ThreeLayerSeeds{3, 4}, opts);
    CHECK(res.certificate.sigma_min > 0.0);
    CHECK(res.train.final_loss <= 1e-3);
}

TEST_CASE("train_three_layer rejects out-of-range inputs") {
    Matrix x(2, 2);
    x << 2.0, 0.0, 0.0, 1.0;  // first row has norm 2
    Vector y(2);
    y << 0.5, -0.5;
    TrainOptions opts;
    CHECK_THROWS_AS(train_three_layer(Dataset(x, y), 2, 4, 1e-3, 0.01, {}, opts),
                    std::invalid_argument);
}

TEST_CASE("identity features with p = 1 reproduce the two-layer run bit-exactly") {
    const Dataset data = gen_synthetic(4, 3, 47);
    TrainOptions opts;
    opts.optimizer = OptimizerKind::Pgd;
    opts.c = 0.5;
    opts.seed = 4;
    opts.max_iters = 2000;
    opts.stop_at_target = false;

    const ThreeLayerResult three =
        train_three_layer(data, 1, 3, 1e-4, 0.0, ThreeLayerSeeds{1, 2}, opts, true);
    const TrainResult two = train_two_layer(data, 8, 1e-4, opts);

    REQUIRE(three.train.trace.size() == two.trace.size());
    for (size_t i = 0; i < two.trace.size(); ++i) {
        CHECK(three.train.trace[i].iteration == two.trace[i].iteration);
        CHECK(three.train.trace[i].objective == two.trace[i].objective);
        CHECK(three.train.trace[i].grad_norm == two.trace[i].grad_norm);
        CHECK(three.train.trace[i].perturbed == two.trace[i].perturbed);
    }
    CHECK(three.train.params.W == two.params.W);
    CHECK(three.train.final_loss == two.final_loss);
}

TEST_CASE("the seed triple pins the whole three-layer run") {
    const Dataset data = gen_synthetic(12, 4, 53);
    TrainOptions opts;
    opts.optimizer = OptimizerKind::Adam;
    opts.init = InitKind::Gaussian;
    opts.adam.lr = 0.01;
    opts.max_iters = 2000;
    opts.record_every = 100;
    opts.seed = 9;

    const ThreeLayerResult a = train_three_layer(data, 2, 6, 1e-3, 0.01, ThreeLayerSeeds{5, 6}, opts);
    const ThreeLayerResult b = train_three_layer(data, 2, 6, 1e-3, 0.01, ThreeLayerSeeds{5, 6}, opts);
    CHECK(a.train.params.W == b.train.params.W);
    CHECK(a.train.final_loss == b.train.final_loss);
    CHECK(a.certificate.sigma_min == b.certificate.sigma_min);

    const ThreeLayerResult c = train_three_layer(data, 2, 6, 1e-3, 0.01, ThreeLayerSeeds{5, 7}, opts);
    CHECK(a.smoothed.inputs_bar != c.smoothed.inputs_bar);
}
