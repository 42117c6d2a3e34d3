#include <doctest.h>

#include "ppcadmix/replicator.hpp"

using namespace ppcadmix;

namespace {

FittedModel small_fitted(std::uint64_t seed = 3) {
    SimulatedDataset s = simulate_dataset(15, 20, 2, 1.0, PhiSpec::uniform(0.2, 0.8), seed);
    FitConfig cfg;
    cfg.iterations = 30;
    cfg.seed = seed + 1;
    return fit(s.dataset, 2, cfg);
}

}  // namespace

TEST_CASE("replicate_once is deterministic per seed and preserves shape") {
    FittedModel m = small_fitted();
    AlleleTensor a = replicate_once(m, 5);
    AlleleTensor b = replicate_once(m, 5);
    AlleleTensor c = replicate_once(m, 6);
    CHECK(a.n == m.n);
    CHECK(a.L == m.L);
    CHECK(a.alleles == b.alleles);
    CHECK(a.alleles != c.alleles);
}

TEST_CASE("replication never mutates the fitted model") {
    FittedModel m = small_fitted();
    Eigen::MatrixXd theta = m.params.theta, phi = m.params.phi;
    auto zmap = m.posterior.z_map;
    replicate_batch(m, 20, 9);
    CHECK(m.params.theta == theta);
    CHECK(m.params.phi == phi);
    CHECK(m.posterior.z_map == zmap);
}

TEST_CASE("clamped phi makes the replicate allele all but certain") {
    FittedModel m = small_fitted();
    m.params.phi.setConstant(1.0 - 1e-6);
    AlleleTensor t = replicate_once(m, 11);
    long ones = 0;
    for (auto a : t.alleles) ones += a;
    CHECK(ones == static_cast<long>(t.alleles.size()));  // 600 draws, miss prob ~6e-4
}

TEST_CASE("batch replicate r matches replicate_once with its derived seed") {
    FittedModel m = small_fitted();
    ReplicateSet set = replicate_batch(m, 5, 1234);
    for (int r = 0; r < 5; ++r)
        CHECK(set.replicates[r].alleles == replicate_once(m, derive_seed(1234, r)).alleles);
}

TEST_CASE("replicate marginal frequency concentrates at phi[l, z_map]") {
    FittedModel m = small_fitted(8);
    const int i = 2, l = 3, j = 0;
    int z = m.posterior.z_at(i, l, j);
    double phi = m.params.phi(l, z);
    long ones = 0;
    const int R = 1000;
    for_each_replicate(m, R, 99, [&](int, const AlleleTensor& t) { ones += t.at(i, l, j); });
    CHECK(std::abs(static_cast<double>(ones) / R - phi) < 0.05);
}

TEST_CASE("tensor_to_dataset sums the allele copies") {
    AlleleTensor t;
    t.n = 1;
    t.L = 3;
    t.alleles = {0, 0, 0, 1, 1, 1};
    GenotypeDataset d = tensor_to_dataset(t);
    CHECK(d.at(0, 0) == 0);
    CHECK(d.at(0, 1) == 1);
    CHECK(d.at(0, 2) == 2);
}
