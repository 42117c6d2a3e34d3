#include "ppcadmix/replicator.hpp"

namespace ppcadmix {

AlleleTensor replicate_once(const FittedModel& fitted, std::uint64_t seed) {
    if (fitted.posterior.z_map.empty())
        throw std::invalid_argument("fitted model has no z_map; cannot replicate");
    Rng rng(seed);
    AlleleTensor t;
    t.n = fitted.n;
    t.L = fitted.L;
    t.alleles.resize(static_cast<std::size_t>(t.n) * t.L * 2);
    for (int i = 0; i < t.n; ++i)
        for (int l = 0; l < t.L; ++l)
            for (int j = 0; j < 2; ++j) {
                int z = fitted.posterior.z_at(i, l, j);
                t.at(i, l, j) = rng.bernoulli(fitted.params.phi(l, z)) ? 1 : 0;
            }
    return t;
}

ReplicateSet replicate_batch(const FittedModel& fitted, int R, std::uint64_t seed) {
    ReplicateSet set;
    set.R = R;
    set.seed = seed;
    set.replicates.reserve(static_cast<std::size_t>(R));
    for_each_replicate(fitted, R, seed,
                       [&](int, AlleleTensor t) { set.replicates.push_back(std::move(t)); });
    return set;
}

GenotypeDataset tensor_to_dataset(const AlleleTensor& t) {
    GenotypeDataset d;
    d.n = t.n;
    d.L = t.L;
    d.genotypes.resize(static_cast<std::size_t>(t.n) * t.L);
    for (int i = 0; i < t.n; ++i)
        for (int l = 0; l < t.L; ++l)
            d.genotypes[static_cast<std::size_t>(i) * t.L + l] =
                static_cast<std::uint8_t>(t.at(i, l, 0) + t.at(i, l, 1));
    d.snp_order.resize(static_cast<std::size_t>(t.L));
    for (int l = 0; l < t.L; ++l) d.snp_order[l] = "snp" + std::to_string(l + 1);
    return d;
}

}  // namespace ppcadmix
