#pragma once

#include <cstdint>
#include <vector>

#include "ppcadmix/admixture_em.hpp"
#include "ppcadmix/genotype_data.hpp"
#include "ppcadmix/rng.hpp"

namespace ppcadmix {

// One posterior predictive replicate: allele copy (i,l,j) drawn
// Bernoulli(phi_{l, z_map(i,l,j)}), latent structure untouched.
AlleleTensor replicate_once(const FittedModel& fitted, std::uint64_t seed);

// Streams R replicates through `fn(r, tensor)`. Replicate r is seeded with
// derive_seed(seed, r), so it depends only on (fitted, seed, r) and can be
// regenerated in isolation.
template <class Fn>
void for_each_replicate(const FittedModel& fitted, int R, std::uint64_t seed, Fn&& fn) {
    if (R < 1) throw std::invalid_argument("replicate count must be >= 1");
    for (int r = 0; r < R; ++r) fn(r, replicate_once(fitted, derive_seed(seed, r)));
}

struct ReplicateSet {
    std::vector<AlleleTensor> replicates;
    int R = 0;
    std::uint64_t seed = 0;
};

ReplicateSet replicate_batch(const FittedModel& fitted, int R, std::uint64_t seed);

GenotypeDataset tensor_to_dataset(const AlleleTensor& t);

}  // namespace ppcadmix
