#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ppcadmix/genotype_data.hpp"

namespace ppcadmix {

struct ValueDefined {
    double value = 0.0;
    bool defined = false;
};

// K per-population scalars; undefined entries carry defined=false.
struct DiscrepancyVector {
    std::vector<ValueDefined> values;
};

enum class MatchScenario { NoMatch, Single, SingleDouble, DoubleDouble };

// Which allele-copy pairs are comparable for population k, given the two
// assignment pairs at two sites. Counts are 0/1/2/4 for the four scenarios.
struct PairMatch {
    MatchScenario scenario = MatchScenario::NoMatch;
    std::array<std::pair<int, int>, 4> comparisons{};  // (copy at a, copy at b)
    int count = 0;
};

PairMatch enumerate_pair_comparisons(std::array<int, 2> z_a, std::array<int, 2> z_b, int k);

// z_map view shared by all discrepancies: n x L x 2, 0-based indices.
struct ZMapView {
    const std::uint8_t* data;
    int n, L;
    int at(int i, int l, int j) const {
        return data[(static_cast<std::size_t>(i) * L + l) * 2 + j];
    }
};

// Mean over individual pairs of the fraction of equal alleles among
// comparable allele pairs; pairs with fewer than min_shared comparable
// alleles are skipped.
ValueDefined ibs_similarity(const AlleleTensor& data, const ZMapView& z, int k,
                            int min_shared = 500);

// Average plug-in mutual information (bits) over SNP pairs (l, l+lag) within
// the first max_snps SNPs, pooling comparable allele pairs across individuals
// into one 2x2 joint per SNP pair. Pairs with < 2 observations are skipped.
ValueDefined mutual_info_ld(const AlleleTensor& data, const ZMapView& z, int k, int lag,
                            int max_snps = 10000);

struct FstResult {
    std::vector<double> per_snp;      // only meaningful where included
    std::vector<char> snp_included;
    ValueDefined mean;
};

// Wright's F_ST of label subgroups against the pooled frequency, per SNP,
// restricted to alleles assigned to population k. SNPs with pooled frequency
// in {0,1} are excluded. Undefined when the alleles assigned to k come from
// fewer than two labels.
FstResult fst_vs_labels(const AlleleTensor& data, const ZMapView& z,
                        const std::vector<std::string>& labels, int k);

// Mean Shannon entropy (bits) of the per-copy assignment posterior computed
// from theta and phi, over copies whose fixed MAP assignment is k.
ValueDefined average_entropy(const AlleleTensor& data, const Eigen::MatrixXd& theta,
                             const Eigen::MatrixXd& phi, const ZMapView& z, int k);

// c_i ~ Bernoulli(0.5 theta_{i,k} + 0.1 (1 - theta_{i,k}))
std::vector<std::uint8_t> simulate_phenotype(const Eigen::MatrixXd& theta, int k,
                                             std::uint64_t seed);

// Max over SNPs of the 2 ln Bayes factor comparing the phenotype-split
// beta-binomial model against the pooled one (symmetric Beta(0.1, 0.1)
// prior), restricted to copies assigned to k. A SNP qualifies only if both
// phenotype classes have k-assigned alleles. Undefined for a constant
// phenotype or when no SNP qualifies.
ValueDefined max_log_bf_association(const AlleleTensor& data, const ZMapView& z,
                                    const std::vector<std::uint8_t>& phenotype, int k);

// Mean of max_log_bf_association over phenotypes with seeds
// derive_seed(seed, d), d = 0..draws-1.
ValueDefined association_discrepancy(const AlleleTensor& data, const ZMapView& z,
                                     const Eigen::MatrixXd& theta, int k, std::uint64_t seed,
                                     int draws = 10);

}  // namespace ppcadmix
