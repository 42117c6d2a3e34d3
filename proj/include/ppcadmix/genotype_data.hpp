#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppcadmix {

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class AlignmentError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// One diploid site split into its two binary allele copies.
// Heterozygotes are canonically (a1=1, a2=0).
struct AllelePair {
    std::uint8_t a1;
    std::uint8_t a2;
};

AllelePair split_diploid(int genotype);

// n individuals x L SNPs of minor-allele dosages in {0,1,2}, with optional
// per-individual reported-ancestry labels. Immutable after construction.
struct GenotypeDataset {
    int n = 0;
    int L = 0;
    std::vector<std::uint8_t> genotypes;  // row-major n x L
    std::vector<std::string> labels;      // empty or size n
    std::vector<std::string> snp_order;   // size L, unique ids

    std::uint8_t at(int i, int l) const {
        return genotypes[static_cast<std::size_t>(i) * L + l];
    }
    bool has_labels() const { return !labels.empty(); }

    void validate() const;
};

// The per-copy binary allele view a discrepancy consumes. Observed data and
// replicate draws both reach discrepancies through the canonical diploid
// split (heterozygote as copy pair (1, 0)).
struct AlleleTensor {
    int n = 0;
    int L = 0;
    std::vector<std::uint8_t> alleles;  // n x L x 2

    std::uint8_t at(int i, int l, int j) const {
        return alleles[(static_cast<std::size_t>(i) * L + l) * 2 + j];
    }
    std::uint8_t& at(int i, int l, int j) {
        return alleles[(static_cast<std::size_t>(i) * L + l) * 2 + j];
    }

    static AlleleTensor from_dataset(const GenotypeDataset& d);
};

// Ground truth kept alongside a simulated dataset.
struct TrueParams {
    Eigen::MatrixXd theta_true;        // n x K, simplex rows
    Eigen::MatrixXd phi_true;          // L x K, in (0,1)
    std::vector<std::uint8_t> z_true;  // n x L x 2, 0-based population indices

    std::uint8_t z_at(int i, int l, int j, int L) const {
        return z_true[(static_cast<std::size_t>(i) * L + l) * 2 + j];
    }
};

// How to produce the L x K allele-frequency matrix for simulation.
struct PhiSpec {
    static PhiSpec explicit_matrix(Eigen::MatrixXd m);
    // phi_{l,k} ~ U(center_k - width, center_k + width), clipped to (0,1)
    static PhiSpec centered(std::vector<double> centers, double width);
    static PhiSpec uniform(double lo, double hi);

    Eigen::MatrixXd generate(int L, int K, class Rng& rng) const;

  private:
    enum class Kind { Explicit, Centered, Uniform } kind_ = Kind::Uniform;
    Eigen::MatrixXd matrix_;
    std::vector<double> centers_;
    double width_ = 0.0;
    double lo_ = 0.05, hi_ = 0.95;
};

struct SimulatedDataset {
    GenotypeDataset dataset;
    TrueParams truth;
};

// Generative draw: theta_i ~ Dir_K(alpha), z ~ Cat(theta_i) per allele copy,
// x ~ Bernoulli(phi_{l,z}). Labels are set to the argmax-theta population.
SimulatedDataset simulate_dataset(int n, int L, int K, double alpha, const PhiSpec& phi_spec,
                                  std::uint64_t seed);

// Test fixture for the LD PPC: within consecutive blocks, every SNP becomes a
// copy of the block head, creating maximal local autocorrelation.
// Copies each block head across its block; the construction is deterministic,
// so the seed is accepted only for interface parity with the other fixtures.
GenotypeDataset inject_ld(const GenotypeDataset& dataset, int block_length,
                          std::uint64_t seed = 0);

// Per-SNP minor allele frequency, (sum_i g_{i,l}) / (2n).
std::vector<double> empirical_maf(const GenotypeDataset& dataset);

GenotypeDataset load_dataset(const std::string& genotype_path,
                             const std::optional<std::string>& label_path = std::nullopt);
void save_genotypes(const GenotypeDataset& dataset, const std::string& path);
void save_labels(const GenotypeDataset& dataset, const std::string& path);

}  // namespace ppcadmix
