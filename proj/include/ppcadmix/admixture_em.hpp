#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ppcadmix/genotype_data.hpp"

namespace ppcadmix {

struct ModelParams {
    Eigen::MatrixXd theta;  // n x K, rows on the simplex
    Eigen::MatrixXd phi;    // L x K, frequencies in (0,1)
    int K = 1;
    double alpha = 1.0;
    double gamma = 1.0;
};

struct AssignmentPosterior {
    int n = 0, L = 0, K = 1;
    std::vector<double> q;             // n x L x 2 x K
    std::vector<std::uint8_t> z_map;   // n x L x 2, 0-based, argmax with lowest-index ties

    double q_at(int i, int l, int j, int k) const {
        return q[((static_cast<std::size_t>(i) * L + l) * 2 + j) * K + k];
    }
    std::uint8_t z_at(int i, int l, int j) const {
        return z_map[(static_cast<std::size_t>(i) * L + l) * 2 + j];
    }
};

struct FitConfig {
    int iterations = 1000;
    std::uint64_t seed = 0;
    double init_clamp_lo = 0.05;
    double init_clamp_hi = 0.95;
    double update_clamp_lo = 1e-6;
    double update_clamp_hi = 1.0 - 1e-6;
};

struct FittedModel {
    ModelParams params;
    AssignmentPosterior posterior;
    std::vector<double> loglik_trace;  // entry 0 = init, then one per iteration
    std::uint64_t seed = 0;
    int iterations = 0;
    int n = 0, L = 0;
    // SNP/population cells whose responsibility mass hit zero in an M-step
    // (phi reset to 0.5 there)
    int degenerate_phi_events = 0;
};

// phi_{l,k} = clamp(maf_l + U(0,0.1), 0.05, 0.95); theta rows = normalized
// independent U(0,1) draws.
ModelParams init_params(const GenotypeDataset& dataset, int K, std::uint64_t seed);

// q(z=k | x=1) ∝ theta_{i,k} phi_{l,k};  q(z=k | x=0) ∝ theta_{i,k} (1 - phi_{l,k})
AssignmentPosterior e_step(const GenotypeDataset& dataset, const ModelParams& params);

// theta_{i,k} = (1/2L) sum_{l,j} q;  phi_{l,k} = responsibility-weighted
// minor-allele frequency, clamped to (1e-6, 1-1e-6).
ModelParams m_step(const GenotypeDataset& dataset, const AssignmentPosterior& post,
                   const FitConfig& config = FitConfig{}, int* degenerate_events = nullptr);

// sum_{i,l,j} log sum_k theta_{i,k} phi_{l,k}^x (1-phi_{l,k})^{1-x}
double log_likelihood(const GenotypeDataset& dataset, const ModelParams& params);

// init_params followed by exactly config.iterations E/M alternations.
// Deterministic per seed, independent of worker count.
FittedModel fit(const GenotypeDataset& dataset, int K, const FitConfig& config);

// Mean absolute error between columns of a and b under the best column
// permutation (brute force over K!, fine for small K). Returns (mae, perm)
// where perm[k] is the column of b matched to column k of a.
std::pair<double, std::vector<int>> column_permutation_mae(const Eigen::MatrixXd& a,
                                                           const Eigen::MatrixXd& b);

// Directory with theta.tsv, phi.tsv, zmap.tsv, meta.json (10 significant digits).
void save_model(const FittedModel& model, const std::string& dir);
FittedModel load_model(const std::string& dir);  // posterior.q left empty

}  // namespace ppcadmix
