#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppcadmix/admixture_em.hpp"
#include "ppcadmix/discrepancies.hpp"
#include "ppcadmix/genotype_data.hpp"

namespace ppcadmix {

enum class Discrepancy { Ibs, MutualInfo, Fst, Entropy, Association };

const std::vector<std::string>& discrepancy_names();
std::string discrepancy_name(Discrepancy d);
Discrepancy parse_discrepancy(const std::string& name);  // lists valid names on error

struct PpcConfig {
    Discrepancy discrepancy = Discrepancy::Ibs;
    int R = 100;  // 30 is conventional for the similarity check
    std::uint64_t seed = 0;
    std::vector<int> lags;  // MI only; defaults to 1..30 when empty
    int min_shared = 500;
    int max_snps = 10000;
    int draws = 10;
    bool per_lag_bf = false;
};

struct BfSummary {
    double two_log_bf = 0.0;
    int stars = 0;
    bool low_confidence = false;
};

struct PpcCell {
    int k;    // 0-based population
    int lag;  // 0 for non-MI discrepancies
};

struct PpcResult {
    std::string name;
    int K = 0;
    int R = 0;
    std::vector<int> lags;  // empty for non-MI
    std::vector<PpcCell> cells;
    std::vector<ValueDefined> observed;                  // per cell
    std::vector<std::vector<ValueDefined>> replicated;   // R x cells
    std::vector<ValueDefined> rep_mean, rep_sd;          // per cell
    std::vector<ValueDefined> z;                         // per cell
    BfSummary pooled;                                    // over all defined z's
    std::vector<std::pair<int, BfSummary>> per_lag;      // when per_lag_bf
    bool inconclusive = false;  // every population undefined
    std::uint64_t seed = 0;
};

// Streams R replicates through the chosen discrepancy, holding the fitted
// latent structure fixed; pure function of (fitted, observed, cfg).
PpcResult run_ppc(const FittedModel& fitted, const GenotypeDataset& observed,
                  const PpcConfig& cfg);

// z_k = (observed_k - replicate mean_k) / sample sd_k (floor 1e-12).
// Defined where the observed value is defined and >= 2 replicates are defined.
std::vector<ValueDefined> z_scores(const std::vector<ValueDefined>& observed,
                                   const std::vector<std::vector<ValueDefined>>& replicated,
                                   std::vector<ValueDefined>* mean_out = nullptr,
                                   std::vector<ValueDefined>* sd_out = nullptr);

// 2 * (sum ln N(z; mle mean, mle sd) - sum ln N(z; 0, 1)), MLE (1/K) variance,
// sd floored at 1; stars at 2 log BF > 2 / 6 / 10.
BfSummary deviation_bayes_factor(const std::vector<double>& z);

enum class ReportFormat { Tsv, Json };

// Writes per-PPC point files, summary.json, and report.txt under out_dir.
void render_report(const std::vector<PpcResult>& results, const std::string& out_dir,
                   ReportFormat format = ReportFormat::Tsv);

}  // namespace ppcadmix
