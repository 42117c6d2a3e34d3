#include "ppcadmix/discrepancies.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ppcadmix/rng.hpp"

namespace ppcadmix {

PairMatch enumerate_pair_comparisons(std::array<int, 2> z_a, std::array<int, 2> z_b, int k) {
    int a_idx[2], b_idx[2];
    int ca = 0, cb = 0;
    for (int j = 0; j < 2; ++j) {
        if (z_a[j] == k) a_idx[ca++] = j;
        if (z_b[j] == k) b_idx[cb++] = j;
    }
    PairMatch m;
    if (ca == 0 || cb == 0) {
        m.scenario = MatchScenario::NoMatch;
        return m;
    }
    if (ca == 1 && cb == 1)
        m.scenario = MatchScenario::Single;
    else if (ca == 2 && cb == 2)
        m.scenario = MatchScenario::DoubleDouble;
    else
        m.scenario = MatchScenario::SingleDouble;
    for (int u = 0; u < ca; ++u)
        for (int v = 0; v < cb; ++v) m.comparisons[m.count++] = {a_idx[u], b_idx[v]};
    return m;
}

ValueDefined ibs_similarity(const AlleleTensor& data, const ZMapView& z, int k,
                            int min_shared) {
    const int n = data.n, L = data.L;
    std::vector<double> pair_sum(static_cast<std::size_t>(n), 0.0);
    std::vector<long> pair_count(static_cast<std::size_t>(n), 0);

#pragma omp parallel for schedule(static)
    for (int i1 = 0; i1 < n; ++i1) {
        double local_sum = 0.0;
        long local_count = 0;
        for (int i2 = i1 + 1; i2 < n; ++i2) {
            long total = 0, equal = 0;
            for (int l = 0; l < L; ++l) {
                PairMatch m = enumerate_pair_comparisons({z.at(i1, l, 0), z.at(i1, l, 1)},
                                                         {z.at(i2, l, 0), z.at(i2, l, 1)}, k);
                for (int c = 0; c < m.count; ++c) {
                    ++total;
                    equal += data.at(i1, l, m.comparisons[c].first) ==
                             data.at(i2, l, m.comparisons[c].second);
                }
            }
            if (total >= min_shared) {
                local_sum += static_cast<double>(equal) / static_cast<double>(total);
                ++local_count;
            }
        }
        pair_sum[i1] = local_sum;
        pair_count[i1] = local_count;
    }

    double sum = 0.0;
    long count = 0;
    for (int i1 = 0; i1 < n; ++i1) {
        sum += pair_sum[i1];
        count += pair_count[i1];
    }
    if (count == 0) return {};
    return {sum / static_cast<double>(count), true};
}

namespace {

// plug-in MI in bits of an empirical 2x2 joint, with 0 log 0 = 0
double joint_mi_bits(const long counts[2][2]) {
    double total = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) total += counts[a][b];
    double pa[2] = {(counts[0][0] + counts[0][1]) / total,
                    (counts[1][0] + counts[1][1]) / total};
    double pb[2] = {(counts[0][0] + counts[1][0]) / total,
                    (counts[0][1] + counts[1][1]) / total};
    double mi = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            if (counts[a][b] == 0) continue;
            double pab = counts[a][b] / total;
            mi += pab * std::log2(pab / (pa[a] * pb[b]));
        }
    return std::max(mi, 0.0);
}

}  // namespace

ValueDefined mutual_info_ld(const AlleleTensor& data, const ZMapView& z, int k, int lag,
                            int max_snps) {
    if (lag < 1) throw std::invalid_argument("lag must be >= 1");
    const int window = std::min(data.L, max_snps);
    if (lag >= window) return {};

    const int npairs = window - lag;
    std::vector<double> mi_per_pair(static_cast<std::size_t>(npairs), 0.0);
    std::vector<char> pair_ok(static_cast<std::size_t>(npairs), 0);

#pragma omp parallel for schedule(static)
    for (int a = 0; a < npairs; ++a) {
        const int b = a + lag;
        long counts[2][2] = {{0, 0}, {0, 0}};
        long total = 0;
        for (int i = 0; i < data.n; ++i) {
            PairMatch m = enumerate_pair_comparisons({z.at(i, a, 0), z.at(i, a, 1)},
                                                     {z.at(i, b, 0), z.at(i, b, 1)}, k);
            for (int c = 0; c < m.count; ++c) {
                ++counts[data.at(i, a, m.comparisons[c].first)]
                        [data.at(i, b, m.comparisons[c].second)];
                ++total;
            }
        }
        if (total >= 2) {
            mi_per_pair[a] = joint_mi_bits(counts);
            pair_ok[a] = 1;
        }
    }

    double sum = 0.0;
    long count = 0;
    for (int a = 0; a < npairs; ++a)
        if (pair_ok[a]) {
            sum += mi_per_pair[a];
            ++count;
        }
    if (count == 0) return {};
    return {sum / static_cast<double>(count), true};
}

FstResult fst_vs_labels(const AlleleTensor& data, const ZMapView& z,
                        const std::vector<std::string>& labels, int k) {
    if (labels.size() != static_cast<std::size_t>(data.n))
        throw std::invalid_argument("F_ST requires one label per individual");
    std::unordered_map<std::string, int> code;
    std::vector<int> label_of(static_cast<std::size_t>(data.n));
    for (int i = 0; i < data.n; ++i) {
        auto [it, _] = code.try_emplace(labels[i], static_cast<int>(code.size()));
        label_of[i] = it->second;
    }
    const int G = static_cast<int>(code.size());

    FstResult res;
    res.per_snp.assign(static_cast<std::size_t>(data.L), 0.0);
    res.snp_included.assign(static_cast<std::size_t>(data.L), 0);

    std::vector<char> label_touches_k(static_cast<std::size_t>(G), 0);
    std::vector<long> ng(static_cast<std::size_t>(G));
    std::vector<long> sg(static_cast<std::size_t>(G));
    for (int l = 0; l < data.L; ++l) {
        std::fill(ng.begin(), ng.end(), 0);
        std::fill(sg.begin(), sg.end(), 0);
        long N = 0, S = 0;
        for (int i = 0; i < data.n; ++i)
            for (int j = 0; j < 2; ++j)
                if (z.at(i, l, j) == k) {
                    int g = label_of[i];
                    ++ng[g];
                    sg[g] += data.at(i, l, j);
                    ++N;
                    S += data.at(i, l, j);
                }
        for (int g = 0; g < G; ++g)
            if (ng[g] > 0) label_touches_k[g] = 1;
        if (N == 0) continue;
        double pbar = static_cast<double>(S) / static_cast<double>(N);
        if (pbar <= 0.0 || pbar >= 1.0) continue;  // zero denominator
        int Rk = 0;
        double num = 0.0;
        for (int g = 0; g < G; ++g) {
            if (ng[g] == 0) continue;
            ++Rk;
            double pg = static_cast<double>(sg[g]) / static_cast<double>(ng[g]);
            num += (pbar - pg) * (pbar - pg);
        }
        res.per_snp[l] = (num / Rk) / (pbar * (1.0 - pbar));
        res.snp_included[l] = 1;
    }

    int labels_in_k = 0;
    for (int g = 0; g < G; ++g) labels_in_k += label_touches_k[g];
    if (labels_in_k < 2) return res;  // mean stays undefined

    double sum = 0.0;
    long count = 0;
    for (int l = 0; l < data.L; ++l)
        if (res.snp_included[l]) {
            sum += res.per_snp[l];
            ++count;
        }
    if (count == 0) return res;
    res.mean = {sum / static_cast<double>(count), true};
    return res;
}

ValueDefined average_entropy(const AlleleTensor& data, const Eigen::MatrixXd& theta,
                             const Eigen::MatrixXd& phi, const ZMapView& z, int k) {
    const int n = data.n, L = data.L;
    const int K = static_cast<int>(theta.cols());
    std::vector<double> row_sum(static_cast<std::size_t>(n), 0.0);
    std::vector<long> row_count(static_cast<std::size_t>(n), 0);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        long cnt = 0;
        std::vector<double> w(static_cast<std::size_t>(K));
        for (int l = 0; l < L; ++l)
            for (int j = 0; j < 2; ++j) {
                if (z.at(i, l, j) != k) continue;
                int x = data.at(i, l, j);
                double s = 0.0;
                for (int kk = 0; kk < K; ++kk) {
                    w[kk] = theta(i, kk) * (x ? phi(l, kk) : 1.0 - phi(l, kk));
                    s += w[kk];
                }
                double h = 0.0;
                for (int kk = 0; kk < K; ++kk) {
                    double p = w[kk] / s;
                    if (p > 0.0) h -= p * std::log2(p);
                }
                acc += h;
                ++cnt;
            }
        row_sum[i] = acc;
        row_count[i] = cnt;
    }

    double sum = 0.0;
    long count = 0;
    for (int i = 0; i < n; ++i) {
        sum += row_sum[i];
        count += row_count[i];
    }
    if (count == 0) return {};
    return {sum / static_cast<double>(count), true};
}

std::vector<std::uint8_t> simulate_phenotype(const Eigen::MatrixXd& theta, int k,
                                             std::uint64_t seed) {
    Rng rng(seed);
    const int n = static_cast<int>(theta.rows());
    std::vector<std::uint8_t> c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        c[i] = rng.bernoulli(0.5 * theta(i, k) + 0.1 * (1.0 - theta(i, k))) ? 1 : 0;
    return c;
}

namespace {

constexpr double kBetaSmooth = 0.1;

double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// log marginal likelihood of a specific binary allele sequence with y ones
// out of m, under Beta(0.1, 0.1)
double log_beta_binomial_seq(long y, long m) {
    return lbeta(y + kBetaSmooth, m - y + kBetaSmooth) - lbeta(kBetaSmooth, kBetaSmooth);
}

}  // namespace

ValueDefined max_log_bf_association(const AlleleTensor& data, const ZMapView& z,
                                    const std::vector<std::uint8_t>& phenotype, int k) {
    if (phenotype.size() != static_cast<std::size_t>(data.n))
        throw std::invalid_argument("phenotype length must equal n");
    bool any0 = false, any1 = false;
    for (auto c : phenotype) (c ? any1 : any0) = true;
    if (!any0 || !any1) return {};  // constant phenotype

    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (int l = 0; l < data.L; ++l) {
        long y[2] = {0, 0}, m[2] = {0, 0};
        for (int i = 0; i < data.n; ++i) {
            int c = phenotype[i];
            for (int j = 0; j < 2; ++j)
                if (z.at(i, l, j) == k) {
                    ++m[c];
                    y[c] += data.at(i, l, j);
                }
        }
        if (m[0] == 0 || m[1] == 0) continue;
        double split = log_beta_binomial_seq(y[0], m[0]) + log_beta_binomial_seq(y[1], m[1]);
        double pooled = log_beta_binomial_seq(y[0] + y[1], m[0] + m[1]);
        double two_ln_bf = 2.0 * (split - pooled);
        if (two_ln_bf > best) best = two_ln_bf;
        found = true;
    }
    if (!found) return {};
    return {best, true};
}

ValueDefined association_discrepancy(const AlleleTensor& data, const ZMapView& z,
                                     const Eigen::MatrixXd& theta, int k, std::uint64_t seed,
                                     int draws) {
    if (draws < 1) throw std::invalid_argument("draws must be >= 1");
    double sum = 0.0;
    for (int d = 0; d < draws; ++d) {
        auto phen = simulate_phenotype(theta, k, derive_seed(seed, d));
        ValueDefined v = max_log_bf_association(data, z, phen, k);
        if (!v.defined) return {};
        sum += v.value;
    }
    return {sum / draws, true};
}

}  // namespace ppcadmix
