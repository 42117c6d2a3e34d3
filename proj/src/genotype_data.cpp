#include "ppcadmix/genotype_data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ppcadmix/rng.hpp"

namespace ppcadmix {

AllelePair split_diploid(int genotype) {
    switch (genotype) {
        case 0: return {0, 0};
        case 1: return {1, 0};
        case 2: return {1, 1};
        default:
            throw std::invalid_argument("genotype value " + std::to_string(genotype) +
                                        " not in {0,1,2}");
    }
}

void GenotypeDataset::validate() const {
    if (n < 1 || L < 1) throw std::invalid_argument("dataset requires n >= 1 and L >= 1");
    if (genotypes.size() != static_cast<std::size_t>(n) * L)
        throw std::invalid_argument("genotype matrix size does not match n x L");
    for (std::size_t idx = 0; idx < genotypes.size(); ++idx) {
        if (genotypes[idx] > 2) {
            int i = static_cast<int>(idx) / L;
            int l = static_cast<int>(idx) % L;
            throw ParseError("genotype value out of range at row " + std::to_string(i + 1) +
                             ", column " + std::to_string(l + 1));
        }
    }
    if (!labels.empty() && labels.size() != static_cast<std::size_t>(n))
        throw AlignmentError("label count " + std::to_string(labels.size()) +
                             " does not match n = " + std::to_string(n));
    if (snp_order.size() != static_cast<std::size_t>(L))
        throw std::invalid_argument("snp_order length does not match L");
    std::unordered_set<std::string> seen;
    for (const auto& id : snp_order) {
        if (!seen.insert(id).second)
            throw std::invalid_argument("duplicate SNP identifier: " + id);
    }
}

AlleleTensor AlleleTensor::from_dataset(const GenotypeDataset& d) {
    AlleleTensor t;
    t.n = d.n;
    t.L = d.L;
    t.alleles.resize(static_cast<std::size_t>(d.n) * d.L * 2);
    for (int i = 0; i < d.n; ++i) {
        for (int l = 0; l < d.L; ++l) {
            AllelePair p = split_diploid(d.at(i, l));
            t.at(i, l, 0) = p.a1;
            t.at(i, l, 1) = p.a2;
        }
    }
    return t;
}

namespace {

std::vector<std::string> default_snp_ids(int L) {
    std::vector<std::string> ids(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) ids[l] = "snp" + std::to_string(l + 1);
    return ids;
}

}  // namespace

PhiSpec PhiSpec::explicit_matrix(Eigen::MatrixXd m) {
    PhiSpec s;
    s.kind_ = Kind::Explicit;
    s.matrix_ = std::move(m);
    return s;
}

PhiSpec PhiSpec::centered(std::vector<double> centers, double width) {
    PhiSpec s;
    s.kind_ = Kind::Centered;
    s.centers_ = std::move(centers);
    s.width_ = width;
    return s;
}

PhiSpec PhiSpec::uniform(double lo, double hi) {
    PhiSpec s;
    s.kind_ = Kind::Uniform;
    s.lo_ = lo;
    s.hi_ = hi;
    return s;
}

Eigen::MatrixXd PhiSpec::generate(int L, int K, Rng& rng) const {
    constexpr double kEps = 1e-9;
    Eigen::MatrixXd phi(L, K);
    switch (kind_) {
        case Kind::Explicit:
            if (matrix_.rows() != L || matrix_.cols() != K)
                throw std::invalid_argument("explicit phi matrix dimensions do not match L x K");
            phi = matrix_;
            break;
        case Kind::Centered: {
            if (static_cast<int>(centers_.size()) != K)
                throw std::invalid_argument("phi centers count does not match K");
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < K; ++k) {
                    double v = rng.uniform(centers_[k] - width_, centers_[k] + width_);
                    phi(l, k) = std::clamp(v, kEps, 1.0 - kEps);
                }
            break;
        }
        case Kind::Uniform:
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < K; ++k) phi(l, k) = rng.uniform(lo_, hi_);
            break;
    }
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k)
            if (phi(l, k) <= 0.0 || phi(l, k) >= 1.0)
                throw std::invalid_argument("simulation requires phi strictly inside (0,1)");
    return phi;
}

SimulatedDataset simulate_dataset(int n, int L, int K, double alpha, const PhiSpec& phi_spec,
                                  std::uint64_t seed) {
    if (n < 1 || L < 1 || K < 1) throw std::invalid_argument("simulate requires n, L, K >= 1");
    if (K > 255) throw std::invalid_argument("K > 255 not supported");
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");

    Rng rng(seed);
    SimulatedDataset out;
    TrueParams& truth = out.truth;
    truth.phi_true = phi_spec.generate(L, K, rng);
    truth.theta_true.resize(n, K);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row = rng.dirichlet(alpha, K);
        for (int k = 0; k < K; ++k) truth.theta_true(i, k) = row[k];
    }

    GenotypeDataset& d = out.dataset;
    d.n = n;
    d.L = L;
    d.genotypes.resize(static_cast<std::size_t>(n) * L);
    d.snp_order = default_snp_ids(L);
    truth.z_true.resize(static_cast<std::size_t>(n) * L * 2);

    std::vector<double> theta_row(static_cast<std::size_t>(K));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < K; ++k) theta_row[k] = truth.theta_true(i, k);
        for (int l = 0; l < L; ++l) {
            std::uint8_t z[2], x[2];
            for (int j = 0; j < 2; ++j) {
                z[j] = static_cast<std::uint8_t>(rng.categorical(theta_row.data(), K));
                x[j] = rng.bernoulli(truth.phi_true(l, z[j])) ? 1 : 0;
            }
            // heterozygotes are stored canonically as (1,0); swap z with x so
            // z_true stays paired with the canonical allele copies
            if (x[0] == 0 && x[1] == 1) {
                std::swap(x[0], x[1]);
                std::swap(z[0], z[1]);
            }
            d.genotypes[static_cast<std::size_t>(i) * L + l] =
                static_cast<std::uint8_t>(x[0] + x[1]);
            std::size_t base = (static_cast<std::size_t>(i) * L + l) * 2;
            truth.z_true[base] = z[0];
            truth.z_true[base + 1] = z[1];
        }
    }

    d.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (truth.theta_true(i, k) > truth.theta_true(i, best)) best = k;
        d.labels[i] = "pop" + std::to_string(best + 1);
    }
    return out;
}

GenotypeDataset inject_ld(const GenotypeDataset& dataset, int block_length,
                          std::uint64_t /*seed*/) {
    if (block_length < 2) throw std::invalid_argument("block_length must be >= 2");
    if (block_length > dataset.L)
        throw std::invalid_argument("block_length exceeds SNP count");
    GenotypeDataset out = dataset;
    for (int i = 0; i < out.n; ++i) {
        for (int head = 0; head < out.L; head += block_length) {
            std::uint8_t v = out.at(i, head);
            int end = std::min(head + block_length, out.L);
            for (int l = head + 1; l < end; ++l)
                out.genotypes[static_cast<std::size_t>(i) * out.L + l] = v;
        }
    }
    return out;
}

std::vector<double> empirical_maf(const GenotypeDataset& dataset) {
    std::vector<double> maf(static_cast<std::size_t>(dataset.L), 0.0);
    for (int i = 0; i < dataset.n; ++i)
        for (int l = 0; l < dataset.L; ++l) maf[l] += dataset.at(i, l);
    for (int l = 0; l < dataset.L; ++l) maf[l] /= 2.0 * dataset.n;
    return maf;
}

GenotypeDataset load_dataset(const std::string& genotype_path,
                             const std::optional<std::string>& label_path) {
    std::ifstream in(genotype_path);
    if (!in) throw std::runtime_error("cannot open genotype file: " + genotype_path);

    GenotypeDataset d;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty genotype file: " + genotype_path);
    {
        std::istringstream hs(line);
        if (!(hs >> d.n >> d.L) || d.n < 1 || d.L < 1)
            throw ParseError("malformed header (expected `n L`): " + genotype_path);
        std::string extra;
        if (hs >> extra) throw ParseError("trailing content in header: " + genotype_path);
    }
    d.genotypes.resize(static_cast<std::size_t>(d.n) * d.L);
    for (int i = 0; i < d.n; ++i) {
        if (!std::getline(in, line))
            throw ParseError("expected " + std::to_string(d.n) + " genotype rows, got " +
                             std::to_string(i));
        std::istringstream ls(line);
        for (int l = 0; l < d.L; ++l) {
            std::string tok;
            if (!(ls >> tok))
                throw ParseError("row " + std::to_string(i + 1) + " has fewer than " +
                                 std::to_string(d.L) + " values");
            if (tok != "0" && tok != "1" && tok != "2")
                throw ParseError("invalid genotype value '" + tok + "' at row " +
                                 std::to_string(i + 1) + ", column " + std::to_string(l + 1));
            d.genotypes[static_cast<std::size_t>(i) * d.L + l] =
                static_cast<std::uint8_t>(tok[0] - '0');
        }
        std::string extra;
        if (ls >> extra)
            throw ParseError("row " + std::to_string(i + 1) + " has more than " +
                             std::to_string(d.L) + " values");
    }
    d.snp_order = default_snp_ids(d.L);

    if (label_path) {
        std::ifstream lin(*label_path);
        if (!lin) throw std::runtime_error("cannot open label file: " + *label_path);
        d.labels.assign(static_cast<std::size_t>(d.n), std::string());
        std::vector<char> seen(static_cast<std::size_t>(d.n), 0);
        int count = 0;
        while (std::getline(lin, line)) {
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw ParseError("label line missing tab separator: '" + line + "'");
            int idx;
            try {
                idx = std::stoi(line.substr(0, tab));
            } catch (const std::exception&) {
                throw ParseError("invalid individual index in label line: '" + line + "'");
            }
            ++count;
            if (idx < 0 || idx >= d.n)
                throw AlignmentError("label index " + std::to_string(idx) +
                                     " outside individual range 0.." + std::to_string(d.n - 1));
            if (seen[idx])
                throw AlignmentError("duplicate label for individual " + std::to_string(idx));
            seen[idx] = 1;
            d.labels[idx] = line.substr(tab + 1);
        }
        if (count != d.n)
            throw AlignmentError("label file has " + std::to_string(count) +
                                 " labels for " + std::to_string(d.n) + " individuals");
    }
    d.validate();
    return d;
}

void save_genotypes(const GenotypeDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write genotype file: " + path);
    out << dataset.n << ' ' << dataset.L << '\n';
    for (int i = 0; i < dataset.n; ++i) {
        for (int l = 0; l < dataset.L; ++l) {
            if (l) out << ' ';
            out << static_cast<int>(dataset.at(i, l));
        }
        out << '\n';
    }
}

void save_labels(const GenotypeDataset& dataset, const std::string& path) {
    if (!dataset.has_labels()) throw std::runtime_error("dataset has no labels to save");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write label file: " + path);
    for (int i = 0; i < dataset.n; ++i) out << i << '\t' << dataset.labels[i] << '\n';
}

}  // namespace ppcadmix
