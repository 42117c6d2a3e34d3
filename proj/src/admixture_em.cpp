#include "ppcadmix/admixture_em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ppcadmix/rng.hpp"

namespace ppcadmix {

namespace {

// binary alleles of the canonical diploid split, without materializing them
inline int allele_of(std::uint8_t g, int j) { return j == 0 ? (g >= 1) : (g == 2); }

void check_dims(const GenotypeDataset& d, const ModelParams& p) {
    if (p.theta.rows() != d.n || p.theta.cols() != p.K || p.phi.rows() != d.L ||
        p.phi.cols() != p.K)
        throw std::invalid_argument("model parameter dimensions do not match dataset");
}

std::string fmt10(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

ModelParams init_params(const GenotypeDataset& dataset, int K, std::uint64_t seed) {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (K > 255) throw std::invalid_argument("K > 255 not supported");
    Rng rng(seed);
    ModelParams p;
    p.K = K;
    std::vector<double> maf = empirical_maf(dataset);
    p.phi.resize(dataset.L, K);
    for (int l = 0; l < dataset.L; ++l)
        for (int k = 0; k < K; ++k)
            p.phi(l, k) = std::clamp(maf[l] + rng.uniform(0.0, 0.1), 0.05, 0.95);
    p.theta.resize(dataset.n, K);
    for (int i = 0; i < dataset.n; ++i) {
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            p.theta(i, k) = rng.uniform();
            total += p.theta(i, k);
        }
        for (int k = 0; k < K; ++k) p.theta(i, k) /= total;
    }
    return p;
}

AssignmentPosterior e_step(const GenotypeDataset& dataset, const ModelParams& params) {
    check_dims(dataset, params);
    const int n = dataset.n, L = dataset.L, K = params.K;
    AssignmentPosterior post;
    post.n = n;
    post.L = L;
    post.K = K;
    post.q.resize(static_cast<std::size_t>(n) * L * 2 * K);
    post.z_map.resize(static_cast<std::size_t>(n) * L * 2);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < L; ++l) {
            std::uint8_t g = dataset.at(i, l);
            for (int j = 0; j < 2; ++j) {
                int x = allele_of(g, j);
                std::size_t base = ((static_cast<std::size_t>(i) * L + l) * 2 + j) * K;
                double s = 0.0;
                for (int k = 0; k < K; ++k) {
                    double w = params.theta(i, k) *
                               (x ? params.phi(l, k) : 1.0 - params.phi(l, k));
                    post.q[base + k] = w;
                    s += w;
                }
                if (!(s > 0.0))
                    throw std::logic_error("E-step invariant violation: zero normalizer");
                int best = 0;
                for (int k = 0; k < K; ++k) {
                    post.q[base + k] /= s;
                    if (post.q[base + k] > post.q[base + best]) best = k;
                }
                post.z_map[(static_cast<std::size_t>(i) * L + l) * 2 + j] =
                    static_cast<std::uint8_t>(best);
            }
        }
    }
    return post;
}

ModelParams m_step(const GenotypeDataset& dataset, const AssignmentPosterior& post,
                   const FitConfig& config, int* degenerate_events) {
    const int n = dataset.n, L = dataset.L, K = post.K;
    ModelParams p;
    p.K = K;
    p.theta = Eigen::MatrixXd::Zero(n, K);
    p.phi.resize(L, K);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < L; ++l)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < K; ++k) p.theta(i, k) += post.q_at(i, l, j, k);
        for (int k = 0; k < K; ++k) p.theta(i, k) /= 2.0 * L;
    }

    std::vector<int> degen(static_cast<std::size_t>(L), 0);
#pragma omp parallel for schedule(static)
    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n; ++i) {
                std::uint8_t g = dataset.at(i, l);
                for (int j = 0; j < 2; ++j) {
                    double qk = post.q_at(i, l, j, k);
                    num += qk * allele_of(g, j);
                    den += qk;
                }
            }
            if (den > 0.0) {
                p.phi(l, k) = std::clamp(num / den, config.update_clamp_lo,
                                         config.update_clamp_hi);
            } else {
                p.phi(l, k) = 0.5;
                ++degen[l];
            }
        }
    }
    if (degenerate_events)
        *degenerate_events += std::accumulate(degen.begin(), degen.end(), 0);
    return p;
}

double log_likelihood(const GenotypeDataset& dataset, const ModelParams& params) {
    check_dims(dataset, params);
    const int n = dataset.n, L = dataset.L, K = params.K;
    std::vector<double> partial(static_cast<std::size_t>(L), 0.0);
#pragma omp parallel for schedule(static)
    for (int l = 0; l < L; ++l) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            std::uint8_t g = dataset.at(i, l);
            for (int j = 0; j < 2; ++j) {
                int x = allele_of(g, j);
                double s = 0.0;
                for (int k = 0; k < K; ++k)
                    s += params.theta(i, k) *
                         (x ? params.phi(l, k) : 1.0 - params.phi(l, k));
                acc += std::log(s);
            }
        }
        partial[l] = acc;
    }
    // sequential final reduction keeps the result worker-count invariant
    double total = 0.0;
    for (int l = 0; l < L; ++l) total += partial[l];
    return total;
}

FittedModel fit(const GenotypeDataset& dataset, int K, const FitConfig& config) {
    if (config.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    dataset.validate();
    const int n = dataset.n, L = dataset.L;

    FittedModel model;
    model.seed = config.seed;
    model.iterations = config.iterations;
    model.n = n;
    model.L = L;
    model.params = init_params(dataset, K, config.seed);
    model.loglik_trace.reserve(static_cast<std::size_t>(config.iterations) + 1);

    Eigen::MatrixXd theta = model.params.theta;
    Eigen::MatrixXd phi = model.params.phi;
    Eigen::MatrixXd theta_new(n, K), phi_new(L, K);
    std::vector<double> ll_partial(static_cast<std::size_t>(L));
    std::vector<int> degen(static_cast<std::size_t>(L));

    for (int iter = 0; iter < config.iterations; ++iter) {
        // theta update: each row owned by one worker, fixed inner order
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < K; ++k) theta_new(i, k) = 0.0;
            for (int l = 0; l < L; ++l) {
                std::uint8_t g = dataset.at(i, l);
                for (int j = 0; j < 2; ++j) {
                    int x = allele_of(g, j);
                    double s = 0.0;
                    for (int k = 0; k < K; ++k)
                        s += theta(i, k) * (x ? phi(l, k) : 1.0 - phi(l, k));
                    for (int k = 0; k < K; ++k)
                        theta_new(i, k) +=
                            theta(i, k) * (x ? phi(l, k) : 1.0 - phi(l, k)) / s;
                }
            }
            for (int k = 0; k < K; ++k) theta_new(i, k) /= 2.0 * L;
        }

        // phi update + log-likelihood of the pre-update parameters
        std::fill(degen.begin(), degen.end(), 0);
#pragma omp parallel for schedule(static)
        for (int l = 0; l < L; ++l) {
            double ll = 0.0;
            std::vector<double> num(static_cast<std::size_t>(K), 0.0);
            std::vector<double> den(static_cast<std::size_t>(K), 0.0);
            for (int i = 0; i < n; ++i) {
                std::uint8_t g = dataset.at(i, l);
                for (int j = 0; j < 2; ++j) {
                    int x = allele_of(g, j);
                    double s = 0.0;
                    for (int k = 0; k < K; ++k)
                        s += theta(i, k) * (x ? phi(l, k) : 1.0 - phi(l, k));
                    ll += std::log(s);
                    for (int k = 0; k < K; ++k) {
                        double qk = theta(i, k) * (x ? phi(l, k) : 1.0 - phi(l, k)) / s;
                        num[k] += qk * x;
                        den[k] += qk;
                    }
                }
            }
            for (int k = 0; k < K; ++k) {
                if (den[k] > 0.0) {
                    phi_new(l, k) = std::clamp(num[k] / den[k], config.update_clamp_lo,
                                               config.update_clamp_hi);
                } else {
                    phi_new(l, k) = 0.5;
                    ++degen[l];
                }
            }
            ll_partial[l] = ll;
        }

        double ll = 0.0;
        for (int l = 0; l < L; ++l) ll += ll_partial[l];
        model.loglik_trace.push_back(ll);
        model.degenerate_phi_events += std::accumulate(degen.begin(), degen.end(), 0);

        theta.swap(theta_new);
        phi.swap(phi_new);
    }

    model.params.theta = theta;
    model.params.phi = phi;
    model.loglik_trace.push_back(log_likelihood(dataset, model.params));
    model.posterior = e_step(dataset, model.params);
    return model;
}

std::pair<double, std::vector<int>> column_permutation_mae(const Eigen::MatrixXd& a,
                                                           const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("matrices must have identical shape");
    const int K = static_cast<int>(a.cols());
    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    double best_mae = std::numeric_limits<double>::infinity();
    std::vector<int> best_perm = perm;
    do {
        double err = 0.0;
        for (int k = 0; k < K; ++k) err += (a.col(k) - b.col(perm[k])).cwiseAbs().sum();
        double mae = err / (static_cast<double>(a.rows()) * K);
        if (mae < best_mae) {
            best_mae = mae;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {best_mae, best_perm};
}

void save_model(const FittedModel& model, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write_matrix = [&](const Eigen::MatrixXd& m, const std::string& name) {
        std::ofstream out(dir + "/" + name);
        if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (c) out << '\t';
                out << fmt10(m(r, c));
            }
            out << '\n';
        }
    };
    write_matrix(model.params.theta, "theta.tsv");
    write_matrix(model.params.phi, "phi.tsv");

    {
        std::ofstream out(dir + "/zmap.tsv");
        if (!out) throw std::runtime_error("cannot write " + dir + "/zmap.tsv");
        for (int i = 0; i < model.n; ++i) {
            for (int l = 0; l < model.L; ++l) {
                for (int j = 0; j < 2; ++j) {
                    if (l || j) out << '\t';
                    out << static_cast<int>(model.posterior.z_at(i, l, j)) + 1;
                }
            }
            out << '\n';
        }
    }

    {
        std::ofstream out(dir + "/meta.json");
        if (!out) throw std::runtime_error("cannot write " + dir + "/meta.json");
        out << "{\n  \"K\": " << model.params.K << ",\n  \"iterations\": " << model.iterations
            << ",\n  \"seed\": " << model.seed << ",\n  \"degenerate_phi_events\": "
            << model.degenerate_phi_events << ",\n  \"loglik_trace\": [";
        for (std::size_t t = 0; t < model.loglik_trace.size(); ++t) {
            if (t) out << ", ";
            out << fmt10(model.loglik_trace[t]);
        }
        out << "]\n}\n";
    }
}

FittedModel load_model(const std::string& dir) {
    auto read_matrix = [&](const std::string& name) {
        std::ifstream in(dir + "/" + name);
        if (!in) throw std::runtime_error("cannot open " + dir + "/" + name);
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::vector<double> row;
            double v;
            while (ls >> v) row.push_back(v);
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw ParseError("empty matrix file: " + name);
        Eigen::MatrixXd m(rows.size(), rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows[0].size())
                throw ParseError("ragged matrix file: " + name);
            for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
        }
        return m;
    };

    FittedModel model;
    model.params.theta = read_matrix("theta.tsv");
    model.params.phi = read_matrix("phi.tsv");

    std::ifstream meta(dir + "/meta.json");
    if (!meta) throw std::runtime_error("cannot open " + dir + "/meta.json");
    nlohmann::json j = nlohmann::json::parse(meta);
    model.params.K = j.at("K").get<int>();
    model.iterations = j.at("iterations").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.degenerate_phi_events = j.value("degenerate_phi_events", 0);
    model.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();

    model.n = static_cast<int>(model.params.theta.rows());
    model.L = static_cast<int>(model.params.phi.rows());
    if (model.params.theta.cols() != model.params.K || model.params.phi.cols() != model.params.K)
        throw ParseError("model matrices disagree with K in meta.json");

    AssignmentPosterior& post = model.posterior;
    post.n = model.n;
    post.L = model.L;
    post.K = model.params.K;
    post.z_map.resize(static_cast<std::size_t>(model.n) * model.L * 2);
    std::ifstream zin(dir + "/zmap.tsv");
    if (!zin) throw std::runtime_error("cannot open " + dir + "/zmap.tsv");
    for (int i = 0; i < model.n; ++i) {
        std::string line;
        if (!std::getline(zin, line)) throw ParseError("zmap.tsv has too few rows");
        std::istringstream ls(line);
        for (int l = 0; l < model.L; ++l)
            for (int j2 = 0; j2 < 2; ++j2) {
                int z;
                if (!(ls >> z) || z < 1 || z > model.params.K)
                    throw ParseError("invalid zmap entry at row " + std::to_string(i + 1));
                post.z_map[(static_cast<std::size_t>(i) * model.L + l) * 2 + j2] =
                    static_cast<std::uint8_t>(z - 1);
            }
    }
    return model;
}

}  // namespace ppcadmix
