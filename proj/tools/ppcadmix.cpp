// ppcadmix: simulate, fit, replicate, ppc, report.
// All randomness flows from --seed; sub-streams are derived with a fixed hash
// so reruns (at any worker count) are byte-identical apart from config.json
// timestamps.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ppcadmix/admixture_em.hpp"
#include "ppcadmix/genotype_data.hpp"
#include "ppcadmix/ppc_engine.hpp"
#include "ppcadmix/replicator.hpp"
#include "ppcadmix/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppcadmix;

namespace {

constexpr const char* kVersion = "0.1.0";

void prepare_out_dir(const std::string& dir) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw std::runtime_error(dir + " exists and is not a directory");
        if (!fs::is_empty(dir))
            throw std::runtime_error("output directory " + dir +
                                     " is not empty; use a fresh directory per run");
    } else {
        fs::create_directories(dir);
    }
}

std::string timestamp_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_config(const std::string& dir, const std::string& command, json params) {
    params["command"] = command;
    params["provenance"] = {{"tool", "ppcadmix"}, {"version", kVersion},
                            {"timestamp", timestamp_utc()}};
    std::ofstream out(dir + "/config.json");
    if (!out) throw std::runtime_error("cannot write " + dir + "/config.json");
    out << params.dump(2) << '\n';
}

void apply_workers(int workers) {
    if (workers == 0) {
        if (const char* env = std::getenv("PPC_ADMIX_WORKERS")) workers = std::atoi(env);
    }
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

std::vector<int> parse_lags(const std::string& spec) {
    std::vector<int> lags;
    auto dots = spec.find("..");
    if (dots != std::string::npos) {
        int lo = std::stoi(spec.substr(0, dots));
        int hi = std::stoi(spec.substr(dots + 2));
        if (lo < 1 || hi < lo) throw CLI::ValidationError("--lags", "invalid range " + spec);
        for (int m = lo; m <= hi; ++m) lags.push_back(m);
        return lags;
    }
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int m = std::stoi(tok);
        if (m < 1) throw CLI::ValidationError("--lags", "lags must be >= 1");
        lags.push_back(m);
    }
    return lags;
}

std::string fmt10(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_matrix_tsv(const Eigen::MatrixXd& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << '\t';
            out << fmt10(m(r, c));
        }
        out << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posterior predictive checks for admixture models of genotype data"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset with known truth");
    std::string sim_out;
    int sim_n = 100, sim_l = 500, sim_k = 2;
    double sim_alpha = 1.0, sim_phi_width = 0.05, sim_phi_lo = 0.05, sim_phi_hi = 0.95;
    std::uint64_t sim_seed = 0;
    std::vector<double> sim_centers;
    int sim_inject_ld = 0;
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--n", sim_n, "individuals")->check(CLI::PositiveNumber);
    sim->add_option("--l", sim_l, "SNPs")->check(CLI::PositiveNumber);
    sim->add_option("--k", sim_k, "ancestral populations")->check(CLI::PositiveNumber);
    sim->add_option("--alpha", sim_alpha, "Dirichlet concentration");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--phi-centers", sim_centers,
                    "per-population frequency centers (implies centered phi spec)");
    sim->add_option("--phi-width", sim_phi_width, "half-width around each phi center");
    sim->add_option("--phi-lo", sim_phi_lo, "uniform phi lower bound");
    sim->add_option("--phi-hi", sim_phi_hi, "uniform phi upper bound");
    sim->add_option("--inject-ld", sim_inject_ld,
                    "also emit an LD-injected variant with this block length");

    // ---- fit ----
    auto* fitc = app.add_subcommand("fit", "Fit the admixture model by EM");
    std::string fit_geno, fit_out;
    int fit_k = 2, fit_iterations = 1000, fit_workers = 0;
    std::uint64_t fit_seed = 0;
    fitc->add_option("--genotypes", fit_geno, "genotype matrix file")->required();
    fitc->add_option("--out", fit_out, "output model directory")->required();
    fitc->add_option("--k", fit_k, "ancestral populations")->check(CLI::PositiveNumber);
    fitc->add_option("--iterations", fit_iterations, "EM iterations")->check(CLI::PositiveNumber);
    fitc->add_option("--seed", fit_seed, "RNG seed");
    fitc->add_option("--workers", fit_workers, "worker threads (0 = default)");

    // ---- replicate ----
    auto* repc = app.add_subcommand("replicate", "Dump posterior predictive replicates");
    std::string rep_model, rep_out;
    int rep_r = 100;
    std::uint64_t rep_seed = 0;
    repc->add_option("--model", rep_model, "fitted model directory")->required();
    repc->add_option("--out", rep_out, "output directory")->required();
    repc->add_option("--replicates", rep_r, "replicate count")->check(CLI::PositiveNumber);
    repc->add_option("--seed", rep_seed, "RNG seed");

    // ---- ppc ----
    auto* ppcc = app.add_subcommand("ppc", "Run posterior predictive checks");
    std::string ppc_geno, ppc_labels, ppc_model, ppc_out, ppc_lags = "1..30",
                ppc_format = "tsv";
    std::vector<std::string> ppc_discrepancies;
    int ppc_r = 0, ppc_min_shared = 500, ppc_max_snps = 10000, ppc_draws = 10, ppc_workers = 0;
    std::uint64_t ppc_seed = 0;
    bool ppc_per_lag_bf = false;
    ppcc->add_option("--genotypes", ppc_geno, "observed genotype matrix file")->required();
    ppcc->add_option("--labels", ppc_labels, "label file (required for fst)");
    ppcc->add_option("--model", ppc_model, "fitted model directory")->required();
    ppcc->add_option("--out", ppc_out, "output directory")->required();
    ppcc->add_option("--discrepancies", ppc_discrepancies,
                     "subset of: ibs, mi, fst, entropy, assoc (default: all)")
        ->delimiter(',');
    ppcc->add_option("--replicates", ppc_r,
                     "replicate count (default 100; 30 for ibs)");
    ppcc->add_option("--lags", ppc_lags, "MI lags, e.g. 1..30 or 1,5,10");
    ppcc->add_option("--min-shared", ppc_min_shared, "IBS comparable-allele threshold");
    ppcc->add_option("--max-snps", ppc_max_snps, "MI SNP window");
    ppcc->add_option("--draws", ppc_draws, "phenotype draws per population");
    ppcc->add_option("--seed", ppc_seed, "RNG seed");
    ppcc->add_option("--workers", ppc_workers, "worker threads (0 = default)");
    ppcc->add_option("--format", ppc_format, "point file format")
        ->check(CLI::IsMember({"tsv", "json"}));
    ppcc->add_flag("--per-lag-bf", ppc_per_lag_bf, "pool MI z-scores per lag instead of jointly");

    // ---- report ----
    auto* repo = app.add_subcommand("report", "Render a combined table from summary files");
    std::vector<std::string> report_summaries;
    std::string report_out;
    repo->add_option("--summary", report_summaries, "summary.json files")->required();
    repo->add_option("--out", report_out, "write table to file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            prepare_out_dir(sim_out);
            json cfg{{"n", sim_n},
                     {"l", sim_l},
                     {"k", sim_k},
                     {"alpha", sim_alpha},
                     {"seed", sim_seed},
                     {"phi_width", sim_phi_width},
                     {"phi_lo", sim_phi_lo},
                     {"phi_hi", sim_phi_hi},
                     {"inject_ld", sim_inject_ld}};
            if (!sim_centers.empty()) cfg["phi_centers"] = sim_centers;
            write_config(sim_out, "simulate", cfg);

            PhiSpec spec = sim_centers.empty()
                               ? PhiSpec::uniform(sim_phi_lo, sim_phi_hi)
                               : PhiSpec::centered(sim_centers, sim_phi_width);
            SimulatedDataset s = simulate_dataset(sim_n, sim_l, sim_k, sim_alpha, spec, sim_seed);
            save_genotypes(s.dataset, sim_out + "/genotypes.txt");
            save_labels(s.dataset, sim_out + "/labels.tsv");
            write_matrix_tsv(s.truth.theta_true, sim_out + "/truth_theta.tsv");
            write_matrix_tsv(s.truth.phi_true, sim_out + "/truth_phi.tsv");
            {
                std::ofstream out(sim_out + "/truth_z.tsv");
                for (int i = 0; i < sim_n; ++i) {
                    for (int l = 0; l < sim_l; ++l)
                        for (int j = 0; j < 2; ++j) {
                            if (l || j) out << '\t';
                            out << static_cast<int>(s.truth.z_at(i, l, j, sim_l)) + 1;
                        }
                    out << '\n';
                }
            }
            if (sim_inject_ld > 0)
                save_genotypes(inject_ld(s.dataset, sim_inject_ld),
                               sim_out + "/genotypes_ld.txt");
        } else if (*fitc) {
            apply_workers(fit_workers);
            prepare_out_dir(fit_out);
            write_config(fit_out, "fit",
                         json{{"genotypes", fit_geno},
                              {"k", fit_k},
                              {"iterations", fit_iterations},
                              {"seed", fit_seed},
                              {"workers", fit_workers},
                              {"alpha", 1.0},
                              {"gamma", 1.0},
                              {"phi_init_clamp", {0.05, 0.95}}});
            GenotypeDataset d = load_dataset(fit_geno);
            FitConfig fc;
            fc.iterations = fit_iterations;
            fc.seed = fit_seed;
            FittedModel model = fit(d, fit_k, fc);
            save_model(model, fit_out);
        } else if (*repc) {
            prepare_out_dir(rep_out);
            write_config(rep_out, "replicate",
                         json{{"model", rep_model}, {"replicates", rep_r}, {"seed", rep_seed}});
            FittedModel model = load_model(rep_model);
            for_each_replicate(model, rep_r, rep_seed, [&](int r, const AlleleTensor& t) {
                save_genotypes(tensor_to_dataset(t), rep_out + "/rep_" + std::to_string(r) + ".txt");
            });
        } else if (*ppcc) {
            apply_workers(ppc_workers);
            prepare_out_dir(ppc_out);
            GenotypeDataset d = load_dataset(
                ppc_geno, ppc_labels.empty() ? std::nullopt
                                             : std::optional<std::string>(ppc_labels));
            FittedModel model = load_model(ppc_model);

            bool explicit_discrepancies = !ppc_discrepancies.empty();
            if (!explicit_discrepancies) {
                ppc_discrepancies = discrepancy_names();
                if (!d.has_labels()) {
                    std::cerr << "note: no labels given; skipping fst\n";
                    std::erase(ppc_discrepancies, "fst");
                }
            }
            std::vector<int> lags = parse_lags(ppc_lags);

            json cfg{{"genotypes", ppc_geno},
                     {"labels", ppc_labels},
                     {"model", ppc_model},
                     {"discrepancies", ppc_discrepancies},
                     {"replicates_default", 100},
                     {"replicates_ibs_default", 30},
                     {"replicates_override", ppc_r},
                     {"lags", lags},
                     {"min_shared", ppc_min_shared},
                     {"max_snps", ppc_max_snps},
                     {"draws", ppc_draws},
                     {"phenotype_risk", {0.5, 0.1}},
                     {"beta_binomial_smoothing", 0.1},
                     {"star_thresholds", {2.0, 6.0, 10.0}},
                     {"seed", ppc_seed},
                     {"workers", ppc_workers},
                     {"format", ppc_format},
                     {"per_lag_bf", ppc_per_lag_bf}};
            write_config(ppc_out, "ppc", cfg);

            std::vector<PpcResult> results;
            for (const auto& name : ppc_discrepancies) {
                PpcConfig pc;
                pc.discrepancy = parse_discrepancy(name);
                pc.R = ppc_r > 0 ? ppc_r : (pc.discrepancy == Discrepancy::Ibs ? 30 : 100);
                pc.seed = ppc_seed;
                pc.lags = lags;
                pc.min_shared = ppc_min_shared;
                pc.max_snps = ppc_max_snps;
                pc.draws = ppc_draws;
                pc.per_lag_bf = ppc_per_lag_bf;
                results.push_back(run_ppc(model, d, pc));
            }
            render_report(results, ppc_out,
                          ppc_format == "json" ? ReportFormat::Json : ReportFormat::Tsv);
        } else if (*repo) {
            std::ostringstream table;
            table << "discrepancy          stars  2lnBF\n";
            for (const auto& path : report_summaries) {
                std::ifstream in(path);
                if (!in) throw std::runtime_error("cannot open " + path);
                json j = json::parse(in);
                for (const auto& entry : j.at("ppcs")) {
                    std::string name = entry.at("discrepancy").get<std::string>();
                    char line[96];
                    if (entry.at("stars").is_null()) {
                        std::snprintf(line, sizeof line, "%-20s %-6s %s\n", name.c_str(), "-",
                                      "inconclusive");
                    } else {
                        int stars = entry.at("stars").get<int>();
                        std::string s(static_cast<std::size_t>(stars), '*');
                        std::snprintf(line, sizeof line, "%-20s %-6s %s\n", name.c_str(),
                                      s.empty() ? "." : s.c_str(),
                                      fmt10(entry.at("two_log_bf").get<double>()).c_str());
                    }
                    table << line;
                }
            }
            if (report_out.empty()) {
                std::cout << table.str();
            } else {
                std::ofstream out(report_out);
                if (!out) throw std::runtime_error("cannot write " + report_out);
                out << table.str();
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
