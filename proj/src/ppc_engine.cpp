#include "ppcadmix/ppc_engine.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ppcadmix/replicator.hpp"
#include "ppcadmix/rng.hpp"

namespace ppcadmix {

namespace {

// phenotype sub-streams must not collide with replicate streams 0..R-1
constexpr std::uint64_t kPhenotypeStream = 1ULL << 32;

std::string fmt10(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Replicates are genotype datasets: discrepancies must see them through the
// same ternary-sum / canonical heterozygote split as observed data, so that
// observed and replicated values are exchangeable when the model holds.
AlleleTensor canonicalized(AlleleTensor t) {
    for (std::size_t c = 0; c + 1 < t.alleles.size(); c += 2) {
        if (t.alleles[c] + t.alleles[c + 1] == 1) {
            t.alleles[c] = 1;
            t.alleles[c + 1] = 0;
        }
    }
    return t;
}

}  // namespace

const std::vector<std::string>& discrepancy_names() {
    static const std::vector<std::string> names = {"ibs", "mi", "fst", "entropy", "assoc"};
    return names;
}

std::string discrepancy_name(Discrepancy d) {
    return discrepancy_names()[static_cast<int>(d)];
}

Discrepancy parse_discrepancy(const std::string& name) {
    const auto& names = discrepancy_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<Discrepancy>(i);
    std::string valid;
    for (const auto& v : names) valid += (valid.empty() ? "" : ", ") + v;
    throw std::invalid_argument("unknown discrepancy '" + name + "' (valid: " + valid + ")");
}

namespace {

struct Evaluator {
    const FittedModel& fitted;
    const PpcConfig& cfg;
    const std::vector<std::string>* labels;   // Fst only
    std::vector<std::uint64_t> assoc_seeds;   // per population
    std::vector<int> lags;

    std::vector<PpcCell> cells() const {
        std::vector<PpcCell> out;
        const int K = fitted.params.K;
        if (cfg.discrepancy == Discrepancy::MutualInfo) {
            for (int lag : lags)
                for (int k = 0; k < K; ++k) out.push_back({k, lag});
        } else {
            for (int k = 0; k < K; ++k) out.push_back({k, 0});
        }
        return out;
    }

    std::vector<ValueDefined> eval(const AlleleTensor& data) const {
        const int K = fitted.params.K;
        ZMapView z{fitted.posterior.z_map.data(), fitted.n, fitted.L};
        std::vector<ValueDefined> out;
        switch (cfg.discrepancy) {
            case Discrepancy::Ibs:
                for (int k = 0; k < K; ++k)
                    out.push_back(ibs_similarity(data, z, k, cfg.min_shared));
                break;
            case Discrepancy::MutualInfo:
                for (int lag : lags)
                    for (int k = 0; k < K; ++k)
                        out.push_back(mutual_info_ld(data, z, k, lag, cfg.max_snps));
                break;
            case Discrepancy::Fst:
                for (int k = 0; k < K; ++k)
                    out.push_back(fst_vs_labels(data, z, *labels, k).mean);
                break;
            case Discrepancy::Entropy:
                for (int k = 0; k < K; ++k)
                    out.push_back(
                        average_entropy(data, fitted.params.theta, fitted.params.phi, z, k));
                break;
            case Discrepancy::Association:
                for (int k = 0; k < K; ++k)
                    out.push_back(association_discrepancy(data, z, fitted.params.theta, k,
                                                          assoc_seeds[k], cfg.draws));
                break;
        }
        return out;
    }
};

}  // namespace

std::vector<ValueDefined> z_scores(const std::vector<ValueDefined>& observed,
                                   const std::vector<std::vector<ValueDefined>>& replicated,
                                   std::vector<ValueDefined>* mean_out,
                                   std::vector<ValueDefined>* sd_out) {
    const std::size_t ncells = observed.size();
    std::vector<ValueDefined> z(ncells);
    if (mean_out) mean_out->assign(ncells, {});
    if (sd_out) sd_out->assign(ncells, {});
    for (std::size_t c = 0; c < ncells; ++c) {
        double sum = 0.0;
        long count = 0;
        for (const auto& rep : replicated)
            if (rep[c].defined) {
                sum += rep[c].value;
                ++count;
            }
        if (count == 0) continue;
        double mean = sum / count;
        if (mean_out) (*mean_out)[c] = {mean, true};
        if (count < 2) continue;
        double ss = 0.0;
        for (const auto& rep : replicated)
            if (rep[c].defined) ss += (rep[c].value - mean) * (rep[c].value - mean);
        double sd = std::sqrt(ss / (count - 1));
        if (sd_out) (*sd_out)[c] = {sd, true};
        if (!observed[c].defined) continue;
        z[c] = {(observed[c].value - mean) / std::max(sd, 1e-12), true};
    }
    return z;
}

BfSummary deviation_bayes_factor(const std::vector<double>& z) {
    if (z.empty()) throw std::invalid_argument("deviation BF requires >= 1 z-score");
    const double M = static_cast<double>(z.size());
    double mean = std::accumulate(z.begin(), z.end(), 0.0) / M;
    double var = 0.0, sq = 0.0;
    for (double v : z) {
        var += (v - mean) * (v - mean);
        sq += v * v;
    }
    var /= M;
    double sigma = std::sqrt(var);
    BfSummary out;
    out.low_confidence = z.size() == 1 || sigma < 1e-6;
    // Floor sigma at 1: with only a handful of z's the fitted normal can
    // collapse onto them (tiny MLE sd), which would flag well-calibrated
    // underdispersed scores. Only shifts and overdispersion signal misfit.
    sigma = std::max(sigma, 1.0);
    // 2 * sum [ ln N(z; mu, sigma) - ln N(z; 0, 1) ]
    out.two_log_bf = -2.0 * M * std::log(sigma) - (var * M) / (sigma * sigma) + sq;
    if (out.two_log_bf > 10.0)
        out.stars = 3;
    else if (out.two_log_bf > 6.0)
        out.stars = 2;
    else if (out.two_log_bf > 2.0)
        out.stars = 1;
    return out;
}

PpcResult run_ppc(const FittedModel& fitted, const GenotypeDataset& observed,
                  const PpcConfig& cfg) {
    if (fitted.n != observed.n || fitted.L != observed.L)
        throw std::invalid_argument("fitted model dimensions do not match observed dataset");
    if (cfg.R < 1) throw std::invalid_argument("replicate count must be >= 1");
    if (cfg.discrepancy == Discrepancy::Fst && !observed.has_labels())
        throw std::invalid_argument("F_ST discrepancy requires labels");

    Evaluator ev{fitted, cfg, &observed.labels, {}, {}};
    if (cfg.discrepancy == Discrepancy::MutualInfo) {
        ev.lags = cfg.lags;
        if (ev.lags.empty()) {
            ev.lags.resize(30);
            std::iota(ev.lags.begin(), ev.lags.end(), 1);
        }
    }
    if (cfg.discrepancy == Discrepancy::Association) {
        ev.assoc_seeds.resize(static_cast<std::size_t>(fitted.params.K));
        for (int k = 0; k < fitted.params.K; ++k)
            ev.assoc_seeds[k] = derive_seed(cfg.seed, kPhenotypeStream + k);
    }

    PpcResult res;
    res.name = discrepancy_name(cfg.discrepancy);
    res.K = fitted.params.K;
    res.R = cfg.R;
    res.lags = ev.lags;
    res.seed = cfg.seed;
    res.cells = ev.cells();
    res.observed = ev.eval(AlleleTensor::from_dataset(observed));

    res.replicated.resize(static_cast<std::size_t>(cfg.R));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < cfg.R; ++r)
        res.replicated[r] =
            ev.eval(canonicalized(replicate_once(fitted, derive_seed(cfg.seed, r))));

    res.z = z_scores(res.observed, res.replicated, &res.rep_mean, &res.rep_sd);

    std::vector<double> pooled;
    for (const auto& zc : res.z)
        if (zc.defined) pooled.push_back(zc.value);
    if (pooled.empty()) {
        res.inconclusive = true;
    } else {
        res.pooled = deviation_bayes_factor(pooled);
        if (cfg.per_lag_bf && cfg.discrepancy == Discrepancy::MutualInfo) {
            for (int lag : res.lags) {
                std::vector<double> zs;
                for (std::size_t c = 0; c < res.cells.size(); ++c)
                    if (res.cells[c].lag == lag && res.z[c].defined)
                        zs.push_back(res.z[c].value);
                if (!zs.empty()) res.per_lag.emplace_back(lag, deviation_bayes_factor(zs));
            }
        }
    }
    return res;
}

namespace {

std::string cell_label(const PpcResult& res, const PpcCell& cell) {
    if (res.name == "mi") return res.name + "_lag" + std::to_string(cell.lag);
    return res.name;
}

nlohmann::json vd_array(const std::vector<ValueDefined>& v, const std::vector<std::size_t>& idx) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t c : idx) {
        if (v[c].defined)
            arr.push_back(v[c].value);
        else
            arr.push_back(nullptr);
    }
    return arr;
}

}  // namespace

void render_report(const std::vector<PpcResult>& results, const std::string& out_dir,
                   ReportFormat format) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out_dir);

    // (a) per-PPC point files for scatter plots
    for (const auto& res : results) {
        auto emit_row = [&](std::ostream& out, std::size_t c, const std::string& dataset_id,
                            const ValueDefined& v) {
            out << cell_label(res, res.cells[c]) << '\t' << res.cells[c].k + 1 << '\t'
                << dataset_id << '\t' << (v.defined ? fmt10(v.value) : "NA") << '\t'
                << (v.defined ? 1 : 0) << '\n';
        };
        if (format == ReportFormat::Tsv) {
            std::string path = out_dir + "/" + res.name + "_points.tsv";
            std::ofstream out(path);
            if (!out) throw std::runtime_error("cannot write " + path);
            out << "discrepancy\tpopulation\tdataset_id\tvalue\tdefined\n";
            for (std::size_t c = 0; c < res.cells.size(); ++c)
                emit_row(out, c, "observed", res.observed[c]);
            for (int r = 0; r < res.R; ++r)
                for (std::size_t c = 0; c < res.cells.size(); ++c)
                    emit_row(out, c, "rep_" + std::to_string(r), res.replicated[r][c]);
        } else {
            nlohmann::json rows = nlohmann::json::array();
            auto push = [&](std::size_t c, const std::string& dataset_id,
                            const ValueDefined& v) {
                rows.push_back({{"discrepancy", cell_label(res, res.cells[c])},
                                {"population", res.cells[c].k + 1},
                                {"dataset_id", dataset_id},
                                {"value", v.defined ? nlohmann::json(v.value)
                                                    : nlohmann::json(nullptr)},
                                {"defined", v.defined}});
            };
            for (std::size_t c = 0; c < res.cells.size(); ++c)
                push(c, "observed", res.observed[c]);
            for (int r = 0; r < res.R; ++r)
                for (std::size_t c = 0; c < res.cells.size(); ++c)
                    push(c, "rep_" + std::to_string(r), res.replicated[r][c]);
            std::string path = out_dir + "/" + res.name + "_points.json";
            std::ofstream out(path);
            if (!out) throw std::runtime_error("cannot write " + path);
            out << rows.dump(2) << '\n';
        }
    }

    // (b) summary.json — one entry per discrepancy (per lag for MI)
    nlohmann::json summary;
    summary["ppcs"] = nlohmann::json::array();
    for (const auto& res : results) {
        std::vector<int> groups = res.lags.empty() ? std::vector<int>{0} : res.lags;
        for (int lag : groups) {
            std::vector<std::size_t> idx;
            for (std::size_t c = 0; c < res.cells.size(); ++c)
                if (res.cells[c].lag == lag) idx.push_back(c);
            nlohmann::json entry;
            entry["discrepancy"] = lag ? res.name + "_lag" + std::to_string(lag) : res.name;
            entry["K"] = res.K;
            entry["R"] = res.R;
            entry["observed"] = vd_array(res.observed, idx);
            entry["replicate_mean"] = vd_array(res.rep_mean, idx);
            entry["replicate_sd"] = vd_array(res.rep_sd, idx);
            entry["z"] = vd_array(res.z, idx);
            BfSummary bf = res.pooled;
            for (const auto& [plag, pbf] : res.per_lag)
                if (plag == lag) bf = pbf;
            if (res.inconclusive) {
                entry["two_log_bf"] = nullptr;
                entry["stars"] = nullptr;
                entry["inconclusive"] = true;
            } else {
                entry["two_log_bf"] = bf.two_log_bf;
                entry["stars"] = bf.stars;
                if (bf.low_confidence) entry["low_confidence"] = true;
            }
            entry["seeds"] = {{"master", res.seed}};
            summary["ppcs"].push_back(entry);
        }
    }
    {
        std::string path = out_dir + "/summary.json";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << summary.dump(2) << '\n';
    }

    // (c) plain-text table mirroring the figures' star annotations
    {
        std::string path = out_dir + "/report.txt";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << "discrepancy          stars  2lnBF        z-scores\n";
        for (const auto& res : results) {
            char line[128];
            if (res.inconclusive) {
                std::snprintf(line, sizeof line, "%-20s %-6s %-12s ", res.name.c_str(), "-",
                              "inconclusive");
                out << line << '\n';
                continue;
            }
            std::string stars(static_cast<std::size_t>(res.pooled.stars), '*');
            std::snprintf(line, sizeof line, "%-20s %-6s %-12s ", res.name.c_str(),
                          stars.empty() ? "." : stars.c_str(),
                          fmt10(res.pooled.two_log_bf).c_str());
            out << line;
            for (std::size_t c = 0; c < res.z.size(); ++c) {
                if (c) out << ' ';
                out << (res.z[c].defined ? fmt10(res.z[c].value) : "NA");
            }
            out << '\n';
        }
    }
}

}  // namespace ppcadmix
