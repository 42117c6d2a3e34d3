#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace ppcadmix {

// SplitMix64 finalizer. Used for deriving independent sub-stream seeds so
// that any replicate / phenotype draw can be regenerated in isolation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// seed_r = f(seed, stream): pure function, no shared state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL));
}

// Thin wrapper over mt19937_64 with hand-rolled variate transforms.
// std::*_distribution output is implementation-defined; these transforms
// are fixed here so seeded runs are bit-reproducible.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // index in [0, k) from unnormalized weights
    int categorical(const double* w, int k) {
        double total = 0.0;
        for (int j = 0; j < k; ++j) total += w[j];
        double u = uniform() * total;
        double acc = 0.0;
        for (int j = 0; j < k; ++j) {
            acc += w[j];
            if (u < acc) return j;
        }
        return k - 1;
    }

    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Marsaglia-Tsang
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("gamma shape must be > 0");
        if (shape < 1.0) {
            double u;
            do {
                u = uniform();
            } while (u <= 0.0);
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u;
            do {
                u = uniform();
            } while (u <= 0.0);
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    std::vector<double> dirichlet(double alpha, int k) {
        std::vector<double> out(static_cast<std::size_t>(k));
        double total = 0.0;
        for (int j = 0; j < k; ++j) {
            out[j] = gamma(alpha);
            total += out[j];
        }
        for (int j = 0; j < k; ++j) out[j] /= total;
        return out;
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace ppcadmix
