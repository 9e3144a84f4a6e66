#ifndef DIMP_RNG_HPP
#define DIMP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dimp/common.hpp"

namespace dimp {

// splitmix64 step, used to derive decorrelated child seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 with portable uniform/normal draws. The standard distributions
// are implementation-defined, so we build our own on top of the (fully
// specified) engine: results are identical across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [lo, hi], inclusive. Uses rejection to avoid bias.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t range = hi - lo + 1;
        if (range == 0) return eng_(); // full 64-bit range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t x;
        do { x = eng_(); } while (x >= limit);
        return lo + x % range;
    }

    int index(int n) { return static_cast<int>(uniform_int(0, static_cast<std::uint64_t>(n) - 1)); }

    // Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Mat normal_mat(Eigen::Index rows, Eigen::Index cols) {
        Mat m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
        return m;
    }

    // Fisher-Yates shuffle (deterministic for a fixed state).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            const int j = static_cast<int>(uniform_int(0, static_cast<std::uint64_t>(i)));
            std::swap(v[i], v[j]);
        }
    }

    // Engine state round-trips through text exactly (checkpoint contract).
    // The spare normal is stored as its raw bit pattern.
    std::string serialize() const {
        std::ostringstream os;
        os << eng_;
        std::uint64_t bits = 0;
        static_assert(sizeof(bits) == sizeof(spare_));
        std::memcpy(&bits, &spare_, sizeof(bits));
        os << " " << (have_spare_ ? 1 : 0) << " " << bits;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        int flag = 0;
        std::uint64_t bits = 0;
        is >> flag >> bits;
        have_spare_ = (flag == 1);
        std::memcpy(&spare_, &bits, sizeof(bits));
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace dimp

#endif
