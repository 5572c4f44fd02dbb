#include "raydiff/common/rng.hpp"

namespace raydiff {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

Vec standard_normal_vector(Rng& rng, int dim) {
    NormalDist normal;
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    return v;
}

Vec uniform_on_sphere(Rng& rng, int dim) {
    Vec v;
    double n = 0.0;
    do {
        v = standard_normal_vector(rng, dim);
        n = v.norm();
    } while (n < 1e-12);
    return v / n;
}

}  // namespace raydiff
