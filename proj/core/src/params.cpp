#include "kgtrim/params.hpp"

#include "kgtrim/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace kgtrim {

namespace {

constexpr char kMagic[8] = {'K', 'G', 'T', 'C', 'K', 'P', 'T', '1'};

void xavier_fill(Table& t, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.dim()));
    for (double& x : t.data()) x = uniform_real(rng, -bound, bound);
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_table(std::ofstream& out, const Table& t) {
    write_pod(out, static_cast<std::uint64_t>(t.rows()));
    write_pod(out, static_cast<std::uint64_t>(t.dim()));
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.data().size() * sizeof(double)));
}

Table read_table(std::ifstream& in) {
    std::uint64_t rows = 0, dim = 0;
    read_pod(in, rows);
    read_pod(in, dim);
    Table t(rows, dim);
    in.read(reinterpret_cast<char*>(t.data().data()),
            static_cast<std::streamsize>(rows * dim * sizeof(double)));
    return t;
}

}  // namespace

bool ParameterStore::all_finite() const {
    const auto ok = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    return ok(user_embeddings.data()) && ok(entity_embeddings.data()) &&
           ok(relation_embeddings.data()) && ok(holistic_raw);
}

ParameterStore init_parameters(std::uint32_t num_users, std::uint32_t num_entities,
                               std::uint32_t num_relations, std::size_t dim, std::uint64_t seed) {
    ParameterStore p;
    p.dim = dim;
    p.user_embeddings = Table(num_users, dim);
    p.entity_embeddings = Table(num_entities, dim);
    p.relation_embeddings = Table(num_relations, dim);
    p.holistic_raw.assign(num_entities, 1.0);

    auto rng_u = make_rng(seed, "init/user");
    auto rng_v = make_rng(seed, "init/entity");
    auto rng_r = make_rng(seed, "init/relation");
    xavier_fill(p.user_embeddings, rng_u);
    xavier_fill(p.entity_embeddings, rng_v);
    xavier_fill(p.relation_embeddings, rng_r);
    return p;
}

void save_checkpoint(const ParameterStore& params, const std::string& path,
                     const std::string& config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, static_cast<std::uint64_t>(params.dim));
    const std::uint64_t hash_len = config_hash.size();
    write_pod(out, hash_len);
    out.write(config_hash.data(), static_cast<std::streamsize>(hash_len));
    write_table(out, params.user_embeddings);
    write_table(out, params.entity_embeddings);
    write_table(out, params.relation_embeddings);
    const std::uint64_t hol = params.holistic_raw.size();
    write_pod(out, hol);
    out.write(reinterpret_cast<const char*>(params.holistic_raw.data()),
              static_cast<std::streamsize>(hol * sizeof(double)));
    if (!out) throw IoError("checkpoint write failed: " + path);
}

ParameterStore load_checkpoint(const std::string& path, std::string* config_hash_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ValidationError("bad checkpoint magic: " + path);
    }
    ParameterStore p;
    std::uint64_t dim = 0;
    read_pod(in, dim);
    p.dim = dim;
    std::uint64_t hash_len = 0;
    read_pod(in, hash_len);
    if (hash_len > 4096) throw ValidationError("corrupt checkpoint header: " + path);
    std::string hash(hash_len, '\0');
    in.read(hash.data(), static_cast<std::streamsize>(hash_len));
    if (config_hash_out) *config_hash_out = hash;
    p.user_embeddings = read_table(in);
    p.entity_embeddings = read_table(in);
    p.relation_embeddings = read_table(in);
    std::uint64_t hol = 0;
    read_pod(in, hol);
    p.holistic_raw.resize(hol);
    in.read(reinterpret_cast<char*>(p.holistic_raw.data()),
            static_cast<std::streamsize>(hol * sizeof(double)));
    if (!in) throw ValidationError("truncated checkpoint: " + path);
    return p;
}

}  // namespace kgtrim
