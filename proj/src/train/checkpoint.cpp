#include <fstream>

#include "vadb/errors.hpp"
#include "vadb/nn/serialize.hpp"
#include "vadb/training.hpp"

namespace vadb::train {

namespace {
constexpr char kMagic[8] = {'V', 'A', 'D', 'B', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const nn::ParamStore*>>& sections,
                     const CheckpointMeta& meta, const std::string& opt_section,
                     const nn::Adam* opt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint: " + path.string());
    os.write(kMagic, 8);
    nn::write_u32(os, kVersion);
    nn::write_u64(os, meta.config_hash);
    nn::write_u64(os, meta.rng_state);
    nn::write_u64(os, meta.step);
    nn::write_u32(os, static_cast<std::uint32_t>(sections.size()));
    for (const auto& [name, store] : sections) {
        nn::write_string(os, name);
        nn::write_u32(os, static_cast<std::uint32_t>(store->count()));
        for (std::size_t i = 0; i < store->count(); ++i) {
            const nn::Tensor& t = store->at(i);
            nn::write_string(os, store->name_at(i));
            nn::write_u32(os, static_cast<std::uint32_t>(t.rows()));
            nn::write_u32(os, static_cast<std::uint32_t>(t.cols()));
            nn::write_f64_array(os, t.data());
        }
    }
    nn::write_u32(os, opt && !opt_section.empty() ? 1u : 0u);
    if (opt && !opt_section.empty()) {
        nn::write_string(os, opt_section);
        nn::write_u64(os, opt->t());
        const nn::ParamStore* store = nullptr;
        for (const auto& [name, s] : sections)
            if (name == opt_section) store = s;
        if (!store) throw Error("checkpoint: optimizer section not among sections");
        nn::write_u32(os, static_cast<std::uint32_t>(store->count()));
        for (std::size_t i = 0; i < store->count(); ++i) {
            nn::write_string(os, store->name_at(i));
            nn::write_f64_array(os, opt->moment1(i));
            nn::write_f64_array(os, opt->moment2(i));
        }
    }
    if (!os) throw IoError("checkpoint write failed: " + path.string());
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path,
                               const std::vector<std::pair<std::string, nn::ParamStore*>>& sections,
                               nn::Adam* opt) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (is.gcount() != 8 || !std::equal(magic, magic + 8, kMagic))
        throw IoError("not a checkpoint file: " + path.string());
    const std::uint32_t version = nn::read_u32(is);
    if (version != kVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));

    CheckpointMeta meta;
    meta.config_hash = nn::read_u64(is);
    meta.rng_state = nn::read_u64(is);
    meta.step = nn::read_u64(is);

    const std::uint32_t n_sections = nn::read_u32(is);
    for (std::uint32_t s = 0; s < n_sections; ++s) {
        const std::string section = nn::read_string(is);
        nn::ParamStore* store = nullptr;
        for (const auto& [name, st] : sections)
            if (name == section) store = st;
        if (!store)
            throw Error("checkpoint: no store supplied for section '" + section + "'");
        const std::uint32_t n_params = nn::read_u32(is);
        if (n_params != store->count())
            throw Error("checkpoint: parameter count mismatch in section '" + section + "'");
        for (std::uint32_t p = 0; p < n_params; ++p) {
            const std::string name = nn::read_string(is);
            const std::uint32_t rows = nn::read_u32(is);
            const std::uint32_t cols = nn::read_u32(is);
            std::vector<double> values = nn::read_f64_array(is);
            nn::Tensor* t = store->find(name);
            if (!t) throw Error("checkpoint: unknown parameter '" + name + "'");
            if (t->rows() != static_cast<int>(rows) || t->cols() != static_cast<int>(cols) ||
                values.size() != t->size())
                throw Error("checkpoint: shape mismatch for '" + name + "'");
            t->data() = std::move(values);
        }
    }

    const std::uint32_t has_opt = nn::read_u32(is);
    if (has_opt) {
        const std::string section = nn::read_string(is);
        const std::uint64_t t = nn::read_u64(is);
        const std::uint32_t n_params = nn::read_u32(is);
        nn::ParamStore* store = nullptr;
        for (const auto& [name, st] : sections)
            if (name == section) store = st;
        if (opt) {
            if (!store) throw Error("checkpoint: optimizer section store missing");
            if (n_params != store->count())
                throw Error("checkpoint: optimizer parameter count mismatch");
            opt->set_t(t);
        }
        for (std::uint32_t p = 0; p < n_params; ++p) {
            const std::string name = nn::read_string(is);
            std::vector<double> m = nn::read_f64_array(is);
            std::vector<double> v = nn::read_f64_array(is);
            if (opt && store) {
                // store order is canonical, so p indexes the optimizer slots
                if (store->name_at(p) != name)
                    throw Error("checkpoint: optimizer state order mismatch at '" + name + "'");
                opt->moment1(p) = std::move(m);
                opt->moment2(p) = std::move(v);
            }
        }
    }
    return meta;
}

}  // namespace vadb::train
