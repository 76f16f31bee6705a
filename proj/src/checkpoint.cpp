#include "evmc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace evmc::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

constexpr char kMagic[4] = {'E', 'V', 'M', 'C'};
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv1a(std::uint64_t& checksum, const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        checksum ^= bytes[i];
        checksum *= kFnvPrime;
    }
}

template <typename T>
void write_raw(std::ostream& out, const T& value, std::uint64_t& checksum) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    fnv1a(checksum, &value, sizeof(T));
}

void write_bytes(std::ostream& out, const void* data, std::size_t size,
                 std::uint64_t& checksum) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    fnv1a(checksum, data, size);
}

template <typename T>
void read_raw(std::istream& in, T& value, std::uint64_t& checksum) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    fnv1a(checksum, &value, sizeof(T));
}

void read_bytes(std::istream& in, void* data, std::size_t size, std::uint64_t& checksum) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    fnv1a(checksum, data, size);
}

nlohmann::json invariant_to_json(const arch::InvariantNetConfig& cfg) {
    return {{"type", "invariant"},
            {"input_dim", cfg.input_dim},
            {"equivariant_modules", cfg.equivariant_modules},
            {"inner_depth", cfg.inner_depth},
            {"hidden_width", cfg.hidden_width},
            {"pooled_width", cfg.pooled_width},
            {"output_count", cfg.output_count}};
}

nlohmann::json sequence_to_json(const arch::SequenceNetConfig& cfg) {
    nlohmann::json conv = nlohmann::json::array();
    for (const auto& c : cfg.conv) {
        conv.push_back({{"filters", c.filters}, {"kernel", c.kernel}, {"stride", c.stride}});
    }
    return {{"type", "sequence"},
            {"input_dim", cfg.input_dim},
            {"lstm_hidden", cfg.lstm_hidden},
            {"conv", conv},
            {"head", cfg.head},
            {"output_count", cfg.output_count}};
}

arch::InvariantNetConfig invariant_from_json(const nlohmann::json& j) {
    arch::InvariantNetConfig cfg;
    cfg.input_dim = j.at("input_dim").get<std::size_t>();
    cfg.equivariant_modules = j.at("equivariant_modules").get<std::size_t>();
    cfg.inner_depth = j.at("inner_depth").get<std::size_t>();
    cfg.hidden_width = j.at("hidden_width").get<std::size_t>();
    cfg.pooled_width = j.at("pooled_width").get<std::size_t>();
    cfg.output_count = j.at("output_count").get<std::size_t>();
    return cfg;
}

arch::SequenceNetConfig sequence_from_json(const nlohmann::json& j) {
    arch::SequenceNetConfig cfg;
    cfg.input_dim = j.at("input_dim").get<std::size_t>();
    cfg.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    cfg.conv.clear();
    for (const auto& c : j.at("conv")) {
        cfg.conv.push_back({c.at("filters").get<std::size_t>(), c.at("kernel").get<std::size_t>(),
                            c.at("stride").get<std::size_t>()});
    }
    cfg.head = j.at("head").get<std::vector<std::size_t>>();
    cfg.output_count = j.at("output_count").get<std::size_t>();
    return cfg;
}

} // namespace

NetworkCheckpoint make_checkpoint(const arch::EvidentialNetwork& network,
                                  const TrainingMeta& meta, bool include_optimizer_state) {
    NetworkCheckpoint cp;
    cp.kind = network.data_kind();
    if (const auto* inv = dynamic_cast<const arch::InvariantNetwork*>(&network)) {
        cp.is_invariant = true;
        cp.invariant_config = inv->config();
    } else if (const auto* seq = dynamic_cast<const arch::SequenceNetwork*>(&network)) {
        cp.is_invariant = false;
        cp.sequence_config = seq->config();
    } else {
        throw std::invalid_argument("make_checkpoint: unknown network type");
    }
    const auto& store = network.params();
    for (std::size_t i = 0; i < store.count(); ++i) {
        cp.param_layout.emplace_back(store.param(i).name, store.param(i).value.shape);
    }
    cp.params = store.flatten_values();
    if (include_optimizer_state) {
        cp.has_optimizer_state = true;
        cp.adam_step = store.step_count();
        cp.moments = store.flatten_moments();
    }
    cp.iterations = meta.iterations;
    cp.final_loss = meta.final_loss;
    cp.lambda = meta.lambda;
    cp.seed = meta.seed;
    cp.stop_reason = meta.stop_reason;
    return cp;
}

std::unique_ptr<arch::EvidentialNetwork> restore_network(const NetworkCheckpoint& cp) {
    std::unique_ptr<arch::EvidentialNetwork> network;
    if (cp.is_invariant) {
        network = std::make_unique<arch::InvariantNetwork>(cp.invariant_config, 0);
    } else {
        network = std::make_unique<arch::SequenceNetwork>(cp.sequence_config, 0);
    }
    const auto& store = network->params();
    if (store.count() != cp.param_layout.size() || store.total_size() != cp.params.size()) {
        throw std::runtime_error("restore_network: parameter layout mismatch");
    }
    for (std::size_t i = 0; i < store.count(); ++i) {
        if (store.param(i).name != cp.param_layout[i].first ||
            store.param(i).value.shape != cp.param_layout[i].second) {
            throw std::runtime_error("restore_network: parameter " + cp.param_layout[i].first +
                                     " does not match the architecture");
        }
    }
    network->params().load_values(cp.params);
    if (cp.has_optimizer_state) {
        network->params().load_moments(cp.moments);
        network->params().set_step_count(cp.adam_step);
    }
    return network;
}

void save_checkpoint(const NetworkCheckpoint& cp, const std::string& path) {
    nlohmann::json header;
    header["format_version"] = NetworkCheckpoint::kVersion;
    header["data_kind"] = to_string(cp.kind);
    header["architecture"] = cp.is_invariant ? invariant_to_json(cp.invariant_config)
                                             : sequence_to_json(cp.sequence_config);
    nlohmann::json layout = nlohmann::json::array();
    for (const auto& [name, shape] : cp.param_layout) {
        layout.push_back({{"name", name}, {"shape", shape}});
    }
    header["parameters"] = layout;
    header["training"] = {{"iterations", cp.iterations}, {"final_loss", cp.final_loss},
                          {"lambda", cp.lambda},         {"seed", cp.seed},
                          {"stop_reason", cp.stop_reason}};
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::uint64_t checksum = kFnvOffset;
    out.write(kMagic, 4);
    write_raw(out, NetworkCheckpoint::kVersion, checksum);
    write_raw(out, static_cast<std::uint64_t>(header_str.size()), checksum);
    write_bytes(out, header_str.data(), header_str.size(), checksum);
    write_raw(out, static_cast<std::uint64_t>(cp.params.size()), checksum);
    write_bytes(out, cp.params.data(), cp.params.size() * sizeof(double), checksum);
    const std::uint8_t has_opt = cp.has_optimizer_state ? 1 : 0;
    write_raw(out, has_opt, checksum);
    if (cp.has_optimizer_state) {
        if (cp.moments.size() != 2 * cp.params.size()) {
            throw std::invalid_argument("save_checkpoint: moment block size mismatch");
        }
        write_raw(out, cp.adam_step, checksum);
        write_bytes(out, cp.moments.data(), cp.moments.size() * sizeof(double), checksum);
    }
    out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    if (!out) throw std::runtime_error("write failed: " + path);
}

NetworkCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic bytes (not an EVMC file)");
    }
    std::uint64_t checksum = kFnvOffset;
    std::uint32_t version = 0;
    read_raw(in, version, checksum);
    if (version != NetworkCheckpoint::kVersion) {
        throw std::runtime_error("checkpoint: unsupported format version " +
                                 std::to_string(version));
    }
    std::uint64_t header_len = 0;
    read_raw(in, header_len, checksum);
    if (header_len > (1ULL << 30)) throw std::runtime_error("checkpoint: header too large");
    std::string header_str(header_len, '\0');
    read_bytes(in, header_str.data(), header_len, checksum);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: malformed header: ") + e.what());
    }

    NetworkCheckpoint cp;
    cp.kind = data_kind_from_string(header.at("data_kind").get<std::string>());
    const auto& arch_json = header.at("architecture");
    const std::string type = arch_json.at("type").get<std::string>();
    if (type == "invariant") {
        cp.is_invariant = true;
        cp.invariant_config = invariant_from_json(arch_json);
    } else if (type == "sequence") {
        cp.is_invariant = false;
        cp.sequence_config = sequence_from_json(arch_json);
    } else {
        throw std::runtime_error("checkpoint: unknown architecture type " + type);
    }
    for (const auto& p : header.at("parameters")) {
        cp.param_layout.emplace_back(p.at("name").get<std::string>(),
                                     p.at("shape").get<std::vector<std::size_t>>());
    }
    const auto& training = header.at("training");
    cp.iterations = training.at("iterations").get<std::uint64_t>();
    cp.final_loss = training.at("final_loss").get<double>();
    cp.lambda = training.at("lambda").get<double>();
    cp.seed = training.at("seed").get<std::uint64_t>();
    cp.stop_reason = training.at("stop_reason").get<std::string>();

    std::uint64_t param_count = 0;
    read_raw(in, param_count, checksum);
    std::size_t expected = 0;
    for (const auto& [name, shape] : cp.param_layout) expected += nn::shape_numel(shape);
    if (param_count != expected) {
        throw std::runtime_error("checkpoint: parameter count disagrees with layout");
    }
    cp.params.resize(param_count);
    read_bytes(in, cp.params.data(), param_count * sizeof(double), checksum);

    std::uint8_t has_opt = 0;
    read_raw(in, has_opt, checksum);
    if (has_opt == 1) {
        cp.has_optimizer_state = true;
        read_raw(in, cp.adam_step, checksum);
        cp.moments.resize(2 * param_count);
        read_bytes(in, cp.moments.data(), cp.moments.size() * sizeof(double), checksum);
    } else if (has_opt != 0) {
        throw std::runtime_error("checkpoint: corrupt optimizer-state flag");
    }

    std::uint64_t stored = 0;
    in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    if (stored != checksum) {
        throw std::runtime_error("checkpoint: checksum failure");
    }
    return cp;
}

} // namespace evmc::io
