#include "barembed/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "barembed/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace barembed::train {

namespace {

constexpr char kMagic[8] = {'B', 'E', 'M', 'B', 'C', 'K', 'P', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CorruptCheckpoint("checkpoint truncated");
    return v;
}

} // namespace

void save_checkpoint(const model::Parameters& params, const model::ModelConfig& config,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    put<std::int32_t>(out, config.num_layers);
    put<std::int32_t>(out, config.hidden_size);
    put<std::int32_t>(out, config.num_heads);
    put<std::int32_t>(out, config.ffn_size);
    put<std::int32_t>(out, config.max_seq_len);
    put<std::int32_t>(out, config.vocab_size);
    put<double>(out, config.dropout_rate);
    put<std::uint8_t>(out, config.pooling == model::Pooling::cls ? 1 : 0);

    std::uint32_t count = 0;
    model::for_each_tensor(params, [&count](const std::string&, const model::MatrixXd&) { ++count; });
    put<std::uint32_t>(out, count);

    model::for_each_tensor(params, [&out](const std::string& name, const model::MatrixXd& m) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
        // row-major on disk
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            out.write(reinterpret_cast<const char*>(m.row(r).eval().data()),
                      static_cast<std::streamsize>(sizeof(double) * m.cols()));
    });
    if (!out) throw DataError("short write while saving checkpoint: " + path);
}

std::pair<model::Parameters, model::ModelConfig> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, "BEMBCKP", 7) != 0)
        throw CorruptCheckpoint("bad checkpoint magic");
    if (magic[7] != '1') throw VersionMismatch("unsupported checkpoint version");

    model::ModelConfig config;
    config.num_layers = get<std::int32_t>(in);
    config.hidden_size = get<std::int32_t>(in);
    config.num_heads = get<std::int32_t>(in);
    config.ffn_size = get<std::int32_t>(in);
    config.max_seq_len = get<std::int32_t>(in);
    config.vocab_size = get<std::int32_t>(in);
    config.dropout_rate = get<double>(in);
    config.pooling = get<std::uint8_t>(in) ? model::Pooling::cls : model::Pooling::mean;
    try {
        config.validate();
    } catch (const InternalError& e) {
        throw CorruptCheckpoint(std::string("invalid config header: ") + e.what());
    }

    model::Parameters params = model::Parameters::init(config, 0);
    const std::uint32_t count = get<std::uint32_t>(in);
    std::uint32_t expected = 0;
    model::for_each_tensor(params, [&expected](const std::string&, const model::MatrixXd&) { ++expected; });
    if (count != expected) throw VersionMismatch("tensor count does not match config");

    bool shape_ok = true;
    std::string shape_msg;
    model::for_each_tensor(params, [&](const std::string& name, model::MatrixXd& m) {
        const std::uint16_t name_len = get<std::uint16_t>(in);
        std::string got(name_len, '\0');
        in.read(got.data(), name_len);
        if (!in) throw CorruptCheckpoint("checkpoint truncated in tensor name");
        const std::uint32_t rows = get<std::uint32_t>(in);
        const std::uint32_t cols = get<std::uint32_t>(in);
        if (got != name || rows != static_cast<std::uint32_t>(m.rows()) ||
            cols != static_cast<std::uint32_t>(m.cols())) {
            shape_ok = false;
            if (shape_msg.empty()) shape_msg = "tensor " + got + " does not match config shapes";
        }
        std::vector<double> row(cols);
        model::MatrixXd loaded(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r) {
            in.read(reinterpret_cast<char*>(row.data()),
                    static_cast<std::streamsize>(sizeof(double) * cols));
            if (!in) throw CorruptCheckpoint("checkpoint truncated in tensor data");
            for (std::uint32_t c = 0; c < cols; ++c) loaded(r, c) = row[c];
        }
        if (shape_ok) m = std::move(loaded);
    });
    if (!shape_ok) throw VersionMismatch(shape_msg);
    return {std::move(params), config};
}

} // namespace barembed::train
