#include "iifcn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace iifcn {

namespace {

const char kMagic[6] = {'I', 'I', 'F', 'C', 'N', '1'};

uint64_t fnv1a(const std::vector<uint8_t>& bytes) {
    uint64_t h = 14695981039346656037ull;
    for (uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

struct Writer {
    std::vector<uint8_t> buf;

    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(uint8_t(v >> (8 * i)));
    }
    void i64(int64_t v) { u64(uint64_t(v)); }
    void f64(real v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        buf.insert(buf.end(), s.begin(), s.end());
    }
};

struct Reader {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size())
            throw std::invalid_argument("corrupt checkpoint: unexpected end of data");
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(buf[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 8;
        return v;
    }
    int64_t i64() { return int64_t(u64()); }
    real f64() {
        uint64_t bits = u64();
        real v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        uint64_t n = u64();
        if (n > (1u << 20)) throw std::invalid_argument("corrupt checkpoint: absurd string size");
        need(static_cast<size_t>(n));
        std::string s(buf.begin() + int64_t(pos), buf.begin() + int64_t(pos + n));
        pos += static_cast<size_t>(n);
        return s;
    }
};

void write_config(Writer& w, const ModelConfig& cfg) {
    w.i64(cfg.blocks);
    w.u64(cfg.widths.size());
    for (int64_t v : cfg.widths) w.i64(v);
    w.u64(cfg.branch_channels.size());
    for (int64_t v : cfg.branch_channels) w.i64(v);
    w.u64(cfg.dilated_head.size());
    for (const auto& d : cfg.dilated_head) {
        w.i64(d.kernel);
        w.i64(d.rate);
    }
    w.i64(cfg.num_classes);
}

ModelConfig read_config(Reader& r) {
    ModelConfig cfg;
    cfg.blocks = r.i64();
    cfg.widths.resize(static_cast<size_t>(r.u64()));
    for (auto& v : cfg.widths) v = r.i64();
    cfg.branch_channels.resize(static_cast<size_t>(r.u64()));
    for (auto& v : cfg.branch_channels) v = r.i64();
    cfg.dilated_head.resize(static_cast<size_t>(r.u64()));
    for (auto& d : cfg.dilated_head) {
        d.kernel = r.i64();
        d.rate = r.i64();
    }
    cfg.num_classes = r.i64();
    return cfg;
}

std::vector<uint8_t> payload_of(const Model& model) {
    Writer w;
    write_config(w, model.config());
    w.u64(model.parameters().size());
    for (const auto& p : model.parameters()) {
        w.str(p->name);
        w.u64(uint64_t(p->value.ndim()));
        for (int64_t e : p->value.shape()) w.i64(e);
        for (int64_t i = 0; i < p->value.numel(); ++i) w.f64(p->value[i]);
    }
    return std::move(w.buf);
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open checkpoint " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

// Verifies magic and checksum, returns the payload bytes.
std::vector<uint8_t> verified_payload(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < sizeof(kMagic) + 8 ||
        std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw std::invalid_argument("corrupt checkpoint: bad magic in " + path);
    std::vector<uint8_t> payload(bytes.begin() + sizeof(kMagic), bytes.end() - 8);
    uint64_t stored = 0;
    for (int i = 0; i < 8; ++i)
        stored |= uint64_t(bytes[bytes.size() - 8 + static_cast<size_t>(i)]) << (8 * i);
    if (fnv1a(payload) != stored)
        throw std::invalid_argument("corrupt checkpoint: checksum mismatch in " + path);
    return payload;
}

std::string shape_str_of(const std::vector<int64_t>& shape) {
    std::string s;
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s;
}

void fill_params(Model& model, Reader& r) {
    uint64_t count = r.u64();
    const auto& params = model.parameters();
    if (count != params.size())
        throw std::invalid_argument("checkpoint holds " + std::to_string(count) +
                                    " parameters, model expects " +
                                    std::to_string(params.size()));
    for (size_t i = 0; i < params.size(); ++i) {
        std::string name = r.str();
        uint64_t rank = r.u64();
        if (rank > 8) throw std::invalid_argument("corrupt checkpoint: absurd tensor rank");
        std::vector<int64_t> shape(static_cast<size_t>(rank));
        for (auto& e : shape) e = r.i64();
        if (name != params[i]->name || shape != params[i]->value.shape())
            throw std::invalid_argument(
                "checkpoint parameter " + std::to_string(i) + " '" + name + "' (" +
                shape_str_of(shape) + ") does not match model parameter '" + params[i]->name +
                "' (" + shape_str_of(params[i]->value.shape()) + ")");
        for (int64_t j = 0; j < params[i]->value.numel(); ++j) params[i]->value[j] = r.f64();
    }
}

} // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    std::vector<uint8_t> payload = payload_of(model);
    uint64_t sum = fnv1a(payload);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot create checkpoint " + path);
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(payload.data()), int64_t(payload.size()));
    char sum_bytes[8];
    for (int i = 0; i < 8; ++i) sum_bytes[i] = char(uint8_t(sum >> (8 * i)));
    out.write(sum_bytes, 8);
    if (!out) throw std::invalid_argument("failed writing checkpoint " + path);
}

Model load_checkpoint(const std::string& path) {
    std::vector<uint8_t> payload = verified_payload(path);
    Reader r{payload};
    ModelConfig cfg = read_config(r);
    Model model(cfg, 0);
    fill_params(model, r);
    return model;
}

void load_into(Model& model, const std::string& path) {
    std::vector<uint8_t> payload = verified_payload(path);
    Reader r{payload};
    ModelConfig stored = read_config(r);
    const ModelConfig& mine = model.config();
    if (stored.blocks != mine.blocks || stored.widths != mine.widths ||
        stored.branch_channels != mine.branch_channels ||
        stored.num_classes != mine.num_classes ||
        stored.dilated_head.size() != mine.dilated_head.size())
        throw std::invalid_argument("checkpoint configuration does not match the model");
    for (size_t i = 0; i < stored.dilated_head.size(); ++i)
        if (stored.dilated_head[i].kernel != mine.dilated_head[i].kernel ||
            stored.dilated_head[i].rate != mine.dilated_head[i].rate)
            throw std::invalid_argument("checkpoint configuration does not match the model");
    fill_params(model, r);
}

} // namespace iifcn
