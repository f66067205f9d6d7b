#include "seqcast/model.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "seqcast/crc32.hpp"
#include "seqcast/error.hpp"

namespace seqcast {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* what) {
        if (v == 0) raise(ErrorKind::usage, std::string(what) + " must be positive");
    };
    positive(window, "window");
    positive(features, "features");
    positive(kernel, "kernel");
    positive(lstm_units, "lstm_units");
    positive(lstm_depth, "lstm_depth");
    positive(bilstm_units, "bilstm_units");
    positive(dense_units, "dense_units");
    if (conv_filters.empty()) raise(ErrorKind::usage, "conv_filters must name at least one layer");
    for (std::size_t f : conv_filters) positive(f, "conv filter count");
    if (output_units != 1) {
        raise(ErrorKind::usage, "output_units must be 1 (single-step forecaster)");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        raise(ErrorKind::usage, "dropout_rate must be in [0, 1)");
    }
    if (kernel > window) {
        raise(ErrorKind::usage, "kernel " + std::to_string(kernel) + " exceeds window " +
                                    std::to_string(window));
    }
    const std::size_t shrink = conv_filters.size() * (kernel - 1);
    if (shrink >= window) {
        raise(ErrorKind::usage, "conv stack consumes the whole window: " +
                                    std::to_string(conv_filters.size()) + " layers of kernel " +
                                    std::to_string(kernel) + " need window > " +
                                    std::to_string(shrink));
    }
}

std::size_t ModelConfig::conv_out_steps() const {
    return window - conv_filters.size() * (kernel - 1);
}

std::size_t ModelConfig::flat_dim() const { return conv_out_steps() * conv_filters.back(); }

// ---------------------------------------------------------------------------
// Build / enumerate
// ---------------------------------------------------------------------------

Model build_model(const ModelConfig& config) {
    config.validate();
    Model m;
    m.config = config;
    Rng rng(config.seed);

    std::size_t ch = config.features;
    for (std::size_t f : config.conv_filters) {
        m.conv.push_back(Conv1DParams::init(f, config.kernel, ch, rng));
        ch = f;
    }
    std::size_t in = config.flat_dim();
    for (std::size_t i = 0; i < config.lstm_depth; ++i) {
        m.lstm.push_back(LSTMParams::init(config.lstm_units, in, rng));
        in = config.lstm_units;
    }
    m.bilstm = BiLSTMParams::init(config.bilstm_units, config.lstm_units, rng);
    m.dense1 = DenseParams::init(config.dense_units, 2 * config.bilstm_units, rng);
    m.dense2 = DenseParams::init(config.output_units, config.dense_units, rng);
    return m;
}

namespace {

template <typename ModelT, typename RefT>
std::vector<RefT> collect_refs(ModelT& m) {
    std::vector<RefT> refs;
    auto push = [&refs](std::string name, auto& tensor) {
        refs.push_back(RefT{std::move(name), &tensor});
    };
    auto push_lstm = [&push](const std::string& prefix, auto& p) {
        for (std::size_t gi = 0; gi < 4; ++gi) {
            const std::string gate = prefix + "." + kGateNames[gi];
            push(gate + ".W", p.W[gi]);
            push(gate + ".U", p.U[gi]);
            push(gate + ".b", p.b[gi]);
        }
    };
    for (std::size_t i = 0; i < m.conv.size(); ++i) {
        const std::string prefix = "conv" + std::to_string(i + 1);
        push(prefix + ".kernels", m.conv[i].kernels);
        push(prefix + ".bias", m.conv[i].bias);
    }
    for (std::size_t i = 0; i < m.lstm.size(); ++i)
        push_lstm("lstm" + std::to_string(i + 1), m.lstm[i]);
    push_lstm("bilstm.fwd", m.bilstm.forward);
    push_lstm("bilstm.bwd", m.bilstm.backward);
    push("dense1.W", m.dense1.W);
    push("dense1.b", m.dense1.b);
    push("dense2.W", m.dense2.W);
    push("dense2.b", m.dense2.b);
    return refs;
}

} // namespace

std::vector<ParamRef> param_refs(Model& m) { return collect_refs<Model, ParamRef>(m); }
std::vector<ConstParamRef> param_refs(const Model& m) {
    return collect_refs<const Model, ConstParamRef>(m);
}

Model zero_clone(const Model& m) {
    Model z = m;
    for (ParamRef& ref : param_refs(z)) *ref.tensor = Tensor(ref.tensor->shape());
    return z;
}

std::vector<std::pair<std::string, std::size_t>> count_params(const Model& m) {
    std::vector<std::pair<std::string, std::size_t>> rows;
    std::size_t total = 0;
    auto add = [&](std::string name, std::size_t n) {
        total += n;
        rows.emplace_back(std::move(name), n);
    };
    for (std::size_t i = 0; i < m.conv.size(); ++i)
        add("conv" + std::to_string(i + 1), m.conv[i].param_count());
    for (std::size_t i = 0; i < m.lstm.size(); ++i)
        add("lstm" + std::to_string(i + 1), m.lstm[i].param_count());
    add("bilstm", m.bilstm.param_count());
    add("dense1", m.dense1.param_count());
    add("dense2", m.dense2.param_count());
    rows.emplace_back("total", total);
    return rows;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

double model_forward(const Model& m, const Tensor& window, bool train, Rng& rng,
                     ForwardCache* cache) {
    const ModelConfig& cfg = m.config;
    if (window.rank() != 2 || window.dim(0) != cfg.window || window.dim(1) != cfg.features) {
        raise(ErrorKind::shape, "model input shape " + window.shape_str() + " does not match [" +
                                    std::to_string(cfg.window) + " x " +
                                    std::to_string(cfg.features) + "]");
    }
    if (cache) {
        cache->conv.assign(m.conv.size(), Conv1DCache{});
        cache->lstm.assign(m.lstm.size(), LSTMCache{});
        cache->train = train;
        cache->valid = true;
    }

    Tensor x = window;
    for (std::size_t i = 0; i < m.conv.size(); ++i) {
        x = conv1d_forward(x, m.conv[i], cache ? &cache->conv[i] : nullptr);
        require_finite(x, ("conv" + std::to_string(i + 1)).c_str());
    }
    Tensor flat = flatten(x);
    if (cache) cache->flat = flat;

    // RepeatVector(window) feeds the identical flattened row to every step
    // of the first LSTM, so the specialized form applies.
    Tensor h =
        lstm_forward_repeated(flat, cfg.window, m.lstm[0], true, cache ? &cache->lstm[0] : nullptr);
    require_finite(h, "lstm1");
    h = dropout(h, cfg.dropout_rate, train, rng, cache ? &cache->dropout : nullptr);
    for (std::size_t i = 1; i < m.lstm.size(); ++i) {
        h = lstm_forward(h, m.lstm[i], true, cache ? &cache->lstm[i] : nullptr);
        require_finite(h, ("lstm" + std::to_string(i + 1)).c_str());
    }
    Tensor bi = bilstm_forward(h, m.bilstm, cache ? &cache->bilstm : nullptr);
    require_finite(bi, "bilstm");
    Tensor d1 = dense_forward(bi, m.dense1, Activation::relu, cache ? &cache->dense1 : nullptr);
    require_finite(d1, "dense1");
    Tensor y = dense_forward(d1, m.dense2, Activation::linear, cache ? &cache->dense2 : nullptr);
    require_finite(y, "dense2");
    return y[0];
}

double model_predict(const Model& m, const Tensor& window) {
    Rng unused(0);
    return model_forward(m, window, false, unused, nullptr);
}

Model model_backward(const Model& m, const ForwardCache& cache, double dloss) {
    if (!cache.valid || !cache.train) {
        raise(ErrorKind::consistency, "model backward needs a cache from a train-mode forward");
    }
    if (cache.conv.size() != m.conv.size() || cache.lstm.size() != m.lstm.size()) {
        raise(ErrorKind::consistency, "forward cache does not match the model architecture");
    }
    Model g = zero_clone(m);

    Tensor dy({1});
    dy[0] = dloss;
    DenseGrads d2 = dense_backward(m.dense2, cache.dense2, Activation::linear, dy);
    g.dense2.W = std::move(d2.W);
    g.dense2.b = std::move(d2.b);
    DenseGrads d1 = dense_backward(m.dense1, cache.dense1, Activation::relu, d2.input);
    g.dense1.W = std::move(d1.W);
    g.dense1.b = std::move(d1.b);

    BiLSTMGrads bg = bilstm_backward(m.bilstm, cache.bilstm, d1.input);
    g.bilstm.forward.W = std::move(bg.forward.W);
    g.bilstm.forward.U = std::move(bg.forward.U);
    g.bilstm.forward.b = std::move(bg.forward.b);
    g.bilstm.backward.W = std::move(bg.backward.W);
    g.bilstm.backward.U = std::move(bg.backward.U);
    g.bilstm.backward.b = std::move(bg.backward.b);

    Tensor dseq = std::move(bg.input);
    for (std::size_t i = m.lstm.size(); i-- > 1;) {
        LSTMGrads lg = lstm_backward(m.lstm[i], cache.lstm[i], dseq);
        g.lstm[i].W = std::move(lg.W);
        g.lstm[i].U = std::move(lg.U);
        g.lstm[i].b = std::move(lg.b);
        dseq = std::move(lg.input);
    }
    dseq = dropout_backward(cache.dropout, dseq);
    LSTMGrads l0 = lstm_backward(m.lstm[0], cache.lstm[0], dseq);
    g.lstm[0].W = std::move(l0.W);
    g.lstm[0].U = std::move(l0.U);
    g.lstm[0].b = std::move(l0.b);

    // The repeated-input backward already summed over time steps, which is
    // exactly the repeat_vector backward; undo the flatten by reshaping.
    Tensor dx =
        l0.input.reshaped({m.config.conv_out_steps(), m.config.conv_filters.back()});
    for (std::size_t i = m.conv.size(); i-- > 0;) {
        Conv1DGrads cg = conv1d_backward(m.conv[i], cache.conv[i], dx);
        g.conv[i].kernels = std::move(cg.kernels);
        g.conv[i].bias = std::move(cg.bias);
        dx = std::move(cg.input);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'E', 'Q', 'C', 'A', 'S', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void append_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_f64(std::string& out, double d) { append_u64(out, std::bit_cast<std::uint64_t>(d)); }

struct Reader {
    const unsigned char* p;
    std::size_t n;
    std::size_t pos = 0;

    const unsigned char* take(std::size_t k) {
        if (pos + k > n) raise(ErrorKind::format, "truncated checkpoint");
        const unsigned char* r = p + pos;
        pos += k;
        return r;
    }
    std::uint16_t u16() {
        const unsigned char* b = take(2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        const unsigned char* b = take(4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        const unsigned char* b = take(8);
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(std::size_t k) {
        const unsigned char* b = take(k);
        return std::string(reinterpret_cast<const char*>(b), k);
    }
};

std::string format_double(double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

} // namespace

std::string config_to_text(const ModelConfig& c) {
    std::ostringstream os;
    os << "window=" << c.window << "\n";
    os << "features=" << c.features << "\n";
    os << "conv_filters=";
    for (std::size_t i = 0; i < c.conv_filters.size(); ++i)
        os << (i ? "," : "") << c.conv_filters[i];
    os << "\n";
    os << "kernel=" << c.kernel << "\n";
    os << "lstm_units=" << c.lstm_units << "\n";
    os << "lstm_depth=" << c.lstm_depth << "\n";
    os << "dropout_rate=" << format_double(c.dropout_rate) << "\n";
    os << "bilstm_units=" << c.bilstm_units << "\n";
    os << "dense_units=" << c.dense_units << "\n";
    os << "output_units=" << c.output_units << "\n";
    os << "seed=" << c.seed << "\n";
    return os.str();
}

ModelConfig config_from_text(const std::string& text) {
    ModelConfig c;
    c.conv_filters.clear();
    std::istringstream is(text);
    std::string line;
    int seen = 0;
    auto parse_size = [](const std::string& v, const std::string& key) {
        try {
            return static_cast<std::size_t>(std::stoull(v));
        } catch (const std::exception&) {
            raise(ErrorKind::format, "bad checkpoint config value for " + key + ": " + v);
        }
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            raise(ErrorKind::format, "bad checkpoint config line: " + line);
        }
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        ++seen;
        if (key == "window") {
            c.window = parse_size(val, key);
        } else if (key == "features") {
            c.features = parse_size(val, key);
        } else if (key == "conv_filters") {
            std::istringstream vs(val);
            std::string item;
            while (std::getline(vs, item, ',')) c.conv_filters.push_back(parse_size(item, key));
        } else if (key == "kernel") {
            c.kernel = parse_size(val, key);
        } else if (key == "lstm_units") {
            c.lstm_units = parse_size(val, key);
        } else if (key == "lstm_depth") {
            c.lstm_depth = parse_size(val, key);
        } else if (key == "dropout_rate") {
            c.dropout_rate = std::strtod(val.c_str(), nullptr);
        } else if (key == "bilstm_units") {
            c.bilstm_units = parse_size(val, key);
        } else if (key == "dense_units") {
            c.dense_units = parse_size(val, key);
        } else if (key == "output_units") {
            c.output_units = parse_size(val, key);
        } else if (key == "seed") {
            try {
                c.seed = std::stoull(val);
            } catch (const std::exception&) {
                raise(ErrorKind::format, "bad checkpoint config value for seed: " + val);
            }
        } else {
            raise(ErrorKind::format, "unknown checkpoint config key: " + key);
        }
    }
    if (seen != 11) {
        raise(ErrorKind::format,
              "checkpoint config has " + std::to_string(seen) + " entries, expected 11");
    }
    c.validate();
    return c;
}

void save_model(const Model& m, const ScalerParams& scaler, const std::string& path) {
    if (scaler.features() == 0) {
        raise(ErrorKind::consistency, "refusing to save a checkpoint without a fitted scaler");
    }
    if (scaler.features() != m.config.features) {
        raise(ErrorKind::consistency,
              "scaler covers " + std::to_string(scaler.features()) + " features, model expects " +
                  std::to_string(m.config.features));
    }
    std::string buf;
    buf.append(kMagic, sizeof kMagic);
    append_u32(buf, kVersion);
    const std::size_t length_field = buf.size();
    append_u64(buf, 0); // patched below with the final file size

    const std::string cfg = config_to_text(m.config);
    append_u32(buf, static_cast<std::uint32_t>(cfg.size()));
    buf += cfg;

    append_u32(buf, static_cast<std::uint32_t>(scaler.features()));
    for (std::size_t f = 0; f < scaler.features(); ++f) {
        append_f64(buf, scaler.min[f]);
        append_f64(buf, scaler.max[f]);
    }

    const auto refs = param_refs(m);
    append_u32(buf, static_cast<std::uint32_t>(refs.size()));
    for (const ConstParamRef& ref : refs) {
        append_u16(buf, static_cast<std::uint16_t>(ref.name.size()));
        buf += ref.name;
        buf.push_back(static_cast<char>(ref.tensor->rank()));
        for (std::size_t d = 0; d < ref.tensor->rank(); ++d)
            append_u32(buf, static_cast<std::uint32_t>(ref.tensor->dim(d)));
        for (std::size_t i = 0; i < ref.tensor->size(); ++i) append_f64(buf, (*ref.tensor)[i]);
    }

    const std::uint64_t total = buf.size() + 4;
    for (int i = 0; i < 8; ++i)
        buf[length_field + static_cast<std::size_t>(i)] =
            static_cast<char>((total >> (8 * i)) & 0xFF);
    append_u32(buf, crc32(0, buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot open checkpoint for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) raise(ErrorKind::io, "failed writing checkpoint: " + path);
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof kMagic + 4 + 8) raise(ErrorKind::format, "truncated checkpoint");
    if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
        raise(ErrorKind::format, "not a checkpoint file (bad magic): " + path);
    }
    Reader r{reinterpret_cast<const unsigned char*>(buf.data()), buf.size()};
    r.take(sizeof kMagic);
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        raise(ErrorKind::format, "unsupported checkpoint version " + std::to_string(version) +
                                     " (this build reads version " + std::to_string(kVersion) +
                                     ")");
    }
    const std::uint64_t declared = r.u64();
    if (buf.size() < declared) raise(ErrorKind::format, "truncated checkpoint");
    if (buf.size() != declared) raise(ErrorKind::format, "checkpoint has trailing garbage");
    const std::uint32_t stored_crc =
        static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 4])) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 3])) << 8) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 2])) << 16) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 1])) << 24);
    if (crc32(0, buf.data(), buf.size() - 4) != stored_crc) {
        raise(ErrorKind::format, "checkpoint checksum mismatch (file is corrupted)");
    }
    r.n = buf.size() - 4;

    const std::uint32_t cfg_len = r.u32();
    const ModelConfig config = config_from_text(r.bytes(cfg_len));

    ModelBundle bundle;
    const std::uint32_t scaler_n = r.u32();
    if (scaler_n == 0) raise(ErrorKind::format, "checkpoint is missing the scaler block");
    if (scaler_n != config.features) {
        raise(ErrorKind::format, "checkpoint scaler covers " + std::to_string(scaler_n) +
                                     " features, config expects " +
                                     std::to_string(config.features));
    }
    for (std::uint32_t f = 0; f < scaler_n; ++f) {
        bundle.scaler.min.push_back(r.f64());
        bundle.scaler.max.push_back(r.f64());
    }

    bundle.model = build_model(config);
    auto refs = param_refs(bundle.model);
    const std::uint32_t tensor_n = r.u32();
    if (tensor_n != refs.size()) {
        raise(ErrorKind::format, "checkpoint holds " + std::to_string(tensor_n) +
                                     " tensors, architecture needs " +
                                     std::to_string(refs.size()));
    }
    for (ParamRef& ref : refs) {
        const std::uint16_t name_len = r.u16();
        const std::string name = r.bytes(name_len);
        if (name != ref.name) {
            raise(ErrorKind::format,
                  "checkpoint tensor \"" + name + "\" where \"" + ref.name + "\" was expected");
        }
        const std::size_t rank = *r.take(1);
        if (rank != ref.tensor->rank()) {
            raise(ErrorKind::format, "checkpoint tensor " + name + " has rank " +
                                         std::to_string(rank) + ", expected " +
                                         std::to_string(ref.tensor->rank()));
        }
        std::vector<std::size_t> shape(rank);
        for (std::size_t d = 0; d < rank; ++d) shape[d] = r.u32();
        if (shape != ref.tensor->shape()) {
            raise(ErrorKind::format, "checkpoint tensor " + name + " has unexpected shape");
        }
        std::vector<double> values(ref.tensor->size());
        for (double& v : values) v = r.f64();
        *ref.tensor = Tensor(std::move(shape), std::move(values));
    }
    if (r.pos != r.n) raise(ErrorKind::format, "checkpoint has unread payload bytes");
    return bundle;
}

} // namespace seqcast
