#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "seqcast/crc32.hpp"
#include "seqcast/error.hpp"
#include "seqcast/layers.hpp"
#include "seqcast/model.hpp"
#include "seqcast/preprocess.hpp"
#include "seqcast/rng.hpp"
#include "seqcast/tensor.hpp"

using namespace seqcast;
using testutil::bit_equal;
using testutil::close;
using testutil::fd_grad;
using testutil::TempDir;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.window = 6;
    c.features = 1;
    c.conv_filters = {4, 4};
    c.kernel = 2;
    c.lstm_units = 3;
    c.lstm_depth = 2;
    c.dropout_rate = 0.2;
    c.bilstm_units = 4;
    c.dense_units = 5;
    c.seed = 7;
    return c;
}

std::map<std::string, std::size_t> count_map(const Model& m) {
    std::map<std::string, std::size_t> out;
    for (const auto& [name, n] : count_params(m)) out[name] = n;
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    REQUIRE(out.good());
}

void patch_u32(std::string& buf, std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf[off + static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t read_u32(const std::string& buf, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + static_cast<std::size_t>(i)])) << (8 * i);
    return v;
}

// Recomputes the trailing CRC-32 after the payload was edited.
void reseal(std::string& buf) {
    patch_u32(buf, buf.size() - 4, crc32(0, buf.data(), buf.size() - 4));
}

ErrorKind load_error(const std::string& path, std::string* message = nullptr) {
    try {
        load_model(path);
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.kind();
    }
    FAIL("expected load_model to throw");
    return ErrorKind::usage;
}

ScalerParams toy_scaler(std::size_t features) {
    ScalerParams p;
    for (std::size_t f = 0; f < features; ++f) {
        p.min.push_back(-10.0 - static_cast<double>(f));
        p.max.push_back(35.0 + static_cast<double>(f));
    }
    return p;
}

} // namespace

TEST_CASE("default architecture parameter counts") {
    Model m = build_model(ModelConfig{});
    auto counts = count_map(m);
    CHECK(counts.at("conv1") == 768);
    CHECK(counts.at("conv2") == 65664);
    CHECK(counts.at("lstm1") == 1474000); // 4*100*(3584+100+1); flat input is 28*128
    CHECK(counts.at("lstm2") == 80400);
    CHECK(counts.at("lstm3") == 80400);
    CHECK(counts.at("lstm4") == 80400);
    CHECK(counts.at("bilstm") == 234496); // 2 * 4*128*(100+128+1)
    CHECK(counts.at("dense1") == 25700);
    CHECK(counts.at("dense2") == 101);
    CHECK(counts.at("total") == 2041929);

    std::size_t sum = 0;
    for (const auto& [name, n] : counts)
        if (name != "total") sum += n;
    CHECK(sum == counts.at("total"));
}

TEST_CASE("parameter counts follow the closed forms on other shapes") {
    ModelConfig c = tiny_config();
    Model m = build_model(c);
    auto counts = count_map(m);
    CHECK(c.conv_out_steps() == 4);
    CHECK(c.flat_dim() == 16);
    CHECK(counts.at("conv1") == 4 * (2 * 1 + 1));
    CHECK(counts.at("conv2") == 4 * (2 * 4 + 1));
    CHECK(counts.at("lstm1") == 4 * 3 * (16 + 3 + 1));
    CHECK(counts.at("lstm2") == 4 * 3 * (3 + 3 + 1));
    CHECK(counts.at("bilstm") == 2 * 4 * 4 * (3 + 4 + 1));
    CHECK(counts.at("dense1") == 5 * (2 * 4 + 1));
    CHECK(counts.at("dense2") == 1 * (5 + 1));
    CHECK(counts.at("total") == 679);

    std::size_t via_refs = 0;
    for (const auto& ref : param_refs(m)) via_refs += ref.tensor->size();
    CHECK(via_refs == 679);
}

TEST_CASE("default config shape bookkeeping") {
    ModelConfig c;
    CHECK(c.conv_out_steps() == 28); // 30 -> 29 -> 28 under kernel 2
    CHECK(c.flat_dim() == 28 * 128);
}

TEST_CASE("param_refs names are unique and ordered by layer then gate") {
    Model m = build_model(tiny_config());
    auto refs = param_refs(m);
    std::set<std::string> names;
    for (const auto& r : refs) names.insert(r.name);
    CHECK(names.size() == refs.size());
    CHECK(refs.size() == 56);

    CHECK(refs[0].name == "conv1.kernels");
    CHECK(refs[1].name == "conv1.bias");
    CHECK(refs[2].name == "conv2.kernels");
    CHECK(refs[4].name == "lstm1.input.W");
    CHECK(refs[5].name == "lstm1.input.U");
    CHECK(refs[6].name == "lstm1.input.b");
    CHECK(refs[7].name == "lstm1.forget.W");
    CHECK(refs[10].name == "lstm1.cell.W");
    CHECK(refs[13].name == "lstm1.output.W");
    CHECK(refs[16].name == "lstm2.input.W");
    CHECK(refs[28].name == "bilstm.fwd.input.W");
    CHECK(refs[40].name == "bilstm.bwd.input.W");
    CHECK(refs[52].name == "dense1.W");
    CHECK(refs[53].name == "dense1.b");
    CHECK(refs[54].name == "dense2.W");
    CHECK(refs[55].name == "dense2.b");
}

TEST_CASE("building twice from one seed is identical; other seeds differ") {
    ModelConfig c = tiny_config();
    Model a = build_model(c);
    Model b = build_model(c);
    auto ra = param_refs(a), rb = param_refs(b);
    for (std::size_t i = 0; i < ra.size(); ++i) CHECK(bit_equal(*ra[i].tensor, *rb[i].tensor));

    c.seed = 8;
    Model d = build_model(c);
    auto rd = param_refs(d);
    bool any_diff = false;
    for (std::size_t i = 0; i < ra.size(); ++i) any_diff |= !bit_equal(*ra[i].tensor, *rd[i].tensor);
    CHECK(any_diff);
}

TEST_CASE("zero_clone zeroes every tensor but keeps the architecture") {
    Model m = build_model(tiny_config());
    Model z = zero_clone(m);
    CHECK(z.config == m.config);
    auto rm = param_refs(m), rz = param_refs(z);
    REQUIRE(rm.size() == rz.size());
    for (std::size_t i = 0; i < rz.size(); ++i) {
        CHECK(rz[i].name == rm[i].name);
        CHECK(rz[i].tensor->shape() == rm[i].tensor->shape());
        for (std::size_t j = 0; j < rz[i].tensor->size(); ++j) CHECK((*rz[i].tensor)[j] == 0.0);
    }
}

TEST_CASE("all-zero parameters predict exactly zero") {
    Model z = zero_clone(build_model(tiny_config()));
    Rng rng(3);
    Tensor x = uniform_init(rng, {6, 1}, 1.0);
    CHECK(model_predict(z, x) == 0.0);
}

TEST_CASE("prediction is deterministic and equals an eval-mode forward") {
    Model m = build_model(tiny_config());
    Rng rng(3);
    Tensor x = uniform_init(rng, {6, 1}, 1.0);
    const double p1 = model_predict(m, x);
    const double p2 = model_predict(m, x);
    CHECK(p1 == p2);
    Rng unused(999);
    CHECK(model_forward(m, x, false, unused) == p1);
}

TEST_CASE("eval forward equals hand-chained layer calls") {
    ModelConfig c = tiny_config();
    Model m = build_model(c);
    Rng rng(4);
    Tensor x = uniform_init(rng, {c.window, c.features}, 1.0);

    Tensor h = conv1d_forward(x, m.conv[0]);
    h = conv1d_forward(h, m.conv[1]);
    Tensor flat = flatten(h);
    Tensor seq = lstm_forward(repeat_vector(flat, c.window), m.lstm[0], true);
    // Dropout is the identity in eval mode.
    seq = lstm_forward(seq, m.lstm[1], true);
    Tensor merged = bilstm_forward(seq, m.bilstm);
    Tensor d1 = dense_forward(merged, m.dense1, Activation::relu);
    Tensor d2 = dense_forward(d1, m.dense2, Activation::linear);

    CHECK(model_predict(m, x) == d2[0]);
}

TEST_CASE("train-mode forward applies dropout after the first LSTM") {
    Model m = build_model(tiny_config());
    Rng data_rng(5);
    Tensor x = uniform_init(data_rng, {6, 1}, 1.0);
    const double eval_pred = model_predict(m, x);
    bool differs = false;
    for (std::uint64_t s = 0; s < 8 && !differs; ++s) {
        Rng rng(s);
        differs = model_forward(m, x, true, rng) != eval_pred;
    }
    CHECK(differs);
}

TEST_CASE("forward validates the window shape") {
    Model m = build_model(tiny_config());
    Rng rng(6);
    Tensor bad1 = uniform_init(rng, {5, 1}, 1.0);
    Tensor bad2 = uniform_init(rng, {6, 2}, 1.0);
    CHECK_THROWS_AS(model_predict(m, bad1), Error);
    CHECK_THROWS_AS(model_predict(m, bad2), Error);
}

TEST_CASE("backward gradients match finite differences through the whole stack") {
    ModelConfig c = tiny_config();
    Model m = build_model(c);
    // Keep ReLU preactivations away from zero so the difference quotient
    // stays on one side of the kink.
    for (auto& conv : m.conv)
        for (std::size_t i = 0; i < conv.bias.size(); ++i) conv.bias[i] += 0.25;
    for (std::size_t i = 0; i < m.dense1.b.size(); ++i) m.dense1.b[i] += 0.25;

    Rng rng(8);
    Tensor x = uniform_init(rng, {c.window, c.features}, 1.0);
    const std::uint64_t drop_seed = 4242;

    auto value = [&] {
        Rng drop(drop_seed);
        return model_forward(m, x, true, drop);
    };

    ForwardCache cache;
    Rng drop(drop_seed);
    model_forward(m, x, true, drop, &cache);
    Model g = model_backward(m, cache, 1.0);

    auto grads = param_refs(g);
    auto params = param_refs(m);
    // Spot-check a spread of blocks end to end; the dedicated checker sweeps
    // every element.
    for (const char* name : {"conv1.kernels", "conv2.bias", "lstm1.forget.W", "lstm2.cell.U",
                             "bilstm.fwd.output.b", "bilstm.bwd.input.W", "dense1.W", "dense2.W",
                             "dense2.b"}) {
        std::size_t idx = params.size();
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i].name == name) idx = i;
        REQUIRE(idx < params.size());
        Tensor& pt = *params[idx].tensor;
        const Tensor& gt = *grads[idx].tensor;
        for (std::size_t i = 0; i < pt.size(); ++i) {
            CAPTURE(name);
            CHECK(close(gt[i], fd_grad(pt, i, value), 1e-6));
        }
    }
}

TEST_CASE("backward scales linearly in the loss gradient and vanishes at zero") {
    ModelConfig c = tiny_config();
    Model m = build_model(c);
    Rng rng(9);
    Tensor x = uniform_init(rng, {c.window, c.features}, 1.0);

    ForwardCache cache;
    Rng drop(11);
    model_forward(m, x, true, drop, &cache);

    Model g0 = model_backward(m, cache, 0.0);
    for (const auto& ref : param_refs(g0))
        for (std::size_t i = 0; i < ref.tensor->size(); ++i) CHECK((*ref.tensor)[i] == 0.0);

    Model g1 = model_backward(m, cache, 1.0);
    Model g3 = model_backward(m, cache, 3.0);
    auto r1 = param_refs(g1), r3 = param_refs(g3);
    for (std::size_t k = 0; k < r1.size(); ++k)
        for (std::size_t i = 0; i < r1[k].tensor->size(); ++i)
            CHECK(close((*r3[k].tensor)[i], 3.0 * (*r1[k].tensor)[i], 1e-12));
}

TEST_CASE("backward refuses caches that did not come from a train forward") {
    Model m = build_model(tiny_config());
    Rng rng(10);
    Tensor x = uniform_init(rng, {6, 1}, 1.0);

    ForwardCache never_filled;
    CHECK_THROWS_AS(model_backward(m, never_filled, 1.0), Error);

    ForwardCache eval_cache;
    Rng r2(1);
    model_forward(m, x, false, r2, &eval_cache);
    try {
        model_backward(m, eval_cache, 1.0);
        FAIL("expected consistency error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::consistency);
    }
}

TEST_CASE("config text round-trips and rejects malformed input") {
    ModelConfig c = tiny_config();
    CHECK(config_from_text(config_to_text(c)) == c);
    ModelConfig d;
    CHECK(config_from_text(config_to_text(d)) == d);

    CHECK_THROWS_AS(config_from_text("window=30\n"), Error); // missing keys
    CHECK_THROWS_AS(config_from_text(config_to_text(c) + "bogus=1\n"), Error);
    std::string broken = config_to_text(c);
    broken.replace(broken.find("window=6"), 8, "window=x");
    CHECK_THROWS_AS(config_from_text(broken), Error);
}

TEST_CASE("config validation rejects impossible geometry") {
    ModelConfig c = tiny_config();
    c.kernel = 7; // larger than the window
    CHECK_THROWS_AS(c.validate(), Error);

    ModelConfig d = tiny_config();
    d.window = 3;
    d.conv_filters = {4, 4, 4}; // 3 -> 2 -> 1 -> 0 steps
    CHECK_THROWS_AS(d.validate(), Error);

    ModelConfig e = tiny_config();
    e.dropout_rate = 1.0;
    CHECK_THROWS_AS(e.validate(), Error);

    ModelConfig f = tiny_config();
    f.lstm_depth = 0;
    CHECK_THROWS_AS(f.validate(), Error);

    ModelConfig g = tiny_config();
    g.conv_filters.clear();
    CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("checkpoint round-trip preserves parameters, config, and scaler bitwise") {
    TempDir dir;
    const std::string path = dir.file("model.bin");
    Model m = build_model(tiny_config());
    ScalerParams scaler = toy_scaler(1);
    save_model(m, scaler, path);

    ModelBundle loaded = load_model(path);
    CHECK(loaded.model.config == m.config);
    CHECK(loaded.scaler.min == scaler.min);
    CHECK(loaded.scaler.max == scaler.max);

    auto ra = param_refs(m);
    auto rb = param_refs(loaded.model);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
        CHECK(ra[i].name == rb[i].name);
        CHECK(bit_equal(*ra[i].tensor, *rb[i].tensor));
    }

    Rng rng(12);
    Tensor x = uniform_init(rng, {6, 1}, 1.0);
    CHECK(model_predict(m, x) == model_predict(loaded.model, x));
}

TEST_CASE("saving the same model twice produces identical bytes") {
    TempDir dir;
    Model m = build_model(tiny_config());
    ScalerParams scaler = toy_scaler(1);
    save_model(m, scaler, dir.file("a.bin"));
    save_model(m, scaler, dir.file("b.bin"));
    CHECK(read_file(dir.file("a.bin")) == read_file(dir.file("b.bin")));
}

TEST_CASE("save refuses an unfitted or mismatched scaler") {
    TempDir dir;
    Model m = build_model(tiny_config());
    try {
        save_model(m, ScalerParams{}, dir.file("x.bin"));
        FAIL("expected consistency error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::consistency);
    }
    CHECK_THROWS_AS(save_model(m, toy_scaler(3), dir.file("x.bin")), Error);
}

TEST_CASE("loading a missing file is an io error") {
    try {
        load_model("/nonexistent/path/model.bin");
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
}

TEST_CASE("checkpoint corruption raises distinct, specific errors") {
    TempDir dir;
    const std::string path = dir.file("model.bin");
    Model m = build_model(tiny_config());
    save_model(m, toy_scaler(1), path);
    const std::string good = read_file(path);
    std::string msg;

    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        write_file(path, bad);
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("magic") != std::string::npos);
    }

    SUBCASE("unsupported version") {
        std::string bad = good;
        bad[8] = 2;
        write_file(path, bad);
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("version") != std::string::npos);
    }

    SUBCASE("truncated file") {
        write_file(path, good.substr(0, good.size() - 10));
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("truncated") != std::string::npos);
    }

    SUBCASE("severely truncated file") {
        write_file(path, good.substr(0, 6));
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("truncated") != std::string::npos);
    }

    SUBCASE("trailing garbage") {
        write_file(path, good + "extra");
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("trailing") != std::string::npos);
    }

    SUBCASE("flipped payload byte fails the checksum") {
        std::string bad = good;
        bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 0x40);
        write_file(path, bad);
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("checksum") != std::string::npos);
    }

    SUBCASE("scaler block zeroed out") {
        std::string bad = good;
        const std::size_t cfg_len = read_u32(bad, 20);
        patch_u32(bad, 24 + cfg_len, 0);
        reseal(bad);
        write_file(path, bad);
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("scaler") != std::string::npos);
    }

    SUBCASE("scaler feature count disagrees with the config") {
        std::string bad = good;
        const std::size_t cfg_len = read_u32(bad, 20);
        patch_u32(bad, 24 + cfg_len, 9);
        reseal(bad);
        write_file(path, bad);
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("scaler") != std::string::npos);
    }

    SUBCASE("renamed tensor is rejected") {
        std::string bad = good;
        const std::size_t at = bad.find("conv1.kernels");
        REQUIRE(at != std::string::npos);
        bad[at] = 'q';
        reseal(bad);
        write_file(path, bad);
        CHECK(load_error(path, &msg) == ErrorKind::format);
        CHECK(msg.find("qonv1.kernels") != std::string::npos);
    }
}
