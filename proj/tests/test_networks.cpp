#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "shiftgan/checkpoint.hpp"
#include "shiftgan/errors.hpp"
#include "shiftgan/networks.hpp"

using namespace shiftgan;
namespace fs = std::filesystem;

namespace {

GeneratorSpec toy_gen_spec(ag::PadMode pm = ag::PadMode::Reflect) {
    GeneratorSpec spec;
    spec.stem_width = 8;
    spec.down_widths = {16, 32};
    spec.res_blocks = 1;
    spec.padding = pm;
    return spec;
}

DiscriminatorSpec toy_disc_spec() {
    DiscriminatorSpec spec;
    spec.widths = {16, 32};
    spec.last_width = 64;
    return spec;
}

bool params_equal(ParamRefs a, ParamRefs b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i]->value.v != b[i]->value.v) return false;
    return true;
}

} // namespace

TEST_CASE("generator spec: K is the product of encoder strides") {
    GeneratorSpec def;
    CHECK(def.downsample_factor() == 4);   // two stride-2 stages

    GeneratorSpec deep = def;
    deep.down_widths = {32, 64, 128};
    CHECK(deep.downsample_factor() == 8);

    GeneratorSpec broken = toy_gen_spec();
    broken.up_factors = {2};   // decoder only doubles once
    CHECK_THROWS_AS(broken.validate(), ContractError);

    GeneratorSpec empty = toy_gen_spec();
    empty.down_widths = {};
    CHECK_THROWS_AS(empty.validate(), ContractError);
}

TEST_CASE("generator: size preserving, range bounded, deterministic per seed") {
    GeneratorSpec spec = toy_gen_spec();
    Rng rng_a(42), rng_b(42), rng_c(43);
    Generator a(spec, rng_a), b(spec, rng_b), c(spec, rng_c);
    CHECK(params_equal(a.params(), b.params()));
    CHECK(!params_equal(a.params(), c.params()));

    Rng data_rng(1);
    for (int size : {16, 32}) {
        Image img = oracle::random_image(size, size, 3, data_rng);
        Image out = a.apply(img);
        CHECK(out.height == size);
        CHECK(out.width == size);
        CHECK(out.channels == 3);
        for (float v : out.data) {
            CHECK(v >= -1.0f);
            CHECK(v <= 1.0f);
        }
    }
    // non-multiple-of-K sizes go through pad-and-crop
    Image odd = oracle::random_image(18, 22, 3, data_rng);
    Image out = a.apply(odd);
    CHECK(out.height == 18);
    CHECK(out.width == 22);

    // identical inputs give bitwise identical outputs
    Image again = a.apply(odd);
    CHECK(again.data == out.data);
}

TEST_CASE("circular generator: equivariant at multiples of K, not below") {
    GeneratorSpec spec = toy_gen_spec(ag::PadMode::Circular);
    Rng rng(7);
    Generator gen(spec, rng);
    Rng data_rng(11);
    Image img = oracle::random_image(32, 32, 3, data_rng);
    ProbeReport rep = probe_shift_invariance(gen.as_fn(), img, 8, 'X', ShiftPolicy::Circular);
    REQUIRE(rep.rows.size() == 9);
    CHECK(rep.rows[4].discrepancy < 1e-5);
    CHECK(rep.rows[8].discrepancy < 1e-5);
    for (int d : {1, 2, 3, 5, 6, 7})
        CHECK(rep.rows[d].discrepancy > rep.rows[4].discrepancy);
}

TEST_CASE("discriminator: receptive fields and output map sizes") {
    DiscriminatorSpec def;
    CHECK(def.receptive_field() == 70);
    Rng rng(3);
    Discriminator d(def, rng);
    ag::Graph g;
    Tensor x({3, 256, 256});
    ag::Var out = d.forward(g, ag::constant(g, x), false);
    CHECK(out->val.shape == std::vector<int>({1, 30, 30}));

    Tensor small({3, 64, 64});
    ag::Graph g2;
    CHECK_THROWS_AS(d.forward(g2, ag::constant(g2, small), false), ContractError);

    DiscriminatorSpec toy = toy_disc_spec();
    CHECK(toy.receptive_field() == 34);
    Rng rng_a(5), rng_b(5);
    Discriminator da(toy, rng_a), db(toy, rng_b);
    CHECK(params_equal(da.params(), db.params()));
}

TEST_CASE("instance norm backward matches finite differences") {
    Rng rng(13);
    Conv2d conv("in.c", 3, 4, 3, 1, 1, ag::PadMode::Reflect, rng);
    InstanceNorm norm("in.n", 4);
    ParamRefs params;
    conv.collect(params);
    norm.collect(params);
    for (Param* p : params)
        if (p->name == "in.c.w")
            for (float& v : p->value.v) v *= 20.0f;
    Tensor x = oracle::random_tensor({3, 8, 8}, rng);
    double err = testutil::grad_check(params, [&](ag::Graph& g) {
        ag::Var h = ag::tanh_op(g, norm(g, conv(g, ag::constant(g, x))));
        return ag::mean_all(g, ag::mul(g, h, h));
    });
    CHECK(err < 1e-3);
}

TEST_CASE("toy segmenter: logits shape, argmax prediction, freeze flag") {
    Rng rng(17);
    auto seg = toy_segmenter(3, rng);
    CHECK(seg->num_classes() == 3);
    Image img = oracle::random_image(32, 32, 3, rng);
    ag::Graph g;
    ag::Var logits = seg->logits(g, ag::constant(g, to_chw(img)), false);
    CHECK(logits->val.shape == std::vector<int>({3, 32, 32}));

    SemanticMap pred = seg->predict(img);
    CHECK(pred.height == 32);
    for (int32_t lab : pred.labels) {
        CHECK(lab >= 0);
        CHECK(lab < 3);
    }

    CHECK(!seg->frozen());
    seg->freeze();
    CHECK(seg->frozen());
    // frozen: a "training" pass must not accumulate parameter gradients
    for (Param* p : seg->params()) p->zero_grad();
    ag::Graph g2;
    ag::Var out = seg->logits(g2, ag::constant(g2, to_chw(img)), true);
    g2.backward(ag::mean_all(g2, out));
    for (Param* p : seg->params())
        for (float v : p->grad.v) CHECK(v == 0.0f);

    CHECK_THROWS_AS(Segmenter(1, 4, rng), ContractError);
}

TEST_CASE("perceptual taps: shapes, determinism, frozen parameters") {
    Rng rng(19);
    PerceptualTaps taps(PerceptualSpec{}, rng);
    Image img = oracle::random_image(32, 32, 3, rng);
    ag::Graph g;
    std::vector<ag::Var> t = taps.forward(g, ag::constant(g, to_chw(img)));
    REQUIRE(t.size() == 4);
    CHECK(t[0]->val.shape == std::vector<int>({8, 32, 32}));
    CHECK(t[1]->val.shape == std::vector<int>({16, 16, 16}));
    CHECK(t[2]->val.shape == std::vector<int>({32, 8, 8}));
    CHECK(t[3]->val.shape == std::vector<int>({64, 4, 4}));
    CHECK(std::string(PerceptualTaps::tap_name(PerceptualTaps::kContentTap)) == "relu2_2");

    ag::Graph g2;
    std::vector<ag::Var> t2 = taps.forward(g2, ag::constant(g2, to_chw(img)));
    for (int i = 0; i < 4; ++i) CHECK(t[i]->val.v == t2[i]->val.v);

    ag::Graph g3;
    CHECK_THROWS_AS(taps.forward(g3, ag::constant(g3, Tensor({3, 30, 30}))), ContractError);
}

TEST_CASE("checkpoint: params round-trip bitwise, bad files rejected") {
    fs::path dir = fs::temp_directory_path() / "shiftgan_ckpt_test";
    fs::create_directories(dir);
    std::string path = (dir / "g.ckpt").string();

    GeneratorSpec spec = toy_gen_spec();
    Rng rng(23);
    Generator gen(spec, rng);

    Checkpoint ck;
    ck.kind = "adapt";
    ck.seed = 23;
    ck.iteration = 17;
    ck.shift_policy = "overlap-crop";
    ck.weights = json{{"lambda_cyc", 10.0}};
    ck.specs = json{{"generator", generator_spec_to_json(spec)}};
    store_params(ck, "g_r2s", gen.params());
    store_params(ck, "g_s2r", gen.params());
    save_checkpoint(path, ck);

    Checkpoint back = load_checkpoint(path);
    CHECK(back.kind == "adapt");
    CHECK(back.seed == 23);
    CHECK(back.iteration == 17);
    CHECK(back.shift_policy == "overlap-crop");
    GeneratorSpec spec_back = generator_spec_from_json(back.specs.at("generator"));
    CHECK(spec_back.downsample_factor() == spec.downsample_factor());
    CHECK(spec_back.stem_width == spec.stem_width);

    Rng rng2(99);
    Generator gen2(spec, rng2);
    CHECK(!params_equal(gen.params(), gen2.params()));
    restore_params(back, "g_r2s", gen2.params());
    CHECK(params_equal(gen.params(), gen2.params()));
    CHECK(param_digest(gen.params()) == param_digest(gen2.params()));

    CHECK_THROWS_AS(restore_params(back, "missing_role", gen2.params()), FormatError);
    CHECK_THROWS_AS(load_checkpoint((dir / "absent.ckpt").string()), IoError);
    {
        std::ofstream bad(dir / "bad.ckpt", std::ios::binary);
        bad << "XXXXGARBAGE";
    }
    CHECK_THROWS_AS(load_checkpoint((dir / "bad.ckpt").string()), FormatError);
    fs::remove_all(dir);
}
