#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <limits>

#include "hal/serialize.hpp"
#include "hal/train.hpp"

using namespace hal;

namespace {

// Small synthetic image set: one bright block per class plus noise.
LabeledDataset make_synth(std::size_t n, int classes, std::uint64_t seed,
                          bool pure_noise = false) {
    Rng rng(seed);
    LabeledDataset ds;
    ds.images = Tensor<float>({n, 1, 8, 8});
    ds.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        int label = static_cast<int>(r % static_cast<std::size_t>(classes));
        ds.labels[r] = label;
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) {
                double v = 0.35 + 0.1 * rng.normal();
                if (!pure_noise && static_cast<int>(i / 2) * 4 + static_cast<int>(j / 2) ==
                                       label)
                    v += 0.5;
                ds.images.at(r, 0, i, j) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
    }
    compute_channel_stats(ds);
    return ds;
}

TrainConfig tiny_config(int epochs, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.depth = 10;
    cfg.stage_widths = {4};
    cfg.batch_size = 16;
    cfg.epochs = epochs;
    cfg.lr_max = 0.05;
    cfg.lr_min = 0.0;
    cfg.momentum = 0.9;
    cfg.seed = seed;
    cfg.augment = AugmentPolicy{4, false, false, true};
    cfg.eval_batch = 64;
    return cfg;
}

}  // namespace

TEST_CASE("cosine schedule hits both endpoints exactly") {
    TrainConfig cfg;
    cfg.epochs = 250;
    cfg.lr_max = 1.0;
    cfg.lr_min = 0.0;
    CHECK(std::fabs(cosine_lr(0, cfg) - 1.0) < 1e-12);
    CHECK(std::fabs(cosine_lr(250, cfg)) < 1e-12);
    CHECK(cosine_lr(125, cfg) == doctest::Approx(0.5).epsilon(1e-12));
    // monotone decreasing over the sweep
    for (int t = 1; t <= 250; ++t) CHECK(cosine_lr(t, cfg) < cosine_lr(t - 1, cfg));

    cfg.lr_min = 0.1;
    CHECK(std::fabs(cosine_lr(250, cfg) - 0.1) < 1e-12);
    CHECK(std::fabs(cosine_lr(0, cfg) - 1.0) < 1e-12);
}

TEST_CASE("sgd momentum follows the classical update rule") {
    Tensor<double> w({1}, {1.0});
    Tensor<double> g({1}, {0.5});
    SgdOptimizer<double> opt({{"w", &w, &g}}, 0.9, 0.1);
    opt.step(0.1);
    // v = 0.5 + 0.1*1 = 0.6, w = 1 - 0.06
    CHECK(w.data[0] == doctest::Approx(0.94).epsilon(1e-15));
    opt.step(0.1);
    // v = 0.9*0.6 + 0.5 + 0.1*0.94 = 1.134
    CHECK(w.data[0] == doctest::Approx(0.94 - 0.1134).epsilon(1e-12));
}

TEST_CASE("sgd with zero learning rate leaves parameters untouched") {
    Rng rng(300);
    NetworkSpec spec;
    spec.depth = 10;
    spec.stage_widths = {4};
    ResNet<double> net(spec, 1, rng);
    std::vector<Tensor<double>> before;
    for (auto& p : net.params()) before.push_back(*p.value);
    SgdOptimizer<double> opt(net.params(), 0.9, 0.0);
    Tensor<double> x({2, 1, 8, 8});
    for (auto& v : x.data) v = rng.normal();
    auto [loss, grad] = softmax_cross_entropy(net.forward(x, nullptr, true), {0, 1});
    net.backward(grad);
    opt.step(0.0);
    auto ps = net.params();
    for (std::size_t k = 0; k < ps.size(); ++k)
        CHECK(ps[k].value->data == before[k].data);
}

TEST_CASE("config validation rejects impossible settings") {
    TrainConfig cfg = tiny_config(1, 0);
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config(1, 0);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config(1, 0);
    cfg.lr_min = 2.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("an untrained network scores at chance on balanced random labels") {
    Rng rng(301);
    NetworkSpec spec;
    spec.depth = 10;
    spec.stage_widths = {8};
    ResNet<float> net(spec, 1, rng);
    LabeledDataset test = make_synth(1000, 10, 77, /*pure_noise=*/true);
    auto [loss, err] =
        evaluate(net, test, std::nullopt, test.channel_mean, test.channel_std);
    CHECK(err == doctest::Approx(90.0).epsilon(0.034));
    CHECK(loss > 0.0);
}

TEST_CASE("training on a separable synthetic set reduces the loss") {
    LabeledDataset train_ds = make_synth(64, 4, 1);
    LabeledDataset test_ds = make_synth(64, 4, 2);
    test_ds.split = Split::Test;
    Rng rng(302);
    TrainConfig cfg = tiny_config(4, 5);
    cfg.eval_every = 2;
    ResNet<float> net(network_spec_for(cfg), 1, rng);
    RunRecord rec = train(cfg, train_ds, test_ds, net);
    REQUIRE(rec.train_loss.size() == 4);
    CHECK(rec.train_loss.back() < rec.train_loss.front());
    REQUIRE(rec.evals.size() == 2);
    CHECK(rec.evals[0].epoch == 2);
    CHECK(rec.evals[1].epoch == 4);
    CHECK(rec.final_test_error_pct == rec.evals.back().test_error_pct);
}

TEST_CASE("training is bitwise deterministic under the seed") {
    LabeledDataset train_ds = make_synth(48, 4, 3);
    LabeledDataset test_ds = make_synth(32, 4, 4);
    TrainConfig cfg = tiny_config(2, 11);
    auto run_once = [&] {
        Rng rng(cfg.seed);
        ResNet<double> net(network_spec_for(cfg), 1, rng);
        RunRecord rec = train(cfg, train_ds, test_ds, net);
        std::vector<double> flat;
        for (auto& p : net.state())
            flat.insert(flat.end(), p.value->data.begin(), p.value->data.end());
        return std::make_pair(rec, flat);
    };
    auto [rec1, flat1] = run_once();
    auto [rec2, flat2] = run_once();
    CHECK(rec1.train_loss == rec2.train_loss);
    CHECK(rec1.final_test_error_pct == rec2.final_test_error_pct);
    CHECK(flat1 == flat2);
}

TEST_CASE("checkpoint round trip reproduces the evaluation exactly") {
    LabeledDataset train_ds = make_synth(48, 4, 5);
    LabeledDataset test_ds = make_synth(48, 4, 6);
    TrainConfig cfg = tiny_config(2, 21);
    Rng rng(cfg.seed);
    ResNet<float> net(network_spec_for(cfg), 1, rng);
    (void)train(cfg, train_ds, test_ds, net);
    auto [l1, e1] =
        evaluate(net, test_ds, std::nullopt, train_ds.channel_mean, train_ds.channel_std);
    // evaluation itself is deterministic
    auto [l1b, e1b] =
        evaluate(net, test_ds, std::nullopt, train_ds.channel_mean, train_ds.channel_std);
    CHECK(l1 == l1b);
    CHECK(e1 == e1b);

    save_network(net, "tmp_ckpt.bin");
    Rng other(999);
    ResNet<float> restored(network_spec_for(cfg), 1, other);
    load_network(restored, "tmp_ckpt.bin");
    auto [l2, e2] = evaluate(restored, test_ds, std::nullopt, train_ds.channel_mean,
                             train_ds.channel_std);
    CHECK(l1 == l2);
    CHECK(e1 == e2);

    // mismatched architecture is rejected
    NetworkSpec other_spec = network_spec_for(cfg);
    other_spec.stage_widths = {8};
    Rng r2(1);
    ResNet<float> wrong(other_spec, 1, r2);
    CHECK_THROWS_AS(load_network(wrong, "tmp_ckpt.bin"), FormatError);
    std::remove("tmp_ckpt.bin");
}

TEST_CASE("auxiliary block with frozen zero weights matches the baseline step") {
    LabeledDataset ds = make_synth(16, 4, 7);
    SuperclassScheme scheme = builtin_scheme(DatasetKind::Mnist, SuperclassCase::Case1);
    apply_scheme(ds, scheme);

    NetworkSpec base_spec;
    base_spec.depth = 10;
    base_spec.stage_widths = {4};
    NetworkSpec aux_spec = base_spec;
    aux_spec.aux_enabled = true;
    aux_spec.aux_superclass_count = 2;

    Rng r1(50), r2(51);
    ResNet<double> base(base_spec, 1, r1);
    ResNet<double> with_aux(aux_spec, 1, r2);

    // align every shared parameter, then freeze the aux weights at zero
    auto bp = base.params();
    for (auto& p : with_aux.params()) {
        if (p.name == "aux.w") {
            std::fill(p.value->data.begin(), p.value->data.end(), 0.0);
            continue;
        }
        for (auto& q : bp)
            if (q.name == p.name) *p.value = *q.value;
    }

    std::vector<std::size_t> idx(16);
    for (std::size_t i = 0; i < 16; ++i) idx[i] = i;
    Rng unused(0);
    Tensor<double> images = augment(gather_images<double>(ds, idx),
                                    AugmentPolicy::test_default(), ds.channel_mean,
                                    ds.channel_std, unused);
    Tensor<double> x_star = onehot_batch<double>(scheme, ds.labels);

    auto step = [&](ResNet<double>& net, const Tensor<double>* xs) {
        net.zero_grad();
        auto [loss, grad] = softmax_cross_entropy(net.forward(images, xs, true), ds.labels);
        net.backward(grad);
        SgdOptimizer<double> opt(net.params(), 0.9, 0.0);
        opt.step(0.1);
        return loss;
    };
    double lb = step(base, nullptr);
    double la = step(with_aux, &x_star);
    CHECK(lb == la);
    auto bp2 = base.params();
    for (auto& p : with_aux.params()) {
        if (p.name == "aux.w") continue;
        for (auto& q : bp2)
            if (q.name == p.name) CHECK(p.value->data == q.value->data);
    }
}

TEST_CASE("a non-finite loss aborts training with context") {
    LabeledDataset train_ds = make_synth(16, 4, 8);
    LabeledDataset test_ds = make_synth(16, 4, 9);
    TrainConfig cfg = tiny_config(1, 31);
    Rng rng(cfg.seed);
    ResNet<float> net(network_spec_for(cfg), 1, rng);
    // poison the output layer so the very first loss is non-finite
    for (auto& p : net.params())
        if (p.name == "fc.b")
            p.value->data[0] = std::numeric_limits<float>::quiet_NaN();
    try {
        (void)train(cfg, train_ds, test_ds, net);
        FAIL("expected TrainAbort");
    } catch (const TrainAbort& e) {
        CHECK(e.epoch == 0);
        CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    }
}
