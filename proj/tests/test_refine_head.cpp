#include <gtest/gtest.h>

#include "test_util.hpp"
#include "texseg/model/refine_head.hpp"
#include "texseg/model/segmentation_model.hpp"

using namespace texseg;
using namespace texseg::model;
using texseg::testutil::grad_rel_error;
using texseg::testutil::random_tensor;

namespace {

// Scalar-loop oracle for the modified cosine similarity.
Tensor cosine_oracle(const Tensor& x) {
    const int64_t c = x.dim(0), n = x.dim(1);
    Tensor out({c, c});
    for (int64_t i = 0; i < c; ++i) {
        for (int64_t j = 0; j < c; ++j) {
            if (i == j) continue;
            double dot = 0, ni = 0, nj = 0;
            for (int64_t k = 0; k < n; ++k) {
                dot += x.at2(i, k) * x.at2(j, k);
                ni += x.at2(i, k) * x.at2(i, k);
                nj += x.at2(j, k) * x.at2(j, k);
            }
            const double denom = std::sqrt(ni) * std::sqrt(nj);
            out.at2(i, j) = denom > 1e-12 ? dot / denom : 0.0;
        }
    }
    return out;
}

Tensor random_prob_map(int64_t c, int64_t n, Rng& rng) {
    Tensor t({c, n});
    for (int64_t j = 0; j < n; ++j) {
        double z = 0;
        for (int64_t i = 0; i < c; ++i) {
            const double e = std::exp(rng.uniform(-3.0, 3.0));
            t.at2(i, j) = e;
            z += e;
        }
        for (int64_t i = 0; i < c; ++i) t.at2(i, j) /= z;
    }
    return t;
}

} // namespace

TEST(InitialPredict, ZeroWeightsGiveUniformPrediction) {
    Rng rng(1);
    Conv2d initial(4, 2, 1, 1, 0, rng);
    initial.w->value.fill(0.0);
    initial.b->value.fill(0.0);
    ad::Var x_f = ad::constant(random_tensor({4, 3, 3}, rng));
    ad::Var x_sem = initial(x_f);
    ad::Var probs = ad::softmax_columns(ad::reshape(x_sem, {2, 9}));
    for (int64_t i = 0; i < probs->value.numel(); ++i)
        EXPECT_NEAR(probs->value[i], 0.5, 1e-12);
}

TEST(InitialPredict, ColumnsSumToOne) {
    Rng rng(2);
    Conv2d initial(8, 2, 1, 1, 0, rng);
    ad::Var x_f = ad::constant(random_tensor({8, 4, 5}, rng));
    ad::Var probs = ad::softmax_columns(ad::reshape(initial(x_f), {2, 20}));
    for (int64_t j = 0; j < 20; ++j)
        EXPECT_NEAR(probs->value.at2(0, j) + probs->value.at2(1, j), 1.0, 1e-6);
}

TEST(InitialPredict, IdentityWeightScalarOracle) {
    Rng rng(3);
    Conv2d initial(2, 2, 1, 1, 0, rng);
    initial.w->value.fill(0.0);
    initial.w->value[0] = 1.0; // class 0 <- channel 0
    initial.w->value[1] = 0.0;
    initial.w->value[2] = 0.0;
    initial.w->value[3] = 1.0; // class 1 <- channel 1
    initial.b->value.fill(0.0);
    Tensor feat({2, 1, 1});
    feat[0] = 2.0;
    feat[1] = 0.0;
    ad::Var probs = ad::softmax_columns(ad::reshape(initial(ad::constant(feat)), {2, 1}));
    EXPECT_NEAR(probs->value[0], 0.8808, 1e-4);
    EXPECT_NEAR(probs->value[1], 0.1192, 1e-4);
}

TEST(CosineSimilarity, IdenticalRowsGiveOne) {
    Tensor x = Tensor::from({2, 3}, {0.2, 0.5, 0.3, 0.2, 0.5, 0.3});
    ad::Var X = cosine_similarity_matrix(ad::constant(x));
    EXPECT_NEAR(X->value.at2(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(X->value.at2(1, 0), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(X->value.at2(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(X->value.at2(1, 1), 0.0);
}

TEST(CosineSimilarity, OrthogonalRowsGiveZero) {
    Tensor x = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    ad::Var X = cosine_similarity_matrix(ad::constant(x));
    for (int64_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(X->value[i], 0.0);
}

TEST(CosineSimilarity, ScalarExample) {
    Tensor x = Tensor::from({2, 2}, {0.9, 0.2, 0.1, 0.8});
    ad::Var X = cosine_similarity_matrix(ad::constant(x));
    EXPECT_NEAR(X->value.at2(0, 1), 0.3364, 1e-4);
}

TEST(CosineSimilarity, ZeroNormRowGuarded) {
    Tensor x = Tensor::from({2, 2}, {0.0, 0.0, 0.3, 0.7});
    ad::Var X = cosine_similarity_matrix(ad::constant(x));
    EXPECT_DOUBLE_EQ(X->value.at2(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(X->value.at2(1, 0), 0.0);
}

TEST(CosineSimilarity, MatchesOracleOnRandomMaps) {
    Rng rng(4);
    for (int trial = 0; trial < 1000; ++trial) {
        const int64_t c = 2 + trial % 3;
        const Tensor x = random_prob_map(c, 8 + trial % 9, rng);
        const Tensor expect = cosine_oracle(x);
        ad::Var X = cosine_similarity_matrix(ad::constant(x));
        for (int64_t i = 0; i < c; ++i)
            for (int64_t j = 0; j < c; ++j) {
                ASSERT_NEAR(X->value.at2(i, j), expect.at2(i, j), 1e-6);
                ASSERT_NEAR(X->value.at2(i, j), X->value.at2(j, i), 1e-12);
                ASSERT_GE(X->value.at2(i, j), 0.0);
                ASSERT_LE(X->value.at2(i, j), 1.0 + 1e-12);
            }
    }
}

TEST(BiasedReweight, IdentityAtZeroSimilarityAndZeroKappa) {
    Rng rng(5);
    const Tensor logits = random_tensor({2, 12}, rng);
    ad::Var lg = ad::constant(logits);
    ad::Var probs = ad::softmax_columns(lg);

    ad::Var zero_sim = ad::constant(Tensor({2, 2}));
    ad::Var w0 = biased_reweight(lg, zero_sim, 1.0);
    for (int64_t i = 0; i < w0->value.numel(); ++i)
        ASSERT_DOUBLE_EQ(w0->value[i], probs->value[i]);

    ad::Var sim = cosine_similarity_matrix(probs);
    ad::Var wk = biased_reweight(lg, sim, 0.0);
    for (int64_t i = 0; i < wk->value.numel(); ++i)
        ASSERT_DOUBLE_EQ(wk->value[i], probs->value[i]);
}

TEST(BiasedReweight, ScalarExampleLowersConfidence) {
    // logits [2,0], X_01 = 1, kappa = 1: class-0 weight = softmax([2,1])[0]
    Tensor logits = Tensor::from({2, 1}, {2.0, 0.0});
    Tensor sim = Tensor::from({2, 2}, {0.0, 1.0, 1.0, 0.0});
    ad::Var w = biased_reweight(ad::constant(logits), ad::constant(sim), 1.0);
    EXPECT_NEAR(w->value.at2(0, 0), 0.7310585786300049, 1e-12);
    ad::Var plain = ad::softmax_columns(ad::constant(logits));
    EXPECT_NEAR(plain->value.at2(0, 0), 0.8808, 1e-4);
    EXPECT_LT(w->value.at2(0, 0), plain->value.at2(0, 0));
}

TEST(PoolKeys, UniformWeightsGiveChannelMean) {
    Rng rng(6);
    const Tensor feat = random_tensor({3, 10}, rng);
    ad::Var weights = ad::constant(Tensor({2, 10}, 0.37));
    ad::Var v = pool_keys(ad::constant(feat), weights, KeyNorm::kL1);
    for (int64_t ch = 0; ch < 3; ++ch) {
        double mean = 0;
        for (int64_t j = 0; j < 10; ++j) mean += feat.at2(ch, j) / 10.0;
        EXPECT_NEAR(v->value.at2(ch, 0), mean, 1e-9);
        EXPECT_NEAR(v->value.at2(ch, 1), mean, 1e-9);
    }
}

TEST(PoolKeys, OneHotWeightSelectsColumn) {
    Rng rng(7);
    const Tensor feat = random_tensor({4, 6}, rng);
    Tensor w({1, 6});
    w.at2(0, 3) = 1.0;
    ad::Var v = pool_keys(ad::constant(feat), ad::constant(w), KeyNorm::kL1);
    for (int64_t ch = 0; ch < 4; ++ch)
        EXPECT_NEAR(v->value.at2(ch, 0), feat.at2(ch, 3), 1e-7);
}

TEST(PoolKeys, HandComputedWeightedMean) {
    // features: channel0 [1,3], channel1 [2,0]; weights [0.25, 0.75]
    Tensor feat = Tensor::from({2, 2}, {1.0, 3.0, 2.0, 0.0});
    Tensor w = Tensor::from({1, 2}, {0.25, 0.75});
    ad::Var v = pool_keys(ad::constant(feat), ad::constant(w), KeyNorm::kL1);
    EXPECT_NEAR(v->value.at2(0, 0), 2.5, 1e-7);
    EXPECT_NEAR(v->value.at2(1, 0), 0.5, 1e-7);
}

TEST(PoolKeys, L1OutputStaysWithinChannelRange) {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const Tensor feat = random_tensor({5, 14}, rng);
        const Tensor w = random_prob_map(2, 14, rng);
        ad::Var v = pool_keys(ad::constant(feat), ad::constant(w), KeyNorm::kL1);
        for (int64_t ch = 0; ch < 5; ++ch) {
            double lo = HUGE_VAL, hi = -HUGE_VAL;
            for (int64_t j = 0; j < 14; ++j) {
                lo = std::min(lo, feat.at2(ch, j));
                hi = std::max(hi, feat.at2(ch, j));
            }
            for (int64_t cls = 0; cls < 2; ++cls) {
                ASSERT_GE(v->value.at2(ch, cls), lo - 1e-7);
                ASSERT_LE(v->value.at2(ch, cls), hi + 1e-7);
            }
        }
    }
}

TEST(PoolKeys, AllZeroWeightsFlagDegenerate) {
    Rng rng(9);
    bool degenerate = false;
    ad::Var v = pool_keys(ad::constant(random_tensor({3, 5}, rng)),
                          ad::constant(Tensor({1, 5})), KeyNorm::kL1, &degenerate);
    EXPECT_TRUE(degenerate);
    for (int64_t i = 0; i < v->value.numel(); ++i) EXPECT_DOUBLE_EQ(v->value[i], 0.0);
}

TEST(PoolKeys, L2ModeNormalizesByEuclideanNorm) {
    Tensor feat = Tensor::from({1, 2}, {1.0, 1.0});
    Tensor w = Tensor::from({1, 2}, {3.0, 4.0});
    ad::Var v = pool_keys(ad::constant(feat), ad::constant(w), KeyNorm::kL2);
    EXPECT_NEAR(v->value[0], 7.0 / 5.0, 1e-7); // (3+4)/sqrt(9+16)
}

TEST(AttentionMap, SingleClassIsAllOnes) {
    Rng rng(10);
    ad::Var keys = ad::constant(random_tensor({4, 1}, rng));
    ad::Var feat = ad::constant(random_tensor({4, 7}, rng));
    ad::Var att = attention_map(keys, feat);
    for (int64_t i = 0; i < att->value.numel(); ++i) EXPECT_DOUBLE_EQ(att->value[i], 1.0);
}

TEST(AttentionMap, IdenticalKeysGiveUniform) {
    Rng rng(11);
    Tensor keys({3, 2});
    for (int64_t ch = 0; ch < 3; ++ch) {
        const double v = rng.uniform(-1, 1);
        keys.at2(ch, 0) = v;
        keys.at2(ch, 1) = v;
    }
    ad::Var att = attention_map(ad::constant(keys), ad::constant(random_tensor({3, 5}, rng)));
    for (int64_t i = 0; i < att->value.numel(); ++i) EXPECT_NEAR(att->value[i], 0.5, 1e-12);
}

TEST(AttentionMap, IdentityKeysScalarOracle) {
    Tensor keys = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor feat = Tensor::from({2, 1}, {2.0, 0.0});
    ad::Var att = attention_map(ad::constant(keys), ad::constant(feat));
    EXPECT_NEAR(att->value.at2(0, 0), 0.8808, 1e-4);
    EXPECT_NEAR(att->value.at2(1, 0), 0.1192, 1e-4);
}

TEST(AttentionMap, ColumnsSumToOneAndShiftInvariant) {
    Rng rng(12);
    const Tensor keys = random_tensor({6, 2}, rng);
    const Tensor feat = random_tensor({6, 9}, rng);
    ad::Var att = attention_map(ad::constant(keys), ad::constant(feat));
    for (int64_t j = 0; j < 9; ++j)
        EXPECT_NEAR(att->value.at2(0, j) + att->value.at2(1, j), 1.0, 1e-6);

    // adding a per-position constant to all class scores leaves softmax fixed
    ad::Var scores = ad::matmul(ad::transpose(ad::constant(keys)), ad::constant(feat));
    Tensor shift_col({2, 9});
    for (int64_t j = 0; j < 9; ++j) {
        const double s = rng.uniform(-5, 5);
        shift_col.at2(0, j) = s;
        shift_col.at2(1, j) = s;
    }
    ad::Var shifted = ad::softmax_columns(ad::add(scores, ad::constant(shift_col)));
    ad::Var plain = ad::softmax_columns(scores);
    for (int64_t i = 0; i < plain->value.numel(); ++i)
        ASSERT_NEAR(plain->value[i], shifted->value[i], 1e-9);
}

TEST(ActivationDelta, PropertiesHold) {
    Rng rng(13);
    const Tensor a = random_prob_map(2, 11, rng);
    const Tensor b = random_prob_map(2, 11, rng);
    ad::Var delta = activation_delta(ad::constant(a), ad::constant(b));
    for (int64_t j = 0; j < 11; ++j) {
        EXPECT_NEAR(delta->value.at2(0, j) + delta->value.at2(1, j), 0.0, 1e-12);
        for (int64_t i = 0; i < 2; ++i) {
            EXPECT_GE(delta->value.at2(i, j), -1.0);
            EXPECT_LE(delta->value.at2(i, j), 1.0);
        }
    }
    ad::Var zero = activation_delta(ad::constant(a), ad::constant(a));
    for (int64_t i = 0; i < zero->value.numel(); ++i) EXPECT_DOUBLE_EQ(zero->value[i], 0.0);
}

TEST(HeadForward, IntermediateInvariantsOnRandomInputs) {
    ModelConfig cfg;
    cfg.init_seed = 14;
    SegModel seg(cfg);
    Rng rng(15);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor img = random_tensor({3, 16, 16}, rng, 0.0, 1.0);
        HeadForward f = seg.forward(ad::constant(img), true);
        // probabilities and attention columns sum to 1; cosine matrix is
        // symmetric with zero diagonal; biased weights stay in [0,1]
        const int64_t n = f.feat_h * f.feat_w;
        for (int64_t j = 0; j < n; ++j) {
            ASSERT_NEAR(f.x_prob->value.at2(0, j) + f.x_prob->value.at2(1, j), 1.0, 1e-6);
            ASSERT_NEAR(f.x_att->value.at2(0, j) + f.x_att->value.at2(1, j), 1.0, 1e-6);
            for (int64_t i = 0; i < 2; ++i) {
                ASSERT_GE(f.biased->value.at2(i, j), 0.0);
                ASSERT_LE(f.biased->value.at2(i, j), 1.0);
            }
        }
        ASSERT_DOUBLE_EQ(f.cossim->value.at2(0, 0), 0.0);
        ASSERT_DOUBLE_EQ(f.cossim->value.at2(1, 1), 0.0);
        ASSERT_NEAR(f.cossim->value.at2(0, 1), f.cossim->value.at2(1, 0), 1e-12);
        ASSERT_TRUE(f.x_rfn->value.all_finite());
        ASSERT_TRUE(f.x_rfn_full->value.all_finite());
    }
}

TEST(HeadForward, DeterministicAndShapeContract) {
    ModelConfig cfg;
    cfg.init_seed = 16;
    SegModel seg(cfg);
    Rng rng(17);
    const Tensor img = random_tensor({3, 24, 20}, rng, 0.0, 1.0);
    HeadForward a = seg.forward(ad::constant(img), true);
    HeadForward b = seg.forward(ad::constant(img), true);
    EXPECT_EQ(a.x_rfn->value.shape(), (std::vector<int64_t>{2, 6, 5}));
    EXPECT_EQ(a.x_rfn_full->value.shape(), (std::vector<int64_t>{2, 24, 20}));
    for (int64_t i = 0; i < a.x_rfn_full->value.numel(); ++i)
        ASSERT_DOUBLE_EQ(a.x_rfn_full->value[i], b.x_rfn_full->value[i]);
}

TEST(HeadForward, ZeroFinalConvGivesConstantBiasMap) {
    Rng rng(18);
    TexRNetHead head(8, HeadMode::kTexRNet, rng);
    // zero the final 1x1 conv weights, set a known bias
    std::vector<ParamEntry> ps;
    head.collect_params(ps, "head");
    for (auto& p : ps) {
        if (p.name == "head.fuse_out.w") p.var->value.fill(0.0);
        if (p.name == "head.fuse_out.b") {
            p.var->value[0] = -1.25;
            p.var->value[1] = 0.75;
        }
    }
    Rng dr(19);
    ToyBackbone bb(dr, 4); // channels 8
    const Tensor img = random_tensor({3, 16, 16}, dr, 0.0, 1.0);
    ad::Var image = ad::constant(img);
    HeadForward f = head.forward(image, bb.forward(image), true);
    for (int64_t r = 0; r < f.x_rfn->value.dim(1); ++r)
        for (int64_t c = 0; c < f.x_rfn->value.dim(2); ++c) {
            ASSERT_DOUBLE_EQ(f.x_rfn->value.at3(0, r, c), -1.25);
            ASSERT_DOUBLE_EQ(f.x_rfn->value.at3(1, r, c), 0.75);
        }
}

TEST(HeadForward, CompositeGradientMatchesFiniteDifferences) {
    // cosine -> bias -> pool -> attention -> fuse path at m=4, c=2, n=12
    Rng rng(20);
    ad::Var x_f = ad::leaf(random_tensor({4, 3, 4}, rng), true);
    TexRNetHead head(4, HeadMode::kTexRNet, rng);
    const Tensor img = random_tensor({3, 12, 16}, rng, 0.0, 1.0);
    std::vector<int> labels(12 * 16);
    for (auto& l : labels) l = rng.bernoulli(0.5) ? 1 : 0;

    auto build = [&]() {
        HeadForward f = head.forward(ad::constant(img), x_f, true);
        ad::Var flat = ad::reshape(f.x_rfn_full, {2, 12 * 16});
        return ad::cross_entropy(flat, labels, {}, false);
    };
    EXPECT_LT(grad_rel_error(build, x_f, 1e-6), 1e-4);
}

TEST(HeadForward, BaselineModePredictsFromInitialLogits) {
    ModelConfig cfg;
    cfg.head = HeadMode::kBaseline;
    cfg.init_seed = 21;
    SegModel seg(cfg);
    Rng rng(22);
    const Tensor img = random_tensor({3, 16, 16}, rng, 0.0, 1.0);
    HeadForward f = seg.forward(ad::constant(img), false);
    for (int64_t i = 0; i < f.x_sem->value.numel(); ++i)
        ASSERT_DOUBLE_EQ(f.x_rfn->value[i], f.x_sem->value[i]);
}
