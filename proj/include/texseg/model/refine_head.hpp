#pragma once

#include <stdexcept>
#include <vector>

#include "texseg/model/layers.hpp"

namespace texseg::model {

inline constexpr double kNormEpsilon = 1e-8;

enum class KeyNorm { kL1, kL2 };

// Modified cosine similarity between the class score rows of a (c,n) map:
// symmetric, zero diagonal, zero-norm rows guarded to 0.
inline ad::Var cosine_similarity_matrix(const ad::Var& scores) {
    return ad::gram_to_cosine(ad::matmul(scores, ad::transpose(scores)));
}

// Per class i, softmax of the logits with bias kappa * X_ij added to every
// competitor class j (zero bias on i itself); row i of that softmax becomes
// the class-i pooling weight map. High inter-class ambiguity therefore lowers
// class-i confidence where it matters.
inline ad::Var biased_reweight(const ad::Var& logits, const ad::Var& cossim, double kappa) {
    const int64_t c = logits->value.dim(0);
    if (cossim->value.dim(0) != c || cossim->value.dim(1) != c)
        throw std::invalid_argument("biased_reweight: similarity matrix shape mismatch");
    std::vector<ad::Var> rows;
    rows.reserve(static_cast<size_t>(c));
    for (int64_t i = 0; i < c; ++i) {
        ad::Var bias = ad::reshape(ad::select_row(cossim, i), {c});
        if (kappa != 1.0) bias = ad::scale(bias, kappa);
        ad::Var shifted = ad::softmax_columns(ad::add_col(logits, bias));
        rows.push_back(ad::select_row(shifted, i));
    }
    return ad::concat_dim0(rows);
}

// Normalized weighted sum of feature columns: v_i = x_f w_i / (||w_i|| + eps),
// one pooled m-vector per class. L1 norm (weighted mean) by default, L2
// selectable. All-zero weight rows yield a zero key and set the flag.
inline ad::Var pool_keys(const ad::Var& features, const ad::Var& weights, KeyNorm norm,
                         bool* degenerate = nullptr) {
    const int64_t n = features->value.dim(1);
    if (weights->value.dim(1) != n) throw std::invalid_argument("pool_keys: shape mismatch");
    ad::Var raw = ad::matmul(features, ad::transpose(weights));
    ad::Var denom;
    if (norm == KeyNorm::kL1)
        denom = ad::add_scalar(ad::row_sums(weights), kNormEpsilon);
    else
        denom = ad::add_scalar(ad::sqrt_elem(ad::row_sums(ad::square(weights))), kNormEpsilon);
    if (degenerate) {
        *degenerate = false;
        ad::Var sums = ad::row_sums(weights);
        for (int64_t i = 0; i < sums->value.numel(); ++i)
            if (sums->value[i] <= kNormEpsilon) *degenerate = true;
    }
    return ad::div_columns(raw, denom);
}

// Dot-product attention with pooled keys: per-position softmax over classes
// of v^T x_f. Keys are (m,c), queries are the n feature columns.
inline ad::Var attention_map(const ad::Var& keys, const ad::Var& features) {
    return ad::softmax_columns(ad::matmul(ad::transpose(keys), features));
}

// Signed per-class activation change introduced by the attention stage;
// positive values mark re-activated regions, negative suppressed ones.
inline ad::Var activation_delta(const ad::Var& x_att, const ad::Var& x_prob) {
    return ad::sub(x_att, x_prob);
}

enum class HeadMode { kBaseline, kTexRNet };

struct HeadForward {
    ad::Var x_sem;      // (c,h,w) initial logits
    ad::Var x_sem_flat; // (c,n)
    ad::Var x_prob;     // (c,n) initial prediction
    ad::Var cossim;     // (c,c)
    ad::Var biased;     // (c,n) pooling weight maps
    ad::Var keys;       // (m,c)
    ad::Var x_att;      // (c,n)
    ad::Var x_rfn;      // (c,h,w) refined logits (baseline: == x_sem)
    ad::Var x_rfn_full; // (c,H,W) bilinear upsampling
    bool pool_degenerate = false;
    int64_t feat_h = 0, feat_w = 0;
};

// The TexRNet head: initial 1x1 prediction, cosine-similarity biased key
// pooling, attention-based similarity checking, and a small fusion stack over
// [attention; downsampled image; features]. With the attention toggle off the
// fusion consumes the initial prediction instead, which keeps the base and
// full variants parameter-identical. Baseline mode drops the fusion entirely
// and predicts from the initial logits.
class TexRNetHead {
public:
    TexRNetHead(int feat_channels, HeadMode mode, Rng& rng, int classes = 2,
                int fusion_width = 64, double kappa = 1.0, KeyNorm norm = KeyNorm::kL1)
        : mode_(mode), classes_(classes), kappa_(kappa), norm_(norm),
          initial_(feat_channels, classes, 1, 1, 0, rng) {
        if (feat_channels < classes)
            throw std::invalid_argument("TexRNetHead: needs at least c feature channels");
        if (mode_ == HeadMode::kTexRNet) {
            fuse1_ = Conv2d(classes + 3 + feat_channels, fusion_width, 3, 1, 1, rng);
            fuse2_ = Conv2d(fusion_width, fusion_width, 3, 1, 1, rng);
            fuse_out_ = Conv2d(fusion_width, classes, 1, 1, 0, rng);
        }
    }

    HeadMode mode() const { return mode_; }
    double kappa() const { return kappa_; }
    KeyNorm key_norm() const { return norm_; }

    HeadForward forward(const ad::Var& image, const ad::Var& features,
                        bool use_attention) const {
        HeadForward out;
        const int64_t h = features->value.dim(1), w = features->value.dim(2);
        const int64_t H = image->value.dim(1), W = image->value.dim(2);
        out.feat_h = h;
        out.feat_w = w;

        out.x_sem = initial_(features);
        out.x_sem_flat = ad::reshape(out.x_sem, {classes_, h * w});
        out.x_prob = ad::softmax_columns(out.x_sem_flat);

        ad::Var feat_flat = ad::reshape(features, {features->value.dim(0), h * w});
        out.cossim = cosine_similarity_matrix(out.x_prob);
        out.biased = biased_reweight(out.x_sem_flat, out.cossim, kappa_);
        out.keys = pool_keys(feat_flat, out.biased, norm_, &out.pool_degenerate);
        out.x_att = attention_map(out.keys, feat_flat);

        if (mode_ == HeadMode::kBaseline) {
            out.x_rfn = out.x_sem;
        } else {
            ad::Var guidance = use_attention ? out.x_att : out.x_prob;
            ad::Var fuse_in = ad::concat_dim0({ad::reshape(guidance, {classes_, h, w}),
                                               ad::bilinear_resize(image, h, w), features});
            ad::Var f = ad::relu(fuse1_(fuse_in));
            f = ad::relu(fuse2_(f));
            out.x_rfn = fuse_out_(f);
        }
        out.x_rfn_full = ad::bilinear_resize(out.x_rfn, H, W);
        return out;
    }

    void collect_params(std::vector<ParamEntry>& out, const std::string& prefix) const {
        initial_.collect(out, prefix + ".initial");
        if (mode_ == HeadMode::kTexRNet) {
            fuse1_.collect(out, prefix + ".fuse1");
            fuse2_.collect(out, prefix + ".fuse2");
            fuse_out_.collect(out, prefix + ".fuse_out");
        }
    }

private:
    HeadMode mode_;
    int64_t classes_;
    double kappa_;
    KeyNorm norm_;
    Conv2d initial_;
    Conv2d fuse1_, fuse2_, fuse_out_;
};

} // namespace texseg::model
