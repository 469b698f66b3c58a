#include "zorba/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace zorba {

namespace {

constexpr double kEmbeddingScale = 0.5;
constexpr double kHeadScale = 0.05;

double gelu(double x) {
    // tanh approximation
    const double c = 0.7978845608028654;  // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

void layer_norm(std::span<const double> x, std::span<const double> gain,
                std::span<const double> bias, std::span<double> out) {
    const size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) {
        const double dv = v - mean;
        var += dv * dv;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (size_t i = 0; i < n; ++i) out[i] = (x[i] - mean) * inv * gain[i] + bias[i];
}

// y[j] += sum_i x[i] * W[i * out_dim + j], W stored in-major.
void matvec_add(std::span<const double> x, std::span<const double> w, std::span<double> y) {
    const size_t in_dim = x.size();
    const size_t out_dim = y.size();
    for (size_t i = 0; i < in_dim; ++i) {
        const double xi = x[i];
        const double* row = w.data() + i * out_dim;
        for (size_t j = 0; j < out_dim; ++j) y[j] += xi * row[j];
    }
}

void fill_scaled_gaussian(GaussianStream& g, std::span<double> out, double scale) {
    for (double& v : out) v = scale * g.next();
}

}  // namespace

void TinyTransformerSpec::validate() const {
    if (vocab < 2 || hidden < 1 || heads < 1 || blocks < 1 || ffn_ratio < 1 ||
        max_seq_len < 1 || classes < 2)
        throw std::invalid_argument("TinyTransformerSpec: sizes out of range");
    if (hidden % heads != 0)
        throw std::invalid_argument("TinyTransformerSpec: heads must divide hidden");
}

int64_t TinyTransformerSpec::block_param_count() const {
    const int64_t h = hidden;
    const int64_t f = static_cast<int64_t>(ffn_ratio) * h;
    // ln1 + Wq,bq + Wk,bk + Wv,bv + Wo,bo + ln2 + W1,b1 + W2,b2
    return 2 * h + 4 * (h * h + h) + 2 * h + (h * f + f) + (f * h + h);
}

// Per-block parameter slice order:
//   ln1_gain ln1_bias Wq bq Wk bk Wv bv Wo bo ln2_gain ln2_bias W1 b1 W2 b2
// All matrices stored input-major.
TinyTransformerModel::TinyTransformerModel(const TinyTransformerSpec& spec) : spec_(spec) {
    spec_.validate();
    layout_ = BlockLayout(std::vector<int64_t>(static_cast<size_t>(spec_.blocks),
                                               spec_.block_param_count()));
    params_.assign(static_cast<size_t>(layout_.d), 0.0);

    const int h = spec_.hidden;
    const int f = spec_.ffn_ratio * h;
    const double weight_scale = 1.0 / std::sqrt(static_cast<double>(h));  // fan-in scaling
    for (int m = 0; m < spec_.blocks; ++m) {
        GaussianStream g(SplitMix64::hash(spec_.init_seed, static_cast<uint64_t>(m)));
        double* p = params_.data() + layout_.offsets[static_cast<size_t>(m)];
        auto mat = [&](int64_t count) {
            std::span<double> s(p, static_cast<size_t>(count));
            fill_scaled_gaussian(g, s, weight_scale);
            p += count;
        };
        auto zeros = [&](int64_t count) { p += count; };
        auto ones = [&](int64_t count) {
            std::fill(p, p + count, 1.0);
            p += count;
        };
        ones(h);            // ln1 gain
        zeros(h);           // ln1 bias
        for (int proj = 0; proj < 4; ++proj) {  // Wq,Wk,Wv,Wo
            mat(static_cast<int64_t>(h) * h);
            zeros(h);
        }
        ones(h);            // ln2 gain
        zeros(h);           // ln2 bias
        mat(static_cast<int64_t>(h) * f);
        zeros(f);
        mat(static_cast<int64_t>(f) * h);
        zeros(h);
    }

    auto frozen = std::make_shared<FrozenBuffers>();
    {
        GaussianStream g(SplitMix64::hash(spec_.init_seed, 0x10000ULL));
        frozen->token_embedding.resize(static_cast<size_t>(spec_.vocab) * h);
        fill_scaled_gaussian(g, frozen->token_embedding, kEmbeddingScale);
    }
    {
        GaussianStream g(SplitMix64::hash(spec_.init_seed, 0x10001ULL));
        frozen->pos_embedding.resize(static_cast<size_t>(spec_.max_seq_len) * h);
        fill_scaled_gaussian(g, frozen->pos_embedding, kEmbeddingScale);
    }
    frozen->final_norm_gain.assign(static_cast<size_t>(h), 1.0);
    frozen->final_norm_bias.assign(static_cast<size_t>(h), 0.0);
    {
        GaussianStream g(SplitMix64::hash(spec_.init_seed, 0x10002ULL));
        frozen->head_weight.resize(static_cast<size_t>(h) * spec_.classes);
        fill_scaled_gaussian(g, frozen->head_weight, kHeadScale);
        frozen->head_bias.assign(static_cast<size_t>(spec_.classes), 0.0);
    }
    frozen_ = std::move(frozen);
}

void TinyTransformerModel::forward_hidden(const Example& example,
                                          std::vector<double>& pooled) const {
    const int h = spec_.hidden;
    const int f = spec_.ffn_ratio * h;
    const int heads = spec_.heads;
    const int hd = h / heads;
    if (example.tokens.empty())
        throw std::invalid_argument("TinyTransformerModel: example has no tokens");
    const int seq = std::min<int>(static_cast<int>(example.tokens.size()), spec_.max_seq_len);

    std::vector<double> x(static_cast<size_t>(seq) * h);
    for (int t = 0; t < seq; ++t) {
        const int tok = example.tokens[static_cast<size_t>(t)];
        if (tok < 0 || tok >= spec_.vocab)
            throw std::invalid_argument("TinyTransformerModel: token id " + std::to_string(tok) +
                                        " outside vocabulary");
        const double* emb = frozen_->token_embedding.data() + static_cast<size_t>(tok) * h;
        const double* pos = frozen_->pos_embedding.data() + static_cast<size_t>(t) * h;
        for (int i = 0; i < h; ++i) x[static_cast<size_t>(t) * h + i] = emb[i] + pos[i];
    }

    std::vector<double> normed(static_cast<size_t>(seq) * h);
    std::vector<double> q(normed.size()), k(normed.size()), v(normed.size());
    std::vector<double> attn(normed.size());
    std::vector<double> scores(static_cast<size_t>(seq));
    std::vector<double> ffn_hidden(static_cast<size_t>(f));

    for (int m = 0; m < spec_.blocks; ++m) {
        const double* p = params_.data() + layout_.offsets[static_cast<size_t>(m)];
        std::span<const double> ln1_g(p, static_cast<size_t>(h)); p += h;
        std::span<const double> ln1_b(p, static_cast<size_t>(h)); p += h;
        std::span<const double> wq(p, static_cast<size_t>(h) * h); p += h * h;
        std::span<const double> bq(p, static_cast<size_t>(h)); p += h;
        std::span<const double> wk(p, static_cast<size_t>(h) * h); p += h * h;
        std::span<const double> bk(p, static_cast<size_t>(h)); p += h;
        std::span<const double> wv(p, static_cast<size_t>(h) * h); p += h * h;
        std::span<const double> bv(p, static_cast<size_t>(h)); p += h;
        std::span<const double> wo(p, static_cast<size_t>(h) * h); p += h * h;
        std::span<const double> bo(p, static_cast<size_t>(h)); p += h;
        std::span<const double> ln2_g(p, static_cast<size_t>(h)); p += h;
        std::span<const double> ln2_b(p, static_cast<size_t>(h)); p += h;
        std::span<const double> w1(p, static_cast<size_t>(h) * f); p += static_cast<size_t>(h) * f;
        std::span<const double> b1(p, static_cast<size_t>(f)); p += f;
        std::span<const double> w2(p, static_cast<size_t>(f) * h); p += static_cast<size_t>(f) * h;
        std::span<const double> b2(p, static_cast<size_t>(h));

        // attention sublayer
        for (int t = 0; t < seq; ++t) {
            std::span<const double> xt(x.data() + static_cast<size_t>(t) * h,
                                       static_cast<size_t>(h));
            std::span<double> nt(normed.data() + static_cast<size_t>(t) * h,
                                 static_cast<size_t>(h));
            layer_norm(xt, ln1_g, ln1_b, nt);
            std::span<double> qt(q.data() + static_cast<size_t>(t) * h, static_cast<size_t>(h));
            std::span<double> kt(k.data() + static_cast<size_t>(t) * h, static_cast<size_t>(h));
            std::span<double> vt(v.data() + static_cast<size_t>(t) * h, static_cast<size_t>(h));
            std::copy(bq.begin(), bq.end(), qt.begin());
            std::copy(bk.begin(), bk.end(), kt.begin());
            std::copy(bv.begin(), bv.end(), vt.begin());
            matvec_add(nt, wq, qt);
            matvec_add(nt, wk, kt);
            matvec_add(nt, wv, vt);
        }
        const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
        std::fill(attn.begin(), attn.end(), 0.0);
        for (int head = 0; head < heads; ++head) {
            const int off = head * hd;
            for (int t = 0; t < seq; ++t) {
                const double* qt = q.data() + static_cast<size_t>(t) * h + off;
                double max_score = -1e300;
                for (int s = 0; s < seq; ++s) {
                    const double* ks = k.data() + static_cast<size_t>(s) * h + off;
                    double dot = 0.0;
                    for (int i = 0; i < hd; ++i) dot += qt[i] * ks[i];
                    scores[static_cast<size_t>(s)] = dot * scale;
                    max_score = std::max(max_score, scores[static_cast<size_t>(s)]);
                }
                double denom = 0.0;
                for (int s = 0; s < seq; ++s) {
                    scores[static_cast<size_t>(s)] =
                        std::exp(scores[static_cast<size_t>(s)] - max_score);
                    denom += scores[static_cast<size_t>(s)];
                }
                double* at = attn.data() + static_cast<size_t>(t) * h + off;
                for (int s = 0; s < seq; ++s) {
                    const double w = scores[static_cast<size_t>(s)] / denom;
                    const double* vs = v.data() + static_cast<size_t>(s) * h + off;
                    for (int i = 0; i < hd; ++i) at[i] += w * vs[i];
                }
            }
        }
        for (int t = 0; t < seq; ++t) {
            std::span<const double> at(attn.data() + static_cast<size_t>(t) * h,
                                       static_cast<size_t>(h));
            std::vector<double> proj(bo.begin(), bo.end());
            matvec_add(at, wo, proj);
            double* xt = x.data() + static_cast<size_t>(t) * h;
            for (int i = 0; i < h; ++i) xt[i] += proj[static_cast<size_t>(i)];
        }

        // feed-forward sublayer
        for (int t = 0; t < seq; ++t) {
            std::span<const double> xt(x.data() + static_cast<size_t>(t) * h,
                                       static_cast<size_t>(h));
            std::span<double> nt(normed.data() + static_cast<size_t>(t) * h,
                                 static_cast<size_t>(h));
            layer_norm(xt, ln2_g, ln2_b, nt);
            std::copy(b1.begin(), b1.end(), ffn_hidden.begin());
            matvec_add(nt, w1, ffn_hidden);
            for (double& u : ffn_hidden) u = gelu(u);
            std::vector<double> out(b2.begin(), b2.end());
            matvec_add(ffn_hidden, w2, out);
            double* xt_mut = x.data() + static_cast<size_t>(t) * h;
            for (int i = 0; i < h; ++i) xt_mut[i] += out[static_cast<size_t>(i)];
        }
    }

    pooled.assign(static_cast<size_t>(h), 0.0);
    std::vector<double> y(static_cast<size_t>(h));
    for (int t = 0; t < seq; ++t) {
        std::span<const double> xt(x.data() + static_cast<size_t>(t) * h,
                                   static_cast<size_t>(h));
        layer_norm(xt, frozen_->final_norm_gain, frozen_->final_norm_bias, y);
        for (int i = 0; i < h; ++i) pooled[static_cast<size_t>(i)] += y[static_cast<size_t>(i)];
    }
    for (double& u : pooled) u /= static_cast<double>(seq);
}

std::vector<double> TinyTransformerModel::logits(const Example& example) const {
    std::vector<double> pooled;
    forward_hidden(example, pooled);
    std::vector<double> out(frozen_->head_bias.begin(), frozen_->head_bias.end());
    matvec_add(pooled, frozen_->head_weight, out);
    return out;
}

double TinyTransformerModel::loss(const Batch& batch) const {
    if (batch.items.empty())
        throw std::invalid_argument("TinyTransformerModel: empty batch");
    double total = 0.0;
    for (const Example& ex : batch.items) {
        if (ex.label < 0 || ex.label >= spec_.classes)
            throw std::invalid_argument("TinyTransformerModel: label out of range");
        const std::vector<double> z = logits(ex);
        double max_z = z[0];
        for (double zi : z) max_z = std::max(max_z, zi);
        double denom = 0.0;
        for (double zi : z) denom += std::exp(zi - max_z);
        total += -(z[static_cast<size_t>(ex.label)] - max_z - std::log(denom));
    }
    const double value = total / static_cast<double>(batch.items.size());
    if (!std::isfinite(value))
        throw std::runtime_error("TinyTransformerModel: non-finite loss");
    return value;
}

double TinyTransformerModel::accuracy(const std::vector<Example>& examples) const {
    if (examples.empty()) return 0.0;
    int hits = 0;
    for (const Example& ex : examples) {
        const std::vector<double> z = logits(ex);
        int best = 0;
        for (int c = 1; c < spec_.classes; ++c)
            if (z[static_cast<size_t>(c)] > z[static_cast<size_t>(best)]) best = c;
        hits += (best == ex.label);
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

std::unique_ptr<Model> TinyTransformerModel::clone() const {
    auto copy = std::make_unique<TinyTransformerModel>(spec_);
    copy->params_ = params_;
    copy->frozen_ = frozen_;  // immutable, shared
    return copy;
}

}  // namespace zorba
