#include "ltlforge/baselines.hpp"

namespace ltlforge {

const char* baseline_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::NoStructureNoLanguage: return "no_structure_no_language";
        case BaselineKind::NoStructure: return "no_structure";
        case BaselineKind::NoTime: return "no_time";
        case BaselineKind::Full: return "full";
    }
    return "?";
}

std::optional<BaselineKind> baseline_from_name(const std::string& name) {
    for (BaselineKind k : {BaselineKind::NoStructureNoLanguage, BaselineKind::NoStructure,
                           BaselineKind::NoTime, BaselineKind::Full})
        if (name == baseline_name(k)) return k;
    return std::nullopt;
}

namespace {

// Operator slots 0..6, predicates after.
int op_slot(NodeKind k) {
    switch (k) {
        case NodeKind::Not: return 0;
        case NodeKind::Next: return 1;
        case NodeKind::Eventually: return 2;
        case NodeKind::Always: return 3;
        case NodeKind::And: return 4;
        case NodeKind::Or: return 5;
        case NodeKind::Until: return 6;
        default: return -1;
    }
}

void collect_tokens(const Formula& f, std::vector<int>& out) {
    if (f.kind() == NodeKind::Atom)
        out.push_back(7 + f.prop());
    else
        out.push_back(op_slot(f.kind()));
    for (const auto& c : f.children()) collect_tokens(c, out);
}

}  // namespace

int encoder_vocab_size(const Alphabet& alphabet) { return 7 + alphabet.size(); }

std::vector<int> encoder_token_sequence(const Formula& f, const Alphabet& alphabet) {
    (void)alphabet;
    std::vector<int> out;
    collect_tokens(f, out);
    for (int t : out)
        if (t < 0) throw std::invalid_argument("formula contains a non-encodable node");
    return out;
}

// ── MonolithicModel ─────────────────────────────────────────────────────────

MonolithicModel::MonolithicModel(Registry* reg, Alphabet alphabet)
    : reg_(reg), alphabet_(std::move(alphabet)) {
    if (reg_->trunk.empty())
        throw std::invalid_argument("monolithic model needs a trunk in the registry");
}

void MonolithicModel::bind(const Formula& f) {
    formula_ = f;
    if (!reg_->encoder.empty()) token_seq_ = encoder_token_sequence(f, alphabet_);
    reset();
}

void MonolithicModel::encode() {
    const auto& cfg = reg_->config();
    enc_tape_.steps.clear();
    if (reg_->encoder.empty()) {
        embedding_.resize(0);
        return;
    }
    const GruLayerParams& p = reg_->encoder[0];
    Vec h = Vec::Zero(cfg.embed);
    for (int tok : token_seq_) {
        LayerTape lt;
        lt.in = Vec::Zero(cfg.encoder_vocab);
        lt.in[tok] = 1.0;
        lt.hp = h;
        h = detail::gru_forward(p, lt.in, lt.hp, lt.z, lt.r, lt.n, lt.u);
        lt.h = h;
        enc_tape_.steps.push_back(std::move(lt));
    }
    embedding_ = h;
}

void MonolithicModel::reset() {
    const auto& cfg = reg_->config();
    h_prev_.assign(reg_->trunk.size(), Vec::Zero(cfg.hidden));
    tape_.clear();
    encode();
}

StepOutput MonolithicModel::forward(const Vec& obs) {
    const auto& cfg = reg_->config();
    StepTape st;
    st.obs = obs;
    if (reg_->conv) {
        ConvTape ct;
        st.feat = detail::conv_forward(cfg, *reg_->conv, obs, ct);
        st.conv = std::move(ct);
    } else {
        st.feat = obs;
    }

    Vec in(cfg.trunk_input);
    if (embedding_.size() > 0)
        in << st.feat, embedding_;
    else
        in = st.feat;

    st.layers.resize(reg_->trunk.size());
    for (size_t l = 0; l < reg_->trunk.size(); ++l) {
        LayerTape& lt = st.layers[l];
        lt.in = in;
        lt.hp = h_prev_[l];
        lt.h = detail::gru_forward(reg_->trunk[l], lt.in, lt.hp, lt.z, lt.r, lt.n, lt.u);
        h_prev_[l] = lt.h;
        in = lt.h;
    }

    StepOutput out;
    const Vec& htop = st.layers.back().h;
    out.logits = reg_->w_actor * htop + reg_->b_actor.col(0);
    out.value = (reg_->w_critic * htop)(0) + reg_->b_critic(0, 0);
    tape_.push_back(std::move(st));
    return out;
}

void MonolithicModel::backward(const std::vector<StepGrad>& grads, Registry& out) {
    const auto& cfg = reg_->config();
    const size_t T = tape_.size();
    if (grads.size() != T) throw std::invalid_argument("per-step gradient count mismatch");

    std::vector<Vec> dh_next(reg_->trunk.size(), Vec::Zero(cfg.hidden));
    Vec d_embedding =
        embedding_.size() > 0 ? Vec::Zero(cfg.embed) : Vec();

    for (size_t t = T; t-- > 0;) {
        const StepTape& st = tape_[t];
        const Vec& htop = st.layers.back().h;
        out.w_actor += grads[t].dlogits * htop.transpose();
        out.b_actor.col(0) += grads[t].dlogits;
        out.w_critic.row(0) += grads[t].dvalue * htop.transpose();
        out.b_critic(0, 0) += grads[t].dvalue;

        Vec dh = dh_next.back() + reg_->w_actor.transpose() * grads[t].dlogits +
                 reg_->w_critic.transpose() * grads[t].dvalue;
        Vec din;
        for (size_t l = reg_->trunk.size(); l-- > 0;) {
            const LayerTape& lt = st.layers[l];
            Vec dhp = Vec::Zero(cfg.hidden);
            din = detail::gru_backward(reg_->trunk[l], lt.in, lt.hp, lt.z, lt.r, lt.n, lt.u,
                                       dh, out.trunk[l], dhp);
            dh_next[l] = dhp;
            if (l > 0) dh = dh_next[l - 1] + din;
        }
        // din now carries the gradient of the trunk's step input
        if (embedding_.size() > 0) d_embedding += din.tail(cfg.embed);
        if (reg_->conv) {
            const Vec dfeat = din.head(cfg.feat);
            detail::conv_backward(cfg, *reg_->conv, *st.conv, dfeat, *out.conv);
        }
    }

    if (embedding_.size() > 0 && !enc_tape_.steps.empty()) {
        Vec dh = d_embedding;
        for (size_t s = enc_tape_.steps.size(); s-- > 0;) {
            const LayerTape& lt = enc_tape_.steps[s];
            Vec dhp = Vec::Zero(cfg.embed);
            detail::gru_backward(reg_->encoder[0], lt.in, lt.hp, lt.z, lt.r, lt.n, lt.u, dh,
                                 out.encoder[0], dhp);
            dh = dhp;
        }
    }
}

}  // namespace ltlforge
