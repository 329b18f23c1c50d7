#include "ltlforge/compnet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace ltlforge {

// ── Registry ────────────────────────────────────────────────────────────────

Registry::Registry(const ModelConfig& cfg) : cfg_(cfg), init_rng_(make_rng(cfg.init_seed)) {
    const double s = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden));
    w_actor = init_mat(cfg_.actions, cfg_.hidden, s);
    b_actor = Mat::Zero(cfg_.actions, 1);
    w_critic = init_mat(1, cfg_.hidden, s);
    b_critic = Mat::Zero(1, 1);

    if (cfg_.conv_planes > 0) {
        if (cfg_.crop != 5)
            throw std::invalid_argument("conv extractor expects a 5x5 crop");
        ConvParams cp;
        const int k1 = cfg_.conv_planes * 9;
        cp.w1 = init_mat(cfg_.conv1, k1, 1.0 / std::sqrt(static_cast<double>(k1)));
        cp.b1 = Mat::Zero(cfg_.conv1, 1);
        const int k2 = cfg_.conv1 * 9;
        cp.w2 = init_mat(cfg_.conv2, k2, 1.0 / std::sqrt(static_cast<double>(k2)));
        cp.b2 = Mat::Zero(cfg_.conv2, 1);
        const int kc = cfg_.conv2 + cfg_.nonspatial;
        cp.w_proj = init_mat(cfg_.feat, kc, 1.0 / std::sqrt(static_cast<double>(kc)));
        cp.b_proj = Mat::Zero(cfg_.feat, 1);
        conv = std::move(cp);
    }
    if (cfg_.trunk_input > 0) {
        int in = cfg_.trunk_input;
        for (int l = 0; l < cfg_.layers; ++l) {
            trunk.push_back(make_gru(in));
            in = cfg_.hidden;
        }
    }
    if (cfg_.encoder_vocab > 0) {
        // single-layer encoder with the embedding as its hidden state
        GruLayerParams g;
        const double se = 1.0 / std::sqrt(static_cast<double>(cfg_.embed));
        g.wz = init_mat(cfg_.embed, cfg_.encoder_vocab, se);
        g.uz = init_mat(cfg_.embed, cfg_.embed, se);
        g.wr = init_mat(cfg_.embed, cfg_.encoder_vocab, se);
        g.ur = init_mat(cfg_.embed, cfg_.embed, se);
        g.wn = init_mat(cfg_.embed, cfg_.encoder_vocab, se);
        g.un = init_mat(cfg_.embed, cfg_.embed, se);
        g.bz = Mat::Zero(cfg_.embed, 1);
        g.br = Mat::Zero(cfg_.embed, 1);
        g.bn = Mat::Zero(cfg_.embed, 1);
        encoder.push_back(std::move(g));
    }
}

Mat Registry::init_mat(int rows, int cols, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Mat m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = dist(init_rng_);
    return m;
}

GruLayerParams Registry::make_gru(int input_dim) {
    const double s = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden));
    GruLayerParams g;
    g.wz = init_mat(cfg_.hidden, input_dim, s);
    g.uz = init_mat(cfg_.hidden, cfg_.hidden, s);
    g.wr = init_mat(cfg_.hidden, input_dim, s);
    g.ur = init_mat(cfg_.hidden, cfg_.hidden, s);
    g.wn = init_mat(cfg_.hidden, input_dim, s);
    g.un = init_mat(cfg_.hidden, cfg_.hidden, s);
    g.bz = Mat::Zero(cfg_.hidden, 1);
    g.br = Mat::Zero(cfg_.hidden, 1);
    g.bn = Mat::Zero(cfg_.hidden, 1);
    return g;
}

TokenParams& Registry::ensure_token(const std::string& key) {
    auto it = tokens_.find(key);
    if (it != tokens_.end()) return it->second;
    const double s = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden));
    TokenParams tp;
    if (cfg_.feed_forward) {
        int in = cfg_.node_input_dim();
        for (int l = 0; l < cfg_.layers; ++l) {
            GruLayerParams g;  // wz/bz double as the affine map of a stateless cell
            g.wz = init_mat(cfg_.hidden, in, s);
            g.bz = Mat::Zero(cfg_.hidden, 1);
            tp.cell.push_back(std::move(g));
            in = cfg_.hidden;
        }
    } else {
        int in = cfg_.node_input_dim();
        for (int l = 0; l < cfg_.layers; ++l) {
            tp.cell.push_back(make_gru(in));
            in = cfg_.hidden;
        }
    }
    tp.w_up = init_mat(cfg_.msg, cfg_.hidden, s);
    tp.b_up = Mat::Zero(cfg_.msg, 1);
    if (!cfg_.feed_forward) {
        tp.w_down = init_mat(cfg_.msg, cfg_.hidden, s);
        tp.b_down = Mat::Zero(cfg_.msg, 1);
    }
    return tokens_.emplace(key, std::move(tp)).first->second;
}

Registry Registry::clone_zeroed() const {
    Registry out(*this);
    out.visit([](const std::string&, Mat& m) { m.setZero(); });
    return out;
}

namespace {

void visit_gru_stack(const std::string& prefix, std::vector<GruLayerParams>& stack,
                     const std::function<void(const std::string&, Mat&)>& fn) {
    for (size_t l = 0; l < stack.size(); ++l) {
        GruLayerParams& g = stack[l];
        const std::string p = prefix + ".l" + std::to_string(l) + ".";
        auto emit = [&](const char* name, Mat& m) {
            if (m.size() > 0) fn(p + name, m);
        };
        emit("wz", g.wz);
        emit("uz", g.uz);
        emit("wr", g.wr);
        emit("ur", g.ur);
        emit("wn", g.wn);
        emit("un", g.un);
        emit("bz", g.bz);
        emit("br", g.br);
        emit("bn", g.bn);
    }
}

}  // namespace

void Registry::visit(const std::function<void(const std::string&, Mat&)>& fn) {
    fn("head.w_actor", w_actor);
    fn("head.b_actor", b_actor);
    fn("head.w_critic", w_critic);
    fn("head.b_critic", b_critic);
    if (conv) {
        fn("conv.w1", conv->w1);
        fn("conv.b1", conv->b1);
        fn("conv.w2", conv->w2);
        fn("conv.b2", conv->b2);
        fn("conv.w_proj", conv->w_proj);
        fn("conv.b_proj", conv->b_proj);
    }
    visit_gru_stack("trunk", trunk, fn);
    visit_gru_stack("encoder", encoder, fn);
    for (auto& [key, tp] : tokens_) {
        visit_gru_stack("token." + key, tp.cell, fn);
        fn("token." + key + ".w_up", tp.w_up);
        fn("token." + key + ".b_up", tp.b_up);
        if (tp.w_down.size() > 0) {
            fn("token." + key + ".w_down", tp.w_down);
            fn("token." + key + ".b_down", tp.b_down);
        }
    }
}

void Registry::visit(const std::function<void(const std::string&, const Mat&)>& fn) const {
    const_cast<Registry*>(this)->visit(
        [&](const std::string& n, Mat& m) { fn(n, static_cast<const Mat&>(m)); });
}

std::vector<std::pair<std::string, Mat*>> Registry::entries() {
    std::vector<std::pair<std::string, Mat*>> out;
    visit([&](const std::string& n, Mat& m) { out.push_back({n, &m}); });
    return out;
}

void Registry::visit2(Registry& a, Registry& b,
                      const std::function<void(const std::string&, Mat&, Mat&)>& fn) {
    auto ea = a.entries(), eb = b.entries();
    if (ea.size() != eb.size()) throw std::logic_error("registry structures differ");
    for (size_t i = 0; i < ea.size(); ++i) {
        if (ea[i].first != eb[i].first) throw std::logic_error("registry structures differ");
        fn(ea[i].first, *ea[i].second, *eb[i].second);
    }
}

void Registry::visit3(Registry& a, Registry& b, Registry& c,
                      const std::function<void(const std::string&, Mat&, Mat&, Mat&)>& fn) {
    auto ea = a.entries(), eb = b.entries(), ec = c.entries();
    if (ea.size() != eb.size() || ea.size() != ec.size())
        throw std::logic_error("registry structures differ");
    for (size_t i = 0; i < ea.size(); ++i)
        fn(ea[i].first, *ea[i].second, *eb[i].second, *ec[i].second);
}

// ── checkpoint io ───────────────────────────────────────────────────────────

namespace {

void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<char*>(&v), 8); }
void put_str(std::ostream& os, const std::string& s) {
    put_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::string get_str(std::istream& is) {
    std::string s(get_u64(is), '\0');
    is.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
}

}  // namespace

void save_registry(const Registry& reg, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os.write("LFCK", 4);
    put_u64(os, 1);  // version
    const ModelConfig& c = reg.config();
    for (std::int64_t v :
         {static_cast<std::int64_t>(c.hidden), static_cast<std::int64_t>(c.msg),
          static_cast<std::int64_t>(c.layers), static_cast<std::int64_t>(c.feat),
          static_cast<std::int64_t>(c.actions), static_cast<std::int64_t>(c.feed_forward),
          static_cast<std::int64_t>(c.conv_planes), static_cast<std::int64_t>(c.crop),
          static_cast<std::int64_t>(c.conv1), static_cast<std::int64_t>(c.conv2),
          static_cast<std::int64_t>(c.nonspatial), static_cast<std::int64_t>(c.trunk_input),
          static_cast<std::int64_t>(c.encoder_vocab), static_cast<std::int64_t>(c.embed)})
        put_u64(os, static_cast<std::uint64_t>(v));
    put_u64(os, c.init_seed);

    put_u64(os, reg.tokens().size());
    for (const auto& [key, tp] : reg.tokens()) put_str(os, key);

    std::vector<std::pair<std::string, const Mat*>> entries;
    reg.visit([&](const std::string& n, const Mat& m) { entries.push_back({n, &m}); });
    put_u64(os, entries.size());
    for (const auto& [name, m] : entries) {
        put_str(os, name);
        put_u64(os, static_cast<std::uint64_t>(m->rows()));
        put_u64(os, static_cast<std::uint64_t>(m->cols()));
        os.write(reinterpret_cast<const char*>(m->data()),
                 static_cast<std::streamsize>(sizeof(double) * m->size()));
    }
}

Registry load_registry(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "LFCK", 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    if (get_u64(is) != 1) throw std::runtime_error("unsupported checkpoint version");

    ModelConfig c;
    c.hidden = static_cast<int>(get_u64(is));
    c.msg = static_cast<int>(get_u64(is));
    c.layers = static_cast<int>(get_u64(is));
    c.feat = static_cast<int>(get_u64(is));
    c.actions = static_cast<int>(get_u64(is));
    c.feed_forward = get_u64(is) != 0;
    c.conv_planes = static_cast<int>(get_u64(is));
    c.crop = static_cast<int>(get_u64(is));
    c.conv1 = static_cast<int>(get_u64(is));
    c.conv2 = static_cast<int>(get_u64(is));
    c.nonspatial = static_cast<int>(get_u64(is));
    c.trunk_input = static_cast<int>(get_u64(is));
    c.encoder_vocab = static_cast<int>(get_u64(is));
    c.embed = static_cast<int>(get_u64(is));
    c.init_seed = get_u64(is);

    Registry reg(c);
    const std::uint64_t token_count = get_u64(is);
    for (std::uint64_t i = 0; i < token_count; ++i) reg.ensure_token(get_str(is));

    auto entries = reg.entries();
    std::map<std::string, Mat*> by_name;
    for (auto& [n, m] : entries) by_name[n] = m;
    const std::uint64_t entry_count = get_u64(is);
    for (std::uint64_t i = 0; i < entry_count; ++i) {
        std::string name = get_str(is);
        auto rows = static_cast<Eigen::Index>(get_u64(is));
        auto cols = static_cast<Eigen::Index>(get_u64(is));
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error("checkpoint entry unknown: " + name);
        if (it->second->rows() != rows || it->second->cols() != cols)
            throw std::runtime_error("checkpoint shape mismatch: " + name);
        is.read(reinterpret_cast<char*>(it->second->data()),
                static_cast<std::streamsize>(sizeof(double) * rows * cols));
    }
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    return reg;
}

// ── cell math ───────────────────────────────────────────────────────────────

namespace detail {

Vec softmax(const Vec& logits) {
    Vec e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

Vec gru_forward(const GruLayerParams& p, const Vec& in, const Vec& hp, Vec& z, Vec& r, Vec& n,
                Vec& u) {
    z = (1.0 / (1.0 + (-(p.wz * in + p.uz * hp + p.bz.col(0))).array().exp())).matrix();
    r = (1.0 / (1.0 + (-(p.wr * in + p.ur * hp + p.br.col(0))).array().exp())).matrix();
    u = p.un * hp;
    n = (p.wn * in + r.cwiseProduct(u) + p.bn.col(0)).array().tanh().matrix();
    return (Vec::Ones(z.size()) - z).cwiseProduct(n) + z.cwiseProduct(hp);
}

Vec gru_backward(const GruLayerParams& p, const Vec& in, const Vec& hp, const Vec& z,
                 const Vec& r, const Vec& n, const Vec& u, const Vec& dh, GruLayerParams& g,
                 Vec& dhp) {
    const Vec dn = dh.cwiseProduct(Vec::Ones(z.size()) - z);
    const Vec dz = dh.cwiseProduct(hp - n);
    dhp += dh.cwiseProduct(z);

    const Vec da_n = dn.cwiseProduct((1.0 - n.array().square()).matrix());
    g.wn += da_n * in.transpose();
    g.bn.col(0) += da_n;
    const Vec dr = da_n.cwiseProduct(u);
    const Vec da_nr = da_n.cwiseProduct(r);
    g.un += da_nr * hp.transpose();
    dhp += p.un.transpose() * da_nr;

    const Vec da_z = dz.cwiseProduct(z.cwiseProduct(Vec::Ones(z.size()) - z));
    g.wz += da_z * in.transpose();
    g.uz += da_z * hp.transpose();
    g.bz.col(0) += da_z;
    dhp += p.uz.transpose() * da_z;

    const Vec da_r = dr.cwiseProduct(r.cwiseProduct(Vec::Ones(r.size()) - r));
    g.wr += da_r * in.transpose();
    g.ur += da_r * hp.transpose();
    g.br.col(0) += da_r;
    dhp += p.ur.transpose() * da_r;

    return p.wz.transpose() * da_z + p.wr.transpose() * da_r + p.wn.transpose() * da_n;
}

}  // namespace detail

// ── TreeModel ───────────────────────────────────────────────────────────────

std::string token_key(const Formula& node, const Alphabet& alphabet) {
    if (node.kind() == NodeKind::Atom) return alphabet.name(node.prop());
    return kind_name(node.kind());
}

TreeModel::TreeModel(Registry* reg, Alphabet alphabet)
    : reg_(reg), alphabet_(std::move(alphabet)) {}

int TreeModel::build(const Formula& f, int parent) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].token = token_key(f, alphabet_);
    nodes_[id].parent = parent;
    nodes_[id].params = &reg_->ensure_token(nodes_[id].token);
    for (size_t i = 0; i < f.children().size(); ++i)
        nodes_[id].child[i] = build(f.children()[i], id);
    post_order_.push_back(id);
    return id;
}

void TreeModel::bind(const Formula& f) {
    nodes_.clear();
    post_order_.clear();
    build(f, -1);
    reset();
}

void TreeModel::reset() {
    const auto& cfg = reg_->config();
    h_prev_.assign(nodes_.size(),
                   std::vector<Vec>(static_cast<size_t>(cfg.layers), Vec::Zero(cfg.hidden)));
    tape_.clear();
}

const Vec& TreeModel::hidden(int node) const {
    return h_prev_[static_cast<size_t>(node)].back();
}

namespace detail {

Vec conv_forward(const ModelConfig& cfg, const ConvParams& cp, const Vec& obs, ConvTape& ct) {
    const int c = cfg.crop, P = cfg.conv_planes;
    ct.p1.resize(9, P * 9);
    for (int orow = 0; orow < 3; ++orow)
        for (int ocol = 0; ocol < 3; ++ocol)
            for (int p = 0; p < P; ++p)
                for (int kr = 0; kr < 3; ++kr)
                    for (int kc = 0; kc < 3; ++kc)
                        ct.p1(orow * 3 + ocol, p * 9 + kr * 3 + kc) =
                            obs[p * c * c + (orow + kr) * c + (ocol + kc)];
    Mat z1 = ct.p1 * cp.w1.transpose();
    z1.rowwise() += cp.b1.col(0).transpose();
    ct.a1 = z1.array().tanh().matrix();
    ct.p2.resize(cfg.conv1 * 9);
    for (int ch = 0; ch < cfg.conv1; ++ch)
        for (int pos = 0; pos < 9; ++pos) ct.p2[ch * 9 + pos] = ct.a1(pos, ch);
    ct.a2 = (cp.w2 * ct.p2 + cp.b2.col(0)).array().tanh().matrix();
    ct.cat.resize(cfg.conv2 + cfg.nonspatial);
    ct.cat << ct.a2, obs.tail(cfg.nonspatial);
    ct.feat = (cp.w_proj * ct.cat + cp.b_proj.col(0)).array().tanh().matrix();
    return ct.feat;
}

void conv_backward(const ModelConfig& cfg, const ConvParams& cp, const ConvTape& ct,
                   const Vec& dfeat, ConvParams& gp) {
    const Vec da_proj = dfeat.cwiseProduct((1.0 - ct.feat.array().square()).matrix());
    gp.w_proj += da_proj * ct.cat.transpose();
    gp.b_proj.col(0) += da_proj;
    const Vec dcat = cp.w_proj.transpose() * da_proj;

    const Vec da2 =
        dcat.head(cfg.conv2).cwiseProduct((1.0 - ct.a2.array().square()).matrix());
    gp.w2 += da2 * ct.p2.transpose();
    gp.b2.col(0) += da2;
    const Vec dp2 = cp.w2.transpose() * da2;

    Mat da1(9, cfg.conv1);
    for (int ch = 0; ch < cfg.conv1; ++ch)
        for (int pos = 0; pos < 9; ++pos) da1(pos, ch) = dp2[ch * 9 + pos];
    const Mat dz1 = (da1.array() * (1.0 - ct.a1.array().square())).matrix();
    gp.w1 += dz1.transpose() * ct.p1;
    gp.b1.col(0) += dz1.colwise().sum().transpose();
}

}  // namespace detail

Vec TreeModel::extract(const Vec& obs, StepTape& tape) const {
    if (!reg_->conv) return obs;
    ConvTape ct;
    Vec feat = detail::conv_forward(reg_->config(), *reg_->conv, obs, ct);
    tape.conv = std::move(ct);
    return feat;
}

void TreeModel::extract_backward(const Vec& dfeat, const StepTape& tape, Registry& out) const {
    if (!reg_->conv) return;  // identity: gradients stop at the observation
    detail::conv_backward(reg_->config(), *reg_->conv, *tape.conv, dfeat, *out.conv);
}

StepOutput TreeModel::forward(const Vec& obs) {
    const auto& cfg = reg_->config();
    StepTape st;
    st.obs = obs;
    st.feat = extract(obs, st);
    st.nodes.resize(nodes_.size());

    std::vector<std::vector<Vec>> h_cur(nodes_.size());
    for (int v : post_order_) {
        const Node& node = nodes_[static_cast<size_t>(v)];
        Vec x(cfg.node_input_dim());
        int off = 0;
        x.segment(off, cfg.feat) = st.feat;
        off += cfg.feat;
        if (!cfg.feed_forward) {
            if (node.parent >= 0) {
                const Node& par = nodes_[static_cast<size_t>(node.parent)];
                x.segment(off, cfg.msg) =
                    par.params->w_down * h_prev_[static_cast<size_t>(node.parent)].back() +
                    par.params->b_down.col(0);
            } else {
                x.segment(off, cfg.msg).setZero();
            }
            off += cfg.msg;
        }
        for (int i = 0; i < 2; ++i) {
            const int ci = node.child[static_cast<size_t>(i)];
            if (ci >= 0) {
                const Node& ch = nodes_[static_cast<size_t>(ci)];
                x.segment(off, cfg.msg) =
                    ch.params->w_up * h_cur[static_cast<size_t>(ci)].back() +
                    ch.params->b_up.col(0);
            } else {
                x.segment(off, cfg.msg).setZero();
            }
            off += cfg.msg;
        }

        NodeTape& nt = st.nodes[static_cast<size_t>(v)];
        nt.layers.resize(static_cast<size_t>(cfg.layers));
        std::vector<Vec> hs(static_cast<size_t>(cfg.layers));
        Vec in = x;
        for (int l = 0; l < cfg.layers; ++l) {
            LayerTape& lt = nt.layers[static_cast<size_t>(l)];
            lt.in = in;
            const GruLayerParams& p = node.params->cell[static_cast<size_t>(l)];
            if (cfg.feed_forward) {
                lt.h = (p.wz * in + p.bz.col(0)).array().tanh().matrix();
            } else {
                lt.hp = h_prev_[static_cast<size_t>(v)][static_cast<size_t>(l)];
                lt.h = detail::gru_forward(p, in, lt.hp, lt.z, lt.r, lt.n, lt.u);
            }
            hs[static_cast<size_t>(l)] = lt.h;
            in = lt.h;
        }
        h_cur[static_cast<size_t>(v)] = std::move(hs);
    }

    StepOutput out;
    const Vec& hroot = h_cur[0].back();
    out.logits = reg_->w_actor * hroot + reg_->b_actor.col(0);
    out.value = (reg_->w_critic * hroot)(0) + reg_->b_critic(0, 0);

    h_prev_ = std::move(h_cur);
    tape_.push_back(std::move(st));
    return out;
}

void TreeModel::backward(const std::vector<StepGrad>& grads, Registry& out) {
    const auto& cfg = reg_->config();
    const size_t T = tape_.size();
    if (grads.size() != T) throw std::invalid_argument("per-step gradient count mismatch");

    auto zeros = [&] {
        return std::vector<std::vector<Vec>>(
            nodes_.size(),
            std::vector<Vec>(static_cast<size_t>(cfg.layers), Vec::Zero(cfg.hidden)));
    };
    auto dh_cur = zeros();
    auto dh_prev = zeros();

    for (size_t t = T; t-- > 0;) {
        const StepTape& st = tape_[t];
        const StepGrad& sg = grads[t];

        const Vec& hroot = st.nodes[0].layers.back().h;
        out.w_actor += sg.dlogits * hroot.transpose();
        out.b_actor.col(0) += sg.dlogits;
        out.w_critic.row(0) += sg.dvalue * hroot.transpose();
        out.b_critic(0, 0) += sg.dvalue;
        dh_cur[0].back() +=
            reg_->w_actor.transpose() * sg.dlogits + reg_->w_critic.transpose() * sg.dvalue;

        Vec dfeat = Vec::Zero(cfg.feat);
        for (size_t v = 0; v < nodes_.size(); ++v) {  // pre-order: parents first
            const Node& node = nodes_[v];
            const NodeTape& nt = st.nodes[v];
            TokenParams& gtok = out.ensure_token(node.token);

            Vec dx;
            for (int l = cfg.layers; l-- > 0;) {
                const LayerTape& lt = nt.layers[static_cast<size_t>(l)];
                const GruLayerParams& p = node.params->cell[static_cast<size_t>(l)];
                GruLayerParams& g = gtok.cell[static_cast<size_t>(l)];
                Vec din;
                if (cfg.feed_forward) {
                    const Vec da = dh_cur[v][static_cast<size_t>(l)].cwiseProduct(
                        (1.0 - lt.h.array().square()).matrix());
                    g.wz += da * lt.in.transpose();
                    g.bz.col(0) += da;
                    din = p.wz.transpose() * da;
                } else {
                    din = detail::gru_backward(p, lt.in, lt.hp, lt.z, lt.r, lt.n, lt.u,
                                               dh_cur[v][static_cast<size_t>(l)], g,
                                               dh_prev[v][static_cast<size_t>(l)]);
                }
                if (l > 0)
                    dh_cur[v][static_cast<size_t>(l) - 1] += din;
                else
                    dx = std::move(din);
            }

            int off = 0;
            dfeat += dx.segment(off, cfg.feat);
            off += cfg.feat;
            if (!cfg.feed_forward) {
                if (node.parent >= 0) {
                    const size_t par = static_cast<size_t>(node.parent);
                    const Node& pnode = nodes_[par];
                    TokenParams& gp = out.ensure_token(pnode.token);
                    const Vec dm = dx.segment(off, cfg.msg);
                    gp.w_down += dm * st.nodes[par].layers.back().hp.transpose();
                    gp.b_down.col(0) += dm;
                    dh_prev[par].back() += pnode.params->w_down.transpose() * dm;
                }
                off += cfg.msg;
            }
            for (int i = 0; i < 2; ++i) {
                const int ci = node.child[static_cast<size_t>(i)];
                if (ci >= 0) {
                    const size_t cs = static_cast<size_t>(ci);
                    const Node& cnode = nodes_[cs];
                    TokenParams& gc = out.ensure_token(cnode.token);
                    const Vec dm = dx.segment(off, cfg.msg);
                    gc.w_up += dm * st.nodes[cs].layers.back().h.transpose();
                    gc.b_up.col(0) += dm;
                    dh_cur[cs].back() += cnode.params->w_up.transpose() * dm;
                }
                off += cfg.msg;
            }
        }
        extract_backward(dfeat, st, out);

        dh_cur = std::move(dh_prev);
        dh_prev = zeros();
    }
}

// ── A2C loss ────────────────────────────────────────────────────────────────

std::vector<double> discounted_returns(const std::vector<TrajectoryStep>& steps,
                                       const A2cHyper& hyper) {
    const int T = static_cast<int>(steps.size());
    std::vector<double> returns(static_cast<size_t>(T), 0.0);
    if (hyper.bootstrap_n <= 0) {
        double acc = 0.0;
        for (int t = T; t-- > 0;) {
            acc = steps[static_cast<size_t>(t)].reward + hyper.gamma * acc;
            returns[static_cast<size_t>(t)] = acc;
        }
        return returns;
    }
    for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        double g = 1.0;
        int k = 0;
        for (; k < hyper.bootstrap_n && t + k < T; ++k) {
            acc += g * steps[static_cast<size_t>(t + k)].reward;
            g *= hyper.gamma;
        }
        if (t + k < T) acc += g * steps[static_cast<size_t>(t + k)].value;
        returns[static_cast<size_t>(t)] = acc;
    }
    return returns;
}

LossParts loss_and_gradients(PolicyModel& model, const std::vector<TrajectoryStep>& steps,
                             const A2cHyper& hyper, Registry& grads) {
    if (steps.empty()) throw std::invalid_argument("empty trajectory");
    const double T = static_cast<double>(steps.size());
    const std::vector<double> returns = discounted_returns(steps, hyper);

    model.reset();
    std::vector<StepGrad> per_step;
    per_step.reserve(steps.size());
    LossParts parts;
    for (size_t t = 0; t < steps.size(); ++t) {
        StepOutput so = model.forward(steps[t].observation);
        const Vec p = detail::softmax(so.logits);
        const Vec logp = p.array().max(1e-300).log().matrix();
        const double entropy = -(p.array() * logp.array()).sum();
        // advantages use the stored (collection-time) values as constants
        const double advantage = returns[t] - steps[t].value;
        const double verr = so.value - returns[t];

        parts.policy += -logp[steps[t].action] * advantage / T;
        parts.value += 0.5 * verr * verr / T;
        parts.entropy += entropy / T;

        StepGrad sg;
        Vec onehot = Vec::Zero(p.size());
        onehot[steps[t].action] = 1.0;
        sg.dlogits = (advantage * (p - onehot) +
                      hyper.entropy_weight *
                          p.cwiseProduct((logp.array() + entropy).matrix())) /
                     T;
        sg.dvalue = verr / T;
        per_step.push_back(std::move(sg));
    }
    parts.total = parts.policy + parts.value - hyper.entropy_weight * parts.entropy;
    model.backward(per_step, grads);
    return parts;
}

}  // namespace ltlforge
