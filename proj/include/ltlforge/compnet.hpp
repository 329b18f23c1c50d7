// ltlforge/compnet.hpp — compositional recurrent policy networks.
//
// A formula's policy network mirrors its parse tree: every operator and
// predicate token is one recurrent sub-network drawn from a shared registry,
// so two formulas containing the same token literally share parameters.
// Per step, every node consumes the (shared) feature vector, a message
// decoded from its parent's previous-step state, and messages decoded from
// its children's current-step states; the root's new state feeds linear
// actor and critic heads.
//
// Gradients are exact: forward passes record a tape and backward() runs
// reverse-mode accumulation through time, the tree structure, the message
// decoders and the feature extractor.

#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <map>
#include <optional>

#include "ltlforge/formula.hpp"

namespace ltlforge {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// ── parameters ──────────────────────────────────────────────────────────────

struct ModelConfig {
    int hidden = 64;
    int msg = 32;
    int layers = 1;   // stacked GRU layers per sub-network (Craft uses 2)
    int feat = 0;     // post-extractor feature dimension
    int actions = 0;
    bool feed_forward = false;  // no_time: stateless cells, no downward messages

    // convolutional extractor; active when conv_planes > 0
    int conv_planes = 0;
    int crop = 5;
    int conv1 = 16;
    int conv2 = 32;
    int nonspatial = 0;

    // monolithic baseline pieces; active when > 0
    int trunk_input = 0;    // recurrent trunk over [features ⊕ embedding]
    int encoder_vocab = 0;  // one-hot token vocabulary of the formula encoder
    int embed = 32;

    std::uint64_t init_seed = 1;

    int node_input_dim() const { return feat + (feed_forward ? 2 : 3) * msg; }
};

struct GruLayerParams {
    Mat wz, uz, wr, ur, wn, un;  // input and recurrent weights per gate
    Mat bz, br, bn;              // column biases
};

struct TokenParams {
    std::vector<GruLayerParams> cell;
    Mat w_up, b_up;      // child → parent message decoder (from top-layer state)
    Mat w_down, b_down;  // parent → child message decoder (absent in no_time)
};

struct ConvParams {
    Mat w1, b1, w2, b2, w_proj, b_proj;
};

class Registry {
public:
    explicit Registry(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }

    // One shared parameter entry per token; created on first use.
    TokenParams& ensure_token(const std::string& key);
    bool has_token(const std::string& key) const { return tokens_.count(key) > 0; }
    const std::map<std::string, TokenParams>& tokens() const { return tokens_; }

    Mat w_actor, b_actor, w_critic, b_critic;
    std::optional<ConvParams> conv;
    std::vector<GruLayerParams> trunk;    // empty unless trunk_input > 0
    std::vector<GruLayerParams> encoder;  // empty unless encoder_vocab > 0

    // Structural clone with all parameters zeroed (gradient / optimizer
    // state buffers).  The clone owns the same token set.
    Registry clone_zeroed() const;

    // Deterministic walk over every parameter matrix, name included.
    void visit(const std::function<void(const std::string&, Mat&)>& fn);
    void visit(const std::function<void(const std::string&, const Mat&)>& fn) const;

    // Paired walk (e.g. parameters with their gradients); structures must
    // match exactly.
    static void visit2(Registry& a, Registry& b,
                       const std::function<void(const std::string&, Mat&, Mat&)>& fn);
    static void visit3(Registry& a, Registry& b, Registry& c,
                       const std::function<void(const std::string&, Mat&, Mat&, Mat&)>& fn);

    std::vector<std::pair<std::string, Mat*>> entries();

private:
    GruLayerParams make_gru(int input_dim);
    Mat init_mat(int rows, int cols, double scale);

    ModelConfig cfg_;
    std::map<std::string, TokenParams> tokens_;
    Rng init_rng_;
};

// Bit-exact binary checkpoint of a registry (config, token set, parameters).
void save_registry(const Registry& reg, const std::string& path);
Registry load_registry(const std::string& path);

// ── policy model interface ──────────────────────────────────────────────────

struct StepGrad {
    Vec dlogits;
    double dvalue = 0.0;
};

struct StepOutput {
    Vec logits;
    double value = 0.0;
};

class PolicyModel {
public:
    virtual ~PolicyModel() = default;
    virtual void bind(const Formula& f) = 0;  // prepare for episodes of f
    virtual void reset() = 0;                 // new episode: clear state and tape
    virtual StepOutput forward(const Vec& obs) = 0;
    // dlogits/dvalue per recorded step, accumulated into `grads`.
    virtual void backward(const std::vector<StepGrad>& grads, Registry& out) = 0;
    virtual Registry& registry() = 0;
};

// ── feature extraction ──────────────────────────────────────────────────────

struct ConvTape {
    Mat p1, a1;  // im2col patches and first-layer activations
    Vec p2, a2, cat, feat;
};

namespace detail {
// 5x5 crop, two valid 3x3 convolutions, concat with the non-spatial tail,
// linear projection; tanh nonlinearities throughout.
Vec conv_forward(const ModelConfig& cfg, const ConvParams& cp, const Vec& obs, ConvTape& tape);
void conv_backward(const ModelConfig& cfg, const ConvParams& cp, const ConvTape& tape,
                   const Vec& dfeat, ConvParams& grads);
}  // namespace detail

// ── the compositional tree model ────────────────────────────────────────────

std::string token_key(const Formula& node, const Alphabet& alphabet);

class TreeModel : public PolicyModel {
public:
    TreeModel(Registry* reg, Alphabet alphabet);

    void bind(const Formula& f) override;
    void reset() override;
    StepOutput forward(const Vec& obs) override;
    void backward(const std::vector<StepGrad>& grads, Registry& out) override;
    Registry& registry() override { return *reg_; }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    // Top-layer hidden state of a node after the last forward (testing).
    const Vec& hidden(int node) const;

private:
    struct Node {
        std::string token;
        int parent = -1;
        std::array<int, 2> child{-1, -1};
        TokenParams* params = nullptr;
    };

    struct LayerTape {
        Vec in, hp, z, r, n, u, h;  // u = un·hp
    };
    struct NodeTape {
        std::vector<LayerTape> layers;
    };
    struct StepTape {
        Vec obs, feat;
        std::optional<ConvTape> conv;
        std::vector<NodeTape> nodes;
    };

    int build(const Formula& f, int parent);
    Vec extract(const Vec& obs, StepTape& tape) const;
    void extract_backward(const Vec& dfeat, const StepTape& tape, Registry& out) const;

    Registry* reg_;
    Alphabet alphabet_;
    std::vector<Node> nodes_;       // pre-order; 0 is the root
    std::vector<int> post_order_;
    std::vector<std::vector<Vec>> h_prev_;  // per node, per layer
    std::vector<StepTape> tape_;
};

// ── A2C loss ────────────────────────────────────────────────────────────────

struct A2cHyper {
    double gamma = 0.9;
    double entropy_weight = 0.1;
    int bootstrap_n = 0;  // 0: full-episode Monte-Carlo returns
};

// One environment step as the update sees it.
struct TrajectoryStep {
    Vec observation;  // observation the action was chosen from
    int action = 0;
    double reward = 0.0;
    double log_prob = 0.0;
    double value = 0.0;  // critic estimate at collection time
};

struct LossParts {
    double total = 0.0, policy = 0.0, value = 0.0, entropy = 0.0;
};

// Discounted returns; when hyper.bootstrap_n > 0, n-step returns bootstrapped
// with the stored value estimates.
std::vector<double> discounted_returns(const std::vector<TrajectoryStep>& steps,
                                       const A2cHyper& hyper);

// Replays the trajectory through the bound model, computes the A2C loss
// (mean over steps; advantages from stored values are treated as constants
// in the policy term) and accumulates exact parameter gradients.
LossParts loss_and_gradients(PolicyModel& model, const std::vector<TrajectoryStep>& steps,
                             const A2cHyper& hyper, Registry& grads);

// Shared cell math (used by the baselines as well).
namespace detail {
Vec gru_forward(const GruLayerParams& p, const Vec& in, const Vec& hp, Vec& z, Vec& r, Vec& n,
                Vec& u);
// Returns d_in; accumulates parameter grads and d_hp.
Vec gru_backward(const GruLayerParams& p, const Vec& in, const Vec& hp, const Vec& z,
                 const Vec& r, const Vec& n, const Vec& u, const Vec& dh, GruLayerParams& g,
                 Vec& dhp);
Vec softmax(const Vec& logits);
}  // namespace detail

}  // namespace ltlforge
