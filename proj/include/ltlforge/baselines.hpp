// ltlforge/baselines.hpp — the three ablation baselines.
//
//   no_structure_no_language — a plain recurrent A2C policy over the
//     observation features; it never sees the formula.
//   no_structure — the same trunk additionally fed a 32-dim embedding of the
//     formula, produced by a co-trained recurrent encoder over the formula's
//     one-hot token sequence.
//   no_time — the compositional tree with every recurrent cell replaced by a
//     stateless feed-forward map (TreeModel with feed_forward=true; downward
//     messages disappear with the recurrent state).

#pragma once

#include "ltlforge/compnet.hpp"

namespace ltlforge {

enum class BaselineKind { NoStructureNoLanguage, NoStructure, NoTime, Full };

const char* baseline_name(BaselineKind k);
std::optional<BaselineKind> baseline_from_name(const std::string& name);

// Token index in the encoder's one-hot vocabulary: the seven operators
// first, then the alphabet's predicates.
int encoder_vocab_size(const Alphabet& alphabet);
std::vector<int> encoder_token_sequence(const Formula& f, const Alphabet& alphabet);

// Monolithic recurrent policy (trunk GRU stack + heads), optionally with the
// formula-embedding encoder.
class MonolithicModel : public PolicyModel {
public:
    MonolithicModel(Registry* reg, Alphabet alphabet);

    void bind(const Formula& f) override;
    void reset() override;
    StepOutput forward(const Vec& obs) override;
    void backward(const std::vector<StepGrad>& grads, Registry& out) override;
    Registry& registry() override { return *reg_; }

    const Vec& embedding() const { return embedding_; }

private:
    struct LayerTape {
        Vec in, hp, z, r, n, u, h;
    };
    struct StepTape {
        Vec obs, feat;
        std::optional<ConvTape> conv;
        std::vector<LayerTape> layers;
    };
    struct EncoderTape {
        std::vector<LayerTape> steps;
    };

    void encode();

    Registry* reg_;
    Alphabet alphabet_;
    std::optional<Formula> formula_;
    std::vector<int> token_seq_;
    Vec embedding_;  // zero-length when the encoder is absent
    EncoderTape enc_tape_;
    std::vector<Vec> h_prev_;
    std::vector<StepTape> tape_;
};

}  // namespace ltlforge
