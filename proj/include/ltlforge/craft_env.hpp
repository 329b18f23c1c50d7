// ltlforge/craft_env.hpp — the Craft domain.
//
// A bounded grid holds one of each structure (workbench, tree, toolshed,
// factory, recycling bin) and four trash cans containing gold, grass, silver
// and a gem.  The robot moves 4-connected; `use` picks a resource up from an
// adjacent can when empty-handed or discards the held resource into an
// adjacent recycling bin.  Resource predicates hold while the item is held;
// structure predicates hold while the robot is 4-adjacent to the structure.
//
// Executed formulas are normally rewritten so every positive atom p becomes
// `closer_p U p`, which lets the monitor reward monotone approach; closer_p
// is a derived predicate ("the Manhattan distance to p's target strictly
// decreased, or p already holds").

#pragma once

#include <Eigen/Core>
#include <optional>

#include "ltlforge/reward_machine.hpp"

namespace ltlforge {

using Vec = Eigen::VectorXd;

// ── world model ─────────────────────────────────────────────────────────────

enum class Resource : std::uint8_t { Gold, Grass, Silver, Gem };
enum class Structure : std::uint8_t { Workbench, Tree, Toolshed, Factory, RecyclingBin };

// Proposition index in Alphabet::craft() ({gem, factory, gold, grass,
// silver, workbench, tree, toolshed}).
int resource_prop(Resource r);
std::optional<int> structure_prop(Structure s);  // recycling bin has none

struct Cell {
    enum class Kind : std::uint8_t { Empty, Wall, Structure, TrashCan } kind = Kind::Empty;
    Structure structure = Structure::Workbench;   // valid when kind == Structure
    std::optional<Resource> contents;             // valid when kind == TrashCan

    bool passable() const { return kind == Kind::Empty; }
};

struct Pos {
    int row = 0;
    int col = 0;
    bool operator==(const Pos& o) const { return row == o.row && col == o.col; }
};

struct CraftState {
    int width = 0;
    int height = 0;
    std::vector<Cell> cells;  // row-major
    Pos robot;
    std::optional<Resource> inventory;
    int t = 0;

    Cell& at(Pos p) { return cells[static_cast<size_t>(p.row) * width + p.col]; }
    const Cell& at(Pos p) const { return cells[static_cast<size_t>(p.row) * width + p.col]; }
    bool in_bounds(Pos p) const {
        return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width;
    }
    int diameter() const { return (width - 1) + (height - 1); }
};

enum class CraftAction : std::uint8_t { North, South, East, West, Use };
constexpr int kCraftActionCount = 5;
const char* craft_action_name(CraftAction a);
std::optional<CraftAction> craft_action_from_name(const std::string& name);

// ── predicates and the closer transformation ────────────────────────────────

// Manhattan distance from the robot to the predicate's target (the can that
// holds a resource / the structure cell); 0 when a held resource satisfies
// it; nullopt when no target exists (e.g. the resource was discarded).
std::optional<int> predicate_distance(const CraftState& s, int prop);

// Letter over Alphabet::craft() (with_closer appends closer_p bits).
Letter eval_predicates(const CraftState& s, const CraftState* prev, bool with_closer);

// Rewrites every positive Atom(p) occurrence into (closer_p U p); the result
// ranges over Alphabet::craft().with_closer().
Formula transform_closer(const Formula& f);

// ── map generation and text format ──────────────────────────────────────────

// Uniformly random distinct interior cells for the nine objects and the
// robot; the boundary is wall.
CraftState craft_generate_map(Rng& rng, int size = 7);

// One character per cell: '#' wall, '.' free, 'R' robot, structures
// W/T/H/F/B (workbench, tree, toolshed, factory, recycling bin), cans with
// contents O/A/V/E (gold, grass, silver, gem), 'c' empty can.  Lines
// starting with ';' are comments.
std::string format_craft_map(const CraftState& s);
CraftState parse_craft_map(const std::string& text);

// ── environment ─────────────────────────────────────────────────────────────

struct CraftEnvConfig {
    int horizon = 100;
    bool use_closer = true;
    int crop = 5;  // odd egocentric window size
    RewardSpec rewards;
};

// A formula prepared for execution: the transformed formula, its automaton,
// and the alphabet the monitor letters range over.
struct CraftTask {
    Formula base;
    Formula executed;
    bool with_closer = false;
    bool horizon_only = false;
    Dfa dfa;
};

CraftTask make_craft_task(const Formula& base, const CraftEnvConfig& cfg,
                          int state_cap = 10000);

struct CraftStepResult {
    Vec observation;
    double reward = 0.0;
    bool done = false;
    EpisodeStatus status = EpisodeStatus::Running;
    Letter letter;
};

class CraftEnv {
public:
    CraftEnv(const CraftEnvConfig& cfg, const CraftTask* task);

    static int observation_dim(int crop);
    int observation_dim() const { return observation_dim(cfg_.crop); }
    static constexpr int kPlanes = 10;  // wall, 5 structures, 4 can contents
    static constexpr int kNonSpatial = 5 + 8 + 1;  // inventory, distances, time

    Vec reset(CraftState start);
    CraftStepResult step(CraftAction action);

    const CraftState& state() const { return state_; }
    EpisodeStatus status() const { return status_; }
    const MonitorState& monitor() const { return machine_.monitor(); }
    int t() const { return state_.t; }

    Vec observe() const;

private:
    CraftEnvConfig cfg_;
    const CraftTask* task_;
    CraftState state_;
    RewardMachine machine_;
    EpisodeStatus status_ = EpisodeStatus::Running;
};

// The hand path for the fixtures/fig2.map scenario: pick up the gem, walk to
// the factory, then idle against the wall.
std::vector<CraftAction> scripted_fig2_actions(int horizon);

}  // namespace ltlforge
