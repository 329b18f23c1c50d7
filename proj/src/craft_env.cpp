#include "ltlforge/craft_env.hpp"

#include <algorithm>
#include <sstream>

namespace ltlforge {

int resource_prop(Resource r) {
    switch (r) {
        case Resource::Gold: return 2;
        case Resource::Grass: return 3;
        case Resource::Silver: return 4;
        case Resource::Gem: return 0;
    }
    return -1;
}

std::optional<int> structure_prop(Structure s) {
    switch (s) {
        case Structure::Workbench: return 5;
        case Structure::Tree: return 6;
        case Structure::Toolshed: return 7;
        case Structure::Factory: return 1;
        case Structure::RecyclingBin: return std::nullopt;
    }
    return std::nullopt;
}

const char* craft_action_name(CraftAction a) {
    switch (a) {
        case CraftAction::North: return "north";
        case CraftAction::South: return "south";
        case CraftAction::East: return "east";
        case CraftAction::West: return "west";
        case CraftAction::Use: return "use";
    }
    return "?";
}

std::optional<CraftAction> craft_action_from_name(const std::string& name) {
    for (int i = 0; i < kCraftActionCount; ++i) {
        auto a = static_cast<CraftAction>(i);
        if (name == craft_action_name(a)) return a;
    }
    if (name == "n") return CraftAction::North;
    if (name == "s") return CraftAction::South;
    if (name == "e") return CraftAction::East;
    if (name == "w") return CraftAction::West;
    if (name == "u") return CraftAction::Use;
    return std::nullopt;
}

namespace {

constexpr Pos kDirs[4] = {{-1, 0}, {1, 0}, {0, 1}, {0, -1}};  // N, S, E, W

int manhattan(Pos a, Pos b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

// Scan order for `use`: north, east, south, west.
constexpr Pos kUseOrder[4] = {{-1, 0}, {0, 1}, {1, 0}, {0, -1}};

}  // namespace

std::optional<int> predicate_distance(const CraftState& s, int prop) {
    // resource predicates
    for (Resource r : {Resource::Gem, Resource::Gold, Resource::Grass, Resource::Silver}) {
        if (resource_prop(r) != prop) continue;
        if (s.inventory && *s.inventory == r) return 0;
        std::optional<int> best;
        for (int row = 0; row < s.height; ++row)
            for (int col = 0; col < s.width; ++col) {
                const Cell& c = s.at({row, col});
                if (c.kind == Cell::Kind::TrashCan && c.contents && *c.contents == r) {
                    int d = manhattan(s.robot, {row, col});
                    if (!best || d < *best) best = d;
                }
            }
        return best;
    }
    // structure predicates
    std::optional<int> best;
    for (int row = 0; row < s.height; ++row)
        for (int col = 0; col < s.width; ++col) {
            const Cell& c = s.at({row, col});
            if (c.kind == Cell::Kind::Structure && structure_prop(c.structure) == prop) {
                int d = manhattan(s.robot, {row, col});
                if (!best || d < *best) best = d;
            }
        }
    return best;
}

Letter eval_predicates(const CraftState& s, const CraftState* prev, bool with_closer) {
    Letter l;
    // resources: held item
    if (s.inventory) l.bits |= 1u << resource_prop(*s.inventory);
    // structures: 4-adjacency
    for (const Pos& d : kDirs) {
        Pos p{s.robot.row + d.row, s.robot.col + d.col};
        if (!s.in_bounds(p)) continue;
        const Cell& c = s.at(p);
        if (c.kind == Cell::Kind::Structure)
            if (auto prop = structure_prop(c.structure)) l.bits |= 1u << *prop;
    }
    if (!with_closer) return l;
    const int base = Alphabet::craft().size();
    for (int prop = 0; prop < base; ++prop) {
        bool closer = l.holds(prop);  // a satisfied predicate counts as closer
        if (!closer && prev) {
            auto now = predicate_distance(s, prop);
            auto before = predicate_distance(*prev, prop);
            closer = now && before && *now < *before;
        }
        if (closer) l.bits |= 1u << (base + prop);
    }
    return l;
}

// ── closer transformation ───────────────────────────────────────────────────

namespace {

Formula transform_rec(const Formula& f, bool positive) {
    const int base = Alphabet::craft().size();
    switch (f.kind()) {
        case NodeKind::Atom:
            if (positive)
                return Formula::until(Formula::atom(base + f.prop()), f);
            return f;
        case NodeKind::Not:
            return Formula::not_(transform_rec(f.child(0), !positive));
        default: {
            if (f.children().empty()) return f;
            std::vector<Formula> children;
            for (const auto& c : f.children()) children.push_back(transform_rec(c, positive));
            return Formula::make(f.kind(), std::move(children));
        }
    }
}

}  // namespace

Formula transform_closer(const Formula& f) { return transform_rec(f, true); }

// ── map generation ──────────────────────────────────────────────────────────

CraftState craft_generate_map(Rng& rng, int size) {
    if (size < 5) throw std::invalid_argument("craft map size must be >= 5");
    CraftState s;
    s.width = size;
    s.height = size;
    s.cells.assign(static_cast<size_t>(size) * size, Cell{});
    for (int row = 0; row < size; ++row)
        for (int col = 0; col < size; ++col)
            if (row == 0 || col == 0 || row == size - 1 || col == size - 1)
                s.at({row, col}).kind = Cell::Kind::Wall;

    std::vector<Pos> free;
    for (int row = 1; row < size - 1; ++row)
        for (int col = 1; col < size - 1; ++col) free.push_back({row, col});

    auto take = [&]() {
        size_t i = std::uniform_int_distribution<size_t>(0, free.size() - 1)(rng);
        Pos p = free[i];
        free[i] = free.back();
        free.pop_back();
        return p;
    };

    for (Structure st : {Structure::Workbench, Structure::Tree, Structure::Toolshed,
                         Structure::Factory, Structure::RecyclingBin}) {
        Cell& c = s.at(take());
        c.kind = Cell::Kind::Structure;
        c.structure = st;
    }
    for (Resource r : {Resource::Gold, Resource::Grass, Resource::Silver, Resource::Gem}) {
        Cell& c = s.at(take());
        c.kind = Cell::Kind::TrashCan;
        c.contents = r;
    }
    s.robot = take();
    return s;
}

// ── map text format ─────────────────────────────────────────────────────────

namespace {

char cell_char(const CraftState& s, Pos p) {
    if (p == s.robot) return 'R';
    const Cell& c = s.at(p);
    switch (c.kind) {
        case Cell::Kind::Empty: return '.';
        case Cell::Kind::Wall: return '#';
        case Cell::Kind::Structure:
            switch (c.structure) {
                case Structure::Workbench: return 'W';
                case Structure::Tree: return 'T';
                case Structure::Toolshed: return 'H';
                case Structure::Factory: return 'F';
                case Structure::RecyclingBin: return 'B';
            }
            return '?';
        case Cell::Kind::TrashCan:
            if (!c.contents) return 'c';
            switch (*c.contents) {
                case Resource::Gold: return 'O';
                case Resource::Grass: return 'A';
                case Resource::Silver: return 'V';
                case Resource::Gem: return 'E';
            }
            return '?';
    }
    return '?';
}

}  // namespace

std::string format_craft_map(const CraftState& s) {
    std::string out =
        "; craft map: #=wall .=free R=robot W=workbench T=tree H=toolshed F=factory\n"
        ";            B=recycling-bin O=gold A=grass V=silver E=gem c=empty-can\n";
    for (int row = 0; row < s.height; ++row) {
        for (int col = 0; col < s.width; ++col) out.push_back(cell_char(s, {row, col}));
        out.push_back('\n');
    }
    return out;
}

CraftState parse_craft_map(const std::string& text) {
    std::vector<std::string> rows;
    for (const auto& raw : split(text, '\n')) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == ';') continue;
        rows.push_back(line);
    }
    if (rows.empty()) throw std::runtime_error("empty craft map");
    CraftState s;
    s.height = static_cast<int>(rows.size());
    s.width = static_cast<int>(rows[0].size());
    s.cells.assign(static_cast<size_t>(s.width) * s.height, Cell{});
    bool robot_seen = false;
    for (int row = 0; row < s.height; ++row) {
        if (static_cast<int>(rows[row].size()) != s.width)
            throw std::runtime_error("ragged craft map row: " + rows[row]);
        for (int col = 0; col < s.width; ++col) {
            Cell& c = s.at({row, col});
            switch (rows[row][col]) {
                case '.': break;
                case '#': c.kind = Cell::Kind::Wall; break;
                case 'R':
                    s.robot = {row, col};
                    robot_seen = true;
                    break;
                case 'W': c.kind = Cell::Kind::Structure; c.structure = Structure::Workbench; break;
                case 'T': c.kind = Cell::Kind::Structure; c.structure = Structure::Tree; break;
                case 'H': c.kind = Cell::Kind::Structure; c.structure = Structure::Toolshed; break;
                case 'F': c.kind = Cell::Kind::Structure; c.structure = Structure::Factory; break;
                case 'B': c.kind = Cell::Kind::Structure; c.structure = Structure::RecyclingBin; break;
                case 'O': c.kind = Cell::Kind::TrashCan; c.contents = Resource::Gold; break;
                case 'A': c.kind = Cell::Kind::TrashCan; c.contents = Resource::Grass; break;
                case 'V': c.kind = Cell::Kind::TrashCan; c.contents = Resource::Silver; break;
                case 'E': c.kind = Cell::Kind::TrashCan; c.contents = Resource::Gem; break;
                case 'c': c.kind = Cell::Kind::TrashCan; break;
                default:
                    throw std::runtime_error(std::string("unknown map character: ") +
                                             rows[row][col]);
            }
        }
    }
    if (!robot_seen) throw std::runtime_error("craft map has no robot");
    if (!s.at(s.robot).passable()) throw std::runtime_error("robot on an impassable cell");
    return s;
}

// ── environment ─────────────────────────────────────────────────────────────

CraftTask make_craft_task(const Formula& base, const CraftEnvConfig& cfg, int state_cap) {
    CraftTask task;
    task.base = base;
    task.with_closer = cfg.use_closer;
    task.executed = cfg.use_closer ? transform_closer(base) : base;
    task.horizon_only = accepts_only_at_horizon(task.executed);
    const Alphabet alphabet =
        cfg.use_closer ? Alphabet::craft().with_closer() : Alphabet::craft();
    task.dfa = compile(task.executed, AlphabetModel::free(alphabet), state_cap);
    return task;
}

CraftEnv::CraftEnv(const CraftEnvConfig& cfg, const CraftTask* task)
    : cfg_(cfg), task_(task) {}

int CraftEnv::observation_dim(int crop) { return kPlanes * crop * crop + kNonSpatial; }

Vec CraftEnv::reset(CraftState start) {
    start.t = 0;
    start.inventory.reset();
    state_ = std::move(start);
    machine_ = RewardMachine(&task_->dfa, task_->horizon_only, cfg_.rewards);
    status_ = EpisodeStatus::Running;
    return observe();
}

Vec CraftEnv::observe() const {
    Vec obs = Vec::Zero(observation_dim());
    const int c = cfg_.crop;
    const int half = c / 2;
    // planes: wall, workbench, tree, toolshed, factory, bin, gold, grass,
    // silver, gem cans; out-of-bounds reads as wall
    for (int dr = -half; dr <= half; ++dr) {
        for (int dc = -half; dc <= half; ++dc) {
            Pos p{state_.robot.row + dr, state_.robot.col + dc};
            int plane = -1;
            if (!state_.in_bounds(p) || state_.at(p).kind == Cell::Kind::Wall) {
                plane = 0;
            } else if (state_.at(p).kind == Cell::Kind::Structure) {
                plane = 1 + static_cast<int>(state_.at(p).structure);
            } else if (state_.at(p).kind == Cell::Kind::TrashCan && state_.at(p).contents) {
                plane = 6 + static_cast<int>(*state_.at(p).contents);
            }
            if (plane >= 0)
                obs[plane * c * c + (dr + half) * c + (dc + half)] = 1.0;
        }
    }
    int off = kPlanes * c * c;
    // inventory one-hot: none + four resources
    obs[off + (state_.inventory ? 1 + static_cast<int>(*state_.inventory) : 0)] = 1.0;
    off += 5;
    // per-predicate distances normalized by the map diameter; 1 when absent
    for (int prop = 0; prop < 8; ++prop) {
        auto d = predicate_distance(state_, prop);
        obs[off + prop] = d ? std::min(1.0, static_cast<double>(*d) / state_.diameter()) : 1.0;
    }
    off += 8;
    obs[off] = static_cast<double>(state_.t) / cfg_.horizon;
    return obs;
}

CraftStepResult CraftEnv::step(CraftAction action) {
    if (status_ != EpisodeStatus::Running)
        throw std::logic_error("step on a finished Craft episode");

    const CraftState prev = state_;
    switch (action) {
        case CraftAction::North:
        case CraftAction::South:
        case CraftAction::East:
        case CraftAction::West: {
            const Pos& d = kDirs[static_cast<int>(action)];
            Pos p{state_.robot.row + d.row, state_.robot.col + d.col};
            if (state_.in_bounds(p) && state_.at(p).passable()) state_.robot = p;
            break;
        }
        case CraftAction::Use: {
            if (!state_.inventory) {
                for (const Pos& d : kUseOrder) {
                    Pos p{state_.robot.row + d.row, state_.robot.col + d.col};
                    if (!state_.in_bounds(p)) continue;
                    Cell& cell = state_.at(p);
                    if (cell.kind == Cell::Kind::TrashCan && cell.contents) {
                        state_.inventory = cell.contents;
                        cell.contents.reset();
                        break;
                    }
                }
            } else {
                for (const Pos& d : kUseOrder) {
                    Pos p{state_.robot.row + d.row, state_.robot.col + d.col};
                    if (!state_.in_bounds(p)) continue;
                    const Cell& cell = state_.at(p);
                    if (cell.kind == Cell::Kind::Structure &&
                        cell.structure == Structure::RecyclingBin) {
                        state_.inventory.reset();  // discarded
                        break;
                    }
                }
            }
            break;
        }
    }
    ++state_.t;

    Letter l = eval_predicates(state_, &prev, task_->with_closer);
    RewardStep rs = machine_.step(l, state_.t >= cfg_.horizon);
    status_ = rs.done ? rs.status : EpisodeStatus::Running;

    CraftStepResult out;
    out.observation = observe();
    out.reward = rs.reward;
    out.done = rs.done;
    out.status = status_;
    out.letter = l;
    return out;
}

std::vector<CraftAction> scripted_fig2_actions(int horizon) {
    std::vector<CraftAction> acts = {CraftAction::Use,   CraftAction::South,
                                     CraftAction::South, CraftAction::South,
                                     CraftAction::South, CraftAction::East,
                                     CraftAction::East,  CraftAction::East};
    while (static_cast<int>(acts.size()) < horizon) acts.push_back(CraftAction::South);
    return acts;
}

}  // namespace ltlforge
