#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dhg/worlds.hpp"
#include "json.hpp"

namespace dhg {

using nlohmann::json;

namespace {

Cell cell_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw WorldError(field, "expected [x, y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

std::vector<Cell> cells_from(const json& j, const std::string& field) {
  if (!j.is_array()) throw WorldError(field, "expected a list of cells");
  std::vector<Cell> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(cell_from(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

json cell_json(Cell c) { return json::array({c.x, c.y}); }

json cells_json(const std::vector<Cell>& cs) {
  json a = json::array();
  for (Cell c : cs) a.push_back(cell_json(c));
  return a;
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw WorldError(key, "expected an integer");
  return j[key].get<int>();
}

std::string cell_str(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

}  // namespace

WorldConfig parse_world(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw WorldError("<root>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw WorldError("<root>", "expected an object");
  static const std::set<std::string> known{"kind", "name", "note", "width", "height", "walls", "slip", "p1_start",
                                           "hazards", "regions", "trap_slots", "traps", "cooldown", "initial_traps",
                                           "p2_start", "proximity", "control_min_x", "waypoints"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw WorldError(it.key(), "unknown field");

  WorldConfig c;
  std::string kind = j.value("kind", "");
  if (kind == "trap") c.kind = WorldKind::kTrap;
  else if (kind == "pursuit") c.kind = WorldKind::kPursuit;
  else throw WorldError("kind", "expected \"trap\" or \"pursuit\"");
  c.name = j.value("name", "");
  if (!j.contains("width") || !j.contains("height")) throw WorldError("width", "grid size is required");
  c.width = get_int(j, "width", 0);
  c.height = get_int(j, "height", 0);
  if (j.contains("walls")) c.walls = cells_from(j["walls"], "walls");
  if (j.contains("slip")) {
    const json& s = j["slip"];
    if (!s.is_object()) throw WorldError("slip", "expected an object");
    for (auto it = s.begin(); it != s.end(); ++it)
      if (it.key() != "forward" && it.key() != "left" && it.key() != "right" && it.key() != "stay")
        throw WorldError("slip." + it.key(), "unknown field");
    c.slip.forward = s.value("forward", 0.0);
    c.slip.left = s.value("left", 0.0);
    c.slip.right = s.value("right", 0.0);
    c.slip.stay = s.value("stay", 0.0);
  }
  if (!j.contains("p1_start")) throw WorldError("p1_start", "required");
  c.p1_start = cell_from(j["p1_start"], "p1_start");

  if (c.kind == WorldKind::kTrap) {
    if (j.contains("hazards")) c.hazards = cells_from(j["hazards"], "hazards");
    if (j.contains("regions")) {
      if (!j["regions"].is_object()) throw WorldError("regions", "expected an object");
      for (auto it = j["regions"].begin(); it != j["regions"].end(); ++it)
        c.regions[it.key()] = cells_from(it.value(), "regions." + it.key());
    }
    if (j.contains("trap_slots")) c.trap_slots = cells_from(j["trap_slots"], "trap_slots");
    c.traps = get_int(j, "traps", 1);
    c.cooldown = get_int(j, "cooldown", 0);
    if (j.contains("initial_traps")) {
      if (!j["initial_traps"].is_array()) throw WorldError("initial_traps", "expected a list of slot indices");
      for (const auto& v : j["initial_traps"]) {
        if (!v.is_number_integer()) throw WorldError("initial_traps", "expected integers");
        c.initial_traps.push_back(v.get<int>());
      }
    } else {
      for (int i = 0; i < c.traps; ++i) c.initial_traps.push_back(i);
    }
  } else {
    if (!j.contains("p2_start")) throw WorldError("p2_start", "required");
    c.p2_start = cell_from(j["p2_start"], "p2_start");
    c.proximity = get_int(j, "proximity", 1);
    c.control_min_x = get_int(j, "control_min_x", 0);
    if (j.contains("waypoints")) {
      if (!j["waypoints"].is_object()) throw WorldError("waypoints", "expected an object");
      for (auto it = j["waypoints"].begin(); it != j["waypoints"].end(); ++it)
        c.waypoints[it.key()] = cell_from(it.value(), "waypoints." + it.key());
    }
  }
  validate_world(c);
  return c;
}

WorldConfig load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw WorldError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_world(ss.str());
}

std::string world_path(const std::string& name_or_path) {
  if (name_or_path.find('/') != std::string::npos || name_or_path.find(".json") != std::string::npos)
    return name_or_path;
  return std::string(DHG_WORLDS_DIR) + "/" + name_or_path + ".json";
}

void validate_world(const WorldConfig& c) {
  if (c.width < 1 || c.height < 1 || c.width > 64 || c.height > 64) throw WorldError("width", "grid must be 1..64 per side");
  std::set<Cell> walls(c.walls.begin(), c.walls.end());
  auto check_cell = [&](Cell p, const std::string& field, bool allow_wall) {
    if (p.x < 0 || p.y < 0 || p.x >= c.width || p.y >= c.height) throw WorldError(field, "cell " + cell_str(p) + " outside grid");
    if (!allow_wall && walls.count(p)) throw WorldError(field, "cell " + cell_str(p) + " is a wall");
  };
  for (std::size_t i = 0; i < c.walls.size(); ++i) check_cell(c.walls[i], "walls[" + std::to_string(i) + "]", true);
  check_cell(c.p1_start, "p1_start", false);
  const SlipModel& s = c.slip;
  if (s.forward < 0 || s.left < 0 || s.right < 0 || s.stay < 0 || std::fabs(s.forward + s.left + s.right + s.stay - 1.0) > 1e-9)
    throw WorldError("slip", "probabilities must be non-negative and sum to 1");

  if (c.kind == WorldKind::kTrap) {
    for (std::size_t i = 0; i < c.hazards.size(); ++i) check_cell(c.hazards[i], "hazards[" + std::to_string(i) + "]", false);
    if (c.regions.empty()) throw WorldError("regions", "at least one region is required");
    for (const auto& [name, cells] : c.regions) {
      if (name == "obs") throw WorldError("regions." + name, "name is reserved");
      if (cells.empty()) throw WorldError("regions." + name, "empty region");
      for (std::size_t i = 0; i < cells.size(); ++i) check_cell(cells[i], "regions." + name + "[" + std::to_string(i) + "]", false);
    }
    if (c.regions.size() + 1 > scltl::kMaxAtoms) throw WorldError("regions", "too many regions");
    std::set<Cell> slots;
    for (std::size_t i = 0; i < c.trap_slots.size(); ++i) {
      check_cell(c.trap_slots[i], "trap_slots[" + std::to_string(i) + "]", false);
      if (!slots.insert(c.trap_slots[i]).second) throw WorldError("trap_slots[" + std::to_string(i) + "]", "duplicate slot");
    }
    if (c.traps < 0 || c.traps > static_cast<int>(c.trap_slots.size())) throw WorldError("traps", "must be between 0 and the number of slots");
    if (c.cooldown < 0 || c.cooldown > 16) throw WorldError("cooldown", "must be 0..16");
    std::set<int> init(c.initial_traps.begin(), c.initial_traps.end());
    if (static_cast<int>(init.size()) != c.traps || static_cast<int>(c.initial_traps.size()) != c.traps)
      throw WorldError("initial_traps", "must list `traps` distinct slot indices");
    for (int i : init)
      if (i < 0 || i >= static_cast<int>(c.trap_slots.size())) throw WorldError("initial_traps", "slot index out of range");
  } else {
    if (static_cast<long>(c.width * c.height) * (c.width * c.height) > 2'000'000)
      throw WorldError("width", "pursuit grid too large for a joint state space");
    check_cell(c.p2_start, "p2_start", false);
    if (c.proximity < 0) throw WorldError("proximity", "must be non-negative");
    for (const auto& [name, cell] : c.waypoints) {
      if (name == "p1" || name == "p2") throw WorldError("waypoints." + name, "name is reserved");
      check_cell(cell, "waypoints." + name, false);
    }
    if (c.waypoints.size() + 2 > scltl::kMaxAtoms) throw WorldError("waypoints", "too many waypoints");
  }
}

std::string world_to_json(const WorldConfig& c) {
  json j;
  j["kind"] = c.kind == WorldKind::kTrap ? "trap" : "pursuit";
  if (!c.name.empty()) j["name"] = c.name;
  j["width"] = c.width;
  j["height"] = c.height;
  j["walls"] = cells_json(c.walls);
  j["slip"] = {{"forward", c.slip.forward}, {"left", c.slip.left}, {"right", c.slip.right}, {"stay", c.slip.stay}};
  j["p1_start"] = cell_json(c.p1_start);
  if (c.kind == WorldKind::kTrap) {
    j["hazards"] = cells_json(c.hazards);
    json r = json::object();
    for (const auto& [k, v] : c.regions) r[k] = cells_json(v);
    j["regions"] = r;
    j["trap_slots"] = cells_json(c.trap_slots);
    j["traps"] = c.traps;
    j["cooldown"] = c.cooldown;
    j["initial_traps"] = c.initial_traps;
  } else {
    j["p2_start"] = cell_json(c.p2_start);
    j["proximity"] = c.proximity;
    j["control_min_x"] = c.control_min_x;
    json w = json::object();
    for (const auto& [k, v] : c.waypoints) w[k] = cell_json(v);
    j["waypoints"] = w;
  }
  return j.dump(2);
}

const char* move_name(int a) {
  static const char* names[] = {"U", "D", "L", "R"};
  return a >= 0 && a < kNumMoves ? names[a] : "?";
}

// ---------------------------------------------------------------------------

GridWorld::GridWorld(WorldConfig cfg) : cfg_(std::move(cfg)) {
  validate_world(cfg_);
  wall_.assign(static_cast<std::size_t>(cfg_.width * cfg_.height), 0);
  for (Cell w : cfg_.walls) wall_[static_cast<std::size_t>(cell_index(w))] = 1;
  if (cfg_.kind == WorldKind::kTrap) build_trap();
  else build_pursuit();
}

bool GridWorld::blocked(Cell c) const {
  return c.x < 0 || c.y < 0 || c.x >= cfg_.width || c.y >= cfg_.height || wall_[static_cast<std::size_t>(cell_index(c))];
}

Cell GridWorld::move(Cell c, int dir) const {
  static const int dx[] = {0, 0, -1, 1};
  static const int dy[] = {1, -1, 0, 0};
  Cell n{c.x + dx[dir], c.y + dy[dir]};
  return blocked(n) ? c : n;
}

void GridWorld::p1_moves(Cell c, int a, SuccessorList& out) const {
  // perpendicular directions: counter-clockwise then clockwise of `a`
  static const int ccw[] = {kLeft, kRight, kDown, kUp};
  static const int cw[] = {kRight, kLeft, kUp, kDown};
  const SlipModel& s = cfg_.slip;
  out.clear();
  if (s.forward > 0) out.emplace_back(cell_index(move(c, a)), s.forward);
  if (s.left > 0) out.emplace_back(cell_index(move(c, ccw[a])), s.left);
  if (s.right > 0) out.emplace_back(cell_index(move(c, cw[a])), s.right);
  if (s.stay > 0) out.emplace_back(cell_index(c), s.stay);
}

void GridWorld::build_trap() {
  // Placements: all size-`traps` subsets of the slots, in lexicographic order.
  const int n = static_cast<int>(cfg_.trap_slots.size());
  std::vector<int> comb(static_cast<std::size_t>(cfg_.traps));
  for (int i = 0; i < cfg_.traps; ++i) comb[static_cast<std::size_t>(i)] = i;
  while (true) {
    placements_.push_back(comb);
    int i = cfg_.traps - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - cfg_.traps + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < cfg_.traps; ++j) comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j) - 1] + 1;
  }
  std::vector<int> init = cfg_.initial_traps;
  std::sort(init.begin(), init.end());
  int init_placement = static_cast<int>(std::find(placements_.begin(), placements_.end(), init) - placements_.begin());

  const int cells = cfg_.width * cfg_.height;
  const int P = num_placements();
  const int K = cfg_.cooldown + 1;

  std::vector<char> hazard(static_cast<std::size_t>(cells), 0);
  for (Cell h : cfg_.hazards) hazard[static_cast<std::size_t>(cell_index(h))] = 1;
  std::vector<std::vector<char>> trapped(static_cast<std::size_t>(P), std::vector<char>(static_cast<std::size_t>(cells), 0));
  for (int p = 0; p < P; ++p)
    for (int slot : placements_[static_cast<std::size_t>(p)])
      trapped[static_cast<std::size_t>(p)][static_cast<std::size_t>(cell_index(cfg_.trap_slots[static_cast<std::size_t>(slot)]))] = 1;

  ConcurrentGame::Shape shape;
  shape.num_states = cells * P * K;
  shape.num_p1_actions = kNumMoves;
  shape.num_p2_actions = P + 1;
  shape.atoms.push_back("obs");
  for (const auto& [name, _] : cfg_.regions) shape.atoms.push_back(name);
  shape.initial = encode_trap({cfg_.p1_start, init_placement, 0});

  std::vector<Symbol> region_bits(static_cast<std::size_t>(cells), 0);
  {
    int bit = 1;
    for (const auto& [_, rc] : cfg_.regions) {
      for (Cell c : rc) region_bits[static_cast<std::size_t>(cell_index(c))] |= Symbol{1} << bit;
      ++bit;
    }
  }

  auto p1 = [](int, int) { return true; };
  auto p2 = [&](int s, int a) {
    TrapState t = decode_trap(s);
    return t.cooldown == 0 ? a < P : a == P;
  };
  SuccessorList moves;
  auto succ = [&](int s, int a1, int a2, SuccessorList& out) {
    TrapState t = decode_trap(s);
    int placement = a2 < P ? a2 : t.placement;
    int cd;
    if (a2 < P && a2 != t.placement && cfg_.cooldown > 0) cd = cfg_.cooldown;
    else cd = std::max(0, t.cooldown - 1);
    p1_moves(t.p1, a1, moves);
    for (auto [c, p] : moves) out.emplace_back(encode_trap({cell_at(c), placement, cd}), p);
  };
  auto label = [&](int s) {
    TrapState t = decode_trap(s);
    auto ci = static_cast<std::size_t>(cell_index(t.p1));
    Symbol l = region_bits[ci];
    if (hazard[ci] || trapped[static_cast<std::size_t>(t.placement)][ci]) l |= 1u;
    return l;
  };
  game_ = ConcurrentGame::build(shape, p1, p2, succ, label);
}

TrapState GridWorld::decode_trap(int s) const {
  const int K = cfg_.cooldown + 1;
  const int P = num_placements();
  TrapState t;
  t.cooldown = s % K;
  s /= K;
  t.placement = s % P;
  t.p1 = cell_at(s / P);
  return t;
}

int GridWorld::encode_trap(const TrapState& t) const {
  return (cell_index(t.p1) * num_placements() + t.placement) * (cfg_.cooldown + 1) + t.cooldown;
}

void GridWorld::build_pursuit() {
  const int cells = cfg_.width * cfg_.height;
  ConcurrentGame::Shape shape;
  shape.num_states = cells * cells;
  shape.num_p1_actions = kNumMoves;
  shape.num_p2_actions = kNumMoves;
  shape.atoms = {"p1", "p2"};
  for (const auto& [name, _] : cfg_.waypoints) shape.atoms.push_back(name);
  shape.initial = encode_pursuit({cfg_.p1_start, cfg_.p2_start});

  auto any = [](int, int) { return true; };
  SuccessorList moves;
  auto succ = [&](int s, int a1, int a2, SuccessorList& out) {
    PursuitState p = decode_pursuit(s);
    Cell c2 = move(p.p2, a2);
    p1_moves(p.p1, a1, moves);
    for (auto [c, pr] : moves) out.emplace_back(encode_pursuit({cell_at(c), c2}), pr);
  };
  auto label = [&](int s) {
    PursuitState p = decode_pursuit(s);
    Symbol l = 0;
    if (std::abs(p.p1.x - p.p2.x) + std::abs(p.p1.y - p.p2.y) <= cfg_.proximity) l |= 1u;
    if (p.p1.x >= cfg_.control_min_x) l |= 2u;
    int bit = 2;
    for (const auto& [_, w] : cfg_.waypoints) {
      if (p.p1 == w) l |= Symbol{1} << bit;
      ++bit;
    }
    return l;
  };
  game_ = ConcurrentGame::build(shape, any, any, succ, label);
}

PursuitState GridWorld::decode_pursuit(int s) const {
  const int cells = cfg_.width * cfg_.height;
  return {cell_at(s / cells), cell_at(s % cells)};
}

int GridWorld::encode_pursuit(const PursuitState& p) const {
  return cell_index(p.p1) * cfg_.width * cfg_.height + cell_index(p.p2);
}

std::string GridWorld::describe(int s) const {
  std::ostringstream os;
  if (cfg_.kind == WorldKind::kTrap) {
    TrapState t = decode_trap(s);
    os << "p1=" << cell_str(t.p1) << " traps=[";
    const auto& pl = placements_[static_cast<std::size_t>(t.placement)];
    for (std::size_t i = 0; i < pl.size(); ++i) os << (i ? "," : "") << cell_str(cfg_.trap_slots[static_cast<std::size_t>(pl[i])]);
    os << "] cd=" << t.cooldown;
  } else {
    PursuitState p = decode_pursuit(s);
    os << "p1=" << cell_str(p.p1) << " p2=" << cell_str(p.p2);
  }
  return os.str();
}

std::string GridWorld::action_name(int player, int a) const {
  if (player == 1 || cfg_.kind == WorldKind::kPursuit) return move_name(a);
  if (a == noop_action()) return "wait";
  std::string s = "place[";
  const auto& pl = placements_[static_cast<std::size_t>(a)];
  for (std::size_t i = 0; i < pl.size(); ++i) s += (i ? "," : "") + cell_str(cfg_.trap_slots[static_cast<std::size_t>(pl[i])]);
  return s + "]";
}

}  // namespace dhg
