#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhg/game.hpp"

// Grid worlds loaded from JSON: a trap world (P2 re-places traps under a
// cooldown) and a pursuit world (both players move).
namespace dhg {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
  bool operator<(const Cell& o) const { return y != o.y ? y < o.y : x < o.x; }
};

// P1 move noise: intended direction, the two perpendicular ones, and staying put.
struct SlipModel {
  double forward = 1.0;
  double left = 0.0;
  double right = 0.0;
  double stay = 0.0;
};

enum class WorldKind { kTrap, kPursuit };

struct WorldConfig {
  WorldKind kind = WorldKind::kTrap;
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<Cell> walls;
  SlipModel slip;
  Cell p1_start;

  // trap world
  std::vector<Cell> hazards;
  std::map<std::string, std::vector<Cell>> regions;
  std::vector<Cell> trap_slots;
  int traps = 1;
  int cooldown = 0;
  std::vector<int> initial_traps;

  // pursuit world
  Cell p2_start;
  int proximity = 1;
  int control_min_x = 0;
  std::map<std::string, Cell> waypoints;
};

class WorldError : public std::runtime_error {
 public:
  WorldError(const std::string& field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

WorldConfig parse_world(const std::string& json_text);
WorldConfig load_world(const std::string& path);
// Resolves bare names against the bundled worlds directory.
std::string world_path(const std::string& name_or_path);
void validate_world(const WorldConfig& cfg);
std::string world_to_json(const WorldConfig& cfg);

enum Move : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumMoves = 4;
const char* move_name(int a);

struct TrapState {
  Cell p1;
  int placement = 0;
  int cooldown = 0;
};

struct PursuitState {
  Cell p1;
  Cell p2;
};

class GridWorld {
 public:
  explicit GridWorld(WorldConfig cfg);

  const WorldConfig& config() const { return cfg_; }
  const ConcurrentGame& game() const { return game_; }

  // trap world
  int num_placements() const { return static_cast<int>(placements_.size()); }
  const std::vector<int>& placement(int id) const { return placements_[static_cast<std::size_t>(id)]; }
  int noop_action() const { return num_placements(); }
  TrapState decode_trap(int s) const;
  int encode_trap(const TrapState& t) const;

  // pursuit world
  PursuitState decode_pursuit(int s) const;
  int encode_pursuit(const PursuitState& p) const;

  std::string describe(int s) const;
  std::string action_name(int player, int a) const;
  bool blocked(Cell c) const;
  // Deterministic move; walls and the border leave the cell unchanged.
  Cell move(Cell c, int dir) const;

 private:
  int cell_index(Cell c) const { return c.y * cfg_.width + c.x; }
  Cell cell_at(int i) const { return {i % cfg_.width, i / cfg_.width}; }
  void p1_moves(Cell c, int a, SuccessorList& out) const;
  void build_trap();
  void build_pursuit();

  WorldConfig cfg_;
  std::vector<char> wall_;
  std::vector<std::vector<int>> placements_;
  ConcurrentGame game_;
};

}  // namespace dhg
