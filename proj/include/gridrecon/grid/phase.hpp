#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridrecon::grid {

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

inline constexpr std::array<Phase, 3> kAllPhases{Phase::a, Phase::b, Phase::c};

constexpr int index_of(Phase p) { return static_cast<int>(p); }

constexpr char label_of(Phase p) { return "abc"[index_of(p)]; }

std::optional<Phase> phase_from_label(char c);

/// Balanced nominal angles: a -> 0, b -> -2pi/3, c -> +2pi/3.
inline constexpr std::array<double, 3> kBalancedAngles{0.0, -2.0 * std::numbers::pi / 3.0,
                                                       2.0 * std::numbers::pi / 3.0};

/// Subset of {a, b, c}. Iteration is always in the order a < b < c.
class PhaseSet {
 public:
  constexpr PhaseSet() = default;
  constexpr explicit PhaseSet(std::uint8_t mask) : mask_(mask & 0x7) {}

  static PhaseSet all() { return PhaseSet(0x7); }
  /// Parses "abc", "ac", ... Returns nullopt on unknown or repeated letters.
  static std::optional<PhaseSet> parse(std::string_view labels);

  constexpr bool contains(Phase p) const { return (mask_ >> index_of(p)) & 1U; }
  constexpr void insert(Phase p) { mask_ |= static_cast<std::uint8_t>(1U << index_of(p)); }
  constexpr bool subset_of(PhaseSet other) const { return (mask_ & ~other.mask_) == 0; }
  constexpr bool empty() const { return mask_ == 0; }
  int size() const;
  /// Position of `p` among the members (0-based), or -1 when absent.
  int position(Phase p) const;
  std::vector<Phase> members() const;
  std::string labels() const;
  constexpr std::uint8_t mask() const { return mask_; }

  friend constexpr bool operator==(PhaseSet, PhaseSet) = default;

 private:
  std::uint8_t mask_ = 0;
};

}  // namespace gridrecon::grid
