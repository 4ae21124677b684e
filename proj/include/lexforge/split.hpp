#ifndef LEXFORGE_SPLIT_HPP
#define LEXFORGE_SPLIT_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lexforge/error.hpp"
#include "lexforge/rng.hpp"
#include "lexforge/text.hpp"

namespace lexforge {

struct SplitSpec {
  std::vector<std::pair<std::string, double>> ratios;
  std::uint64_t seed = 0;

  void validate() const {
    if (ratios.empty()) throw Error(ErrorKind::kInvalidSpec, "no splits declared");
    double sum = 0.0;
    for (const auto& [name, fraction] : ratios) {
      if (name.empty()) throw Error(ErrorKind::kInvalidSpec, "empty split name");
      if (!(fraction > 0.0)) throw Error(ErrorKind::kInvalidSpec, "split '" + name + "' has non-positive fraction");
      sum += fraction;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::kInvalidSpec, "split fractions do not sum to 1");
  }
};

// Parses "train:0.7,validation:0.15,test:0.15".
inline SplitSpec parse_split_spec(std::string_view spec, std::uint64_t seed) {
  SplitSpec out{{}, seed};
  for (const auto& part : text::split(spec, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::kInvalidSpec, "expected name:fraction, got '" + part + "'");
    std::size_t used = 0;
    double fraction = 0.0;
    try {
      fraction = std::stod(part.substr(colon + 1), &used);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidSpec, "bad fraction in '" + part + "'");
    }
    if (used != part.size() - colon - 1) throw Error(ErrorKind::kInvalidSpec, "bad fraction in '" + part + "'");
    out.ratios.emplace_back(std::string(text::trim(part.substr(0, colon))), fraction);
  }
  out.validate();
  return out;
}

inline std::string format_split_spec(const SplitSpec& spec) {
  std::string out;
  for (const auto& [name, fraction] : spec.ratios) {
    if (!out.empty()) out += ',';
    out += name + ':' + std::to_string(fraction);
  }
  return out;
}

// floor(n * fraction) per split; the remainder goes one each to the
// declared splits starting from the last one and moving backwards.
inline std::vector<std::size_t> split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> sizes;
  sizes.reserve(spec.ratios.size());
  for (const auto& entry : spec.ratios)
    sizes.push_back(static_cast<std::size_t>(std::floor(static_cast<double>(n) * entry.second + 1e-9)));
  std::size_t assigned = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  // The epsilon above can only overshoot when fractions are malformed.
  if (assigned > n) throw Error(ErrorKind::kInvalidSpec, "split sizes exceed record count");
  std::size_t k = sizes.size();
  while (assigned < n) {
    k = (k == 0 ? sizes.size() : k) - 1;
    ++sizes[k];
    ++assigned;
  }
  return sizes;
}

template <typename T>
struct NamedSplit {
  std::string name;
  std::vector<T> items;
};

// Seeded shuffle followed by consecutive slicing in declared order.
template <typename T>
std::vector<NamedSplit<T>> split_dataset(std::span<const T> records, const SplitSpec& spec) {
  spec.validate();
  if (records.size() < spec.ratios.size())
    throw Error(ErrorKind::kInvalidSpec, "fewer records than splits");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto sizes = split_sizes(records.size(), spec);
  std::vector<NamedSplit<T>> out;
  std::size_t at = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    NamedSplit<T> part{spec.ratios[k].first, {}};
    part.items.reserve(sizes[k]);
    for (std::size_t i = 0; i < sizes[k]; ++i) part.items.push_back(records[order[at++]]);
    out.push_back(std::move(part));
  }
  return out;
}

}  // namespace lexforge

#endif  // LEXFORGE_SPLIT_HPP
