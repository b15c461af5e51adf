#include "ermatch/synthetic.hpp"

#include <random>
#include <set>
#include <stdexcept>

namespace ermatch {

namespace {

const char* const kAdjectives[] = {
    "classic",  "deluxe",  "compact",  "wireless", "portable", "digital", "premium", "standard",
    "advanced", "ultra",   "pro",      "slim",     "heavy",    "light",   "smart",   "rapid",
    "silent",   "turbo",   "eco",      "dual",     "triple",   "solar",   "hybrid",  "magnetic",
    "ceramic",  "steel",   "titanium", "carbon",   "vintage",  "modern",  "arctic",  "crimson"};

const char* const kNouns[] = {
    "blender", "keyboard",  "monitor",  "speaker",  "camera",   "printer", "scanner",  "router",
    "charger", "headset",   "adapter",  "tripod",   "lantern",  "kettle",  "toaster",  "drill",
    "sander",  "compressor", "mouse",   "tablet",   "console",  "drone",   "project",  "cooler",
    "heater",  "purifier",  "vacuum",   "grinder",  "mixer",    "juicer",  "lamp",     "desk",
    "chair",   "shelf",     "cabinet",  "backpack", "wallet",   "watch",   "bicycle",  "helmet"};

const char* const kBrands[] = {
    "acme corp",    "globex",        "initech",      "umbrella works", "stellar goods",
    "nova industries", "apex labs",  "zenith craft", "orion supply",   "vertex tools",
    "lumina tech",  "cascade gear",  "summit makers", "harbor trade",  "quartz line",
    "ember forge",  "willow works",  "granite co",    "aurora devices", "pioneer kit",
    "redwood manufacturing", "bluepeak", "ironwood", "silverline"};

constexpr char kEditChars[] = "abcdefghijklmnopqrstuvwxyz0123456789";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  bool chance(double p) { return p > 0.0 && real_(gen_) < p; }
  std::mt19937_64& raw() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> real_{0.0, 1.0};
};

template <std::size_t N>
const char* pick(Rng& rng, const char* const (&pool)[N]) {
  return pool[rng.below(N)];
}

std::vector<std::optional<std::string>> fresh_row(Rng& rng) {
  std::string title = pick(rng, kAdjectives);
  title += ' ';
  title += pick(rng, kAdjectives);
  title += ' ';
  title += pick(rng, kNouns);
  title += ' ';
  title += pick(rng, kNouns);
  title += ' ';
  title += pick(rng, kNouns);
  title += " mk";
  title += std::to_string(100 + rng.below(900));

  std::string code;
  for (int i = 0; i < 10; ++i) code += kEditChars[rng.below(sizeof(kEditChars) - 1)];

  std::string price = std::to_string(5 + rng.below(495));
  price += '.';
  const std::size_t cents = rng.below(100);
  if (cents < 10) price += '0';
  price += std::to_string(cents);

  return {title, std::string(pick(rng, kBrands)), code, price};
}

std::string apply_typos(const std::string& s, double rate, Rng& rng) {
  if (rate <= 0.0) return s;
  std::string out;
  out.reserve(s.size() + 4);
  for (const char c : s) {
    if (!rng.chance(rate)) {
      out.push_back(c);
      continue;
    }
    switch (rng.below(3)) {
      case 0: out.push_back(kEditChars[rng.below(sizeof(kEditChars) - 1)]); break; // substitute
      case 1: break;                                                              // delete
      default:                                                                    // insert before
        out.push_back(kEditChars[rng.below(sizeof(kEditChars) - 1)]);
        out.push_back(c);
        break;
    }
  }
  return out;
}

Tuple perturb(const Tuple& src, const SyntheticSpec& spec, Rng& rng) {
  Tuple t;
  t.values = src.values;
  if (spec.swap_rate > 0.0 && t.values.size() >= 2 && rng.chance(spec.swap_rate)) {
    const std::size_t a = rng.below(t.values.size());
    std::size_t b = rng.below(t.values.size() - 1);
    if (b >= a) ++b;
    std::swap(t.values[a], t.values[b]);
  }
  for (auto& v : t.values) {
    if (!v) continue;
    if (rng.chance(spec.delete_rate)) {
      v.reset();
      continue;
    }
    if (spec.typo_rate > 0.0) *v = apply_typos(*v, spec.typo_rate, rng);
  }
  return t;
}

} // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.left_size < 0 || spec.right_size < 0 || spec.match_count < 0)
    throw std::invalid_argument("make_synthetic: sizes must be nonnegative");
  if (spec.match_count > spec.left_size || spec.match_count > spec.right_size)
    throw std::invalid_argument("make_synthetic: match_count exceeds a dataset size");

  Rng rng(spec.seed);
  SyntheticData data;
  data.left.id = "synthetic-left";
  data.right.id = "synthetic-right";
  data.left.attributes = {"Title", "Manufacturer", "Code", "Price"};
  data.right.attributes = data.left.attributes;

  std::set<std::string> seen;
  for (int i = 0; i < spec.left_size; ++i) {
    Tuple t;
    t.id = std::to_string(i);
    for (int attempt = 0;; ++attempt) {
      t.values = fresh_row(rng);
      std::string key;
      for (const auto& v : t.values) key += *v + "|";
      if (seen.insert(key).second) break;
      if (attempt > 1000) throw std::runtime_error("make_synthetic: cannot generate enough unique rows");
    }
    data.left.tuples.push_back(std::move(t));
  }

  // matched rows carry the first match_count left tuples into the right side
  std::vector<Tuple> right_rows;
  std::vector<int> source(spec.right_size, -1);
  for (int i = 0; i < spec.match_count; ++i) {
    right_rows.push_back(perturb(data.left.tuples[static_cast<std::size_t>(i)], spec, rng));
    source[static_cast<std::size_t>(i)] = i;
  }
  for (int i = spec.match_count; i < spec.right_size; ++i) {
    Tuple t;
    t.values = fresh_row(rng);
    right_rows.push_back(std::move(t));
  }

  // shuffle so matched rows are not positionally aligned
  for (std::size_t i = right_rows.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(right_rows[i - 1], right_rows[j]);
    std::swap(source[i - 1], source[j]);
  }
  for (std::size_t i = 0; i < right_rows.size(); ++i) {
    right_rows[i].id = std::to_string(i);
    if (source[i] >= 0) data.truth.emplace_back(std::to_string(source[i]), right_rows[i].id);
  }
  data.right.tuples = std::move(right_rows);
  std::sort(data.truth.begin(), data.truth.end());
  return data;
}

} // namespace ermatch
