#include "hjbpinn/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "hjbpinn/error.hpp"
#include "hjbpinn/rng.hpp"

namespace hjbpinn {

namespace {

// Truncation point of the Gaussian option, in scale units.
constexpr double kTruncation = 3.0;

double truncated_unit_variance() {
  const double c = kTruncation;
  const double pdf = std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(c / std::sqrt(2.0));
  return 1.0 - 2.0 * c * pdf / mass;
}

enum Stream : std::uint64_t { kColloc = 1, kInit = 2, kSupLoc = 3, kSupNoise = 4, kInitNoise = 5 };

void sample_box(const HjbProblem& p, Rng& rng, std::vector<double>& out) {
  for (int i = 0; i < p.n; ++i) {
    const auto is = static_cast<std::size_t>(i);
    out.push_back(rng.uniform(p.lower[is], p.upper[is]));
  }
}

void check_common(const HjbProblem& problem, double sigma2) {
  validate(problem);
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("noise variance must be finite and >= 0");
}

void sample_colloc_and_init(const HjbProblem& problem, std::size_t n_colloc, std::size_t n_init, std::uint64_t seed,
                            Dataset& d) {
  Rng rc(seed, kColloc);
  d.colloc_x.reserve(n_colloc * static_cast<std::size_t>(problem.n));
  for (std::size_t i = 0; i < n_colloc; ++i) {
    sample_box(problem, rc, d.colloc_x);
    d.colloc_t.push_back(rc.uniform(0.0, problem.T));
  }
  Rng ri(seed, kInit);
  for (std::size_t j = 0; j < n_init; ++j) {
    sample_box(problem, ri, d.init_x);
    const double g = problem.initial_value(d.init_point(j));
    d.init_g.push_back(g);
    d.G = std::max(d.G, std::abs(g));
  }
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::Uniform ? "uniform" : "truncated_gaussian";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "uniform") return NoiseKind::Uniform;
  if (name == "truncated_gaussian") return NoiseKind::TruncatedGaussian;
  throw InvalidArgument("unknown noise kind '" + std::string(name) + "'");
}

double noise_bound(NoiseKind kind, double sigma2) {
  if (kind == NoiseKind::Uniform) return std::sqrt(3.0 * sigma2);
  return kTruncation * std::sqrt(sigma2 / truncated_unit_variance());
}

double sample_noise(NoiseKind kind, double sigma2, Rng& rng) {
  if (sigma2 == 0.0) return 0.0;
  if (kind == NoiseKind::Uniform) {
    const double w = std::sqrt(3.0 * sigma2);
    return rng.uniform(-w, w);
  }
  const double scale = std::sqrt(sigma2 / truncated_unit_variance());
  while (true) {
    const double u = rng.normal();
    if (std::abs(u) <= kTruncation) return scale * u;
  }
}

Dataset sample_dataset(const HjbProblem& problem, std::size_t n_colloc, std::size_t n_init, std::size_t n_sup,
                       double sigma2, NoiseKind noise, std::uint64_t seed) {
  check_common(problem, sigma2);
  if (n_sup > 0 && !problem.has_exact) {
    throw InvalidArgument("supervision labels need a problem with a closed-form solution");
  }
  Dataset d;
  d.n = problem.n;
  d.sigma2 = sigma2;
  d.noise = noise;
  d.seed = seed;
  sample_colloc_and_init(problem, n_colloc, n_init, seed, d);

  Rng rl(seed, kSupLoc);
  Rng rz(seed, kSupNoise);
  double label_max = 0.0;
  for (std::size_t i = 0; i < n_sup; ++i) {
    sample_box(problem, rl, d.sup_x);
    const double t = rl.uniform(0.0, problem.T);
    d.sup_t.push_back(t);
    const double clean = problem.exact(d.sup_point(i), t);
    const double z = sample_noise(noise, sigma2, rz);
    d.sup_clean.push_back(clean);
    d.sup_noise.push_back(z);
    d.sup_y.push_back(clean + z);
    label_max = std::max({label_max, std::abs(clean), std::abs(clean + z)});
  }
  d.M = std::ceil(label_max);
  return d;
}

Dataset noisy_initial_dataset(const HjbProblem& problem, std::size_t n_colloc, std::size_t n_init, double sigma2,
                              NoiseKind noise, std::uint64_t seed) {
  check_common(problem, sigma2);
  Dataset d;
  d.n = problem.n;
  d.sigma2 = sigma2;
  d.noise = noise;
  d.seed = seed;
  sample_colloc_and_init(problem, n_colloc, n_init, seed, d);
  Rng rz(seed, kInitNoise);
  for (std::size_t j = 0; j < n_init; ++j) {
    const double y = d.init_g[j] + sample_noise(noise, sigma2, rz);
    d.init_y.push_back(y);
    d.G = std::max(d.G, std::abs(y));
  }
  return d;
}

void write_jsonl(const Dataset& d, std::ostream& os) {
  using nlohmann::json;
  const auto n = static_cast<std::size_t>(d.n);
  auto pt = [n](const std::vector<double>& v, std::size_t i) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(i * n),
                               v.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  };
  os << json{{"kind", "meta"},   {"n", d.n}, {"sigma2", d.sigma2}, {"noise", std::string(to_string(d.noise))},
             {"M", d.M},         {"G", d.G}, {"seed", d.seed}}
            .dump()
     << '\n';
  for (std::size_t i = 0; i < d.n_colloc(); ++i) {
    os << json{{"kind", "colloc"}, {"x", pt(d.colloc_x, i)}, {"t", d.colloc_t[i]}}.dump() << '\n';
  }
  for (std::size_t j = 0; j < d.n_init(); ++j) {
    json r{{"kind", "init"}, {"x", pt(d.init_x, j)}, {"g", d.init_g[j]}};
    if (d.init_labeled()) r["y"] = d.init_y[j];
    os << r.dump() << '\n';
  }
  for (std::size_t i = 0; i < d.n_sup(); ++i) {
    os << json{{"kind", "sup"},         {"x", pt(d.sup_x, i)},          {"t", d.sup_t[i]},
               {"y", d.sup_y[i]},       {"clean", d.sup_clean[i]},      {"noise", d.sup_noise[i]}}
              .dump()
       << '\n';
  }
}

Dataset read_jsonl(std::istream& is) {
  using nlohmann::json;
  Dataset d;
  bool have_meta = false;
  std::string line;
  std::size_t lineno = 0;
  auto append_x = [&d](const json& r) {
    const auto x = r.at("x").get<std::vector<double>>();
    if (static_cast<int>(x.size()) != d.n) throw DimensionError("dataset record has wrong dimension");
    return x;
  };
  try {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json r = json::parse(line);
      const auto kind = r.at("kind").get<std::string>();
      if (kind == "meta") {
        d.n = r.at("n").get<int>();
        d.sigma2 = r.at("sigma2").get<double>();
        d.noise = parse_noise_kind(r.at("noise").get<std::string>());
        d.M = r.at("M").get<double>();
        d.G = r.at("G").get<double>();
        d.seed = r.at("seed").get<std::uint64_t>();
        have_meta = true;
        continue;
      }
      if (!have_meta) throw InvalidArgument("dataset must start with a meta record");
      const auto x = append_x(r);
      if (kind == "colloc") {
        d.colloc_x.insert(d.colloc_x.end(), x.begin(), x.end());
        d.colloc_t.push_back(r.at("t").get<double>());
      } else if (kind == "init") {
        d.init_x.insert(d.init_x.end(), x.begin(), x.end());
        d.init_g.push_back(r.at("g").get<double>());
        if (r.contains("y")) d.init_y.push_back(r.at("y").get<double>());
      } else if (kind == "sup") {
        d.sup_x.insert(d.sup_x.end(), x.begin(), x.end());
        d.sup_t.push_back(r.at("t").get<double>());
        d.sup_y.push_back(r.at("y").get<double>());
        d.sup_clean.push_back(r.at("clean").get<double>());
        d.sup_noise.push_back(r.at("noise").get<double>());
      } else {
        throw InvalidArgument("unknown dataset record kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument("malformed dataset line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!have_meta) throw InvalidArgument("dataset has no meta record");
  if (!d.init_y.empty() && d.init_y.size() != d.init_g.size()) {
    throw InvalidArgument("dataset labels only some initial points");
  }
  return d;
}

}  // namespace hjbpinn
